"""Safety verification of parametric-size array programs.

Programs in a small C-like language (or Horn clause systems directly)
are checked by synthesizing universally quantified loop invariants and
procedure pre/post-conditions through a counterexample-guided loop: a
decision-tree learner generalizes from concrete program configurations,
and an SMT solver refutes or accepts the candidates.
"""

from .chc import (
    ChcError, ChcSystem, Clause, PredApp, PredicateSig, ground_check_clause,
    load_chc, save_chc,
)
from .diagrams import (
    Diagram, QuantifierScheme, complete_diagrams, diagramize, diagrams_of,
    lift, make_scheme,
)
from .driver import RunConfig, RunReport, run
from .fragment import check_fragment
from .learner import AttributePool, BudgetError, LearnerState, learn
from .minilang import parse, typecheck
from .sample import DataPoint, HornImplication, Sample, solution_satisfies
from .smtproc import SolverConfig
from .teacher import Teacher, export_smtlib
from .terms import (
    ARRAY_BOOL, ARRAY_INT, ArrayVal, BOOL, INT, QuantifiedProperty, Term,
    eval_property, eval_term, substitute,
)
from .vcgen import extract_patterns, gen_chc

__version__ = "0.1.0"
