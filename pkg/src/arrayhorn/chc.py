"""Constrained Horn clauses over the array term language.

A system is a set of predicate signatures plus clauses of three shapes:
facts (``constraint => P(args)``), rules (``P1(..) /\\ ... /\\ constraint
=> P(args)``), and queries (``P1(..) /\\ ... /\\ constraint => false``).
Applied predicate arguments are always variables; compound values are
bound through clause-local equalities, matching the implicit universal
closure of each clause.

The module also provides ground semantic checking of clauses against a
candidate solution, used as the testing oracle, and the textual
s-expression file format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from . import sexpr
from .terms import (
    BOOL, INT, Block, BoolConst, Forall, QuantifiedProperty, Sort, Term,
    TermParseError, Var, and_, eval_property, eval_term, free_vars, not_,
    sort_from_sexpr, sort_to_sexpr, substitute, term_from_sexpr,
    term_to_sexpr, TRUE,
)


class ChcError(Exception):
    """Ill-formed clause, signature mismatch, or file format error."""


@dataclass(frozen=True)
class PredicateSig:
    name: str
    params: tuple  # tuple[(name, Sort), ...]

    def __post_init__(self) -> None:
        names = [n for n, _ in self.params]
        if len(set(names)) != len(names):
            raise ChcError(f"duplicate parameter names in predicate {self.name}")

    @property
    def param_names(self) -> tuple:
        return tuple(n for n, _ in self.params)

    @property
    def sorts(self) -> tuple:
        return tuple(s for _, s in self.params)

    def vars(self) -> tuple:
        return tuple(Var(n, s) for n, s in self.params)

    def arrays(self) -> tuple:
        return tuple(n for n, s in self.params if s.is_array)

    def bool_vars(self) -> tuple:
        return tuple(n for n, s in self.params if s == BOOL)

    def int_vars(self) -> tuple:
        return tuple(n for n, s in self.params if s == INT)

    def sort_of(self, param: str) -> Sort:
        for n, s in self.params:
            if n == param:
                return s
        raise ChcError(f"{self.name} has no parameter {param}")


@dataclass(frozen=True)
class PredApp:
    """A predicate applied to clause variables."""

    pred: str
    args: tuple  # tuple[Var, ...]

    def __post_init__(self) -> None:
        for a in self.args:
            if not isinstance(a, Var):
                raise ChcError(f"application argument must be a variable, got {a}")

    def __str__(self) -> str:
        return f"({self.pred} {' '.join(a.name for a in self.args)})"


@dataclass(frozen=True)
class Clause:
    """One Horn clause; ``head is None`` makes it a query."""

    body: tuple          # tuple[PredApp, ...]
    constraint: Term
    head: Optional[PredApp]
    variables: tuple = ()  # tuple[Var, ...]: the universal closure, in order

    def __post_init__(self) -> None:
        if not self.variables:
            object.__setattr__(self, "variables", tuple(self._collect_vars().values()))

    def _collect_vars(self) -> dict:
        out: dict = {}
        for app in self.body:
            for a in app.args:
                out.setdefault(a.name, a)
        out.update(free_vars(self.constraint))
        if self.head is not None:
            for a in self.head.args:
                out.setdefault(a.name, a)
        return out

    @property
    def is_fact(self) -> bool:
        return not self.body and self.head is not None

    @property
    def is_query(self) -> bool:
        return self.head is None

    @property
    def is_rule(self) -> bool:
        return bool(self.body) and self.head is not None

    def apps(self) -> tuple:
        return self.body + ((self.head,) if self.head is not None else ())

    def __str__(self) -> str:
        body = " /\\ ".join([str(a) for a in self.body] + [str(self.constraint)])
        head = str(self.head) if self.head is not None else "false"
        return f"{body} => {head}"


@dataclass
class ChcSystem:
    predicates: dict = field(default_factory=dict)  # name -> PredicateSig
    clauses: list = field(default_factory=list)

    def add_predicate(self, sig: PredicateSig) -> None:
        if sig.name in self.predicates:
            raise ChcError(f"predicate {sig.name} declared twice")
        self.predicates[sig.name] = sig

    def add_clause(self, clause: Clause) -> None:
        self.validate_clause(clause, len(self.clauses))
        self.clauses.append(clause)

    def validate_clause(self, clause: Clause, index: int) -> None:
        for app in clause.apps():
            sig = self.predicates.get(app.pred)
            if sig is None:
                raise ChcError(f"clause {index}: unknown predicate {app.pred}")
            if len(app.args) != len(sig.params):
                raise ChcError(
                    f"clause {index}: {app.pred} applied to {len(app.args)} "
                    f"arguments, declared {len(sig.params)}")
            for a, (pname, psort) in zip(app.args, sig.params):
                if a.sort != psort:
                    raise ChcError(
                        f"clause {index}: argument {a.name} of {app.pred} has sort "
                        f"{a.sort}, parameter {pname} wants {psort}")

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, ChcSystem)
                and self.predicates == other.predicates
                and self.clauses == other.clauses)


# ---------------------------------------------------------------------------
# Solutions and ground checking
# ---------------------------------------------------------------------------

Solution = "dict[str, QuantifiedProperty]"


def all_true_solution(system: ChcSystem) -> dict:
    from .terms import prop_true
    return {name: prop_true() for name in system.predicates}


def app_env(app: PredApp, sig: PredicateSig, env: Mapping) -> dict:
    """Project a clause environment onto a predicate's parameters."""
    out = {}
    for param, arg in zip(sig.param_names, app.args):
        if arg.name not in env:
            raise ChcError(f"unbound clause variable {arg.name}")
        out[param] = env[arg.name]
    return out


def ground_check_clause(clause: Clause, solution: Mapping, system: ChcSystem,
                        env: Mapping) -> bool:
    """Truth of *clause* under *solution* and a concrete environment.

    The environment must assign every clause variable, with finite array
    values.  This is the semantic oracle the teacher's counterexamples
    are validated against.
    """
    def label(app: PredApp) -> bool:
        sig = system.predicates[app.pred]
        return eval_property(solution[app.pred], app_env(app, sig, env))

    for app in clause.body:
        if not label(app):
            return True
    if not eval_term(clause.constraint, env):
        return True
    if clause.head is None:
        return False
    return label(clause.head)


def solution_term(clause: Clause, solution: Mapping, system: ChcSystem) -> Term:
    """``body /\\ constraint /\\ not head`` with *solution* substituted:
    satisfiable iff the clause is violated."""
    parts = []
    for app in clause.body:
        parts.append(_applied_property(app, solution, system))
    parts.append(clause.constraint)
    if clause.head is not None:
        parts.append(not_(_applied_property(clause.head, solution, system)))
    return and_(*parts)


def _applied_property(app: PredApp, solution: Mapping, system: ChcSystem) -> Term:
    sig = system.predicates[app.pred]
    prop = solution[app.pred]
    mapping = {param: arg for param, arg in zip(sig.param_names, app.args)}
    return substitute(prop.to_term(), mapping)


# ---------------------------------------------------------------------------
# File format
#
#   (declare-pred NAME ((param SORT) ...))        ; or a bare (SORT ...)
#   (clause (forall ((v SORT) ...) (=> BODY HEAD)))
#
# BODY is an (and ...) mixing predicate applications and constraint
# conjuncts; HEAD is an application or `false`.  Terms use the canonical
# rendering from `terms`, including (read a i), (write a i v), (len a),
# and (qprop ((a k1 k2 ...) ...) MATRIX) for quantified constraints.
# ---------------------------------------------------------------------------

def save_chc(system: ChcSystem) -> str:
    lines = []
    for sig in system.predicates.values():
        binds = [[n, sort_to_sexpr(s)] for n, s in sig.params]
        lines.append(sexpr.render(["declare-pred", sig.name, binds]))
    for clause in system.clauses:
        binder = [[v.name, sort_to_sexpr(v.sort)] for v in clause.variables]
        body_parts = [_app_to_sexpr(a) for a in clause.body]
        body_parts.append(term_to_sexpr(clause.constraint))
        body = body_parts[0] if len(body_parts) == 1 else ["and"] + body_parts
        head = _app_to_sexpr(clause.head) if clause.head is not None else "false"
        form = ["clause", ["forall", binder, ["=>", body, head]]]
        lines.append(sexpr.render_pretty(form))
    return "\n".join(lines) + "\n"


def _app_to_sexpr(app: PredApp):
    return [app.pred] + [a.name for a in app.args]


def load_chc(text: str) -> ChcSystem:
    system = ChcSystem()
    for form in sexpr.parse_all(text):
        if not isinstance(form, list) or not form:
            raise ChcError(f"expected a command, got {sexpr.render(form)}")
        if form[0] == "declare-pred":
            system.add_predicate(_parse_declare(form))
        elif form[0] == "clause":
            system.add_clause(_parse_clause(form, system))
        else:
            raise ChcError(f"unknown command {form[0]}")
    return system


def _parse_declare(form) -> PredicateSig:
    if len(form) != 3 or not isinstance(form[1], str) or not isinstance(form[2], list):
        raise ChcError("declare-pred takes a name and a parameter list")
    params = []
    for i, entry in enumerate(form[2]):
        if isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str) \
                and entry[0] not in ("Array",):
            params.append((entry[0], sort_from_sexpr(entry[1])))
        else:
            params.append((f"p{i}", sort_from_sexpr(entry)))
    return PredicateSig(form[1], tuple(params))


def _parse_clause(form, system: ChcSystem) -> Clause:
    if len(form) != 2 or not isinstance(form[1], list) or form[1][:1] != ["forall"]:
        raise ChcError("clause takes (forall BINDER (=> BODY HEAD))")
    _, binder, impl = form[1]
    if not isinstance(impl, list) or len(impl) != 3 or impl[0] != "=>":
        raise ChcError("clause body must be (=> BODY HEAD)")
    scope = {}
    variables = []
    for bind in binder:
        if not isinstance(bind, list) or len(bind) != 2:
            raise ChcError("binder entries must be (name SORT)")
        v = Var(bind[0], sort_from_sexpr(bind[1]))
        scope[v.name] = v.sort
        variables.append(v)
    body_forms = impl[1]
    if isinstance(body_forms, list) and body_forms[:1] == ["and"]:
        conjuncts = body_forms[1:]
    else:
        conjuncts = [body_forms]
    apps = []
    constraints = []
    for c in conjuncts:
        if isinstance(c, list) and c and isinstance(c[0], str) and c[0] in system.predicates:
            apps.append(_parse_app(c, scope, system))
        else:
            try:
                constraints.append(term_from_sexpr(c, scope))
            except TermParseError as e:
                raise ChcError(f"bad constraint {sexpr.render(c)}: {e}") from e
    head_form = impl[2]
    if head_form == "false":
        head = None
    elif isinstance(head_form, list) and head_form and head_form[0] in system.predicates:
        head = _parse_app(head_form, scope, system)
    else:
        raise ChcError(f"clause head must be an application or false, got "
                       f"{sexpr.render(head_form)}")
    clause = Clause(tuple(apps), and_(*constraints), head, tuple(variables))
    return clause


def _parse_app(form, scope: Mapping, system: ChcSystem) -> PredApp:
    args = []
    for a in form[1:]:
        if not isinstance(a, str) or a not in scope:
            raise ChcError(f"application argument {sexpr.render(a)} must be a bound variable")
        args.append(Var(a, scope[a]))
    return PredApp(form[0], tuple(args))
