"""Solver-backed checking of candidate solutions.

Finite parametric arrays are encoded over the standard theory: each
array variable ``a`` becomes an unbounded array ``u_a`` plus an integer
length ``l_a >= 0``; reads become ``ite(0 <= i < l_a, u_a[i], default)``,
writes become ``ite(0 <= i < l_a, store(u_a, i, v), u_a)``, lengths
become ``l_a``, and array equality compares lengths plus elements on the
valid range.  Quantified properties encode as explicit universal
quantifiers guarded by the index ranges.

A clause is checked by asserting its body, constraint, and negated head
with the candidate substituted; a model yields data points (arrays read
back from ``u_a[0 .. l_a-1]``) and the Horn implication matching the
clause form.  The search for counterexamples prefers small arrays: the
length bound L climbs from 1 before one unbounded check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from . import sexpr
from .chc import ChcSystem, Clause, PredApp, app_env, solution_term
from .sample import DataPoint, HornImplication
from .smtproc import (
    SolverConfig, SolverProcess, SolverTimeout, SolverTransportError,
    parse_value,
)
from .terms import (
    Add, And, ArrayVal, BOOL, BoolConst, Eq, Forall, INT, IntConst, Ite,
    Len, Leq, Not, Or, QuantifiedProperty, Read, Sort, Term, Var, Write,
    sort_of,
)


class EncodeError(Exception):
    pass


@dataclass
class ArrayEncoding:
    data: str     # unbounded array symbol
    length: str   # length symbol
    elem: Sort


class Encoder:
    """Translate terms over finite arrays into standard-theory s-expressions."""

    def __init__(self) -> None:
        self.arrays: dict = {}     # array variable name -> ArrayEncoding
        self.scalars: dict = {}    # scalar variable name -> (symbol, Sort)
        self._taken: set = set()
        self._counter = 0

    def _claim(self, base: str) -> str:
        name = base
        while name in self._taken:
            self._counter += 1
            name = f"{base}.{self._counter}"
        self._taken.add(name)
        return name

    def fresh(self, base: str) -> str:
        self._counter += 1
        return self._claim(f"{base}.{self._counter}")

    def register(self, v: Var) -> None:
        if v.sort.is_array:
            if v.name not in self.arrays:
                self.arrays[v.name] = ArrayEncoding(
                    self._claim(f"u_{v.name}"), self._claim(f"l_{v.name}"), v.sort.elem)
        elif v.name not in self.scalars:
            self.scalars[v.name] = (self._claim(v.name), v.sort)

    def declarations(self) -> list:
        out = []
        for sym, sort in self.scalars.values():
            out.append(["declare-const", sym, _smt_sort(sort)])
        for enc in self.arrays.values():
            out.append(["declare-const", enc.data,
                        ["Array", "Int", _smt_sort(enc.elem)]])
            out.append(["declare-const", enc.length, "Int"])
        return out

    def side_conditions(self, min_len: int = 0) -> list:
        return [["<=", str(min_len), enc.length] for enc in self.arrays.values()]

    def length_bounds(self, bound: int) -> list:
        return [["<=", enc.length, str(bound)] for enc in self.arrays.values()]

    def value_bounds(self, bound: int) -> list:
        """Small-model preference for the bounded search: integers and
        in-range array elements confined to ``[-bound, bound]``."""
        lo, hi = ["-", str(bound)], str(bound)
        out = []
        for sym, sort in self.scalars.values():
            if sort == INT:
                out.append(["and", ["<=", lo, sym], ["<=", sym, hi]])
        for enc in self.arrays.values():
            if enc.elem != INT:
                continue
            for i in range(bound + 1):
                cell = ["select", enc.data, str(i)]
                out.append(["=>", ["<", str(i), enc.length],
                            ["and", ["<=", lo, cell], ["<=", cell, hi]]])
        return out

    # --- encoding ---

    def encode(self, t: Term, bound: Optional[dict] = None):
        return self._enc(t, bound or {})

    def _enc(self, t: Term, bound: dict):
        if isinstance(t, IntConst):
            return str(t.value) if t.value >= 0 else ["-", str(-t.value)]
        if isinstance(t, BoolConst):
            return "true" if t.value else "false"
        if isinstance(t, Var):
            if t.sort.is_array:
                raise EncodeError(f"array variable {t.name} in scalar position")
            if t.name in bound:
                return bound[t.name]
            if t.name not in self.scalars:
                raise EncodeError(f"unregistered variable {t.name}")
            return self.scalars[t.name][0]
        if isinstance(t, Add):
            return ["+", self._enc(t.left, bound), self._enc(t.right, bound)]
        from .terms import ScalarMul
        if isinstance(t, ScalarMul):
            return ["*", self._enc(IntConst(t.coeff), bound), self._enc(t.arg, bound)]
        if isinstance(t, Leq):
            return ["<=", self._enc(t.left, bound), self._enc(t.right, bound)]
        if isinstance(t, Eq):
            if sort_of(t.left).is_array:
                return self._array_equality(t, bound)
            return ["=", self._enc(t.left, bound), self._enc(t.right, bound)]
        if isinstance(t, Not):
            return ["not", self._enc(t.arg, bound)]
        if isinstance(t, And):
            if not t.args:
                return "true"
            return ["and"] + [self._enc(a, bound) for a in t.args]
        if isinstance(t, Or):
            if not t.args:
                return "false"
            return ["or"] + [self._enc(a, bound) for a in t.args]
        if isinstance(t, Ite):
            return ["ite", self._enc(t.cond, bound), self._enc(t.then, bound),
                    self._enc(t.els, bound)]
        if isinstance(t, Read):
            data, length, elem = self.encode_array(t.array, bound)
            idx = self._enc(t.index, bound)
            default = "false" if elem == BOOL else "0"
            return ["ite", _in_range(idx, length), ["select", data, idx], default]
        if isinstance(t, Len):
            _, length, _ = self.encode_array(t.array, bound)
            return length
        if isinstance(t, Forall):
            return self._forall(t, bound)
        raise EncodeError(f"cannot encode {t!r}")

    def encode_array(self, t: Term, bound: dict) -> tuple:
        """Encode an array-sorted term as ``(data, length, elem_sort)``."""
        if isinstance(t, Var):
            if t.name not in self.arrays:
                raise EncodeError(f"unregistered array {t.name}")
            enc = self.arrays[t.name]
            return enc.data, enc.length, enc.elem
        if isinstance(t, Write):
            data, length, elem = self.encode_array(t.array, bound)
            idx = self._enc(t.index, bound)
            val = self._enc(t.value, bound)
            stored = ["ite", _in_range(idx, length), ["store", data, idx, val], data]
            return stored, length, elem
        if isinstance(t, Ite):
            d1, l1, e1 = self.encode_array(t.then, bound)
            d2, l2, e2 = self.encode_array(t.els, bound)
            cond = self._enc(t.cond, bound)
            return ["ite", cond, d1, d2], ["ite", cond, l1, l2], e1
        raise EncodeError(f"cannot encode array term {t!r}")

    def _array_equality(self, t: Eq, bound: dict):
        d1, l1, _ = self.encode_array(t.left, bound)
        d2, l2, _ = self.encode_array(t.right, bound)
        qi = self.fresh("eqi")
        element_wise = ["forall", [[qi, "Int"]],
                        ["=>", _in_range(qi, l1),
                         ["=", ["select", d1, qi], ["select", d2, qi]]]]
        return ["and", ["=", l1, l2], element_wise]

    def _forall(self, t: Forall, bound: dict):
        inner = dict(bound)
        binder = []
        guards = []
        for blk in t.blocks:
            _, length, _ = self.encode_array(blk.array, bound)
            renamed = []
            for k in blk.vars:
                sym = self.fresh(k)
                inner[k] = sym
                renamed.append(sym)
                binder.append([sym, "Int"])
                guards.append(_in_range(sym, length))
            if t.ordered:
                for a, b in zip(renamed, renamed[1:]):
                    guards.append(["<=", a, b])
        matrix = self._enc(t.matrix, inner)
        guard = guards[0] if len(guards) == 1 else ["and"] + guards
        return ["forall", binder, ["=>", guard, matrix]]


def _in_range(idx, length):
    return ["and", ["<=", "0", idx], ["<", idx, length]]


def _smt_sort(sort: Sort):
    if sort == INT:
        return "Int"
    if sort == BOOL:
        return "Bool"
    return ["Array", "Int", _smt_sort(sort.elem)]


def encode_formula(t: Term, min_len: int = 0) -> tuple:
    """Standalone encoding of a closed formula: returns the encoder (with
    registered free variables), the encoded body, and the side conditions."""
    from .terms import free_vars
    enc = Encoder()
    for v in free_vars(t).values():
        enc.register(v)
    body = enc.encode(t)
    return enc, body, enc.side_conditions(min_len)


# ---------------------------------------------------------------------------
# Check results
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    status: str                 # "valid" | "counterexample" | "unknown"
    implication: Optional[HornImplication] = None
    clause_index: Optional[int] = None
    env: Optional[dict] = None  # full clause-variable model, for diagnostics
    reason: str = ""
    bound: Optional[int] = None

    @property
    def is_valid(self) -> bool:
        return self.status == "valid"

    @property
    def is_counterexample(self) -> bool:
        return self.status == "counterexample"


class Teacher:
    """Checks candidate solutions clause by clause through one solver
    subprocess; not shareable across threads."""

    def __init__(self, system: ChcSystem, config: Optional[SolverConfig] = None) -> None:
        self.system = system
        self.config = config or SolverConfig()
        self._solver: Optional[SolverProcess] = None

    # --- lifecycle ---

    @property
    def solver(self) -> SolverProcess:
        if self._solver is None:
            self._solver = SolverProcess(self.config)
        return self._solver

    def _restart(self) -> None:
        if self._solver is not None:
            self._solver.close()
            self._solver = None

    def close(self) -> None:
        self._restart()

    def __enter__(self) -> "Teacher":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # --- clause checking ---

    def check_clause(self, index: int, solution: Mapping,
                     bound: Optional[int] = None) -> CheckResult:
        """Sat query for the negated clause under *solution*; a model
        becomes a counterexample implication."""
        clause = self.system.clauses[index]
        enc = Encoder()
        for v in clause.variables:
            enc.register(v)
        formula = solution_term(clause, solution, self.system)
        body = enc.encode(formula)
        script = []
        if self.config.produce_models:
            script.append(["set-option", ":produce-models", "true"])
        script.extend(enc.declarations())
        min_len = 1 if bound is not None else self.config.min_array_len
        for side in enc.side_conditions(min_len):
            script.append(["assert", side])
        if bound is not None:
            for b in enc.length_bounds(bound):
                script.append(["assert", b])
            for b in enc.value_bounds(bound):
                script.append(["assert", b])
        script.append(["assert", body])
        text = " ".join(sexpr.render(s) for s in script)
        for attempt in range(3):
            try:
                self.solver.reset()
                verdict = self.solver.check_sat(text)
                if verdict == "unsat":
                    return CheckResult("valid", clause_index=index, bound=bound)
                if verdict == "unknown":
                    return CheckResult("unknown", clause_index=index, bound=bound,
                                       reason="solver returned unknown")
                env = self._read_model(clause, enc)
                break
            except SolverTimeout:
                self._restart()
                return CheckResult("unknown", clause_index=index, bound=bound,
                                   reason="solver timed out")
            except SolverTransportError:
                # spurious WASM-side corruption: replay in a fresh process
                self._restart()
                if attempt == 2:
                    raise
        implication = self._implication(clause, env)
        return CheckResult("counterexample", implication, index, env, bound=bound)

    def _minimize_model(self, clause: Clause, enc: Encoder) -> None:
        """Shrink the satisfying model toward a canonical small one.

        Greedy lexicographic minimization: array lengths first, then
        integers, booleans, and in-range array cells, each pinned to the
        first value (by absolute size) that keeps the query satisfiable.
        Canonically small counterexamples repeat across runs, so the
        learner sees each hole only once.
        """
        candidates = [0] + [s * v for v in range(1, 9) for s in (1, -1)]
        lengths = [1, 2, 3, 4, 5, 6, 7, 8]

        def pin(expr, values) -> Optional[int]:
            for v in values:
                lit = str(v) if v >= 0 else ["-", str(-v)]
                self.solver.send(sexpr.render(["push", "1"]))
                self.solver.send(sexpr.render(["assert", ["=", expr, lit]]))
                if self.solver.check_sat("") == "sat":
                    return v
                self.solver.send(sexpr.render(["pop", "1"]))
            return None

        array_vars = [v for v in clause.variables if v.sort.is_array]
        fixed_lengths: dict = {}
        for v in array_vars:
            fixed_lengths[v.name] = pin(enc.arrays[v.name].length, lengths)
        for v in clause.variables:
            if v.sort == INT:
                pin(enc.scalars[v.name][0], candidates)
        for v in clause.variables:
            if v.sort == BOOL:
                for lit in ("false", "true"):
                    self.solver.send(sexpr.render(["push", "1"]))
                    self.solver.send(sexpr.render(
                        ["assert", ["=", enc.scalars[v.name][0], lit]]))
                    if self.solver.check_sat("") == "sat":
                        break
                    self.solver.send(sexpr.render(["pop", "1"]))
        for v in array_vars:
            length = fixed_lengths.get(v.name)
            if length is None:
                continue
            a = enc.arrays[v.name]
            for i in range(length):
                cell = ["select", a.data, str(i)]
                if a.elem == INT:
                    pin(cell, candidates)
        if self.solver.check_sat("") != "sat":  # defensive; pins keep it sat
            raise SolverTransportError("model minimization lost satisfiability")

    def _read_model(self, clause: Clause, enc: Encoder) -> dict:
        self._minimize_model(clause, enc)
        env: dict = {}
        scalar_vars = [v for v in clause.variables if not v.sort.is_array]
        if scalar_vars:
            exprs = [enc.scalars[v.name][0] for v in scalar_vars]
            values = self.solver.get_values(exprs)
            for v, se in zip(scalar_vars, values):
                env[v.name] = parse_value(se)
        array_vars = [v for v in clause.variables if v.sort.is_array]
        if array_vars:
            lengths = self.solver.get_values(
                [enc.arrays[v.name].length for v in array_vars])
            for v, lse in zip(array_vars, lengths):
                length = max(parse_value(lse), 0)
                items = []
                data = enc.arrays[v.name].data
                for start in range(0, length, 256):
                    chunk = [sexpr.render(["select", data, str(i)])
                             for i in range(start, min(start + 256, length))]
                    items.extend(parse_value(se) for se in self.solver.get_values(chunk))
                env[v.name] = ArrayVal(v.sort.elem, tuple(items))
        return env

    def _implication(self, clause: Clause, env: dict) -> HornImplication:
        def point(app: PredApp) -> DataPoint:
            sig = self.system.predicates[app.pred]
            return DataPoint.make(app.pred, app_env(app, sig, env))

        body = tuple(point(a) for a in clause.body)
        if clause.head is None:
            return HornImplication.negative(body)
        head = point(clause.head)
        if not body:
            return HornImplication.positive(head)
        return HornImplication.conditional(body, head)

    def find_counterexample(self, solution: Mapping) -> CheckResult:
        """First violated clause, smallest array bound: for each clause try
        L = 1 .. max_size_bound, then once unbounded."""
        for index, clause in enumerate(self.system.clauses):
            has_arrays = any(v.sort.is_array for v in clause.variables)
            if has_arrays:
                for bound in range(1, self.config.max_size_bound + 1):
                    res = self.check_clause(index, solution, bound=bound)
                    if not res.is_valid:
                        return res
            res = self.check_clause(index, solution, bound=None)
            if not res.is_valid:
                return res
        return CheckResult("valid")

    # --- entailment utilities (used by reports and tests) ---

    def check_equivalence(self, pred: str, left: QuantifiedProperty,
                          right: QuantifiedProperty,
                          assumptions: Iterable[Term] = ()) -> Optional[bool]:
        """Are two properties over *pred*'s parameters equivalent under the
        given assumptions?  None when the solver cannot tell."""
        sig = self.system.predicates[pred]
        enc = Encoder()
        for v in sig.vars():
            enc.register(v)
        script = [["set-option", ":produce-models", "true"]]
        script.extend(enc.declarations())
        for side in enc.side_conditions(0):
            script.append(["assert", side])
        for a in assumptions:
            script.append(["assert", enc.encode(a)])
        l = enc.encode(left.to_term())
        r = enc.encode(right.to_term())
        script.append(["assert", ["not", ["=", l, r]]])
        text = " ".join(sexpr.render(s) for s in script)
        for attempt in range(3):
            try:
                self.solver.reset()
                verdict = self.solver.check_sat(text)
                break
            except SolverTimeout:
                self._restart()
                return None
            except SolverTransportError:
                self._restart()
                if attempt == 2:
                    raise
        if verdict == "unsat":
            return True
        if verdict == "sat":
            return False
        return None


# ---------------------------------------------------------------------------
# SMT-LIB HORN export
# ---------------------------------------------------------------------------

def export_smtlib(system: ChcSystem) -> str:
    """The system in standard HORN form, predicates uninterpreted, arrays
    in the unbounded-array + explicit-length encoding."""
    lines = ["(set-logic HORN)"]
    pred_arity: dict = {}
    for sig in system.predicates.values():
        sorts = []
        for _, sort in sig.params:
            if sort.is_array:
                sorts.append(["Array", "Int", _smt_sort(sort.elem)])
                sorts.append("Int")
            else:
                sorts.append(_smt_sort(sort))
        pred_arity[sig.name] = len(sorts)
        lines.append(sexpr.render(["declare-fun", sig.name, sorts, "Bool"]))
    for clause in system.clauses:
        enc = Encoder()
        for v in clause.variables:
            enc.register(v)
        binder = []
        for v in clause.variables:
            if v.sort.is_array:
                a = enc.arrays[v.name]
                binder.append([a.data, ["Array", "Int", _smt_sort(a.elem)]])
                binder.append([a.length, "Int"])
            else:
                binder.append([enc.scalars[v.name][0], _smt_sort(v.sort)])
        conjuncts = [_app_sexpr(app, enc) for app in clause.body]
        conjuncts.extend(enc.side_conditions(0))
        constraint = enc.encode(clause.constraint)
        if constraint != "true":
            conjuncts.append(constraint)
        if not conjuncts:
            body = "true"
        elif len(conjuncts) == 1:
            body = conjuncts[0]
        else:
            body = ["and"] + conjuncts
        head = _app_sexpr(clause.head, enc) if clause.head is not None else "false"
        impl = ["=>", body, head]
        form = ["assert", ["forall", binder, impl] if binder else impl]
        lines.append(sexpr.render(form))
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _app_sexpr(app: PredApp, enc: Encoder):
    args = []
    for v in app.args:
        if v.sort.is_array:
            a = enc.arrays[v.name]
            args.extend([a.data, a.length])
        else:
            args.append(enc.scalars[v.name][0])
    return [app.pred] + args
