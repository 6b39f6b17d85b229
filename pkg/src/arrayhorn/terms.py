"""Sorted term language for integers, booleans, and finite integer-indexed arrays.

Terms are immutable trees.  Arrays are first-class finite sequences with
read / write / length operations; out-of-bounds reads evaluate to the
element default (0 or false) and out-of-bounds writes leave the array
unchanged.  Universally quantified array constraints are embedded as
``Forall`` nodes whose index variables range over ``[0, len(array))``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional


class SortError(Exception):
    """A term or value failed a sort check."""


class EvalError(Exception):
    """Evaluation failed (unbound variable, malformed environment)."""


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sort:
    kind: str                      # "int" | "bool" | "array"
    elem: Optional["Sort"] = None  # element sort for arrays

    def __post_init__(self) -> None:
        if self.kind == "array":
            if self.elem is None or self.elem.kind not in ("int", "bool"):
                raise SortError("array element sorts must be int or bool")
        elif self.elem is not None:
            raise SortError(f"{self.kind} sort takes no element sort")

    @property
    def is_array(self) -> bool:
        return self.kind == "array"

    def __str__(self) -> str:
        if self.is_array:
            return f"(Array {self.elem})"
        return {"int": "Int", "bool": "Bool"}[self.kind]


INT = Sort("int")
BOOL = Sort("bool")
ARRAY_INT = Sort("array", INT)
ARRAY_BOOL = Sort("array", BOOL)


def sort_from_sexpr(se) -> Sort:
    if se == "Int":
        return INT
    if se == "Bool":
        return BOOL
    if isinstance(se, list) and len(se) == 2 and se[0] == "Array":
        return Sort("array", sort_from_sexpr(se[1]))
    raise SortError(f"unknown sort: {se}")


def sort_to_sexpr(sort: Sort):
    if sort.is_array:
        return ["Array", sort_to_sexpr(sort.elem)]
    return str(sort)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArrayVal:
    """A finite array value; elements share one primitive sort."""

    elem_sort: Sort
    items: tuple

    def __post_init__(self) -> None:
        if self.elem_sort.kind not in ("int", "bool"):
            raise SortError("array elements must be int or bool")
        for v in self.items:
            if sort_of_value(v) != self.elem_sort:
                raise SortError(f"array element {v!r} is not {self.elem_sort}")

    def __len__(self) -> int:
        return len(self.items)

    def get(self, index: int):
        """Read with the out-of-bounds default (0 / false)."""
        if 0 <= index < len(self.items):
            return self.items[index]
        return 0 if self.elem_sort == INT else False

    def put(self, index: int, value) -> "ArrayVal":
        """Write; no effect when the index is out of bounds."""
        if sort_of_value(value) != self.elem_sort:
            raise SortError("array write with wrong element sort")
        if 0 <= index < len(self.items):
            items = self.items[:index] + (value,) + self.items[index + 1:]
            return ArrayVal(self.elem_sort, items)
        return self

    def __str__(self) -> str:
        return "[" + ", ".join(str(v) for v in self.items) + "]"


Value = "int | bool | ArrayVal"


def sort_of_value(v) -> Sort:
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, int):
        return INT
    if isinstance(v, ArrayVal):
        return Sort("array", v.elem_sort)
    raise SortError(f"not a value: {v!r}")


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    def __str__(self) -> str:
        from . import sexpr
        return sexpr.render(term_to_sexpr(self))


@dataclass(frozen=True)
class IntConst(Term):
    value: int


@dataclass(frozen=True)
class BoolConst(Term):
    value: bool


@dataclass(frozen=True)
class Var(Term):
    name: str
    sort: Sort


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class ScalarMul(Term):
    coeff: int
    arg: Term


@dataclass(frozen=True)
class Leq(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Eq(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Term):
    arg: Term


@dataclass(frozen=True)
class And(Term):
    args: tuple


@dataclass(frozen=True)
class Or(Term):
    args: tuple


@dataclass(frozen=True)
class Ite(Term):
    cond: Term
    then: Term
    els: Term


@dataclass(frozen=True)
class Read(Term):
    array: Term
    index: Term


@dataclass(frozen=True)
class Write(Term):
    array: Term
    index: Term
    value: Term


@dataclass(frozen=True)
class Len(Term):
    array: Term


@dataclass(frozen=True)
class Block:
    """One quantifier block: index variables ranging over one array term."""

    array: Term
    vars: tuple

    def __post_init__(self) -> None:
        if not self.vars:
            raise SortError("empty quantifier block")


@dataclass(frozen=True)
class Forall(Term):
    """``forall k in blocks. (0 <= k < len(arr) [/\\ k1 <= ... <= kn]) => matrix``.

    The in-range guard is implicit; when ``ordered`` is set the guard also
    requires each block's variables to be nondecreasing.
    """

    blocks: tuple
    matrix: Term
    ordered: bool = False

    def bound_names(self) -> tuple:
        return tuple(v for b in self.blocks for v in b.vars)


TRUE = BoolConst(True)
FALSE = BoolConst(False)


# Constructor helpers with light normalization.  Derived comparisons and
# subtraction reduce to the core constructors here.

def intc(v: int) -> Term:
    return IntConst(v)


def var(name: str, sort: Sort = INT) -> Var:
    return Var(name, sort)


def add(*terms: Term) -> Term:
    terms = [t for t in terms if t != IntConst(0)]
    if not terms:
        return IntConst(0)
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


def mul(coeff: int, t: Term) -> Term:
    if coeff == 1:
        return t
    if isinstance(t, IntConst):
        return IntConst(coeff * t.value)
    return ScalarMul(coeff, t)


def sub(a: Term, b: Term) -> Term:
    return add(a, mul(-1, b))


def leq(a: Term, b: Term) -> Term:
    return Leq(a, b)


def lt(a: Term, b: Term) -> Term:
    return Leq(add(a, IntConst(1)), b)


def geq(a: Term, b: Term) -> Term:
    return Leq(b, a)


def gt(a: Term, b: Term) -> Term:
    return lt(b, a)


def eq(a: Term, b: Term) -> Term:
    return Eq(a, b)


def neq(a: Term, b: Term) -> Term:
    return Not(Eq(a, b))


def not_(t: Term) -> Term:
    if isinstance(t, BoolConst):
        return BoolConst(not t.value)
    if isinstance(t, Not):
        return t.arg
    return Not(t)


def _flatten(cls, terms: Iterable[Term]) -> Iterator[Term]:
    for t in terms:
        if isinstance(t, cls):
            yield from t.args
        else:
            yield t


def and_(*terms: Term) -> Term:
    args = []
    for t in _flatten(And, terms):
        if t == TRUE:
            continue
        if t == FALSE:
            return FALSE
        args.append(t)
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return And(tuple(args))


def or_(*terms: Term) -> Term:
    args = []
    for t in _flatten(Or, terms):
        if t == FALSE:
            continue
        if t == TRUE:
            return TRUE
        args.append(t)
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return Or(tuple(args))


def implies(a: Term, b: Term) -> Term:
    return or_(not_(a), b)


def ite(c: Term, t: Term, e: Term) -> Term:
    if isinstance(c, BoolConst):
        return t if c.value else e
    return Ite(c, t, e)


def read(a: Term, i: Term) -> Term:
    return Read(a, i)


def write(a: Term, i: Term, v: Term) -> Term:
    return Write(a, i, v)


def length(a: Term) -> Term:
    return Len(a)


# ---------------------------------------------------------------------------
# Sort inference
# ---------------------------------------------------------------------------

def sort_of(t: Term) -> Sort:
    """Infer the sort of a term, checking well-sortedness along the way."""
    if isinstance(t, IntConst):
        return INT
    if isinstance(t, BoolConst):
        return BOOL
    if isinstance(t, Var):
        return t.sort
    if isinstance(t, (Add, ScalarMul)):
        args = (t.left, t.right) if isinstance(t, Add) else (t.arg,)
        for a in args:
            if sort_of(a) != INT:
                raise SortError(f"arithmetic over non-integer: {a}")
        return INT
    if isinstance(t, Leq):
        if sort_of(t.left) != INT or sort_of(t.right) != INT:
            raise SortError(f"<= over non-integers: {t}")
        return BOOL
    if isinstance(t, Eq):
        ls, rs = sort_of(t.left), sort_of(t.right)
        if ls != rs:
            raise SortError(f"= over mismatched sorts {ls} / {rs}")
        return BOOL
    if isinstance(t, Not):
        if sort_of(t.arg) != BOOL:
            raise SortError(f"not over non-boolean: {t.arg}")
        return BOOL
    if isinstance(t, (And, Or)):
        for a in t.args:
            if sort_of(a) != BOOL:
                raise SortError(f"connective over non-boolean: {a}")
        return BOOL
    if isinstance(t, Ite):
        if sort_of(t.cond) != BOOL:
            raise SortError("ite condition must be boolean")
        ts, es = sort_of(t.then), sort_of(t.els)
        if ts != es:
            raise SortError("ite branches with mismatched sorts")
        return ts
    if isinstance(t, Read):
        a = sort_of(t.array)
        if not a.is_array:
            raise SortError(f"read from non-array: {t.array}")
        if sort_of(t.index) != INT:
            raise SortError("read index must be integer")
        return a.elem
    if isinstance(t, Write):
        a = sort_of(t.array)
        if not a.is_array:
            raise SortError(f"write to non-array: {t.array}")
        if sort_of(t.index) != INT:
            raise SortError("write index must be integer")
        if sort_of(t.value) != a.elem:
            raise SortError("write value has wrong element sort")
        return a
    if isinstance(t, Len):
        if not sort_of(t.array).is_array:
            raise SortError(f"length of non-array: {t.array}")
        return INT
    if isinstance(t, Forall):
        for b in t.blocks:
            if not sort_of(b.array).is_array:
                raise SortError("quantifier block over non-array")
        if sort_of(t.matrix) != BOOL:
            raise SortError("quantifier matrix must be boolean")
        return BOOL
    raise SortError(f"unknown term: {t!r}")


def free_vars(t: Term, bound: frozenset = frozenset()) -> dict:
    """Free variables of *t* as an ordered name -> Var mapping."""
    out: dict = {}
    _free_vars(t, bound, out)
    return out


def _free_vars(t: Term, bound: frozenset, out: dict) -> None:
    if isinstance(t, Var):
        if t.name not in bound and t.name not in out:
            out[t.name] = t
    elif isinstance(t, Forall):
        inner = bound | set(t.bound_names())
        for b in t.blocks:
            _free_vars(b.array, bound, out)
        _free_vars(t.matrix, inner, out)
    else:
        for child in _children(t):
            _free_vars(child, bound, out)


def _children(t: Term) -> tuple:
    if isinstance(t, (IntConst, BoolConst, Var)):
        return ()
    if isinstance(t, Add):
        return (t.left, t.right)
    if isinstance(t, ScalarMul):
        return (t.arg,)
    if isinstance(t, (Leq, Eq)):
        return (t.left, t.right)
    if isinstance(t, Not):
        return (t.arg,)
    if isinstance(t, (And, Or)):
        return t.args
    if isinstance(t, Ite):
        return (t.cond, t.then, t.els)
    if isinstance(t, Read):
        return (t.array, t.index)
    if isinstance(t, Write):
        return (t.array, t.index, t.value)
    if isinstance(t, Len):
        return (t.array,)
    if isinstance(t, Forall):
        return tuple(b.array for b in t.blocks) + (t.matrix,)
    raise SortError(f"unknown term: {t!r}")


def children(t: Term) -> tuple:
    """Immediate subterms (quantifier blocks contribute their array terms)."""
    return _children(t)


def contains_write(t: Term) -> bool:
    if isinstance(t, Write):
        return True
    return any(contains_write(c) for c in _children(t))


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

def substitute(t: Term, subst: Mapping[str, Term]) -> Term:
    """Capture-free simultaneous substitution of variables by terms.

    The substitution must be sort-preserving (checked at each variable
    occurrence); bound quantifier variables are renamed when an image
    would otherwise be captured.
    """
    return _subst(t, dict(subst))


def _subst(t: Term, subst: dict) -> Term:
    if isinstance(t, Var):
        if t.name in subst:
            image = subst[t.name]
            if sort_of(image) != t.sort:
                raise SortError(
                    f"substitution for {t.name} has sort {sort_of(image)}, expected {t.sort}")
            return image
        return t
    if isinstance(t, (IntConst, BoolConst)):
        return t
    if isinstance(t, Forall):
        return _subst_forall(t, subst)
    if isinstance(t, Add):
        return Add(_subst(t.left, subst), _subst(t.right, subst))
    if isinstance(t, ScalarMul):
        return ScalarMul(t.coeff, _subst(t.arg, subst))
    if isinstance(t, Leq):
        return Leq(_subst(t.left, subst), _subst(t.right, subst))
    if isinstance(t, Eq):
        return Eq(_subst(t.left, subst), _subst(t.right, subst))
    if isinstance(t, Not):
        return Not(_subst(t.arg, subst))
    if isinstance(t, And):
        return And(tuple(_subst(a, subst) for a in t.args))
    if isinstance(t, Or):
        return Or(tuple(_subst(a, subst) for a in t.args))
    if isinstance(t, Ite):
        return Ite(_subst(t.cond, subst), _subst(t.then, subst), _subst(t.els, subst))
    if isinstance(t, Read):
        return Read(_subst(t.array, subst), _subst(t.index, subst))
    if isinstance(t, Write):
        return Write(_subst(t.array, subst), _subst(t.index, subst), _subst(t.value, subst))
    if isinstance(t, Len):
        return Len(_subst(t.array, subst))
    raise SortError(f"unknown term: {t!r}")


def _subst_forall(t: Forall, subst: dict) -> Term:
    bound = set(t.bound_names())
    inner = {k: v for k, v in subst.items() if k not in bound}
    image_frees: set = set()
    for image in inner.values():
        image_frees.update(free_vars(image))
    rename: dict = {}
    taken = image_frees | set(inner) | bound | set(free_vars(t.matrix))
    for k in t.bound_names():
        if k in image_frees:
            fresh = k
            while fresh in taken:
                fresh = fresh + "_"
            rename[k] = Var(fresh, INT)
            taken.add(fresh)
    matrix = t.matrix
    if rename:
        matrix = _subst(matrix, rename)
    blocks = tuple(
        Block(_subst(b.array, subst),
              tuple(rename[v].name if v in rename else v for v in b.vars))
        for b in t.blocks)
    return Forall(blocks, _subst(matrix, inner), t.ordered)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_term(t: Term, env: Mapping):
    """Evaluate a closed-under-*env* term to a value.

    Out-of-bounds reads return the element default (0 / false); writes
    out of bounds return the array unchanged; ``Forall`` enumerates all
    in-range index assignments over the concrete array lengths.
    """
    if isinstance(t, IntConst):
        return t.value
    if isinstance(t, BoolConst):
        return t.value
    if isinstance(t, Var):
        if t.name not in env:
            raise EvalError(f"unbound variable: {t.name}")
        v = env[t.name]
        if sort_of_value(v) != t.sort:
            raise SortError(f"value for {t.name} has sort {sort_of_value(v)}, expected {t.sort}")
        return v
    if isinstance(t, Add):
        return eval_term(t.left, env) + eval_term(t.right, env)
    if isinstance(t, ScalarMul):
        return t.coeff * eval_term(t.arg, env)
    if isinstance(t, Leq):
        return eval_term(t.left, env) <= eval_term(t.right, env)
    if isinstance(t, Eq):
        return eval_term(t.left, env) == eval_term(t.right, env)
    if isinstance(t, Not):
        return not eval_term(t.arg, env)
    if isinstance(t, And):
        return all(eval_term(a, env) for a in t.args)
    if isinstance(t, Or):
        return any(eval_term(a, env) for a in t.args)
    if isinstance(t, Ite):
        return eval_term(t.then if eval_term(t.cond, env) else t.els, env)
    if isinstance(t, Read):
        arr = eval_term(t.array, env)
        if not isinstance(arr, ArrayVal):
            raise SortError("read from non-array value")
        return arr.get(eval_term(t.index, env))
    if isinstance(t, Write):
        arr = eval_term(t.array, env)
        if not isinstance(arr, ArrayVal):
            raise SortError("write to non-array value")
        return arr.put(eval_term(t.index, env), eval_term(t.value, env))
    if isinstance(t, Len):
        arr = eval_term(t.array, env)
        if not isinstance(arr, ArrayVal):
            raise SortError("length of non-array value")
        return len(arr)
    if isinstance(t, Forall):
        return _eval_forall(t, env)
    raise EvalError(f"unknown term: {t!r}")


def _eval_forall(t: Forall, env: Mapping) -> bool:
    ranges = []
    for b in t.blocks:
        arr = eval_term(b.array, env)
        if not isinstance(arr, ArrayVal):
            raise SortError("quantifier block over non-array value")
        n = len(b.vars)
        if t.ordered:
            tuples = itertools.combinations_with_replacement(range(len(arr)), n)
        else:
            tuples = itertools.product(range(len(arr)), repeat=n)
        ranges.append((b.vars, list(tuples)))
    for combo in itertools.product(*(r[1] for r in ranges)):
        inner = dict(env)
        for (names, _), values in zip(ranges, combo):
            inner.update(zip(names, values))
        if not eval_term(t.matrix, inner):
            return False
    return True


# ---------------------------------------------------------------------------
# Quantified array properties
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantifiedProperty:
    """``psi /\\ forall Q_a1 ... Q_an. guard => matrix``.

    ``psi`` is quantifier free; every block quantifies index variables of
    one array with the implicit guard ``0 <= k < len(a)`` (plus
    ``k1 <= ... <= kn`` per block in ordered mode).
    """

    psi: Term
    blocks: tuple
    matrix: Term
    ordered: bool = False

    def __post_init__(self) -> None:
        seen: set = set()
        for b in self.blocks:
            for v in b.vars:
                if v in seen:
                    raise SortError(f"quantifier variable {v} reused across blocks")
                seen.add(v)

    def to_term(self) -> Term:
        if not self.blocks:
            return and_(self.psi, self.matrix)
        return and_(self.psi, Forall(self.blocks, self.matrix, self.ordered))

    def quantifier_names(self) -> tuple:
        return tuple(v for b in self.blocks for v in b.vars)

    def __str__(self) -> str:
        return str(self.to_term())


def check_property_reads(matrix: Term, blocks: tuple) -> None:
    """Reads of a quantified array must use one of its block variables or a
    quantifier-free index.  Raises :class:`SortError` otherwise; used by the
    property parser (the fragment checker reports instead of raising)."""
    block_of = {}
    all_qvars = set()
    for b in blocks:
        if isinstance(b.array, Var):
            block_of[b.array.name] = set(b.vars)
        all_qvars.update(b.vars)

    def walk(t: Term) -> None:
        if isinstance(t, Read) and isinstance(t.array, Var) and t.array.name in block_of:
            idx = t.index
            idx_vars = set(free_vars(idx))
            if isinstance(idx, Var) and idx.name in block_of[t.array.name]:
                pass
            elif idx_vars & all_qvars:
                raise SortError(
                    f"read {t} must index via one of {sorted(block_of[t.array.name])} "
                    "or a quantifier-free index")
        for c in _children(t):
            walk(c)

    walk(matrix)


def prop_true() -> QuantifiedProperty:
    return QuantifiedProperty(TRUE, (), TRUE)


def eval_property(p: QuantifiedProperty, env: Mapping) -> bool:
    """Truth of the property under *env* (finite enumeration of the blocks)."""
    return eval_term(p.to_term(), env)


# ---------------------------------------------------------------------------
# Linear atom normalization (used by the fragment checker and attributes)
# ---------------------------------------------------------------------------

class NotLinear(Exception):
    """Raised when a term is not a linear integer combination."""


def linear_form(t: Term) -> tuple:
    """Normalize an integer term to ``(coeffs, const)``.

    ``coeffs`` maps each atomic integer term (a ``Var``, ``Read``, or
    ``Len``) to its integer coefficient.  Raises :class:`NotLinear` on
    anything else.
    """
    coeffs: dict = {}
    const = _linear(t, 1, coeffs)
    return {k: v for k, v in coeffs.items() if v != 0}, const


def _linear(t: Term, scale: int, coeffs: dict) -> int:
    if isinstance(t, IntConst):
        return scale * t.value
    if isinstance(t, (Var, Read, Len)):
        coeffs[t] = coeffs.get(t, 0) + scale
        return 0
    if isinstance(t, Add):
        return _linear(t.left, scale, coeffs) + _linear(t.right, scale, coeffs)
    if isinstance(t, ScalarMul):
        return _linear(t.arg, scale * t.coeff, coeffs)
    raise NotLinear(str(t))


# ---------------------------------------------------------------------------
# S-expression rendering and parsing
# ---------------------------------------------------------------------------

def term_to_sexpr(t: Term):
    if isinstance(t, IntConst):
        return str(t.value) if t.value >= 0 else ["-", str(-t.value)]
    if isinstance(t, BoolConst):
        return "true" if t.value else "false"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Add):
        return ["+", term_to_sexpr(t.left), term_to_sexpr(t.right)]
    if isinstance(t, ScalarMul):
        return ["*", term_to_sexpr(IntConst(t.coeff)), term_to_sexpr(t.arg)]
    if isinstance(t, Leq):
        return ["<=", term_to_sexpr(t.left), term_to_sexpr(t.right)]
    if isinstance(t, Eq):
        return ["=", term_to_sexpr(t.left), term_to_sexpr(t.right)]
    if isinstance(t, Not):
        return ["not", term_to_sexpr(t.arg)]
    if isinstance(t, And):
        return ["and"] + [term_to_sexpr(a) for a in t.args]
    if isinstance(t, Or):
        return ["or"] + [term_to_sexpr(a) for a in t.args]
    if isinstance(t, Ite):
        return ["ite", term_to_sexpr(t.cond), term_to_sexpr(t.then), term_to_sexpr(t.els)]
    if isinstance(t, Read):
        return ["read", term_to_sexpr(t.array), term_to_sexpr(t.index)]
    if isinstance(t, Write):
        return ["write", term_to_sexpr(t.array), term_to_sexpr(t.index), term_to_sexpr(t.value)]
    if isinstance(t, Len):
        return ["len", term_to_sexpr(t.array)]
    if isinstance(t, Forall):
        head = "qprop-ord" if t.ordered else "qprop"
        binds = [[term_to_sexpr(b.array)] + list(b.vars) for b in t.blocks]
        return [head, binds, term_to_sexpr(t.matrix)]
    raise SortError(f"unknown term: {t!r}")


class TermParseError(Exception):
    pass


def term_from_sexpr(se, scope: Mapping[str, Sort]) -> Term:
    """Parse the canonical rendering back into a term.

    *scope* gives variable sorts; quantifier variables extend it locally.
    Accepts the derived operators ``<`` ``>=`` ``>`` ``-`` ``=>`` as sugar.
    """
    if isinstance(se, str):
        if se == "true":
            return TRUE
        if se == "false":
            return FALSE
        if se.lstrip("-").isdigit():
            return IntConst(int(se))
        if se in scope:
            return Var(se, scope[se])
        raise TermParseError(f"unknown symbol: {se}")
    if not se:
        raise TermParseError("empty application")
    head = se[0]
    if head in ("qprop", "qprop-ord"):
        if len(se) != 3:
            raise TermParseError("qprop takes bindings and a matrix")
        blocks = []
        inner = dict(scope)
        for bind in se[1]:
            if not isinstance(bind, list) or len(bind) < 2:
                raise TermParseError("qprop binding must be (array k1 k2 ...)")
            arr = term_from_sexpr(bind[0], scope)
            for v in bind[1:]:
                inner[v] = INT
            blocks.append(Block(arr, tuple(bind[1:])))
        return Forall(tuple(blocks), term_from_sexpr(se[2], inner), head == "qprop-ord")
    args = [term_from_sexpr(a, scope) for a in se[1:]]
    if head == "-" and len(args) == 1 and isinstance(args[0], IntConst):
        return IntConst(-args[0].value)
    if head == "+":
        return add(*args)
    if head == "-":
        if len(args) == 1:
            return mul(-1, args[0])
        out = args[0]
        for a in args[1:]:
            out = sub(out, a)
        return out
    if head == "*":
        if len(args) != 2:
            raise TermParseError("* takes two arguments")
        if isinstance(args[0], IntConst):
            return mul(args[0].value, args[1])
        if isinstance(args[1], IntConst):
            return mul(args[1].value, args[0])
        raise TermParseError("nonlinear multiplication")
    binops = {"<=": leq, "<": lt, ">=": geq, ">": gt, "=": eq, "distinct": neq}
    if head in binops:
        if len(args) != 2:
            raise TermParseError(f"{head} takes two arguments")
        return binops[head](args[0], args[1])
    if head == "not":
        return not_(args[0])
    if head == "and":
        return and_(*args)
    if head == "or":
        return or_(*args)
    if head == "=>":
        out = args[-1]
        for a in reversed(args[:-1]):
            out = implies(a, out)
        return out
    if head == "ite":
        return ite(args[0], args[1], args[2])
    if head == "read":
        return read(args[0], args[1])
    if head == "write":
        return write(args[0], args[1], args[2])
    if head == "len":
        return length(args[0])
    raise TermParseError(f"unknown operator: {head}")
