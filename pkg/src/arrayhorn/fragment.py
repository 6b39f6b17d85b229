"""Decidable-fragment check for quantified array properties.

A property passes when it is equivalent to a boolean combination of
guarded universal array constraints whose index guards use only atoms of
the shape ``iexpr <= iexpr`` / ``iexpr = iexpr`` (an ``iexpr`` being a
single quantified variable, a single array length, or an integer linear
combination of unquantified variables) and whose value constraints are
linear atoms over array reads and unquantified integer variables, with
reads indexed by an ``iexpr``.  Unquantified integer variables may not be
shared between index guards (including read indices) and value-level
positions.

Literals mentioning no quantified variable are unrestricted: they can be
factored out of the quantifier by case-splitting, which stays inside the
boolean-combination closure of the fragment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    And, BoolConst, Eq, Forall, Ite, Len, Leq, Not, NotLinear, Or,
    QuantifiedProperty, Read, Term, Var, Write, linear_form, sub, sort_of,
    SortError,
)


@dataclass
class FragmentReport:
    ok: bool
    diagnostic: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass
class _Analysis:
    qvars: frozenset
    guard_evars: set = field(default_factory=set)
    index_evars: set = field(default_factory=set)
    value_evars: set = field(default_factory=set)


def check_fragment(p: QuantifiedProperty) -> FragmentReport:
    """Report whether *p* lies in the decidable property fragment."""
    for b in p.blocks:
        if not isinstance(b.array, Var):
            return FragmentReport(False, f"quantifier block over compound array term {b.array}")
    qvars = frozenset(p.quantifier_names())
    if _mentions_quantified(p.psi, qvars):
        return FragmentReport(False, "psi part mentions a quantified variable")
    analysis = _Analysis(qvars)
    bad = _check_formula(p.matrix, analysis, positive=True)
    if bad is not None:
        return bad
    shared = (analysis.guard_evars | analysis.index_evars) & analysis.value_evars
    if shared:
        name = sorted(shared)[0]
        return FragmentReport(
            False, f"variable {name} occurs both in an index position and a value position")
    return FragmentReport(True)


def _mentions_quantified(t: Term, qvars: frozenset) -> bool:
    from .terms import free_vars
    return bool(set(free_vars(t)) & qvars)


def _check_formula(t: Term, an: _Analysis, positive: bool):
    """Walk the matrix in negation normal form; returns a failure report or None."""
    if isinstance(t, BoolConst):
        return None
    if isinstance(t, Not):
        return _check_formula(t.arg, an, not positive)
    if isinstance(t, (And, Or)):
        for a in t.args:
            bad = _check_formula(a, an, positive)
            if bad is not None:
                return bad
        return None
    if isinstance(t, Ite):
        # ite(c, a, b) == (c /\ a) \/ (~c /\ b): both branch polarities occur.
        for part, pol in ((t.cond, True), (t.cond, False), (t.then, positive), (t.els, positive)):
            bad = _check_formula(part, an, pol)
            if bad is not None:
                return bad
        return None
    if isinstance(t, Forall):
        return FragmentReport(False, f"nested quantifier {t}")
    return _check_literal(t, an, positive)


def _check_literal(atom: Term, an: _Analysis, positive: bool):
    from .terms import contains_write, free_vars
    if contains_write(atom):
        return FragmentReport(False, f"array write in matrix atom {atom}")
    if not _mentions_quantified(atom, an.qvars):
        return None  # quantifier-free literal: factors out of the property
    if isinstance(atom, Var):
        return None
    if isinstance(atom, Read):
        # boolean array read used as a literal
        return _check_read_index(atom, an)
    if isinstance(atom, Eq) and sort_of(atom.left).kind == "bool":
        # boolean equality with quantified reads inside: check each side
        for side in (atom.left, atom.right):
            bad = _check_formula(side, an, positive)
            if bad is not None:
                return bad
        return None
    if not isinstance(atom, (Leq, Eq)):
        return FragmentReport(False, f"unsupported atom {atom}")
    try:
        coeffs, const = linear_form(sub(atom.left, atom.right))
    except NotLinear as e:
        return FragmentReport(False, f"nonlinear atom {atom} ({e})")
    reads = [a for a in coeffs if isinstance(a, Read)]
    if reads:
        return _check_value_atom(atom, coeffs, an)
    return _check_index_atom(atom, coeffs, const, an, positive)


def _check_read_index(r: Read, an: _Analysis):
    """A read index must be a single quantified variable or an ``iexpr``
    free of quantified variables."""
    idx = r.index
    if isinstance(idx, Var) and idx.name in an.qvars:
        return None
    if isinstance(idx, Len):
        return None
    try:
        coeffs, _ = linear_form(idx)
    except NotLinear:
        return FragmentReport(False, f"nonlinear read index in {r}")
    for a in coeffs:
        if not isinstance(a, Var):
            return FragmentReport(False, f"read index in {r} mentions {a}")
        if a.name in an.qvars:
            return FragmentReport(
                False, f"read index in {r} combines quantified variable {a.name} with an offset")
        an.index_evars.add(a.name)
    return None


def _check_value_atom(atom: Term, coeffs: dict, an: _Analysis):
    for a, c in coeffs.items():
        if isinstance(a, Read):
            bad = _check_read_index(a, an)
            if bad is not None:
                return bad
        elif isinstance(a, Len):
            return FragmentReport(False, f"array length inside value atom {atom}")
        elif isinstance(a, Var):
            if a.name in an.qvars:
                return FragmentReport(
                    False, f"quantified variable {a.name} outside a read in value atom {atom}")
            an.value_evars.add(a.name)
        else:
            return FragmentReport(False, f"unsupported value atom {atom}")
    return None


def _check_index_atom(atom: Term, coeffs: dict, const: int, an: _Analysis, positive: bool):
    """The literal's complement lands in the index guard; check it is
    expressible there."""
    is_eq = isinstance(atom, Eq)
    negated = {k: -v for k, v in coeffs.items()}
    if positive and is_eq:
        # guard needs a disequality: t <= -1 or -t <= -1, both strict
        ok = (_iatom_expressible(coeffs, const + 1, an.qvars) and
              _iatom_expressible(negated, -const + 1, an.qvars))
    elif positive:
        # guard needs not(t <= 0), i.e. -t + 1 <= 0
        ok = _iatom_expressible(negated, -const + 1, an.qvars)
    else:
        # guard needs the atom itself
        ok = _iatom_expressible(coeffs, const, an.qvars)
    if not ok:
        return FragmentReport(False, f"index atom {atom} not expressible in the guard grammar")
    for a in coeffs:
        if isinstance(a, Var) and a.name not in an.qvars:
            an.guard_evars.add(a.name)
    return None


def _iatom_expressible(coeffs: dict, const: int, qvars: frozenset) -> bool:
    """Can ``sum(coeffs) + const <= 0`` (or ``= 0``) be split into
    ``iexpr <= iexpr``?  Quantified variables and lengths admit no
    coefficients or offsets, so at most one may sit on each side."""
    specials = []
    evar_part = False
    for a, c in coeffs.items():
        if isinstance(a, Len) or (isinstance(a, Var) and a.name in qvars):
            specials.append(c)
        else:
            evar_part = True
    if not specials:
        return True
    if len(specials) == 1:
        return specials[0] in (1, -1)
    if len(specials) == 2:
        return sorted(specials) == [-1, 1] and not evar_part and const == 0
    return False
