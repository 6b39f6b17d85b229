"""Scalar projections of array-valued data points.

A data point with concrete arrays is projected onto *diagrams*: vectors
over the point's scalar parameters plus, per array, n index variables,
their element values, and the array length.  A sample of data points
maps to a sample of diagrams whose Horn implications transfer the
original classification constraints; a quantifier-free classifier of the
projected sample lifts back to a universally quantified array property.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .chc import PredicateSig
from .sample import DataPoint, HornImplication, Sample
from .terms import (
    ArrayVal, BOOL, Block, INT, Len, QuantifiedProperty, Read, Sort, Term,
    TRUE, Var, free_vars, substitute,
)


class DiagramError(Exception):
    pass


class EmptyArrayError(DiagramError):
    """A data point carries an empty array; no index projection exists."""

    def __init__(self, predicate: str, array: str) -> None:
        super().__init__(f"data point for {predicate} has empty array {array}")
        self.array = array


@dataclass(frozen=True)
class ArrayVars:
    """Projection variables for one array parameter."""

    array: str
    index_vars: tuple    # k_1 ... k_n
    value_vars: tuple    # value of the array at each index variable
    length_var: str
    elem_sort: Sort


@dataclass(frozen=True)
class PredicateScheme:
    predicate: str
    scalar_params: tuple   # tuple[(name, Sort)] for non-array parameters
    arrays: tuple          # tuple[ArrayVars]
    n: int
    ordered: bool

    def variable_order(self) -> tuple:
        """Canonical diagram variable order: scalars, then per array the
        index variables, value variables, and length."""
        out = [n for n, _ in self.scalar_params]
        for av in self.arrays:
            out.extend(av.index_vars)
            out.extend(av.value_vars)
            out.append(av.length_var)
        return tuple(out)

    def variable_sorts(self) -> dict:
        sorts = dict(self.scalar_params)
        for av in self.arrays:
            for k in av.index_vars:
                sorts[k] = INT
            for v in av.value_vars:
                sorts[v] = av.elem_sort
            sorts[av.length_var] = INT
        return sorts

    def int_variables(self) -> tuple:
        return tuple(n for n in self.variable_order() if self.variable_sorts()[n] == INT)

    def bool_variables(self) -> tuple:
        return tuple(n for n in self.variable_order() if self.variable_sorts()[n] == BOOL)


@dataclass(frozen=True)
class QuantifierScheme:
    """Fresh index / value / length variables for every predicate, with a
    uniform quantifier count per array."""

    n: int
    ordered: bool
    predicates: tuple  # tuple[PredicateScheme]

    def for_predicate(self, name: str) -> PredicateScheme:
        for ps in self.predicates:
            if ps.predicate == name:
                return ps
        raise DiagramError(f"no scheme for predicate {name}")


def make_scheme(sigs: Iterable[PredicateSig], n: int, ordered: bool = True) -> QuantifierScheme:
    if n < 1:
        raise DiagramError("quantifier count must be at least 1")
    pred_schemes = []
    for sig in sigs:
        taken = set(sig.param_names)

        def fresh(base: str) -> str:
            name = base
            while name in taken:
                name += "_"
            taken.add(name)
            return name

        arrays = [name for name in sig.param_names if sig.sort_of(name).is_array]
        array_vars = []
        for arr in arrays:
            suffix = "" if len(arrays) == 1 else f"_{arr}"
            index_vars = tuple(fresh(f"k{i + 1}{suffix}") for i in range(n))
            value_vars = tuple(fresh(f"{arr}_{k}") for k in index_vars)
            length_var = fresh(f"l_{arr}")
            array_vars.append(ArrayVars(arr, index_vars, value_vars, length_var,
                                        sig.sort_of(arr).elem))
        scalars = tuple((p, s) for p, s in sig.params if not s.is_array)
        pred_schemes.append(PredicateScheme(sig.name, scalars, tuple(array_vars), n, ordered))
    return QuantifierScheme(n, ordered, tuple(pred_schemes))


@dataclass(frozen=True)
class Diagram:
    """A scalar projection of a data point."""

    predicate: str
    values: tuple  # tuple[(var, value)] in the scheme's canonical order

    def env(self) -> dict:
        return dict(self.values)

    def value_vector(self) -> tuple:
        return tuple(v for _, v in self.values)

    def __str__(self) -> str:
        parts = ", ".join(_show(v) for _, v in self.values)
        return f"<{self.predicate}, {parts}>"


def _show(v) -> str:
    if isinstance(v, bool):
        return "T" if v else "F"
    return str(v)


def _index_tuples(length: int, n: int, ordered: bool):
    if ordered:
        return itertools.combinations_with_replacement(range(length), n)
    return itertools.product(range(length), repeat=n)


def diagrams_of(point: DataPoint, scheme: QuantifierScheme,
                ordered: Optional[bool] = None) -> list:
    """All diagrams of one data point, in deterministic order.

    Every array in the point must be nonempty: index variables range over
    ``[0, len)``, so an empty array admits no projection.
    """
    ps = scheme.for_predicate(point.predicate)
    ordered = scheme.ordered if ordered is None else ordered
    env = point.env()
    base = [(name, env[name]) for name, _ in ps.scalar_params]
    per_array = []
    for av in ps.arrays:
        arr = env[av.array]
        if not isinstance(arr, ArrayVal):
            raise DiagramError(f"{av.array} is not an array value in {point}")
        if len(arr) == 0:
            raise EmptyArrayError(point.predicate, av.array)
        choices = []
        for idxs in _index_tuples(len(arr), scheme.n, ordered):
            vals = []
            vals.extend(zip(av.index_vars, idxs))
            vals.extend(zip(av.value_vars, (arr.items[i] for i in idxs)))
            vals.append((av.length_var, len(arr)))
            choices.append(tuple(vals))
        per_array.append(choices)
    out = []
    for combo in itertools.product(*per_array):
        values = tuple(base) + tuple(v for chunk in combo for v in chunk)
        out.append(Diagram(point.predicate, values))
    return out


def complete_diagrams(point: DataPoint, scheme: QuantifierScheme) -> list:
    """Diagrams whose index assignment covers, per array, every position
    ``0 .. len-1`` through distinct index variables.

    Requires ``n >= len(arr)`` for every array of the point.  These are
    the projections that pin down the entire point; distinct points never
    share one.
    """
    ps = scheme.for_predicate(point.predicate)
    env = point.env()
    for av in ps.arrays:
        arr = env[av.array]
        if len(arr) > scheme.n:
            raise DiagramError(
                f"complete diagrams need n >= {len(arr)} for array {av.array}, have {scheme.n}")
    out = []
    for d in diagrams_of(point, scheme, ordered=scheme.ordered):
        denv = d.env()
        if all(set(denv[k] for k in av.index_vars) == set(range(len(env[av.array])))
               for av in ps.arrays):
            out.append(d)
    return out


def diagramize(sample: Sample, scheme: QuantifierScheme) -> Sample:
    """Project a data-point sample onto a diagram sample.

    Diagrams are deduplicated globally (distinct points may share
    projections).  Constraints transfer as: one positive per diagram of a
    positive point; a conditional per head diagram, with all diagrams of
    all body points as the body; one negative over all diagrams of all
    body points.
    """
    cache: dict = {}

    def diags(point: DataPoint) -> list:
        if point not in cache:
            cache[point] = diagrams_of(point, scheme)
        return cache[point]

    out = Sample()
    for point in sample.points:
        for d in diags(point):
            out.add_point(d)
    seen: set = set()
    for imp in sample.implications:
        for new_imp in _transfer(imp, diags):
            if new_imp not in seen:
                seen.add(new_imp)
                out.add_counterexample(new_imp)
    return out


def _transfer(imp: HornImplication, diags) -> list:
    if imp.is_positive:
        return [HornImplication.positive(d) for d in diags(imp.head)]
    body = []
    seen: set = set()
    for point in imp.body:
        for d in diags(point):
            if d not in seen:
                seen.add(d)
                body.append(d)
    if imp.is_negative:
        return [HornImplication.negative(body)]
    return [HornImplication.conditional(body, d) for d in diags(imp.head)]


class LiftError(Exception):
    pass


def lift(formulas: Mapping, scheme: QuantifierScheme,
         sigs: Mapping) -> dict:
    """Turn per-predicate quantifier-free diagram formulas into quantified
    array properties.

    Value variables become reads at their index variable, length
    variables become array lengths, and the index variables are
    universally quantified with the in-range guard (plus the
    nondecreasing ordering in ordered mode).
    """
    solution = {}
    for name, formula in formulas.items():
        ps = scheme.for_predicate(name)
        sig = sigs[name]
        allowed = set(ps.variable_order())
        stray = [v for v in free_vars(formula) if v not in allowed]
        if stray:
            raise LiftError(f"formula for {name} uses unknown variable {stray[0]}")
        mapping = {}
        blocks = []
        for av in ps.arrays:
            arr_var = Var(av.array, sig.sort_of(av.array))
            for k, v in zip(av.index_vars, av.value_vars):
                mapping[v] = Read(arr_var, Var(k, INT))
            mapping[av.length_var] = Len(arr_var)
            blocks.append(Block(arr_var, av.index_vars))
        matrix = substitute(formula, mapping)
        solution[name] = QuantifiedProperty(TRUE, tuple(blocks), matrix, scheme.ordered)
    return solution
