"""Classified evidence for the learner: data points and Horn implications.

A sample collects points together with implication constraints of three
shapes (``true -> x``, ``x1 /\\ ... /\\ xn -> x``, ``x1 /\\ ... /\\ xn ->
false``).  Unit propagation computes the least sets of points forced
positive / forced negative; the sample is consistent exactly when those
sets stay disjoint and no all-positive body reaches ``false``.

The closure engine is generic over hashable point objects so the same
machinery serves concrete program configurations, their scalar
projections, and attribute-equivalence classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .terms import ArrayVal, eval_property, sort_of_value


@dataclass(frozen=True)
class DataPoint:
    """A concrete argument tuple for one predicate; arrays are finite."""

    predicate: str
    values: tuple  # tuple[(param, value), ...] in signature order

    @staticmethod
    def make(predicate: str, values: Mapping) -> "DataPoint":
        return DataPoint(predicate, tuple(values.items()))

    def env(self) -> dict:
        return dict(self.values)

    def __str__(self) -> str:
        parts = ", ".join(_show_value(v) for _, v in self.values)
        return f"<{self.predicate}, {parts}>"


def _show_value(v) -> str:
    if isinstance(v, bool):
        return "T" if v else "F"
    return str(v)


@dataclass(frozen=True)
class HornImplication:
    """``body -> head``; ``head=None`` encodes the always-false head and
    an empty body with a true head encodes an unconditional positive."""

    body: tuple
    head: Optional[object]

    @staticmethod
    def positive(point) -> "HornImplication":
        return HornImplication((), point)

    @staticmethod
    def negative(body: Iterable) -> "HornImplication":
        return HornImplication(tuple(body), None)

    @staticmethod
    def conditional(body: Iterable, head) -> "HornImplication":
        body = tuple(body)
        if not body:
            raise ValueError("conditional implication needs a nonempty body")
        return HornImplication(body, head)

    @property
    def is_positive(self) -> bool:
        return not self.body and self.head is not None

    @property
    def is_negative(self) -> bool:
        return self.head is None

    def points(self) -> tuple:
        return self.body + ((self.head,) if self.head is not None else ())

    def __str__(self) -> str:
        lhs = " /\\ ".join(str(p) for p in self.body) if self.body else "true"
        rhs = str(self.head) if self.head is not None else "false"
        return f"{lhs} -> {rhs}"


@dataclass
class Closure:
    positive: frozenset
    negative: frozenset
    conflict: bool

    @property
    def overlap(self) -> frozenset:
        return self.positive & self.negative


def propagate(points: Iterable, implications: Iterable,
              seed_positive: Iterable = (), seed_negative: Iterable = ()) -> Closure:
    """Least fixpoint of the forcing rules by unit propagation.

    Rules: positives enter the forced-positive set; an implication whose
    body is all forced-positive forces its head positive (or flags a
    conflict when the head is ``false``); when the head is forced
    negative and all body points but one are forced positive, the
    remaining one is forced negative.
    """
    implications = list(implications)
    pos: set = set(seed_positive)
    neg: set = set(seed_negative)
    remaining = []        # per implication: body points not yet forced positive
    body_watch: dict = {}  # point -> implication indices with it in the body
    head_watch: dict = {}  # point -> implication indices with it as head
    conflict = False

    for idx, imp in enumerate(implications):
        remaining.append(len(set(imp.body)))
        for p in set(imp.body):
            body_watch.setdefault(p, []).append(idx)
        if imp.head is not None:
            head_watch.setdefault(imp.head, []).append(idx)

    pos_queue = list(pos)
    neg_queue = list(neg)

    def force_pos(p) -> None:
        if p not in pos:
            pos.add(p)
            pos_queue.append(p)

    def force_neg(p) -> None:
        if p not in neg:
            neg.add(p)
            neg_queue.append(p)

    def fire(idx: int) -> None:
        nonlocal conflict
        imp = implications[idx]
        if remaining[idx] == 0:
            if imp.head is None:
                conflict = True
            else:
                force_pos(imp.head)
        elif remaining[idx] == 1 and (imp.head is None or imp.head in neg):
            for p in set(imp.body):
                if p not in pos:
                    force_neg(p)
                    break

    for idx in range(len(implications)):
        if remaining[idx] <= 1:
            fire(idx)

    while pos_queue or neg_queue:
        if pos_queue:
            p = pos_queue.pop()
            for idx in body_watch.get(p, ()):
                remaining[idx] -= 1
                fire(idx)
        else:
            p = neg_queue.pop()
            for idx in head_watch.get(p, ()):
                if remaining[idx] <= 1:
                    fire(idx)

    conflict = conflict or bool(pos & neg)
    return Closure(frozenset(pos), frozenset(neg), conflict)


def check_labeling(implications: Iterable, labeling: Mapping) -> bool:
    """Does a total labeling satisfy every implication?"""
    for imp in implications:
        if all(labeling[p] for p in imp.body):
            if imp.head is None or not labeling[imp.head]:
                return False
    return True


@dataclass
class Sample:
    """A set of points plus Horn implications, with cached closure."""

    points: list = field(default_factory=list)
    implications: list = field(default_factory=list)
    _point_set: set = field(default_factory=set)
    _closure: Optional[Closure] = None

    def copy(self) -> "Sample":
        return Sample(list(self.points), list(self.implications),
                      set(self._point_set), self._closure)

    def add_point(self, point) -> None:
        if point not in self._point_set:
            self._point_set.add(point)
            self.points.append(point)

    def add_counterexample(self, imp: HornImplication) -> "Sample":
        """Record one implication (and its points); closure is refreshed."""
        for p in imp.points():
            self.add_point(p)
        self.implications.append(imp)
        self._closure = None
        return self

    def closure(self) -> Closure:
        if self._closure is None:
            self._closure = propagate(self.points, self.implications)
        return self._closure

    @property
    def forced_positive(self) -> frozenset:
        return self.closure().positive

    @property
    def forced_negative(self) -> frozenset:
        return self.closure().negative

    def is_consistent(self) -> bool:
        return not self.closure().conflict

    def consistent_labeling(self) -> Optional[dict]:
        """A consistent total labeling, or None.

        Forced-positive points are labeled true and everything else
        false; for Horn constraints this labeling is satisfying exactly
        when the sample is consistent.
        """
        if not self.is_consistent():
            return None
        pos = self.forced_positive
        return {p: p in pos for p in self.points}

    def satisfies(self, labeler) -> bool:
        """Does the labeling induced by ``labeler(point) -> bool`` satisfy
        every implication?"""
        cache: dict = {}

        def lab(p) -> bool:
            if p not in cache:
                cache[p] = labeler(p)
            return cache[p]

        for imp in self.implications:
            if all(lab(p) for p in imp.body):
                if imp.head is None or not lab(imp.head):
                    return False
        return True

    def __len__(self) -> int:
        return len(self.points)

    def dump(self) -> str:
        """Tuple-notation rendering for fixture diffing."""
        lines = [f"points: {len(self.points)}"]
        lines += [f"  {p}" for p in self.points]
        lines.append(f"implications: {len(self.implications)}")
        lines += [f"  {imp}" for imp in self.implications]
        return "\n".join(lines)


def solution_satisfies(sample: Sample, solution: Mapping) -> bool:
    """Does a per-predicate property assignment satisfy the sample?

    Each data point is labeled by evaluating its predicate's property on
    the point's values.
    """
    def label(point: DataPoint) -> bool:
        return eval_property(solution[point.predicate], point.env())

    return sample.satisfies(label)
