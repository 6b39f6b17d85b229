"""Decision-tree learner for quantified array constraints.

Candidates are produced from the current evidence in four steps: project
data points onto scalar diagrams (raising the per-array quantifier count
until the projected sample is consistent), grow a pool of atomic
attributes until it separates every pair of diagrams forced apart, build
Horn-constrained decision trees over the attribute-equivalence classes,
and lift the resulting quantifier-free formulas to universally
quantified properties.

Attribute families: boolean diagram variables, upper bounds ``v1 <= v2``,
intervals ``+-v <= c``, octagons ``+-v1 +-v2 <= c`` (``|c|`` bounded,
raised on demand), plus shapes extracted from the program text.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .diagrams import (
    Diagram, PredicateScheme, QuantifierScheme, diagramize, lift, make_scheme,
)
from .sample import HornImplication, Sample, propagate
from .terms import (
    BOOL, INT, Eq, IntConst, Leq, Not, Term, TRUE, Var, add, and_, mul, or_,
)


class BudgetError(Exception):
    """A learner resource bound was exceeded; carries diagnostics."""


class LearnDefect(Exception):
    """Internal inconsistency that the preconditions should exclude."""


# ---------------------------------------------------------------------------
# Attributes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearAtom:
    """``sum(coeff * var) op bound`` over integer diagram variables."""

    coeffs: tuple  # tuple[(var, coeff)] sorted by variable name
    op: str        # "<=" or "=="
    bound: int

    def holds(self, env: Mapping) -> bool:
        total = sum(c * env[v] for v, c in self.coeffs)
        return total <= self.bound if self.op == "<=" else total == self.bound

    def to_term(self) -> Term:
        pos = [mul(c, Var(v, INT)) for v, c in self.coeffs if c > 0]
        neg = [mul(-c, Var(v, INT)) for v, c in self.coeffs if c < 0]
        lhs = add(*pos) if pos else IntConst(0)
        rhs = add(*(neg + ([IntConst(self.bound)] if self.bound or not neg else [])))
        ctor = Leq if self.op == "<=" else Eq
        return ctor(lhs, rhs)


def make_atom(coeffs: Iterable, op: str, bound: int) -> LinearAtom:
    """Normalize to a canonical polarity so an atom and its complement
    collapse to one attribute (decision splits see both sides anyway)."""
    items = tuple(sorted((v, c) for v, c in coeffs if c != 0))
    if not items:
        raise ValueError("constant atom")
    if items[0][1] < 0:
        items = tuple((v, -c) for v, c in items)
        bound = -bound if op == "==" else -bound - 1
    return LinearAtom(items, op, bound)


@dataclass(frozen=True)
class Attribute:
    predicate: str
    kind: str      # "bool" | "upper" | "interval" | "octagon" | "pattern"
    atom: object   # LinearAtom, or a variable name for kind "bool"

    def holds(self, env: Mapping) -> bool:
        if self.kind == "bool":
            return bool(env[self.atom])
        return self.atom.holds(env)

    def to_term(self) -> Term:
        if self.kind == "bool":
            return Var(self.atom, BOOL)
        return self.atom.to_term()

    def __str__(self) -> str:
        return str(self.to_term())


@dataclass(frozen=True)
class LinPattern:
    """An atom shape harvested from program text: hole coefficients plus a
    fixed constant, instantiated over all distinct variable tuples."""

    coeffs: tuple  # one integer per hole
    op: str
    bound: int

    @property
    def arity(self) -> int:
        return len(self.coeffs)

    @staticmethod
    def canonical(coeffs: Iterable, op: str, bound: int) -> "LinPattern":
        cs = tuple(sorted(c for c in coeffs if c != 0))
        if not cs:
            raise ValueError("constant pattern")
        if op == "==":
            flipped = tuple(sorted(-c for c in cs))
            if (flipped, -bound) < (cs, bound):
                cs, bound = flipped, -bound
        return LinPattern(cs, op, bound)

    def __str__(self) -> str:
        lhs = " + ".join(f"{c}*v{i+1}" for i, c in enumerate(self.coeffs))
        return f"{lhs} {self.op} {self.bound}"


class AttributePool:
    """Per-predicate attribute sets, deduplicated, in insertion order.

    The pool only ever grows: raising the constant bound re-instantiates
    the enumerated families, and new diagram variables (from a higher
    quantifier count) receive every active family.
    """

    def __init__(self, patterns: Iterable = (), k: int = 1) -> None:
        self.k = k
        self.patterns = tuple(patterns)
        self.enumerated_active = False
        self._attrs: dict = {}      # pred -> {dedup key -> Attribute}
        self._vars_seen: dict = {}  # pred -> (int vars, bool vars)

    def attributes(self, predicate: str) -> list:
        return list(self._attrs.get(predicate, {}).values())

    def size(self) -> int:
        return sum(len(v) for v in self._attrs.values())

    def ensure_scheme(self, scheme: QuantifierScheme) -> None:
        for ps in scheme.predicates:
            self._instantiate(ps)

    def generate(self, scheme: QuantifierScheme) -> None:
        """Raise the constant bound and re-instantiate enumerated families."""
        self.k += 1
        self.enumerated_active = True
        self.ensure_scheme(scheme)

    def _add(self, predicate: str, kind: str, atom) -> None:
        key = atom if isinstance(atom, str) else (atom.coeffs, atom.op, atom.bound)
        self._attrs.setdefault(predicate, {}).setdefault(key, Attribute(predicate, kind, atom))

    def _instantiate(self, ps: PredicateScheme) -> None:
        pred = ps.predicate
        ints = ps.int_variables()
        bools = ps.bool_variables()
        self._vars_seen[pred] = (ints, bools)
        for b in bools:
            self._add(pred, "bool", b)
        for v1 in ints:
            for v2 in ints:
                if v1 != v2:
                    self._add(pred, "upper", make_atom([(v1, 1), (v2, -1)], "<=", 0))
        for pat in self.patterns:
            if pat.arity > len(ints):
                continue
            for combo in _distinct_tuples(ints, pat.arity):
                self._add(pred, "pattern",
                          make_atom(zip(combo, pat.coeffs), pat.op, pat.bound))
        if not self.enumerated_active:
            return
        for v in ints:
            for c in _constants(self.k):
                self._add(pred, "interval", make_atom([(v, 1)], "<=", c))
                self._add(pred, "interval", make_atom([(v, -1)], "<=", c))
        for i, v1 in enumerate(ints):
            for v2 in ints[i + 1:]:
                for s1 in (1, -1):
                    for s2 in (1, -1):
                        for c in _constants(self.k):
                            self._add(pred, "octagon",
                                      make_atom([(v1, s1), (v2, s2)], "<=", c))


def _constants(k: int) -> list:
    out = [0]
    for c in range(1, k + 1):
        out += [c, -c]
    return out


def _distinct_tuples(vars_: tuple, arity: int):
    if arity == 0:
        return
    def rec(prefix: tuple):
        if len(prefix) == arity:
            yield prefix
            return
        for v in vars_:
            if v not in prefix:
                yield from rec(prefix + (v,))
    yield from rec(())


# ---------------------------------------------------------------------------
# Attribute-equivalence classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagramClass:
    predicate: str
    key: tuple  # attribute valuation in pool order

    def __str__(self) -> str:
        bits = "".join("1" if b else "0" for b in self.key)
        return f"{self.predicate}:{bits}"


@dataclass
class Quotient:
    classes: dict         # pred -> list[DiagramClass] (first-seen order)
    implications: list    # over DiagramClass
    members: dict         # DiagramClass -> list[Diagram]
    attrs: dict           # pred -> list[Attribute]

    def class_of(self, d: Diagram) -> DiagramClass:
        env = d.env()
        key = tuple(a.holds(env) for a in self.attrs[d.predicate])
        return DiagramClass(d.predicate, key)


def build_quotient(dsample: Sample, pool: AttributePool,
                   limit: Optional[int] = None) -> Quotient:
    """Merge diagrams agreeing on every attribute (optionally only the
    first *limit* attributes of each predicate, in pool order)."""
    attrs = {}
    classes: dict = {}
    members: dict = {}

    def cls(d: Diagram) -> DiagramClass:
        if d.predicate not in attrs:
            full = pool.attributes(d.predicate)
            attrs[d.predicate] = full if limit is None else full[:limit]
        env = d.env()
        key = tuple(a.holds(env) for a in attrs[d.predicate])
        c = DiagramClass(d.predicate, key)
        if c not in members:
            members[c] = []
            classes.setdefault(d.predicate, []).append(c)
        return c

    cache = {d: cls(d) for d in dsample.points}
    for d, c in cache.items():
        members[c].append(d)
    imps = []
    seen: set = set()
    for imp in dsample.implications:
        body = tuple(dict.fromkeys(cache[p] for p in imp.body))
        head = cache[imp.head] if imp.head is not None else None
        new = HornImplication(body, head)
        if new not in seen:
            seen.add(new)
            imps.append(new)
    return Quotient(classes, imps, members, attrs)


def _quotient_consistent(q: Quotient) -> bool:
    points = [c for cs in q.classes.values() for c in cs]
    return not propagate(points, q.implications).conflict


def sufficient(pool: AttributePool, dsample: Sample) -> bool:
    """Can the pool still classify the sample after merging diagrams that
    agree on every attribute?"""
    return _quotient_consistent(build_quotient(dsample, pool))


def minimal_sufficient_quotient(dsample: Sample, pool: AttributePool) -> Quotient:
    """The coarsest consistent quotient over a prefix of the pool.

    Restricting the trees to the shortest attribute prefix that still
    admits a classifier keeps candidates simple and stable between
    iterations; later attributes participate only once the evidence
    separates diagrams they alone can tell apart.
    """
    full = max((len(pool.attributes(p)) for p in pool._attrs), default=0)
    lo, hi = 0, full
    best = build_quotient(dsample, pool)
    if not _quotient_consistent(best):
        return best  # caller handles the inconsistency
    while lo < hi:
        mid = (lo + hi) // 2
        q = build_quotient(dsample, pool, limit=mid)
        if _quotient_consistent(q):
            hi = mid
            best = q
        else:
            lo = mid + 1
    if hi == full:
        return best
    return build_quotient(dsample, pool, limit=hi)


# ---------------------------------------------------------------------------
# Horn-constrained decision trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    label: bool


@dataclass(frozen=True)
class Node:
    attr: Attribute
    then_branch: object
    else_branch: object


def tree_nodes(tree) -> int:
    if isinstance(tree, Leaf):
        return 1
    return 1 + tree_nodes(tree.then_branch) + tree_nodes(tree.else_branch)


def tree_depth(tree) -> int:
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(tree_depth(tree.then_branch), tree_depth(tree.else_branch))


def tree_to_formula(tree) -> Term:
    """Disjunction over the paths that reach a positive leaf."""
    paths = []

    def walk(t, literals: tuple) -> None:
        if isinstance(t, Leaf):
            if t.label:
                paths.append(and_(*literals))
            return
        atom = t.attr.to_term()
        walk(t.then_branch, literals + (atom,))
        walk(t.else_branch, literals + (Not(atom),))

    walk(tree, ())
    return or_(*paths)


def route(tree, env: Mapping) -> bool:
    if isinstance(tree, Leaf):
        return tree.label
    return route(tree.then_branch if tree.attr.holds(env) else tree.else_branch, env)


class _TreeConflict(Exception):
    pass


class _Decisions:
    """A replayable decision sequence for chronological backtracking.

    Each decision point consumes the next recorded choice, or records the
    preferred first option.  On conflict the most recent decision with an
    untried alternative flips and everything after it is discarded.
    """

    def __init__(self) -> None:
        self.choices: list = []
        self.cursor = 0

    def pick(self, options: int) -> int:
        if self.cursor < len(self.choices):
            out = self.choices[self.cursor]
        else:
            out = 0
            self.choices.append(0)
        self.cursor += 1
        return out

    def rewind(self) -> None:
        self.cursor = 0

    def backtrack(self) -> bool:
        del self.choices[self.cursor:]
        while self.choices and self.choices[-1] == 1:
            self.choices.pop()
        if not self.choices:
            return False
        self.choices[-1] += 1
        return True


def learn_trees(dsample: Sample, pool: AttributePool) -> dict:
    """One decision tree per predicate whose induced labeling satisfies
    every implication of the (consistent, pool-sufficient) sample.

    Construction: classes forced by the implication closure carry fixed
    labels; nodes with mixed forced labels split on the attribute with
    the best information gain over forced classes (ties to the oldest
    attribute); leaves label their unforced classes (positive first) and
    the consequences propagate through the implications, with
    chronological backtracking on conflict.
    """
    q = minimal_sufficient_quotient(dsample, pool)
    all_classes = [c for cs in q.classes.values() for c in cs]
    decisions = _Decisions()
    while True:
        decisions.rewind()
        try:
            return _build_trees(q, all_classes, decisions)
        except _TreeConflict:
            if not decisions.backtrack():
                raise LearnDefect(
                    "no consistent tree labeling; pool sufficiency should prevent this")


def _build_trees(q: Quotient, all_classes: list, decisions: _Decisions) -> dict:
    state = propagate(all_classes, q.implications)
    if state.conflict:
        raise LearnDefect("diagram sample inconsistent at tree construction")
    decided: dict = {}
    labels: dict = {}

    def refresh() -> None:
        nonlocal labels
        closure = propagate(
            all_classes, q.implications,
            seed_positive=[c for c, v in decided.items() if v],
            seed_negative=[c for c, v in decided.items() if not v])
        if closure.conflict:
            raise _TreeConflict()
        labels = {}
        for c in closure.positive:
            labels[c] = True
        for c in closure.negative:
            if c in labels:
                raise _TreeConflict()
            labels[c] = False

    def assign(classes: list, value: bool) -> None:
        for c in classes:
            decided[c] = value
        refresh()

    def build(pred: str, classes: list, used: frozenset):
        if not classes:
            return Leaf(True)
        forced = {c: labels[c] for c in classes if c in labels}
        values = set(forced.values())
        if len(values) == 2:
            attr_idx = _best_split(q, pred, classes, labels, used)
            return _split(pred, classes, used, attr_idx)
        unlabeled = [c for c in classes if c not in labels]
        if not unlabeled:
            return Leaf(values.pop())
        if values == {False}:
            assign(unlabeled, False)
            return Leaf(False)
        if values == {True}:
            # leaf keeps the forced label, or the node splits off the
            # unforced part when labeling it positive collides
            if decisions.pick(2) == 0:
                assign(unlabeled, True)
                return Leaf(True)
            attr_idx = _conflict_split(q, pred, classes, labels, used)
            return _split(pred, classes, used, attr_idx)
        # nothing forced: positive first, negative never conflicts
        if decisions.pick(2) == 0:
            assign(unlabeled, True)
            return Leaf(True)
        assign(unlabeled, False)
        return Leaf(False)

    def _split(pred: str, classes: list, used: frozenset, attr_idx: int):
        attr = q.attrs[pred][attr_idx]
        then_part = [c for c in classes if c.key[attr_idx]]
        else_part = [c for c in classes if not c.key[attr_idx]]
        used = used | {attr_idx}
        then_branch = build(pred, then_part, used)
        else_branch = build(pred, else_part, used)
        return Node(attr, then_branch, else_branch)

    refresh()
    trees = {}
    for pred in q.classes:
        trees[pred] = build(pred, list(q.classes[pred]), frozenset())
    for imp in q.implications:
        ok = all(labels.get(c, True) for c in imp.body)
        if ok and (imp.head is None or not labels.get(imp.head, True)):
            raise _TreeConflict()
    return trees


def _entropy(pos: int, neg: int) -> float:
    total = pos + neg
    if total == 0 or pos == 0 or neg == 0:
        return 0.0
    p = pos / total
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def _best_split(q: Quotient, pred: str, classes: list, labels: Mapping,
                used: frozenset) -> int:
    """Information gain over the forced classes, each weighted by the
    number of diagrams it contains; ties go to the oldest attribute."""
    forced = [(c, labels[c], len(q.members[c])) for c in classes if c in labels]
    pos = sum(w for _, v, w in forced if v)
    neg = sum(w for _, v, w in forced if not v)
    base = _entropy(pos, neg)
    total = pos + neg
    best: Optional[tuple] = None
    for idx in range(len(q.attrs[pred])):
        if idx in used:
            continue
        if not any(c.key[idx] for c in classes) or all(c.key[idx] for c in classes):
            continue
        gain = base
        for branch in (True, False):
            p = sum(w for c, v, w in forced if c.key[idx] == branch and v)
            n = sum(w for c, v, w in forced if c.key[idx] == branch and not v)
            if total:
                gain -= ((p + n) / total) * _entropy(p, n)
        if best is None or gain > best[0] + 1e-12:
            best = (gain, idx)
    if best is None:
        raise LearnDefect("mixed node with no splitting attribute")
    return best[1]


def _conflict_split(q: Quotient, pred: str, classes: list, labels: Mapping,
                    used: frozenset) -> int:
    """Split for a node whose positive leaf collided.

    The collision means some constraint with a negative conclusion had
    its whole body turn positive; the unforced node classes inside such
    bodies are the ones that must lose the positive label, so the split
    separates them from the forced-positive classes by information gain.
    """
    node = set(classes)
    culprits: set = set()
    for imp in q.implications:
        if imp.head is not None and labels.get(imp.head, True):
            continue  # conclusion not (yet) negative
        if all(labels.get(c, False) or c in node for c in imp.body):
            culprits.update(c for c in imp.body if c in node and c not in labels)
    if not culprits:
        culprits = {c for c in classes if c not in labels}
    weighted = []
    for c in classes:
        if c in labels:
            weighted.append((c, True, len(q.members[c])))
        elif c in culprits:
            weighted.append((c, False, len(q.members[c])))
    pos = sum(w for _, v, w in weighted if v)
    neg = sum(w for _, v, w in weighted if not v)
    base = _entropy(pos, neg)
    total = pos + neg
    best: Optional[tuple] = None
    for idx in range(len(q.attrs[pred])):
        if idx in used:
            continue
        if not any(c.key[idx] for c in classes) or all(c.key[idx] for c in classes):
            continue
        gain = base
        for branch in (True, False):
            p = sum(w for c, v, w in weighted if c.key[idx] == branch and v)
            n = sum(w for c, v, w in weighted if c.key[idx] == branch and not v)
            gain -= ((p + n) / total) * _entropy(p, n)
        if best is None or gain > best[0] + 1e-12:
            best = (gain, idx)
    if best is None:
        raise _TreeConflict()  # indistinguishable node: only relabeling remains
    return best[1]


# ---------------------------------------------------------------------------
# Top-level learner
# ---------------------------------------------------------------------------

@dataclass
class LearnerState:
    """Carries the quantifier count and attribute pool across calls."""

    sigs: dict                 # predicate name -> PredicateSig
    n: int = 1
    pool: AttributePool = None
    ordered: bool = True
    max_n: int = 4
    max_k: int = 32
    trace: Callable = lambda line: None

    def __post_init__(self) -> None:
        if self.pool is None:
            self.pool = AttributePool()


def learn(sample: Sample, state: LearnerState) -> dict:
    """Propose a per-predicate solution consistent with *sample*.

    Raises :class:`BudgetError` when the quantifier count or the constant
    bound would exceed their limits.
    """
    scheme = make_scheme(state.sigs.values(), state.n, state.ordered)
    dsample = diagramize(sample, scheme)
    state.trace(f"diagramize n={state.n} diagrams={len(dsample.points)} "
                f"implications={len(dsample.implications)}")
    while propagate(dsample.points, dsample.implications).conflict:
        if state.n >= state.max_n:
            raise BudgetError(
                f"diagram sample still inconsistent at the quantifier limit n={state.n}")
        state.n += 1
        state.trace(f"quantifiers n={state.n}")
        scheme = make_scheme(state.sigs.values(), state.n, state.ordered)
        dsample = diagramize(sample, scheme)
        state.trace(f"diagramize n={state.n} diagrams={len(dsample.points)} "
                    f"implications={len(dsample.implications)}")
    state.pool.ensure_scheme(scheme)
    while not sufficient(state.pool, dsample):
        if state.pool.k >= state.max_k:
            raise BudgetError(
                f"attributes insufficient at the constant limit k={state.pool.k}")
        state.pool.generate(scheme)
        state.trace(f"attributes k={state.pool.k} pool={state.pool.size()}")
    trees = learn_trees(dsample, state.pool)
    formulas = {}
    for name in state.sigs:
        tree = trees.get(name, Leaf(True))
        state.trace(f"tree pred={name} nodes={tree_nodes(tree)} depth={tree_depth(tree)}")
        formulas[name] = tree_to_formula(tree)
    return lift(formulas, scheme, state.sigs)
