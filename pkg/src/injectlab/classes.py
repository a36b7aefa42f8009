"""Concept classes answering version-space queries.

A version space is always represented by the labeled set that defines it;
``realizable(S)`` asks whether some hypothesis agrees with every example in
``S`` and ``forced_label(S, x)`` whether one of the two labels of ``x`` is
ruled out.
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from pathlib import Path
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .core import LabeledExample, as_example, as_examples
from . import geometry
from .geometry import WedgeState


class DomainError(ValueError):
    """A point does not belong to the class's domain."""


class PreconditionError(ValueError):
    """A query was issued on an unrealizable labeled set."""


class StructureError(ValueError):
    """A supplied tree order does not witness the VC-1 structure of a class."""


def _split(S) -> tuple[list, list] | None:
    """Positive and negative points; None on a clean-label contradiction."""
    labels: dict = {}
    for z in as_examples(S):
        prev = labels.setdefault(z.point, z.label)
        if prev != z.label:
            return None
    pos = [p for p, y in labels.items() if y > 0]
    neg = [p for p, y in labels.items() if y < 0]
    return pos, neg


class ConceptClass:
    def check_point(self, x) -> None:
        pass

    def realizable(self, S) -> bool:
        raise NotImplementedError

    def forced_label(self, S, x) -> int | None:
        S = as_examples(S)
        if not self.realizable(S):
            raise PreconditionError("forced_label needs a realizable labeled set")
        plus = self.realizable(S + [LabeledExample(x, 1)])
        minus = self.realizable(S + [LabeledExample(x, -1)])
        if plus and not minus:
            return 1
        if minus and not plus:
            return -1
        if not plus and not minus:
            raise AssertionError("both extensions of a realizable set are unrealizable")
        return None

    def tracker(self) -> "RealizabilityTracker":
        return RealizabilityTracker(self)


class RealizabilityTracker:
    """Incremental realizability of a growing history (generic fallback)."""

    def __init__(self, cls: ConceptClass):
        self.cls = cls
        self.examples: list[LabeledExample] = []

    def admits(self, z: LabeledExample) -> bool:
        return self.cls.realizable(self.examples + [z])

    def add(self, z: LabeledExample) -> None:
        self.examples.append(z)


def forced_label(cls: ConceptClass, S, x) -> int | None:
    return cls.forced_label(S, x)


# -- axis-aligned rectangles containing the origin ----------------------------


class RectangleClass(ConceptClass):
    """Thresholds v >= 0 with h_v(x) = +1 iff x <= v coordinatewise."""

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d = d

    def __repr__(self):
        return f"RectangleClass(d={self.d})"

    def check_point(self, x) -> None:
        if len(x) != self.d:
            raise DomainError(f"expected a {self.d}-vector, got {x!r}")
        if any(v < 0 for v in x):
            raise DomainError(f"rectangle domain is the nonnegative orthant, got {x!r}")

    def threshold(self, positives) -> tuple:
        """Coordinatewise max of the positives (zero vector if none)."""
        v = [0] * self.d
        for p in positives:
            for i in range(self.d):
                if p[i] > v[i]:
                    v[i] = p[i]
        return tuple(v)

    def realizable(self, S) -> bool:
        split = _split(S)
        if split is None:
            return False
        pos, neg = split
        for p in pos + neg:
            self.check_point(p)
        v = self.threshold(pos)
        return all(any(n[i] > v[i] for i in range(self.d)) for n in neg)

    def label(self, v, x) -> int:
        return 1 if all(x[i] <= v[i] for i in range(self.d)) else -1

    def tracker(self):
        return _RectTracker(self)


def rect_realizable(S, d: int | None = None) -> bool:
    S = as_examples(S)
    if d is None:
        if not S:
            return True
        d = len(S[0].point)
    return RectangleClass(d).realizable(S)


class _RectTracker:
    def __init__(self, cls: RectangleClass):
        self.cls = cls
        self.v = np.zeros(cls.d)
        self.neg = np.zeros((0, cls.d))

    def admits(self, z: LabeledExample) -> bool:
        x = np.asarray(z.point, dtype=float)
        if z.label < 0:
            return bool(np.any(x > self.v))
        v = np.maximum(self.v, x)
        return bool(np.all(np.any(self.neg > v, axis=1)))

    def add(self, z: LabeledExample) -> None:
        x = np.asarray(z.point, dtype=float)
        if z.label > 0:
            self.v = np.maximum(self.v, x)
        else:
            self.neg = np.vstack([self.neg, x])


# -- trees and initial segments -----------------------------------------------


class ExplicitTree:
    """Rooted tree given by a parent map (the root maps to None)."""

    def __init__(self, parent: dict):
        self.parent = dict(parent)
        roots = [v for v, p in self.parent.items() if p is None]
        for v, p in self.parent.items():
            if p is not None and p not in self.parent:
                self.parent[p] = None
                roots.append(p)
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {roots!r}")
        self.root = roots[0]
        self._path: dict[Hashable, tuple] = {}
        for v in self.parent:
            self._path[v] = self._compute_path(v)
        self.children: dict = {v: [] for v in self.parent}
        for v, p in self.parent.items():
            if p is not None:
                self.children[p].append(v)

    def _compute_path(self, v) -> tuple:
        path = []
        seen = set()
        while v is not None:
            if v in seen:
                raise ValueError("parent map has a cycle")
            seen.add(v)
            path.append(v)
            v = self.parent[v]
        return tuple(reversed(path))

    @property
    def nodes(self) -> list:
        return list(self.parent)

    def contains(self, v) -> bool:
        return v in self.parent

    def path(self, v) -> tuple:
        """Root-to-v path, i.e. the initial segment I(v) in order."""
        return self._path[v]

    def depth(self, v) -> int:
        return len(self._path[v]) - 1

    def precedes(self, a, b) -> bool:
        """a is an ancestor of b or equal to it."""
        pb = self._path[b]
        da = len(self._path[a]) - 1
        return da < len(pb) and pb[da] == a

    @classmethod
    def complete(cls, branching: int, depth: int) -> "ExplicitTree":
        """Complete tree; nodes are integers in breadth-first order, root 0."""
        parent = {0: None}
        frontier = [0]
        nxt = 1
        for _ in range(depth):
            new = []
            for v in frontier:
                for _ in range(branching):
                    parent[nxt] = v
                    new.append(nxt)
                    nxt += 1
            frontier = new
        return cls(parent)


class PrefixTree:
    """Lazily materialized tree whose nodes are tuples of child indices.

    The root is ``()``; node ``(i1, ..., ij)`` is the ``ij``-th child of its
    prefix. Only nodes of depth <= ``max_depth`` with indices < ``branching``
    belong to the tree.
    """

    root = ()

    def __init__(self, branching: int, max_depth: int | None = None):
        self.branching = branching
        self.max_depth = max_depth

    def contains(self, v) -> bool:
        if not isinstance(v, tuple):
            return False
        if self.max_depth is not None and len(v) > self.max_depth:
            return False
        return all(isinstance(i, (int, np.integer)) and 0 <= i < self.branching for i in v)

    def path(self, v) -> tuple:
        return tuple(v[:j] for j in range(len(v) + 1))

    def depth(self, v) -> int:
        return len(v)

    def precedes(self, a, b) -> bool:
        return len(a) <= len(b) and b[:len(a)] == a

    def children(self, v) -> list:
        return [v + (i,) for i in range(self.branching)]


class TreeOrderClass(ConceptClass):
    """Initial segments I(x) = {x' : x' precedes x} of a tree order."""

    def __init__(self, tree, includes_empty_segment: bool = True):
        self.tree = tree
        self.includes_empty_segment = includes_empty_segment

    def __repr__(self):
        return f"TreeOrderClass(empty={self.includes_empty_segment})"

    def check_point(self, x) -> None:
        if not self.tree.contains(x):
            raise DomainError(f"unknown tree node {x!r}")

    def precedes(self, a, b) -> bool:
        return self.tree.precedes(a, b)

    def deepest(self, positives) -> Hashable | None:
        """Deepest positive if the positives form a chain; raises ValueError otherwise."""
        best = None
        for p in positives:
            if best is None or self.tree.precedes(best, p):
                best = p
            elif not self.tree.precedes(p, best):
                raise ValueError("incomparable positives")
        return best

    def realizable(self, S) -> bool:
        split = _split(S)
        if split is None:
            return False
        pos, neg = split
        for p in pos + neg:
            self.check_point(p)
        try:
            top = self.deepest(pos)
        except ValueError:
            return False
        if top is None:
            if self.includes_empty_segment:
                return True
            top = self.tree.root
        return not any(self.tree.precedes(n, top) for n in neg)

    def hypotheses(self, nodes) -> list[Callable]:
        """Label functions of every initial segment over a finite node set."""
        out = []
        if self.includes_empty_segment:
            out.append(lambda x: -1)
        for v in nodes:
            out.append(lambda x, v=v: 1 if self.tree.precedes(x, v) else -1)
        return out

    def tracker(self):
        return _TreeTracker(self)


def tree_realizable(S, tree, includes_empty_segment: bool = True) -> bool:
    return TreeOrderClass(tree, includes_empty_segment).realizable(S)


class _TreeTracker:
    def __init__(self, cls: TreeOrderClass):
        self.cls = cls
        self.top = None if cls.includes_empty_segment else cls.tree.root
        self.neg: set = set()

    def admits(self, z: LabeledExample) -> bool:
        tree = self.cls.tree
        x = z.point
        if z.label < 0:
            return self.top is None or not tree.precedes(x, self.top)
        if x in self.neg:
            return False
        if self.top is None or tree.precedes(self.top, x):
            return not any(a in self.neg for a in tree.path(x))
        return tree.precedes(x, self.top)

    def add(self, z: LabeledExample) -> None:
        if z.label < 0:
            self.neg.add(z.point)
        elif self.top is None or self.cls.tree.precedes(self.top, z.point):
            self.top = z.point


class HardTreePathClass(ConceptClass):
    """Root-to-leaf paths f_theta of a depth-limited tree (leaves at max depth)."""

    def __init__(self, tree: PrefixTree):
        if tree.max_depth is None:
            raise ValueError("hard-tree class needs a depth-limited tree")
        self.tree = tree

    def check_point(self, x) -> None:
        if not self.tree.contains(x):
            raise DomainError(f"unknown tree node {x!r}")

    def label(self, leaf, x) -> int:
        return 1 if self.tree.precedes(x, leaf) else -1

    def realizable(self, S) -> bool:
        split = _split(S)
        if split is None:
            return False
        pos, neg = split
        tree = self.tree
        top = ()
        for p in pos:
            if tree.precedes(top, p):
                top = p
            elif not tree.precedes(p, top):
                return False
        negset = set(neg)
        touched = {n[:j] for n in negset for j in range(len(n) + 1)}

        def blocked(v) -> bool:
            # every leaf below v has a negative on its path from v
            if v in negset:
                return True
            if v not in touched or len(v) == tree.max_depth:
                return False
            return all(blocked(v + (i,)) for i in range(tree.branching))

        if any(a in negset for a in tree.path(top)):
            return False
        return not blocked(top)


# -- halfspaces in the plane ---------------------------------------------------


def _halfspace_constraints(pos, neg, pin=None) -> list:
    cons = []
    for p in pos:
        cons.append(geometry.ge((p[0], p[1], -1)))
    for n in neg:
        cons.append(geometry.lt((n[0], n[1], -1)))
    if pin is not None:
        sp, sm = pin
        cons.append(geometry.ge((sp[0], sp[1], -1)))
        cons.append(geometry.lt((sm[0], sm[1], -1)))
    return cons


class Halfspace2DClass(ConceptClass):
    """h(x) = sign(w . x - b), sign(0) = +1; optionally pinned so that
    w . s_plus >= b > w . s_minus."""

    def __init__(self, pin: tuple | None = None):
        if pin is not None:
            sp, sm = (tuple(pin[0]), tuple(pin[1]))
            if sp == sm:
                raise ValueError("pin points must be distinct")
            pin = (sp, sm)
        self.pin = pin

    def __repr__(self):
        return f"Halfspace2DClass(pin={self.pin!r})"

    def check_point(self, x) -> None:
        if len(x) != 2:
            raise DomainError(f"expected a point in the plane, got {x!r}")

    def constraints(self, S) -> list | None:
        split = _split(S)
        if split is None:
            return None
        pos, neg = split
        return _halfspace_constraints(pos, neg, self.pin)

    def realizable(self, S) -> bool:
        cons = self.constraints(S)
        return cons is not None and geometry.feasible(cons)

    @staticmethod
    def label(w, b, x) -> int:
        return 1 if w[0] * x[0] + w[1] * x[1] - b >= 0 else -1

    def wedge(self, S) -> WedgeState:
        """Exact projection of V(S) onto the normal vector."""
        split = _split(S)
        if split is None:
            raise PreconditionError("contradictory labels")
        pos, neg = split
        pos_ids = list(range(len(pos)))
        neg_ids = list(range(len(pos), len(pos) + len(neg)))
        if self.pin is not None:
            pos = pos + [self.pin[0]]
            neg = neg + [self.pin[1]]
            pos_ids.append(-1)
            neg_ids.append(-1)
        return WedgeState.build(pos, pos_ids, neg, neg_ids)

    def tracker(self):
        return _HalfspaceTracker(self)


def halfspace_realizable(S, pin=None) -> bool:
    return Halfspace2DClass(pin).realizable(S)


class _HalfspaceTracker:
    def __init__(self, cls: Halfspace2DClass):
        self.state = cls.wedge([])
        self.n = 0

    def admits(self, z: LabeledExample) -> bool:
        return self.state.admits(z.point, z.label)

    def add(self, z: LabeledExample) -> None:
        self.state = self.state.extend(z.point, z.label, self.n)
        self.n += 1


# -- explicit finite classes ---------------------------------------------------


class FiniteClass(ConceptClass):
    """Explicit label table over a finite list of points.

    Rows are stored as bitmasks over hypotheses so that a version space is a
    single integer: bit j is set when hypothesis j is consistent.
    """

    def __init__(self, points: Sequence, hypotheses: Iterable[Sequence[int]]):
        self.points = list(points)
        self.index = {p: i for i, p in enumerate(self.points)}
        if len(self.index) != len(self.points):
            raise ValueError("duplicate points")
        rows = []
        seen = set()
        for h in hypotheses:
            h = tuple(int(v) for v in h)
            if len(h) != len(self.points) or any(v not in (1, -1) for v in h):
                raise ValueError(f"bad hypothesis row {h!r}")
            if h not in seen:
                seen.add(h)
                rows.append(h)
        self.hypotheses = rows
        self.full_mask = (1 << len(rows)) - 1
        self._cons = {}
        for i, p in enumerate(self.points):
            for y in (1, -1):
                m = 0
                for j, h in enumerate(rows):
                    if h[i] == y:
                        m |= 1 << j
                self._cons[(p, y)] = m

    def __repr__(self):
        return f"FiniteClass({len(self.points)} points, {len(self.hypotheses)} hypotheses)"

    def check_point(self, x) -> None:
        if x not in self.index:
            raise DomainError(f"unknown point {x!r}")

    def consistent_mask(self, example) -> int:
        z = as_example(example)
        self.check_point(z.point)
        return self._cons[(z.point, z.label)]

    def mask(self, S) -> int:
        m = self.full_mask
        for z in as_examples(S):
            m &= self.consistent_mask(z)
        return m

    def realizable(self, S) -> bool:
        return self.mask(S) != 0

    def label_of(self, hypothesis: int, x) -> int:
        return self.hypotheses[hypothesis][self.index[x]]

    def members(self, mask: int) -> list[int]:
        return [j for j in range(len(self.hypotheses)) if mask >> j & 1]

    def graph(self, hypothesis: int) -> list[LabeledExample]:
        h = self.hypotheses[hypothesis]
        return [LabeledExample(p, h[i]) for i, p in enumerate(self.points)]

    def tracker(self):
        return _FiniteTracker(self)


class _FiniteTracker:
    def __init__(self, cls: FiniteClass):
        self.cls = cls
        self.m = cls.full_mask

    def admits(self, z) -> bool:
        return self.m & self.cls.consistent_mask(z) != 0

    def add(self, z) -> None:
        self.m &= self.cls.consistent_mask(z)


def discretize(cls: ConceptClass, points: Sequence, hypotheses: Iterable[Callable] | None = None) -> FiniteClass:
    """Finite class of all labelings of ``points`` realized by ``cls``.

    With ``hypotheses`` given, their restrictions are used directly.
    Otherwise every sign pattern is tested for realizability (2^n queries).
    """
    points = list(points)
    if hypotheses is not None:
        rows = [tuple(h(p) for p in points) for h in hypotheses]
    else:
        rows = []
        for labels in itertools.product((1, -1), repeat=len(points)):
            if cls.realizable(list(zip(points, labels))):
                rows.append(labels)
    return FiniteClass(points, rows)


def rectangle_patterns(d: int, points: Sequence) -> FiniteClass:
    """Discretize origin rectangles on a finite point set via grid thresholds."""
    cls = RectangleClass(d)
    levels = [sorted({0} | {p[i] for p in points}) for i in range(d)]
    hyps = [lambda x, v=v: cls.label(v, x) for v in itertools.product(*levels)]
    return discretize(cls, points, hyps)


# -- relabeling a VC-1 class onto initial segments ----------------------------


class RelabeledClass(ConceptClass):
    """A class routed through y_r(x, y) = +1 iff y != r(x) onto a tree order.

    When the original class is supplied, every realizability query is
    cross-checked against it and a disagreement raises StructureError.
    """

    def __init__(self, reference: Callable, tree_class: TreeOrderClass, base: ConceptClass | None = None):
        self.reference = reference
        self.tree_class = tree_class
        self.base = base

    def relabel(self, z) -> LabeledExample:
        z = as_example(z)
        return LabeledExample(z.point, 1 if z.label != self.reference(z.point) else -1)

    def check_point(self, x) -> None:
        self.tree_class.check_point(x)

    def realizable(self, S) -> bool:
        S = as_examples(S)
        ans = self.tree_class.realizable([self.relabel(z) for z in S])
        if self.base is not None and self.base.realizable(S) != ans:
            raise StructureError(f"tree order disagrees with the class on {S!r}")
        return ans

    def tracker(self):
        return _RelabeledTracker(self)


class _RelabeledTracker:
    def __init__(self, cls: RelabeledClass):
        self.cls = cls
        self.inner = cls.tree_class.tracker()

    def admits(self, z) -> bool:
        return self.inner.admits(self.cls.relabel(z))

    def add(self, z) -> None:
        self.inner.add(self.cls.relabel(z))


def relabel_vc1(cls: ConceptClass | None, reference: Callable, tree_class: TreeOrderClass) -> RelabeledClass:
    return RelabeledClass(reference, tree_class, base=cls)


# -- file loading --------------------------------------------------------------


def _point(v):
    if isinstance(v, list):
        return tuple(_point(u) for u in v)
    if isinstance(v, str) and "/" in v:
        return Fraction(v)
    return v


def load_class(path_or_dict) -> ConceptClass:
    """Load a finite class or tree from JSON.

    Finite: ``{"points": [...], "hypotheses": [[+1, -1, ...], ...]}``.
    Tree: ``{"parent": {"b": "a", ...}, "root": "a", "includes_empty_segment": true}``.
    """
    data = path_or_dict
    if not isinstance(data, dict):
        data = json.loads(Path(path_or_dict).read_text())
    if "hypotheses" in data:
        return FiniteClass([_point(p) for p in data["points"]], data["hypotheses"])
    if "parent" in data:
        parent = {_point(k): (_point(v) if v is not None else None) for k, v in data["parent"].items()}
        if "root" in data:
            parent.setdefault(_point(data["root"]), None)
        return TreeOrderClass(ExplicitTree(parent), data.get("includes_empty_segment", True))
    raise ValueError("unrecognized class file")
