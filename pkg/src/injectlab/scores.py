"""Score functions f(U; V) for the leave-k-out potential.

Version spaces are passed as the labeled set ``rest`` that defines them.
Every score has a direct ``eval(U, rest)`` that follows the definition
through class queries. Scores with a fast path also provide *summaries*:
compact, immutable descriptions of V(rest) that can be extended one example
at a time and evaluated on many subsets U at once with numpy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Sequence

import numpy as np

from . import geometry
from .classes import (
    ExplicitTree, FiniteClass, Halfspace2DClass, PreconditionError, RectangleClass,
    TreeOrderClass, _halfspace_constraints, _split,
)
from .core import LabeledExample, as_examples
from .geometry import WedgeState


class DegeneratePairError(ValueError):
    """A certificate was requested on two identical points."""


@dataclass(frozen=True)
class ScoreSpec:
    k: int
    m: int
    c: int

    def __post_init__(self):
        if not (1 <= self.k <= self.m) or self.c < 1:
            raise ValueError(f"invalid score parameters {self}")


class Store:
    """Per-learner example storage indexed by position in the history.

    Index ``len(history)`` is a scratch slot for the candidate example.
    """

    def __init__(self, dim: int | None, exact: bool = False):
        self.dim = dim
        self.exact = exact
        self.examples: list[LabeledExample | None] = []
        self.labels = np.zeros(16, dtype=np.int8)
        self.coords = None if dim is None else np.zeros((16, dim), dtype=np.int64)

    def _grow(self, n):
        cap = len(self.labels)
        if n <= cap:
            return
        new = max(n, 2 * cap)
        self.labels = np.concatenate([self.labels, np.zeros(new - cap, dtype=np.int8)])
        if self.coords is not None:
            pad = np.zeros((new - cap, self.dim), dtype=self.coords.dtype)
            self.coords = np.concatenate([self.coords, pad])

    def put(self, idx: int, z: LabeledExample) -> None:
        self._grow(idx + 1)
        while len(self.examples) <= idx:
            self.examples.append(None)
        self.examples[idx] = z
        self.labels[idx] = z.label
        if self.coords is not None:
            row = tuple(z.point)
            kind = _kind(row, self.exact)
            if _RANK[kind] > _RANK[self.coords.dtype.kind]:
                self.coords = self.coords.astype(float if kind == "f" else object)
            if self.coords.dtype.kind == "O":
                row = tuple(Fraction(v) for v in row)
            self.coords[idx] = row


_RANK = {"i": 0, "f": 1, "O": 2}


def _kind(row, exact: bool) -> str:
    if all(isinstance(v, (int, np.integer)) and abs(int(v)) < 1 << 24 for v in row):
        return "i"
    if not exact and all(isinstance(v, (int, float, np.integer, np.floating)) for v in row):
        return "f"
    return "O"


class Score:
    """Base score. Subclasses implement ``eval``; optional fast summaries."""

    spec: ScoreSpec
    floor: int = 0
    fast: bool = False
    dim: int | None = None
    exact: bool = False

    def eval(self, U, rest) -> int:
        raise NotImplementedError

    def __call__(self, U, rest) -> int:
        return self.eval(U, rest)

    def new_store(self) -> Store:
        return Store(self.dim if self.fast else None, self.exact)

    # fast-path hooks, only used when ``fast`` is True
    def summarize(self, store: Store, ids: Sequence[int]):
        raise NotImplementedError

    def eval_rows(self, rows: np.ndarray, summary, store: Store) -> np.ndarray:
        raise NotImplementedError

    def _check(self, U, rest):
        U = as_examples(U)
        rest = as_examples(rest)
        if len(U) != self.spec.k:
            raise ValueError(f"expected |U| = {self.spec.k}, got {len(U)}")
        return U, rest


# -- rectangles ----------------------------------------------------------------


def delta_i(x, i: int) -> tuple:
    return tuple(v if j == i else 0 for j, v in enumerate(x))


class RectSummary:
    """Coordinatewise max of the positives, with the ids attaining each max."""

    __slots__ = ("pos", "pos_ids", "v", "ess")

    def __init__(self, pos, pos_ids, v, ess):
        self.pos, self.pos_ids, self.v, self.ess = pos, pos_ids, v, ess

    @classmethod
    def build(cls, pos: np.ndarray, pos_ids: np.ndarray, d: int):
        if len(pos) == 0:
            return cls(pos, pos_ids, np.zeros(d), frozenset())
        v = pos.max(axis=0)
        hit = (pos == v) & (v > 0)
        ess = frozenset(int(i) for i in pos_ids[hit.any(axis=1)])
        return cls(pos, pos_ids, np.maximum(v, 0), ess)

    @property
    def essential(self):
        return self.ess

    @property
    def key(self):
        return tuple(self.v.tolist())

    def extend(self, idx, z):
        if z.label < 0:
            return self
        x = np.asarray(z.point, dtype=float)
        pos = np.vstack([self.pos, x[None, :]])
        ids = np.append(self.pos_ids, idx)
        v = np.maximum(self.v, x)
        if np.array_equal(v, self.v):
            tie = (x == self.v) & (x > 0)
            ess = self.ess | {idx} if tie.any() else self.ess
        else:
            return RectSummary.build(pos, ids, len(v))
        return RectSummary(pos, ids, v, ess)

    def without(self, idx):
        keep = self.pos_ids != idx
        if keep.all():
            return self
        if idx in self.ess:
            return RectSummary.build(self.pos[keep], self.pos_ids[keep], len(self.v))
        return RectSummary(self.pos[keep], self.pos_ids[keep], self.v, self.ess)


class RectScore(Score):
    """Number of coordinates i such that (delta_i(x), -1) stays realizable."""

    fast = True

    def __init__(self, cls: RectangleClass):
        self.cls = cls
        self.dim = cls.d
        self.spec = ScoreSpec(k=1, m=2 * cls.d + 1, c=cls.d)

    def eval(self, U, rest) -> int:
        U, rest = self._check(U, rest)
        base = rest + U
        if not self.cls.realizable(base):
            raise PreconditionError("f_rect needs rest and U jointly realizable")
        x = U[0].point
        return sum(
            self.cls.realizable(base + [LabeledExample(delta_i(x, i), -1)])
            for i in range(self.cls.d)
        )

    def summarize(self, store, ids):
        ids = [i for i in ids if store.labels[i] > 0]
        idx = np.asarray(ids, dtype=np.int64)
        pos = store.coords[idx].astype(float) if len(ids) else np.zeros((0, self.dim))
        return RectSummary.build(pos, idx, self.dim)

    def eval_rows(self, rows, summary, store):
        i = rows[:, 0]
        x = store.coords[i].astype(float)
        vals = (x > summary.v).sum(axis=1)
        return np.where(store.labels[i] < 0, vals, 0)


# -- tree initial segments -----------------------------------------------------


class SegmentSummary:
    """Positives of a realizable set form a chain; keep it sorted by depth."""

    __slots__ = ("chain", "tree")

    def __init__(self, chain: tuple, tree):
        self.chain = chain
        self.tree = tree

    @property
    def deepest(self):
        return self.chain[-1][1] if self.chain else None

    @property
    def essential(self):
        return frozenset((self.chain[-1][0],)) if self.chain else frozenset()

    @property
    def key(self):
        return (self.deepest,)

    def extend(self, idx, z):
        if z.label < 0:
            return self
        chain = tuple(sorted(self.chain + ((idx, z.point),), key=lambda e: self.tree.depth(e[1])))
        return SegmentSummary(chain, self.tree)

    def without(self, idx):
        chain = tuple(e for e in self.chain if e[0] != idx)
        return self if len(chain) == len(self.chain) else SegmentSummary(chain, self.tree)


class SegmentScore(Score):
    """1 iff every point forced positive by V lies on the root path of x."""

    fast = True

    def __init__(self, cls: TreeOrderClass):
        self.cls = cls
        self.spec = ScoreSpec(k=1, m=3, c=1)
        tree = cls.tree
        self._interval = None
        if isinstance(tree, ExplicitTree):
            self._interval = _euler_intervals(tree)

    def forced_positive(self, rest) -> list:
        """P(V(rest)): the root path of the deepest positive."""
        pos, _ = _split(rest) or ([], [])
        top = self.cls.deepest(pos)
        if top is None:
            return []
        return list(self.cls.tree.path(top))

    def eval(self, U, rest) -> int:
        U, rest = self._check(U, rest)
        if not self.cls.realizable(rest):
            raise PreconditionError("f_seg needs a realizable rest")
        x = U[0].point
        self.cls.check_point(x)
        pos, _ = _split(rest)
        top = self.cls.deepest(pos)
        return int(top is None or self.cls.tree.precedes(top, x))

    def new_store(self):
        return Store(None)

    def summarize(self, store, ids):
        chain = [(i, store.examples[i].point) for i in ids if store.labels[i] > 0]
        chain.sort(key=lambda e: self.cls.tree.depth(e[1]))
        return SegmentSummary(tuple(chain), self.cls.tree)

    def eval_rows(self, rows, summary, store):
        top = summary.deepest
        if top is None:
            return np.ones(len(rows), dtype=np.int64)
        if self._interval is not None:
            tin, tout = self._interval
            nodes = [store.examples[i].point for i in rows[:, 0]]
            t = np.fromiter((tin[v] for v in nodes), dtype=np.int64, count=len(nodes))
            return ((t >= tin[top]) & (t < tout[top])).astype(np.int64)
        prec = self.cls.tree.precedes
        return np.fromiter((prec(top, store.examples[i].point) for i in rows[:, 0]),
                           dtype=np.int64, count=len(rows))


def _euler_intervals(tree: ExplicitTree):
    tin, tout = {}, {}
    clock = 0
    stack = [(tree.root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            tout[v] = clock
            continue
        tin[v] = clock
        clock += 1
        stack.append((v, True))
        for ch in reversed(tree.children[v]):
            stack.append((ch, False))
    return tin, tout


# -- certificates --------------------------------------------------------------


class Certificate:
    """sigma(h, points) with an alphabet of size n, plus its realizable values."""

    n: int
    size: int  # number of points sigma inspects (certificate dimension minus one)

    def realizable_values(self, points: Sequence, rest) -> set[int]:
        raise NotImplementedError


def _sorted_pair(points):
    a, b = points
    order = geometry.lex_order(a, b)
    if order == 0:
        raise DegeneratePairError(f"identical points {a!r}")
    return (a, b) if order < 0 else (b, a)


def _bare_point(z):
    if isinstance(z, LabeledExample):
        return z.point
    if isinstance(z, tuple) and len(z) == 2 and isinstance(z[0], tuple):
        return z[0]
    return z


def sigma_halfspace(hypothesis, pair) -> int:
    """0 / 1 / 2 as w . x_a is greater / equal / less than w . x_b (x_a lex-first).

    ``pair`` may hold bare points or labeled examples; labels are ignored.
    """
    w = hypothesis[0]
    xa, xb = _sorted_pair([_bare_point(z) for z in pair])
    ua = w[0] * xa[0] + w[1] * xa[1]
    ub = w[0] * xb[0] + w[1] * xb[1]
    return 0 if ua > ub else (1 if ua == ub else 2)


def _sigma_constraint(points, value):
    xa, xb = _sorted_pair(points)
    d = (Fraction(xa[0]) - Fraction(xb[0]), Fraction(xa[1]) - Fraction(xb[1]), 0)
    return (geometry.gt, geometry.eq, geometry.lt)[value](d)


def sigma_value_feasible(points, rest, value: int, pin=None) -> bool:
    split = _split(rest)
    if split is None:
        return False
    cons = _halfspace_constraints(*split, pin)
    cons.append(_sigma_constraint(points, value))
    return geometry.feasible(cons)


class HalfspaceCertificate(Certificate):
    n = 3
    size = 2

    def __init__(self, cls: Halfspace2DClass):
        self.cls = cls

    def sigma(self, hypothesis, points) -> int:
        return sigma_halfspace(hypothesis, points)

    def realizable_values(self, points, rest) -> set[int]:
        return {v for v in range(3) if sigma_value_feasible(points, rest, v, self.cls.pin)}


class FiniteCertificate(Certificate):
    """Certificate over an explicit class: ``sigma(j, points)`` on hypothesis index j."""

    def __init__(self, cls: FiniteClass, sigma: Callable, n: int, size: int):
        self.cls, self._sigma, self.n, self.size = cls, sigma, n, size

    def sigma(self, hypothesis: int, points) -> int:
        return self._sigma(hypothesis, tuple(points))

    def realizable_values(self, points, rest) -> set[int]:
        return {self.sigma(j, points) for j in self.cls.members(self.cls.mask(rest))}


class CertificateScore(Score):
    """Number of certificate values still attained by hypotheses in V(rest).

    Labels of U are ignored. When two points of U coincide the value is the
    maximum c, which keeps the score monotone.
    """

    floor = 1

    def __init__(self, cls, certificate: Certificate, m: int):
        self.cls = cls
        self.certificate = certificate
        self.spec = ScoreSpec(k=certificate.size, m=m, c=certificate.n)

    def eval(self, U, rest) -> int:
        U, rest = self._check(U, rest)
        if not self.cls.realizable(rest):
            raise PreconditionError("certificate score needs a realizable rest")
        points = [z.point for z in U]
        if len(set(points)) < len(points):
            return self.spec.c
        return len(self.certificate.realizable_values(points, rest))


class HalfspaceCertificateScore(CertificateScore):
    """Pinned-halfspace certificate score with a wedge fast path.

    The feasible normals of V(rest) form an open cone W. sigma = 1 is
    attainable iff the line orthogonal to x_a - x_b meets W, in which case
    both strict values are attainable too; otherwise W lies on one side.
    Values are therefore 1 or 3.
    """

    fast = True
    dim = 2
    exact = True

    def __init__(self, cls: Halfspace2DClass):
        super().__init__(cls, HalfspaceCertificate(cls), m=7)

    def summarize(self, store, ids):
        pos = [i for i in ids if store.labels[i] > 0]
        neg = [i for i in ids if store.labels[i] < 0]
        pos_pts = [store.examples[i].point for i in pos]
        neg_pts = [store.examples[i].point for i in neg]
        if self.cls.pin is not None:
            pos_pts.append(self.cls.pin[0])
            neg_pts.append(self.cls.pin[1])
            pos = pos + [-1]
            neg = neg + [-1]
        return _WedgeSummary(WedgeState.build(pos_pts, pos, neg_pts, neg))

    def eval_rows(self, rows, summary, store):
        a = store.coords[rows[:, 0]]
        b = store.coords[rows[:, 1]]
        dx = a[:, 0] - b[:, 0]
        dy = a[:, 1] - b[:, 1]
        meets = summary.state.line_meets(dx, dy)
        collapsed = (dx == 0) & (dy == 0)
        return np.where(meets | collapsed, 3, 1).astype(np.int64)


class _WedgeSummary:
    __slots__ = ("state",)

    def __init__(self, state: WedgeState):
        self.state = state

    @property
    def essential(self):
        return self.state.essential

    @property
    def key(self):
        return self.state.key

    def extend(self, idx, z):
        return _WedgeSummary(self.state.extend(z.point, z.label, idx))

    def without(self, idx):
        return _WedgeSummary(self.state.without(idx))


# -- comparison-query transcripts ---------------------------------------------


def weak_orders(n: int):
    """All ordered set partitions of range(n), lowest block first."""
    if n == 0:
        yield ()
        return
    items = list(range(n))
    for r in range(1, n + 1):
        for labels in itertools.product(range(r), repeat=n):
            if len(set(labels)) == r:
                yield tuple(tuple(i for i in items if labels[i] == b) for b in range(r))


class TranscriptScore(Score):
    """Number of comparison-query transcripts on N(U) realizable in V(rest).

    f_h(x) = w . x - b. A transcript is the sign vector 1[f_h(x_i) >= 0]
    together with the matrix 1[f_h(x_i) >= f_h(x_j)], i.e. a weak order of
    the values plus a cut placing zero. Each candidate is one feasibility
    call. ``size`` is |U|; the inference dimension of planar halfspaces
    gives size 4.
    """

    floor = 1

    def __init__(self, cls: Halfspace2DClass, size: int = 4):
        self.cls = cls
        k = size + 1
        self.spec = ScoreSpec(k=size, m=k, c=2 ** size * math.factorial(k))

    def transcripts(self, points, rest) -> set:
        """Realizable (weak order, signs) pairs, built by inserting the points
        one at a time and pruning infeasible partial transcripts."""
        split = _split(rest)
        if split is None:
            raise PreconditionError("contradictory rest")
        pos, neg = split
        known = {p: 1 for p in pos}
        known.update({p: -1 for p in neg})
        base = _halfspace_constraints(pos, neg, self.cls.pin)
        if not geometry.feasible(base):
            raise PreconditionError("transcript score needs a realizable rest")
        f = [(Fraction(p[0]), Fraction(p[1]), Fraction(-1)) for p in points]
        diff = lambda a, b: tuple(x - y for x, y in zip(f[a], f[b]))
        found = set()

        def place(j, blocks, signs, cons):
            # blocks: ordered lowest first; signs[i] is the sign of block i
            if j == len(points):
                per_point = {i: sg for blk, sg in zip(blocks, signs) for i in blk}
                found.add((tuple(blocks), tuple(per_point[i] for i in range(len(points)))))
                return
            want = known.get(points[j])
            for bi, blk in enumerate(blocks):
                if want is not None and want != signs[bi]:
                    continue
                c = cons + [geometry.eq(diff(j, blk[0]))]
                if geometry.feasible(c):
                    nb = blocks[:bi] + [blk + (j,)] + blocks[bi + 1:]
                    place(j + 1, nb, signs, c)
            for gap in range(len(blocks) + 1):
                below = signs[gap - 1] if gap > 0 else -1
                above = signs[gap] if gap < len(blocks) else 1
                for sg in {below, above}:
                    if want is not None and want != sg:
                        continue
                    c = list(cons)
                    if gap > 0:
                        c.append(geometry.gt(diff(j, blocks[gap - 1][0])))
                    if gap < len(blocks):
                        c.append(geometry.gt(diff(blocks[gap][0], j)))
                    c.append(geometry.ge(f[j]) if sg > 0 else geometry.lt(f[j]))
                    if geometry.feasible(c):
                        place(j + 1, blocks[:gap] + [(j,)] + blocks[gap:], signs[:gap] + [sg] + signs[gap:], c)

        place(0, [], [], list(base))
        return found

    def eval(self, U, rest) -> int:
        U, rest = self._check(U, rest)
        points = [z.point for z in U]
        if len(set(points)) < len(points):
            return self.spec.c
        return len(self.transcripts(points, rest))


def make_score(name: str, cls) -> Score:
    name = name.replace("_", "-")
    if name == "rect":
        return RectScore(cls)
    if name == "seg":
        return SegmentScore(cls)
    if name == "cert-halfspace":
        return HalfspaceCertificateScore(cls)
    if name == "transcript-halfspace":
        return TranscriptScore(cls)
    raise ValueError(f"unknown score {name!r}")
