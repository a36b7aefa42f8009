"""Adversaries for the injection game, their distributions and targets."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .classes import HardTreePathClass, PrefixTree, RectangleClass


class SetupError(ValueError):
    """An adversary configuration is internally inconsistent."""


# -- distributions -------------------------------------------------------------


class FiniteDistribution:
    def __init__(self, points: Sequence, weights: Sequence[float] | None = None):
        if not points:
            raise SetupError("empty support")
        self.points = list(points)
        w = np.ones(len(points)) if weights is None else np.asarray(weights, dtype=float)
        if len(w) != len(points) or np.any(w < 0) or w.sum() <= 0:
            raise SetupError("bad weights")
        self.p = w / w.sum()

    def sample(self, rng: np.random.Generator):
        return self.points[int(rng.choice(len(self.points), p=self.p))]


class UniformBox:
    """Uniform on [low, high]^d, returned as a tuple of floats."""

    def __init__(self, d: int, low: float = 0.0, high: float = 1.0):
        self.d, self.low, self.high = d, low, high

    def sample(self, rng):
        return tuple(float(v) for v in rng.uniform(self.low, self.high, self.d))


class IntegerBox:
    """Uniform on the integer grid {low..high}^d."""

    def __init__(self, d: int, low: int, high: int):
        self.d, self.low, self.high = d, low, high

    def sample(self, rng):
        return tuple(int(v) for v in rng.integers(self.low, self.high + 1, self.d))


# -- targets ---------------------------------------------------------------------


def rectangle_target(v) -> Callable:
    v = tuple(v)
    return lambda x: 1 if all(a <= b for a, b in zip(x, v)) else -1


def halfspace_target(w, b) -> Callable:
    return lambda x: 1 if w[0] * x[0] + w[1] * x[1] - b >= 0 else -1


def segment_target(tree, node) -> Callable:
    """Initial segment of ``node``; None gives the empty segment."""
    if node is None:
        return lambda x: -1
    return lambda x: 1 if tree.precedes(x, node) else -1


# -- adversaries -----------------------------------------------------------------


class IIDAdversary:
    """Never injects."""

    def __init__(self, distribution, target: Callable, declared: dict | None = None):
        self.distribution = distribution
        self._target = target
        self.declared = declared or {}

    def setup(self, horizon: int, rng) -> None:
        for p, y in self.declared.items():
            if self._target(p) != y:
                raise SetupError(f"declared label {y:+d} of {p!r} disagrees with the target")

    def target(self, x) -> int:
        return self._target(x)

    def choose(self, t, history):
        return 0, None


SCHEDULES = {
    "never": lambda t, h, rng: False,
    "always": lambda t, h, rng: True,
    "alternate": lambda t, h, rng: t % 2 == 0,
}


def parse_schedule(spec) -> Callable:
    """``never``, ``always``, ``alternate``, ``bernoulli:p`` or a callable."""
    if callable(spec):
        return spec
    if spec in SCHEDULES:
        return SCHEDULES[spec]
    if isinstance(spec, str) and spec.startswith("bernoulli:"):
        p = float(spec.split(":", 1)[1])
        return lambda t, h, rng: bool(rng.random() < p)
    raise SetupError(f"unknown schedule {spec!r}")


class ScheduleAdversary(IIDAdversary):
    """Injects when the schedule fires.

    ``pool`` is a list of points used in order, the string ``"history"`` to
    re-inject a random already-seen point, or a callable
    ``(t, history, rng) -> point or None``. An exhausted pool gives q = 0.
    """

    def __init__(self, distribution, target, schedule="never", pool=(), declared=None):
        super().__init__(distribution, target, declared)
        self.schedule = parse_schedule(schedule)
        self.pool = pool

    def setup(self, horizon, rng):
        super().setup(horizon, rng)
        self.rng = rng
        self._next = 0

    def _draw(self, t, history):
        if callable(self.pool):
            return self.pool(t, history, self.rng)
        if self.pool == "history":
            seen = list(history)
            if not seen:
                return None
            return seen[int(self.rng.integers(len(seen)))].point
        if self._next < len(self.pool):
            x = self.pool[self._next]
            self._next += 1
            return x
        return None

    def choose(self, t, history):
        if not self.schedule(t, history, self.rng):
            return 0, None
        x = self._draw(t, history)
        return (0, None) if x is None else (1, x)


class HardTreeAdversary:
    """B blocks of B rounds over a B-ary tree; exactly one block is i.i.d.

    Block i shows uniform children of theta_{i-1}. The secret block r draws
    them through the engine (q = 0, D = D_r); every other block draws them
    from the adversary's own stream and flags them injected. Rounds after
    B^2 re-inject the first round's point.
    """

    def setup(self, horizon, rng):
        if horizon < 4:
            raise SetupError("hard-tree adversary needs T >= 4")
        self.rng = rng
        self.B = B = math.isqrt(horizon)
        self.T0 = B * B
        steps = tuple(int(c) for c in rng.integers(0, B, size=B))
        self.theta = [steps[:i] for i in range(B + 1)]
        self.r = int(rng.integers(1, B + 1))
        self.tree = PrefixTree(B, max_depth=B)
        self.concept_class = HardTreePathClass(self.tree)
        self.distribution = self.block_distribution(self.r)

    def block_distribution(self, i: int) -> FiniteDistribution:
        parent = self.theta[i - 1]
        return FiniteDistribution([parent + (c,) for c in range(self.B)])

    def block(self, t: int) -> int | None:
        return (t - 1) // self.B + 1 if t <= self.T0 else None

    def target(self, x) -> int:
        leaf = self.theta[-1]
        return 1 if len(x) <= len(leaf) and leaf[: len(x)] == tuple(x) else -1

    def choose(self, t, history):
        i = self.block(t)
        if i is None:
            return 1, next(iter(history)).point
        if i == self.r:
            return 0, None
        return 1, self.theta[i - 1] + (int(self.rng.integers(self.B)),)


class TargetedAdversary(ScheduleAdversary):
    """Injects points marching toward a victim from an anchor on its side.

    The j-th injection is victim + (anchor - victim) / 2^j, exact rationals
    when the inputs are integers or fractions. Injections fire on even
    rounds until the budget is spent.
    """

    def __init__(self, distribution, target, victim, budget: int, anchor=None, schedule="alternate",
                 exact: bool = False):
        super().__init__(distribution, target, schedule=schedule, pool=self._next_point)
        self.victim = tuple(victim)
        self.anchor = tuple(anchor) if anchor is not None else tuple(0 for _ in victim)
        self.budget = budget
        self.exact = exact

    def setup(self, horizon, rng):
        super().setup(horizon, rng)
        self.used = 0

    def _next_point(self, t, history, rng):
        if self.used >= self.budget:
            return None
        self.used += 1
        s = Fraction(1, 2 ** self.used)
        if self.exact:
            return tuple(Fraction(v) + (Fraction(a) - Fraction(v)) * s for v, a in zip(self.victim, self.anchor))
        return tuple(float(v + (a - v) * float(s)) for v, a in zip(self.victim, self.anchor))
