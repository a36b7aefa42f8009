"""The leave-k-out potential learner and simple baselines.

The potential of a labeled set S is the sum over k-subsets U of
f(U; V(S - U)). The learner predicts only when a wrong prediction would
drop the potential by at least alpha, otherwise it abstains.

Incremental maintenance. Terms whose score has reached the score's floor
stay there (monotonicity), so only *active* terms are kept, as an (n, k)
index array with cached values. For a candidate example z every active
term must be re-evaluated against V(S - U + z). Fast scores describe
V(S - X) by an immutable summary that knows which examples are
*essential*: removing any set of non-essential examples leaves the summary
unchanged. Terms are grouped by the essential examples they contain, so one
extended summary per group is built and the whole group is scored by a
single vectorized call.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .classes import ConceptClass, Halfspace2DClass, PreconditionError
from .core import ABSTAIN, ContradictionError, History, LabeledExample, as_example, as_examples
from .scores import HalfspaceCertificateScore, Score, ScoreSpec, TranscriptScore

TRANSCRIPT_HORIZON_LIMIT = 256


def auto_alpha(spec: ScoreSpec, T: int) -> Fraction:
    """((c T^k) / (k! m ln T))^(k/(k+1)), rounded to a nearby rational."""
    if T < 2:
        raise ValueError("auto alpha needs T >= 2")
    k, m, c = spec.k, spec.m, spec.c
    value = (c * T ** k / (math.factorial(k) * m * math.log(T))) ** (k / (k + 1))
    return Fraction(value).limit_denominator(1000)


def mistake_bound(spec: ScoreSpec, alpha, T: int) -> Fraction:
    return Fraction(spec.c) * Fraction(T) ** spec.k / (math.factorial(spec.k) * Fraction(alpha))


def abstention_bound(spec: ScoreSpec, alpha, T: int) -> float:
    """e m (alpha + c T^(k-1))^(1/k) ln T."""
    if T < 2:
        return 0.0
    return math.e * spec.m * (float(alpha) + spec.c * T ** (spec.k - 1)) ** (1 / spec.k) * math.log(T)


def attackable_bound(spec: ScoreSpec, alpha, T: int) -> float:
    return math.e * spec.m * (float(alpha) + spec.c * T ** (spec.k - 1)) ** (1 / spec.k)


def combined_bound(spec: ScoreSpec, alpha, T: int) -> float:
    return float(mistake_bound(spec, alpha, T)) + abstention_bound(spec, alpha, T)


class PotentialLearner:
    """Algorithm: forced labels first, then the alpha-certified potential drop."""

    def __init__(self, cls: ConceptClass, score: Score, alpha="auto", expensive: bool = False):
        self.cls = cls
        self.score = score
        self.alpha_setting = alpha
        self.expensive = expensive
        self.reset(0)

    # -- state ---------------------------------------------------------------

    def reset(self, horizon: int, rng=None) -> None:
        if isinstance(self.score, TranscriptScore) and horizon > TRANSCRIPT_HORIZON_LIMIT and not self.expensive:
            raise ValueError(f"transcript score above T={TRANSCRIPT_HORIZON_LIMIT} needs expensive=True")
        self.horizon = horizon
        if self.alpha_setting == "auto":
            self.alpha = auto_alpha(self.score.spec, max(horizon, 2))
        else:
            self.alpha = Fraction(self.alpha_setting)
        k = self.score.spec.k
        self.history = History()
        self.n = 0
        self.store = self.score.new_store()
        self.tracker = self.cls.tracker()
        self.rows = np.zeros((0, k), dtype=np.int64)
        self.vals = np.zeros(0, dtype=np.int64)
        self.floor_terms = 0
        self._cache: dict[frozenset, object] = {}
        self._used: set[frozenset] = set()
        self._pending: dict[tuple, tuple] = {}
        self._memo: dict = {}

    @property
    def examples(self) -> list[LabeledExample]:
        return self.store.examples[: self.n]

    @property
    def potential(self) -> int:
        return self.floor_terms * self.score.floor + int(self.vals.sum())

    @property
    def k(self) -> int:
        return self.score.spec.k

    def fit(self, examples) -> "PotentialLearner":
        for z in as_examples(examples):
            self.update(z.point, z.label)
        return self

    # -- summaries ------------------------------------------------------------

    def _committed(self, X: frozenset):
        self._used.add(X)
        s = self._cache.get(X)
        if s is None:
            if not X:
                s = self.score.summarize(self.store, range(self.n))
            else:
                e = max(X)
                s = self._committed(X - {e}).without(e)
            self._cache[X] = s
        return s

    def _groups(self, rows: np.ndarray, head: np.ndarray, X: frozenset, summary_of, out: np.ndarray):
        """Score ``rows`` under ``summary_of(X)``, splitting off rows whose
        ``head`` columns contain an essential example outside X."""

        def run(sel: np.ndarray, X: frozenset):
            summary = summary_of(X)
            ess = [e for e in summary.essential if e not in X and e < self.n]
            if ess and head.shape[1]:
                hit = np.isin(head[sel], ess)
                any_hit = hit.any(axis=1)
                if any_hit.any():
                    first = np.where(hit, head[sel], np.iinfo(np.int64).max).min(axis=1)
                    for e in np.unique(first[any_hit]):
                        run(sel[first == e], X | {int(e)})
                    sel = sel[~any_hit]
            if len(sel):
                out[sel] = self.score.eval_rows(rows[sel], summary, self.store)

        if len(rows):
            run(np.arange(len(rows)), X)

    def _new_rows(self) -> np.ndarray:
        k, n = self.k, self.n
        if k == 1:
            return np.array([[n]], dtype=np.int64)
        if k == 2:
            return np.stack([np.arange(n), np.full(n, n)], axis=1).astype(np.int64)
        combos = list(itertools.combinations(range(n), k - 1))
        if not combos:
            return np.zeros((0, k), dtype=np.int64)
        return np.hstack([np.array(combos, dtype=np.int64), np.full((len(combos), 1), n)])

    def _evaluate(self, z: LabeledExample):
        """(old-term values under S + z, new term rows, new term values)."""
        self.store.put(self.n, z)
        new_rows = self._new_rows()
        if self.score.fast:
            ext_cache: dict = {}

            def extended(X):
                s = ext_cache.get(X)
                if s is None:
                    s = ext_cache[X] = self._committed(X).extend(self.n, z)
                return s

            old = np.empty(len(self.rows), dtype=np.int64)
            self._groups(self.rows, self.rows, frozenset(), extended, old)
            # new terms U' + z are scored against V(S - U'); z is never in S
            new = np.empty(len(new_rows), dtype=np.int64)
            self._groups(new_rows, new_rows[:, :-1], frozenset(), self._committed, new)
        else:
            old = np.array([self._generic(row, with_candidate=True) for row in self.rows], dtype=np.int64)
            new = np.array([self._generic(row, with_candidate=False) for row in new_rows], dtype=np.int64)
        return old, new_rows, new

    def _generic(self, row, with_candidate: bool) -> int:
        ex = self.store.examples
        members = set(int(i) for i in row)
        U = [ex[i] for i in row]
        rest = [ex[j] for j in range(self.n) if j not in members]
        if with_candidate:
            rest.append(ex[self.n])
        fingerprint = getattr(self.cls, "mask", None)
        key = (tuple(U), fingerprint(rest) if fingerprint else frozenset(rest))
        v = self._memo.get(key)
        if v is None:
            v = self._memo[key] = self.score.eval(U, rest)
        return v

    # -- decisions ------------------------------------------------------------

    def forced(self, x) -> int | None:
        plus = self.tracker.admits(LabeledExample(x, 1))
        minus = self.tracker.admits(LabeledExample(x, -1))
        if not plus and not minus:
            raise AssertionError("both restrictions empty: history is unrealizable")
        if not plus:
            return -1
        if not minus:
            return 1
        return None

    def deltas(self, x) -> tuple[int, int]:
        """(Delta_+, Delta_-) = potential(S) - potential(S + (x, b))."""
        out = []
        old_total = int(self.vals.sum())
        for b in (1, -1):
            z = LabeledExample(x, b)
            res = self._evaluate(z)
            self._pending[(x, b)] = res
            old, _, new = res
            out.append(old_total - int(old.sum()) - int(new.sum()))
        return out[0], out[1]

    def decide(self, x) -> int:
        f = self.forced(x)
        if f is not None:
            return f
        d_plus, d_minus = self.deltas(x)
        best = max(d_plus, d_minus)
        if best >= self.alpha:
            b_star = 1 if d_plus >= d_minus else -1
            return -b_star
        return ABSTAIN

    def predict(self, x) -> int:
        self._pending.clear()
        return self.decide(x)

    def update(self, x, y: int) -> None:
        z = LabeledExample(x, int(y))
        if z in self.history:
            self._pending.clear()
            return
        if not self.tracker.admits(z):
            raise ContradictionError(f"{z!r} is inconsistent with the history")
        res = self._pending.get((x, z.label))
        if res is None:
            res = self._evaluate(z)
        self._pending.clear()
        old, new_rows, new = res
        floor = self.score.floor
        keep = old > floor
        self.floor_terms += int((~keep).sum()) + int((new <= floor).sum())
        self.rows = np.concatenate([self.rows[keep], new_rows[new > floor]])
        self.vals = np.concatenate([old[keep], new[new > floor]])
        self.store.put(self.n, z)
        for X in list(self._cache):
            if X in self._used or not X:
                self._cache[X] = self._cache[X].extend(self.n, z)
            else:
                del self._cache[X]
        self._used = set()
        self.tracker.add(z)
        self.history.add(z)
        self.n += 1


def potential(cls: ConceptClass, score: Score, S) -> int:
    S = as_examples(S)
    if not cls.realizable(S):
        raise PreconditionError("potential needs a realizable set")
    return PotentialLearner(cls, score, alpha=1).fit(S).potential


class BootstrapHalfspaceLearner:
    """Single-label phase, then a pinned certificate learner on the rest.

    Predicts +1 on round 1 and afterwards the only label seen so far. Once
    the history holds both labels, the first positive and first negative
    become the pin and a fresh pinned learner takes over.
    """

    def __init__(self, alpha="auto"):
        self.alpha_setting = alpha
        self.reset(0)

    def reset(self, horizon: int, rng=None) -> None:
        self.horizon = horizon
        self.rng = rng
        self.t = 0
        self.first = {}
        self.inner: PotentialLearner | None = None
        self.switch_round: int | None = None

    @property
    def alpha(self):
        return None if self.inner is None else self.inner.alpha

    def predict(self, x) -> int:
        if self.inner is not None:
            return self.inner.predict(x)
        if not self.first:
            return 1
        return next(iter(self.first))

    def update(self, x, y: int) -> None:
        self.t += 1
        if self.inner is not None:
            self.inner.update(x, y)
            return
        self.first.setdefault(int(y), x)
        if len(self.first) == 2:
            cls = Halfspace2DClass(pin=(self.first[1], self.first[-1]))
            self.inner = PotentialLearner(cls, HalfspaceCertificateScore(cls), self.alpha_setting)
            self.inner.reset(self.horizon - self.t, self.rng)
            self.switch_round = self.t


class AlwaysAbstain:
    def reset(self, horizon, rng=None):
        pass

    def predict(self, x):
        return ABSTAIN

    def update(self, x, y):
        pass


class AlwaysMinus(AlwaysAbstain):
    def predict(self, x):
        return -1


class OracleLearner(AlwaysAbstain):
    """Predicts the target label; ``target`` is the adversary (or any labeler)."""

    def __init__(self, target):
        self.target = target

    def predict(self, x):
        fn = getattr(self.target, "target", self.target)
        return fn(x)
