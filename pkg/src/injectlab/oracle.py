"""Brute-force verifiers, independent of the learner's incremental machinery.

Finite instances identify a hypothesis with its labeling of the instance
points. Version spaces become bitmasks over those labelings; since every
labeled set in play lives on the instance, equal masks mean equal version
spaces of the underlying class, so score values can be memoized by
(U, mask).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import geometry
from .classes import ConceptClass, FiniteClass, Halfspace2DClass, discretize
from .core import ABSTAIN, LabeledExample, Transcript, as_examples, tally
from .learner import abstention_bound, attackable_bound, mistake_bound
from .scores import Score, ScoreSpec, _halfspace_constraints, _sigma_constraint, sigma_halfspace


@dataclass
class VerificationReport:
    property: str
    instance: str
    result: str  # "verified" or "violated"
    counterexample: tuple | None = None
    caps: dict = field(default_factory=dict)
    checked: int = 0
    partial: bool = False
    seed: int | None = None

    @property
    def ok(self) -> bool:
        return self.result == "verified"

    def line(self) -> str:
        flag = " (partial)" if self.partial else ""
        return f"{self.property} on {self.instance}: {self.result}{flag}, {self.checked} checks, caps={self.caps}"


class FiniteInstance:
    """A class restricted to a finite point list, plus score memoization."""

    def __init__(self, cls: ConceptClass, points: Sequence, hypotheses=None, name: str = ""):
        self.cls = cls
        self.points = list(points)
        self.table: FiniteClass = hypotheses if isinstance(hypotheses, FiniteClass) else discretize(cls, self.points, hypotheses)
        self.name = name or f"{len(self.points)} points"
        self.labeled = [LabeledExample(p, y) for p in self.points for y in (1, -1)]
        self._cons = {z: self.table.consistent_mask(z) for z in self.labeled}
        self._memo: dict = {}

    def cons(self, z) -> int:
        return self._cons[z]

    def mask(self, examples) -> int:
        m = self.table.full_mask
        for z in examples:
            m &= self._cons[z]
        return m

    def score(self, score: Score, U: tuple, mask: int, rep) -> int:
        key = (id(score), U, mask)
        v = self._memo.get(key)
        if v is None:
            v = self._memo[key] = score.eval(list(U), list(rep))
        return v

    def version_spaces(self, depth: int, start=(), pool=None) -> dict[int, tuple]:
        """Masks reachable by adding at most ``depth`` examples from ``pool``
        (default: every labeled point) to ``start``, each with a smallest
        representative labeled set (breadth first)."""
        pool = self.labeled if pool is None else pool
        start = tuple(start)
        m0 = self.mask(start)
        seen = {m0: start}
        frontier = [m0]
        for _ in range(depth):
            nxt = []
            for m in frontier:
                rep = seen[m]
                for z in pool:
                    m2 = m & self._cons[z]
                    if m2 and m2 not in seen:
                        seen[m2] = rep + (z,)
                        nxt.append(m2)
            frontier = nxt
            if not frontier:
                break
        return seen


def _subsets(labeled, k):
    for U in itertools.combinations(labeled, k):
        if len({z.point for z in U}) == k:
            yield U


def check_monotonicity(score: Score, instance: FiniteInstance, cap: int) -> VerificationReport:
    """f(U; V) >= f(U; V_{x->y}) for every version space from a rest set of
    size <= cap, every U consistent with V_{x->y}, and every (x, y)."""
    k = score.spec.k
    spaces = instance.version_spaces(cap)
    Us = [(U, instance.mask(U)) for U in _subsets(instance.labeled, k)]
    checked = 0
    for m, rep in spaces.items():
        for z in instance.labeled:
            m2 = m & instance.cons(z)
            if not m2:
                continue
            rep2 = rep + (z,)
            for U, mu in Us:
                if not (m2 & mu):
                    continue
                checked += 1
                a = instance.score(score, U, m, rep)
                b = instance.score(score, U, m2, rep2)
                if a < b:
                    return VerificationReport("monotonicity", instance.name, "violated",
                                              (U, z, rep), {"rest": cap}, checked)
    return VerificationReport("monotonicity", instance.name, "verified", None, {"rest": cap}, checked)


def check_robustness(score: Score, instance: FiniteInstance, m: int | None = None,
                     cap: int = 7, budget: int | None = None) -> VerificationReport:
    """m-robustness on every hypothesis of the instance and every m-subset of
    its graph; extensions A are h-labeled with |A| <= cap."""
    spec = score.spec
    m = spec.m if m is None else m
    k = spec.k
    table = instance.table
    r = cap - (m - k - 1)
    caps = {"extension": cap, "m": m}
    if r < 0:
        raise ValueError("extension cap smaller than the base set")
    checked = 0
    for j in range(len(table.hypotheses)):
        graph = tuple(table.graph(j))
        reach = instance.version_spaces(r, pool=graph)
        reach_items = list(reach.items())
        memo: dict = {}
        for M in itertools.combinations(graph, m):
            checked += 1
            if budget is not None and checked > budget:
                return VerificationReport("robustness", instance.name, "verified", None, caps, checked - 1, partial=True)
            found = False
            for U in itertools.combinations(M, k):
                others = [z for z in M if z not in U]
                for w in others:
                    base = tuple(z for z in others if z is not w)
                    mb = instance.mask(base)
                    key = (U, w, mb)
                    ok = memo.get(key)
                    if ok is None:
                        ok = memo[key] = _robust_pair(score, instance, U, w, base, mb, reach_items)
                    if ok:
                        found = True
                        break
                if found:
                    break
            if not found:
                return VerificationReport("robustness", instance.name, "violated",
                                          (j, M), caps, checked)
    return VerificationReport("robustness", instance.name, "verified", None, caps, checked)


def _robust_pair(score, instance, U, w, base, mb, reach_items) -> bool:
    mu = instance.mask(U)
    flip_cons = instance.cons(w.flipped())
    seen = set()
    for e, rep in reach_items:
        a = mb & e
        if a in seen:
            continue
        seen.add(a)
        flipped = a & flip_cons
        if not (flipped & mu):
            continue
        rest = base + rep
        hi = instance.score(score, U, a, rest)
        lo = instance.score(score, U, flipped, rest + (w.flipped(),))
        if hi - lo < 1:
            return False
    return True


def check_score_boundedness(score: Score, instance: FiniteInstance, cap: int) -> VerificationReport:
    spaces = instance.version_spaces(cap)
    checked = 0
    for m, rep in spaces.items():
        for U in _subsets(instance.labeled, score.spec.k):
            if not (m & instance.mask(U)):
                continue
            checked += 1
            v = instance.score(score, U, m, rep)
            if not (0 <= v <= score.spec.c):
                return VerificationReport("boundedness", instance.name, "violated", (U, rep), {"rest": cap}, checked)
    return VerificationReport("boundedness", instance.name, "verified", None, {"rest": cap}, checked)


# -- potentials ----------------------------------------------------------------


def brute_potential(S, score: Score, k: int | None = None) -> int:
    S = list(dict.fromkeys(as_examples(S)))
    k = score.spec.k if k is None else k
    total = 0
    for U in itertools.combinations(range(len(S)), k):
        chosen = set(U)
        total += score.eval([S[i] for i in U], [S[i] for i in range(len(S)) if i not in chosen])
    return total


def brute_deltas(S, x, score: Score) -> tuple[int, int]:
    S = list(dict.fromkeys(as_examples(S)))
    base = brute_potential(S, score)
    return tuple(base - brute_potential(S + [LabeledExample(x, b)], score) for b in (1, -1))


# -- certificates ----------------------------------------------------------------


def certificate_witness(S, hypothesis, pin) -> tuple | None:
    """(U, (x, y)) with |U| = 3 and (x, y) in U certifying x under the pinned
    halfspace certificate, or None. Matching sigma on U - {x} must force
    the label of x on V(S - {(x, y)})."""
    S = as_examples(S)
    for U in itertools.combinations(S, 3):
        for z in U:
            pair = [u.point for u in U if u is not z]
            value = sigma_halfspace(hypothesis, pair)
            rest = [s for s in S if s is not z]
            pos = [s.point for s in rest if s.label > 0]
            neg = [s.point for s in rest if s.label < 0]
            cons = _halfspace_constraints(pos, neg, pin)
            cons.append(_sigma_constraint(pair, value))
            x = z.point
            if z.label > 0:
                cons.append(geometry.lt((x[0], x[1], -1)))
            else:
                cons.append(geometry.ge((x[0], x[1], -1)))
            if not geometry.feasible(cons):
                return U, z
    return None


def check_certificate_dimension(trials: int = 200, seed: int = 0, size: int = 7, box: int = 20) -> VerificationReport:
    """Random pinned hypotheses and random size-7 labeled sets: a certifying
    (U, x) must always exist."""
    rng = random.Random(seed)
    checked = 0
    while checked < trials:
        w = (rng.randint(-box, box), rng.randint(-box, box))
        if w == (0, 0):
            continue
        b = Fraction(rng.randint(-box * box, box * box), rng.randint(1, 4))
        label = lambda p: 1 if w[0] * p[0] + w[1] * p[1] - b >= 0 else -1
        pts = set()
        while len(pts) < size + 2:
            pts.add((rng.randint(-box, box), rng.randint(-box, box)))
        pts = list(pts)
        sp = next((p for p in pts if label(p) > 0), None)
        sm = next((p for p in pts if label(p) < 0), None)
        if sp is None or sm is None:
            continue
        rest_pts = [p for p in pts if p not in (sp, sm)][:size]
        S = [LabeledExample(p, label(p)) for p in rest_pts]
        checked += 1
        if certificate_witness(S, (w, b), (sp, sm)) is None:
            return VerificationReport("certificate dimension", "random pinned 7-sets", "violated",
                                      (w, b, (sp, sm), S), {"trials": trials}, checked, seed=seed)
    return VerificationReport("certificate dimension", "random pinned 7-sets", "verified", None,
                              {"trials": trials}, checked, seed=seed)


# -- attackability -----------------------------------------------------------------


def attackable_members(H, make_learner: Callable, domain: Sequence, truth: Callable, cap: int) -> list:
    """Members (x, y) of H for which some truthful extension A of H - {(x, y)}
    with |A| <= cap makes the learner abstain on x."""
    H = list(dict.fromkeys(as_examples(H)))
    truthful = [LabeledExample(p, truth(p)) for p in domain]
    out = []
    for z in H:
        base = [u for u in H if u != z]
        pool = [u for u in truthful if u not in base and u.point != z.point]
        if _abstains_somewhere(base, pool, z.point, make_learner, cap):
            out.append(z)
    return out


def _abstains_somewhere(base, pool, x, make_learner, cap) -> bool:
    room = cap - len(base)
    for size in range(0, max(room, -1) + 1):
        for extra in itertools.combinations(pool, size):
            learner = make_learner()
            learner.fit(base + list(extra))
            if learner.decide(x) == ABSTAIN:
                return True
    return False


def count_attackable(H, make_learner: Callable, domain: Sequence, truth: Callable, cap: int) -> int:
    return len(attackable_members(H, make_learner, domain, truth, cap))


# -- bounds --------------------------------------------------------------------


def assert_bounds(transcript: Transcript, spec: ScoreSpec, alpha) -> VerificationReport:
    """Deterministic mistake bound for one episode."""
    t = tally(transcript)
    bound = mistake_bound(spec, alpha, transcript.horizon)
    ok = t.err_mis <= bound
    return VerificationReport("mistake bound", f"T={transcript.horizon}", "verified" if ok else "violated",
                              None if ok else (t.err_mis, bound), {"alpha": str(alpha)}, 1, seed=transcript.seed)


def mean_ci(values) -> tuple[float, float, float]:
    """Mean with a normal-approximation 95% interval."""
    a = np.asarray(values, dtype=float)
    mean = float(a.mean()) if len(a) else 0.0
    if len(a) < 2:
        return mean, mean, mean
    half = 1.96 * float(a.std(ddof=1)) / math.sqrt(len(a))
    return mean, mean - half, mean + half


def check_abstention(err_abs: Sequence[int], spec: ScoreSpec, alpha, T: int) -> VerificationReport:
    mean, lo, hi = mean_ci(err_abs)
    bound = abstention_bound(spec, alpha, T)
    ok = hi < bound
    return VerificationReport("abstention bound", f"T={T}", "verified" if ok else "violated",
                              None if ok else (mean, hi, bound),
                              {"alpha": str(alpha), "trials": len(err_abs)}, len(err_abs))


def check_attackable(count: int, spec: ScoreSpec, alpha, cap: int, name: str = "") -> VerificationReport:
    bound = attackable_bound(spec, alpha, cap)
    ok = count <= bound
    return VerificationReport("attackability", name, "verified" if ok else "violated",
                              None if ok else (count, bound), {"extension": cap, "alpha": str(alpha)}, 1)


# -- suite files ---------------------------------------------------------------------


def build_instance(spec: dict) -> FiniteInstance:
    """Instance from a suite entry: ``rect_grid``, ``tree`` or ``halfspace``."""
    from .classes import ExplicitTree, RectangleClass, TreeOrderClass, rectangle_patterns

    kind = spec.get("kind")
    name = spec.get("name", "")
    if kind == "rect_grid":
        d = int(spec.get("d", 2))
        levels = [Fraction(v) for v in spec["levels"]]
        pts = list(itertools.product(levels, repeat=d))
        return FiniteInstance(RectangleClass(d), pts, rectangle_patterns(d, pts), name=name or f"rect grid d={d}")
    if kind == "tree":
        tree = ExplicitTree.complete(int(spec["branching"]), int(spec["depth"]))
        return FiniteInstance(TreeOrderClass(tree), tree.nodes, name=name or "tree")
    if kind == "halfspace":
        pin = spec.get("pin")
        pin = None if pin is None else (tuple(pin[0]), tuple(pin[1]))
        pts = [tuple(p) for p in spec["points"]]
        return FiniteInstance(Halfspace2DClass(pin=pin), pts, name=name or "halfspace")
    raise ValueError(f"unknown instance kind {kind!r}")


def run_suite_entry(entry: dict) -> VerificationReport:
    from .scores import make_score

    check = entry["check"]
    if check == "certificate_dimension":
        return check_certificate_dimension(int(entry.get("trials", 200)), int(entry.get("seed", 0)))
    inst = build_instance(entry["instance"])
    score = make_score(entry["score"], inst.cls)
    cap = int(entry.get("cap", 3))
    if check == "monotonicity":
        return check_monotonicity(score, inst, cap)
    if check == "robustness":
        return check_robustness(score, inst, entry.get("m"), cap, entry.get("budget"))
    if check == "boundedness":
        return check_score_boundedness(score, inst, cap)
    raise ValueError(f"unknown check {check!r}")


def run_suite(entries) -> list[VerificationReport]:
    return [run_suite_entry(e) for e in entries]
