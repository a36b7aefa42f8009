"""The acceptance battery: exact checks, exhaustive finite verification and
Monte-Carlo consistency with the closed-form bounds.

Every criterion returns a :class:`CriterionResult`. Episodes produced by the
Monte-Carlo criteria are collected so the deterministic mistake bound can be
checked on each of them afterwards.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import harness
from .classes import ExplicitTree, Halfspace2DClass, RectangleClass, TreeOrderClass, rectangle_patterns
from .core import LabeledExample
from .learner import (
    PotentialLearner, abstention_bound, attackable_bound, auto_alpha, combined_bound, mistake_bound,
)
from .oracle import (
    FiniteInstance, brute_deltas, brute_potential, check_abstention, check_attackable,
    check_certificate_dimension, check_monotonicity, check_robustness, count_attackable, mean_ci,
)
from .scores import (
    CertificateScore, FiniteCertificate, HalfspaceCertificateScore, RectScore, ScoreSpec, SegmentScore,
    TranscriptScore,
)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    runtime: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name}: {self.detail} ({self.runtime:.1f}s)"


@dataclass
class Battery:
    """Shared state across criteria: every episode run so far."""

    seed: int = 0
    scale: float = 1.0
    episodes: list = field(default_factory=list)
    log: Callable[[str], None] | None = None

    def trials(self, n: int) -> int:
        return max(2, int(round(n * self.scale)))

    def sweep(self, learner: dict, adversary: dict, horizons, trials: int) -> list:
        cfg = harness.ExperimentConfig(learner, adversary, list(horizons), trials, self.seed, timing=False)
        results = harness.run_sweep_detailed(cfg)
        self.episodes.extend(results)
        return results


def _timed(number: int, name: str, fn, battery: Battery) -> CriterionResult:
    start = time.perf_counter()
    passed, detail = fn(battery)
    res = CriterionResult(number, name, passed, detail, time.perf_counter() - start)
    if battery.log:
        battery.log(res.line())
    return res


# -- 1: deterministic mistake bound ------------------------------------------------


def mistake_bound_holds(res) -> tuple[bool, str]:
    """Both readings for the bootstrap learner: the decomposed one (at most
    two single-label mistakes plus the inner bound on the residual horizon)
    and the plain formula at the inner learner's alpha."""
    row = res.row
    if res.spec is None:
        return True, "baseline"
    alpha = res.alpha
    if alpha is None:
        # bootstrap learner that never saw both labels
        return row.err_mis <= 2, "single-label"
    plain = row.err_mis <= mistake_bound(res.spec, alpha, row.T)
    if res.inner_horizon is None:
        return plain, "plain"
    outer = row.err_mis - res.inner_err_mis
    decomposed = outer <= 2 and res.inner_err_mis <= mistake_bound(res.spec, alpha, res.inner_horizon)
    return plain and decomposed, "decomposed+plain"


def criterion_1(b: Battery):
    checked = 0
    bad = []
    for res in b.episodes:
        if res.spec is None:
            continue
        ok, _ = mistake_bound_holds(res)
        checked += 1
        if not ok:
            bad.append((res.row.T, res.row.seed, res.row.err_mis))
    if not checked:
        return False, "no episodes to check (run criteria 6-9 first)"
    return not bad, f"{checked} episodes checked, {len(bad)} violations" + (f" e.g. {bad[:3]}" if bad else "")


# -- 2, 3, 4: finite verification ---------------------------------------------------


def rect_grid_instance() -> FiniteInstance:
    pts = [(Fraction(i, 2), Fraction(j, 2)) for i in range(1, 5) for j in range(1, 5)]
    return FiniteInstance(RectangleClass(2), pts, rectangle_patterns(2, pts), name="rect 4x4 grid")


def tree_instance(branching: int = 3, depth: int = 2) -> FiniteInstance:
    tree = ExplicitTree.complete(branching, depth)
    return FiniteInstance(TreeOrderClass(tree), tree.nodes, name=f"tree b={branching} depth={depth}")


def criterion_2(b: Battery):
    inst = rect_grid_instance()
    f = RectScore(inst.cls)
    mono = check_monotonicity(f, inst, 7)
    rob = check_robustness(f, inst, m=5, cap=7)
    return mono.ok and rob.ok, f"{mono.line()}; {rob.line()}"


def criterion_3(b: Battery):
    inst = tree_instance()
    f = SegmentScore(inst.cls)
    mono = check_monotonicity(f, inst, 6)
    rob = check_robustness(f, inst, m=3, cap=6)
    return mono.ok and rob.ok, f"{mono.line()}; {rob.line()}"


def criterion_4(b: Battery):
    rep = check_certificate_dimension(200, seed=b.seed)
    return rep.ok, rep.line()


# -- 5: incremental potential against brute force ------------------------------------


def _finite_rect_certificate():
    """A finite-class certificate score: exercises the generic engine path."""
    pts = [(i, j) for i in range(1, 4) for j in range(1, 4)]
    table = rectangle_patterns(2, pts)
    sigma = lambda j, points: sum((table.label_of(j, p) > 0) << i for i, p in enumerate(points))
    score = CertificateScore(table, FiniteCertificate(table, sigma, n=4, size=2), m=5)
    return table, score, pts, lambda rng: table.graph(rng.randrange(len(table.hypotheses)))


def history_cases():
    """(name, class, score, sampler, max size); sampler(rng) returns a
    realizable labeled pool to draw the history from."""
    def rect_pool(rng):
        v = (rng.randint(0, 6), rng.randint(0, 6))
        pts = [(rng.randint(0, 8), rng.randint(0, 8)) for _ in range(20)]
        return [LabeledExample(p, RectangleClass(2).label(v, p)) for p in pts]

    tree = ExplicitTree.complete(2, 3)
    seg_cls = TreeOrderClass(tree)

    def seg_pool(rng):
        node = rng.choice([None] + list(tree.nodes))
        return [LabeledExample(x, 1 if node is not None and tree.precedes(x, node) else -1)
                for x in rng.choices(tree.nodes, k=20)]

    def half_pool(rng, pin=None):
        while True:
            w = (rng.randint(-5, 5), rng.randint(-5, 5))
            if w != (0, 0):
                break
        bias = rng.randint(-20, 20)
        lab = lambda p: 1 if w[0] * p[0] + w[1] * p[1] - bias >= 0 else -1
        pts = [(rng.randint(-10, 10), rng.randint(-10, 10)) for _ in range(20)]
        pool = [LabeledExample(p, lab(p)) for p in pts]
        if pin is None:
            return pool, None
        sp = next((z.point for z in pool if z.label > 0), None)
        sm = next((z.point for z in pool if z.label < 0), None)
        if sp is None or sm is None:
            return pool, None
        return [z for z in pool if z.point not in (sp, sm)], (sp, sm)

    table, fin_score, _, fin_pool = _finite_rect_certificate()
    rect_cls = RectangleClass(2)
    return [
        ("rect", lambda rng: (rect_cls, RectScore(rect_cls), rect_pool(rng)), 12),
        ("seg", lambda rng: (seg_cls, SegmentScore(seg_cls), seg_pool(rng)), 12),
        ("cert-halfspace", _half_case(half_pool, HalfspaceCertificateScore, pinned=False), 12),
        ("cert-halfspace pinned", _half_case(half_pool, HalfspaceCertificateScore, pinned=True), 12),
        ("transcript s=1", _half_case(half_pool, lambda c: TranscriptScore(c, 1), pinned=False), 12),
        ("transcript s=2", _half_case(half_pool, lambda c: TranscriptScore(c, 2), pinned=True), 8),
        ("finite certificate", lambda rng: (table, fin_score, fin_pool(rng)), 9),
    ]


def _half_case(half_pool, make, pinned):
    def build(rng):
        pool, pin = half_pool(rng, pin=True if pinned else None)
        cls = Halfspace2DClass(pin=pin)
        return cls, make(cls), pool
    return build


def compare_history(cls, score, S, x) -> tuple[bool, str]:
    learner = PotentialLearner(cls, score, alpha=1).fit(S)
    brute = brute_potential(S, score)
    if learner.potential != brute:
        return False, f"potential {learner.potential} != {brute}"
    if learner.forced(x) is not None:
        return True, "forced"
    inc = learner.deltas(x)
    ref = brute_deltas(S, x, score)
    if tuple(inc) != tuple(ref):
        return False, f"deltas {inc} != {ref}"
    return True, "deltas"


def criterion_5(b: Battery, histories: int = 500):
    rng = random.Random(b.seed)
    cases = history_cases()
    n = max(len(cases), int(round(histories * b.scale)))
    compared = 0
    for i in range(n):
        name, build, cap = cases[i % len(cases)]
        cls, score, pool = build(rng)
        size = rng.randint(1, min(cap, len(pool)))
        S = list(dict.fromkeys(rng.sample(pool, size)))
        x = rng.choice(pool).point
        ok, what = compare_history(cls, score, S, x)
        if not ok:
            return False, f"{name} history {i}: {what} on S={S} x={x}"
        compared += what == "deltas"
    return True, f"{n} histories equal, {compared} with unforced deltas"


# -- 6-9: Monte-Carlo suites -------------------------------------------------------------


def criterion_6(b: Battery, T: int = 400):
    trials = b.trials(200)
    floor = 0.1 * math.sqrt(T)
    parts, ok = [], True
    for name, block in (("always-abstain", {"score": "abstain"}), ("always-minus", {"score": "minus"}),
                        ("seg auto-alpha", {"score": "seg", "alpha": "auto"})):
        res = b.sweep(block, {"kind": "hard_tree"}, [T], trials)
        mean, lo, hi = mean_ci([r.row.combined for r in res])
        ok &= mean >= floor
        parts.append(f"{name} {mean:.2f} [{lo:.2f}, {hi:.2f}]")
    return ok, f"need >= {floor:.1f}: " + "; ".join(parts)


def _scaling(b: Battery, learner, adversary, horizons, trials, spec, exponent_cap, label):
    res = b.sweep(learner, adversary, horizons, trials)
    rows = [r.row for r in res]
    ok = True
    parts = []
    for T in horizons:
        sel = [r for r in res if r.row.T == T]
        mean = sum(r.row.combined for r in sel) / len(sel)
        bound = combined_bound(spec, auto_alpha(spec, T), T)
        ok &= mean <= bound
        parts.append(f"T={T} {mean:.1f}<={bound:.0f}")
    fit = harness.fit_scaling(rows)
    ok &= fit.exponent <= exponent_cap
    return ok, f"{label}: " + ", ".join(parts) + f", exponent {fit.exponent:.3f} (cap {exponent_cap})"


def criterion_7(b: Battery):
    spec = ScoreSpec(k=1, m=5, c=2)
    horizons = [256, 512, 1024, 2048]
    trials = b.trials(100)
    learner = {"score": "rect", "alpha": "auto"}
    iid = _scaling(b, learner, {"kind": "iid", "domain": "rect", "d": 2}, horizons, trials, spec, 0.7, "iid")
    inj = _scaling(b, learner, {"kind": "schedule", "domain": "rect", "d": 2, "schedule": "bernoulli:0.5",
                                "pool": "boundary"}, horizons, trials, spec, 0.7, "50% injection")
    return iid[0] and inj[0], f"{iid[1]} | {inj[1]}"


def criterion_8(b: Battery):
    spec = ScoreSpec(k=2, m=7, c=3)
    learner = {"score": "cert-halfspace", "bootstrap": True, "alpha": "auto"}
    return _scaling(b, learner, {"kind": "iid", "domain": "halfspace"}, [128, 256, 512, 1024],
                    b.trials(50), spec, 0.85, "bootstrap halfspace")


def criterion_9(b: Battery, T: int = 1024):
    spec = ScoreSpec(k=1, m=3, c=1)
    res = b.sweep({"score": "seg", "alpha": "sqrt"},
                  {"kind": "iid", "domain": "tree", "branching": 3, "depth": 6}, [T], b.trials(500))
    alpha = res[0].alpha
    rep = check_abstention([r.row.err_abs for r in res], spec, alpha, T)
    mean, lo, hi = mean_ci([r.row.err_abs for r in res])
    bound = abstention_bound(spec, alpha, T)
    return rep.ok, f"mean err_abs {mean:.2f} CI [{lo:.2f}, {hi:.2f}] vs bound {bound:.1f}"


# -- 10: attackability ------------------------------------------------------------------------


@dataclass
class TinyInstance:
    name: str
    make_learner: Callable
    H: list
    domain: list
    truth: Callable
    cap: int
    spec: ScoreSpec
    alpha: Fraction


def tiny_instances() -> list[TinyInstance]:
    out = []
    r1 = RectangleClass(1)
    truth1 = lambda x: r1.label((4,), x)
    out.append(TinyInstance("rect d=1", lambda: PotentialLearner(r1, RectScore(r1), alpha=2),
                            [LabeledExample((x,), -1) for x in range(5, 10)], [(x,) for x in range(1, 10)],
                            truth1, 6, ScoreSpec(1, 3, 1), Fraction(2)))

    r2 = RectangleClass(2)
    truth2 = lambda x: r2.label((2, 3), x)
    grid = [(i, j) for i in range(1, 5) for j in range(1, 5)]
    out.append(TinyInstance("rect d=2 grid", lambda: PotentialLearner(r2, RectScore(r2), alpha=2),
                            [LabeledExample(p, truth2(p)) for p in grid if max(p) <= 3], grid,
                            truth2, 11, ScoreSpec(1, 5, 2), Fraction(2)))

    tree = ExplicitTree.complete(2, 2)
    seg = TreeOrderClass(tree)
    leaf = tree.nodes[-1]
    truth3 = lambda x: 1 if tree.precedes(x, leaf) else -1
    out.append(TinyInstance("seg binary tree", lambda: PotentialLearner(seg, SegmentScore(seg), alpha=1),
                            [LabeledExample(v, truth3(v)) for v in tree.nodes[:5]], list(tree.nodes),
                            truth3, 7, ScoreSpec(1, 3, 1), Fraction(1)))

    half = Halfspace2DClass(pin=((0, 10), (0, -10)))
    truth4 = lambda x: 1 if x[1] >= 0 else -1
    plane = [(i, j) for i in range(-2, 3) for j in (-2, -1, 1, 2)]
    out.append(TinyInstance("pinned halfspace",
                            lambda: PotentialLearner(half, HalfspaceCertificateScore(half), alpha=2),
                            [LabeledExample(p, truth4(p)) for p in plane[::3]], plane,
                            truth4, 8, ScoreSpec(2, 7, 3), Fraction(2)))
    return out


def criterion_10(b: Battery):
    parts, ok = [], True
    for inst in tiny_instances():
        count = count_attackable(inst.H, inst.make_learner, inst.domain, inst.truth, inst.cap)
        rep = check_attackable(count, inst.spec, inst.alpha, inst.cap, inst.name)
        ok &= rep.ok
        parts.append(f"{inst.name} {count}/{len(inst.H)} <= {attackable_bound(inst.spec, inst.alpha, inst.cap):.1f}")
    return ok, "; ".join(parts)


CRITERIA = {
    2: ("rectangle score is good", criterion_2),
    3: ("segment score is good", criterion_3),
    4: ("halfspace certificate dimension", criterion_4),
    5: ("incremental equals brute force", criterion_5),
    6: ("hard-tree lower bound", criterion_6),
    7: ("rectangle scaling", criterion_7),
    8: ("halfspace scaling", criterion_8),
    9: ("abstention bound", criterion_9),
    10: ("attackability bound", criterion_10),
    1: ("deterministic mistake bound", criterion_1),
}


def run_battery(only=None, seed: int = 0, scale: float = 1.0, log=print) -> list[CriterionResult]:
    """Run the selected criteria; criterion 1 always runs last."""
    battery = Battery(seed=seed, scale=scale, log=log)
    chosen = [n for n in CRITERIA if only is None or n in only]
    return [_timed(n, CRITERIA[n][0], CRITERIA[n][1], battery) for n in chosen]
