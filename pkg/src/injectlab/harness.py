"""Experiment configuration, sweeps, CSV output and scaling fits."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import adversaries as adv
from .classes import ExplicitTree, Halfspace2DClass, HardTreePathClass, PrefixTree, RectangleClass, TreeOrderClass
from .core import ProtocolViolation, Transcript, run_episode, tally
from .learner import (
    AlwaysAbstain, AlwaysMinus, BootstrapHalfspaceLearner, OracleLearner, PotentialLearner,
    abstention_bound, combined_bound, mistake_bound,
)
from .oracle import mean_ci
from .scores import ScoreSpec, make_score

CSV_HEADER = ["T", "trial", "seed", "alpha", "err_mis", "err_abs", "combined", "runtime_ms"]


class ConfigError(ValueError):
    """An experiment configuration could not be interpreted."""


@dataclass
class ExperimentConfig:
    learner: dict
    adversary: dict
    horizons: list[int]
    trials: int = 1
    seed: int = 0
    out: str | None = None
    timing: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.horizons or any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ConfigError("horizons must be nonempty and strictly increasing")
        if any(T < 0 for T in self.horizons):
            raise ConfigError("horizons must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class ResultRow:
    T: int
    trial: int
    seed: int
    alpha: str
    err_mis: int
    err_abs: int
    combined: int
    runtime_ms: int

    def as_list(self) -> list:
        return [getattr(self, k) for k in CSV_HEADER]


def trial_seed(base: int, T: int, trial: int) -> int:
    return int(np.random.SeedSequence([base, T, trial]).generate_state(1)[0])


# -- building episodes from config blocks ----------------------------------------


def _random_threshold(d, rng, low=0.3, high=0.8):
    return tuple(float(v) for v in rng.uniform(low, high, d))


class _RandomTarget:
    """Target drawn at setup from the adversary stream."""

    def __init__(self, make: Callable):
        self.make = make
        self.fn = None

    def draw(self, rng):
        self.fn, self.params = self.make(rng)

    def __call__(self, x):
        return self.fn(x)


class _Configured:
    """Wraps an adversary so a random target and pool are drawn at setup."""

    def __init__(self, inner, target: _RandomTarget | None):
        self.inner = inner
        self._random_target = target

    @property
    def distribution(self):
        return self.inner.distribution

    def setup(self, horizon, rng):
        if self._random_target is not None:
            self._random_target.draw(rng)
        self.inner.setup(horizon, rng)

    def target(self, x):
        return self.inner.target(x)

    def choose(self, t, history):
        return self.inner.choose(t, history)


def _domain(block: dict, T: int):
    kind = block.get("domain", "rect")
    if kind == "rect":
        d = int(block.get("d", 2))
        cls = RectangleClass(d)
        dist = adv.UniformBox(d, 0.0, 1.0)
        thr = block.get("threshold", "random")

        def make(rng):
            v = _random_threshold(d, rng) if thr == "random" else tuple(thr)
            return adv.rectangle_target(v), v
        return cls, dist, make
    if kind == "halfspace":
        R = int(block.get("radius", 1000))
        cls = Halfspace2DClass()
        dist = adv.IntegerBox(2, -R, R)
        fixed = block.get("halfspace")

        def make(rng):
            if fixed is not None:
                w, b = tuple(fixed[0]), fixed[1]
            else:
                while True:
                    w = tuple(int(v) for v in rng.integers(-20, 21, 2))
                    if w != (0, 0):
                        break
                p = rng.integers(-R // 2, R // 2 + 1, 2)
                b = int(w[0] * p[0] + w[1] * p[1])
            return adv.halfspace_target(w, b), (w, b)
        return cls, dist, make
    if kind == "tree":
        tree = ExplicitTree.complete(int(block.get("branching", 3)), int(block.get("depth", 5)))
        cls = TreeOrderClass(tree, block.get("includes_empty_segment", True))
        dist = adv.FiniteDistribution(tree.nodes)
        leaves = [v for v in tree.nodes if not tree.children[v]]

        def make(rng):
            node = leaves[int(rng.integers(len(leaves)))]
            return adv.segment_target(tree, node), node
        return cls, dist, make
    raise ConfigError(f"unknown domain {kind!r}")


def _boundary_pool(block, target: _RandomTarget, dist):
    """Injects points close to the target's decision boundary."""
    kind = block.get("domain", "rect")
    eps = float(block.get("eps", 0.02))

    def draw_rect(t, history, rng):
        v = target.params
        d = len(v)
        x = [float(rng.uniform(0, v[j])) for j in range(d)]
        i = int(rng.integers(d))
        x[i] = float(min(1.0, max(0.0, v[i] + rng.uniform(-eps, eps))))
        return tuple(x)

    def draw_halfspace(t, history, rng):
        w, b = target.params
        R = dist.high
        for _ in range(100):
            x = tuple(int(v) for v in rng.integers(-R, R + 1, 2))
            if abs(w[0] * x[0] + w[1] * x[1] - b) <= eps * R * (abs(w[0]) + abs(w[1])):
                return x
        return None

    if kind == "rect":
        return draw_rect
    if kind == "halfspace":
        return draw_halfspace
    raise ConfigError("boundary pool supports rect and halfspace domains")


def build_adversary(block: dict, T: int):
    """(adversary, engine concept class, learner concept class)."""
    kind = block.get("kind", "iid")
    if kind == "hard_tree":
        B = math.isqrt(max(T, 4))
        tree = PrefixTree(B, max_depth=B)
        return adv.HardTreeAdversary(), HardTreePathClass(tree), TreeOrderClass(tree, True)
    cls, dist, make = _domain(block, T)
    target = _RandomTarget(make)
    if kind == "iid":
        inner = adv.IIDAdversary(dist, target)
    elif kind == "schedule":
        pool = block.get("pool", "history")
        if pool == "boundary":
            pool = _boundary_pool(block, target, dist)
        elif pool == "random":
            pool = lambda t, h, rng: dist.sample(rng)
        inner = adv.ScheduleAdversary(dist, target, block.get("schedule", "never"), pool)
    elif kind == "targeted":
        victim = block.get("victim")
        if victim is None:
            raise ConfigError("targeted adversary needs a victim")
        inner = adv.TargetedAdversary(dist, target, victim, int(block.get("budget", 50)),
                                      block.get("anchor"), block.get("schedule", "alternate"))
    else:
        raise ConfigError(f"unknown adversary kind {kind!r}")
    return _Configured(inner, target), cls, cls


def _alpha(setting, T):
    if setting == "sqrt":
        return Fraction(math.sqrt(max(T, 1))).limit_denominator(1000)
    return setting


def build_learner(block: dict, cls, T: int, adversary=None):
    score = block.get("score", "rect")
    if score == "abstain":
        return AlwaysAbstain(), None
    if score == "minus":
        return AlwaysMinus(), None
    if score == "oracle":
        return OracleLearner(adversary), None
    alpha = _alpha(block.get("alpha", "auto"), T)
    if block.get("bootstrap", False):
        if score != "cert-halfspace":
            raise ConfigError("bootstrap applies to the halfspace certificate score")
        return BootstrapHalfspaceLearner(alpha), ScoreSpec(k=2, m=7, c=3)
    if score == "transcript-halfspace" and not block.get("expensive", False):
        raise ConfigError("the transcript score needs the expensive flag")
    try:
        sc = make_score(score, cls)
    except (ValueError, TypeError, AttributeError) as exc:
        raise ConfigError(f"score {score!r} does not fit the class: {exc}") from exc
    return PotentialLearner(cls, sc, alpha, expensive=block.get("expensive", False)), sc.spec


@dataclass
class EpisodeResult:
    row: ResultRow
    spec: ScoreSpec | None
    alpha: Fraction | None
    transcript: Transcript
    switch_round: int | None = None
    inner_horizon: int | None = None
    inner_err_mis: int | None = None


def run_one(learner_block: dict, adversary_block: dict, T: int, trial: int, seed: int,
            timing: bool = True) -> EpisodeResult:
    adversary, engine_cls, learner_cls = build_adversary(adversary_block, T)
    learner, spec = build_learner(learner_block, learner_cls, T, adversary)
    start = time.perf_counter()
    transcript = run_episode(adversary, learner, engine_cls, T, seed)
    ms = int(round((time.perf_counter() - start) * 1000)) if timing else 0
    t = tally(transcript)
    alpha = getattr(learner, "alpha", None)
    res = EpisodeResult(ResultRow(T, trial, seed, "" if alpha is None else str(alpha),
                                  t.err_mis, t.err_abs, t.combined, ms), spec, alpha, transcript)
    if isinstance(learner, BootstrapHalfspaceLearner) and learner.switch_round is not None:
        res.switch_round = learner.switch_round
        res.inner_horizon = T - learner.switch_round
        res.inner_err_mis = sum(1 for r in transcript.rounds[learner.switch_round:]
                                if r.prediction != 0 and r.prediction != r.y)
    return res


def _task(args):
    lb, ab, T, trial, seed, timing = args
    try:
        return run_one(lb, ab, T, trial, seed, timing)
    except ProtocolViolation as exc:
        raise ProtocolViolation(f"seed {seed}: {exc}") from exc


def run_sweep_detailed(config: ExperimentConfig, sink: Callable[[EpisodeResult], None] | None = None
                       ) -> list[EpisodeResult]:
    tasks = [(config.learner, config.adversary, T, trial, trial_seed(config.seed, T, trial), config.timing)
             for T in config.horizons for trial in range(config.trials)]
    results: list[EpisodeResult] = []
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            for res in pool.map(_task, tasks):
                results.append(res)
                if sink:
                    sink(res)
    else:
        for task in tasks:
            res = _task(task)
            results.append(res)
            if sink:
                sink(res)
    return results


def run_sweep(config: ExperimentConfig) -> list[ResultRow]:
    """One row per (T, trial), streamed to ``config.out`` as produced."""
    return [r.row for r in run_sweep_streamed(config)]


def run_sweep_streamed(config: ExperimentConfig) -> list[EpisodeResult]:
    """:func:`run_sweep_detailed` writing each row to ``config.out`` as it arrives."""
    if not config.out:
        return run_sweep_detailed(config)
    with open(config.out, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)

        def sink(res):
            writer.writerow(res.row.as_list())
            handle.flush()

        return run_sweep_detailed(config, sink)


def rows_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [ResultRow(int(r["T"]), int(r["trial"]), int(r["seed"]), r["alpha"], int(r["err_mis"]),
                          int(r["err_abs"]), int(r["combined"]), int(r["runtime_ms"])) for r in reader]


# -- analysis ---------------------------------------------------------------------


def means_by_T(rows: Sequence[ResultRow], field_name: str = "combined") -> dict[int, list[float]]:
    out: dict[int, list[float]] = {}
    for r in rows:
        out.setdefault(r.T, []).append(getattr(r, field_name))
    return out


@dataclass
class ScalingFit:
    exponent: float
    horizons: list[int]
    excluded: list[int] = field(default_factory=list)


def fit_scaling(rows: Sequence[ResultRow]) -> ScalingFit:
    """Least-squares slope of ln(mean combined error) against ln T."""
    groups = means_by_T(rows)
    Ts, ys, excluded = [], [], []
    for T in sorted(groups):
        mean = float(np.mean(groups[T]))
        if mean <= 0:
            excluded.append(T)
            continue
        Ts.append(T)
        ys.append(mean)
    if len(Ts) < 3:
        raise ValueError("scaling fit needs at least 3 horizons with positive mean error")
    slope = np.polyfit(np.log(Ts), np.log(ys), 1)[0]
    return ScalingFit(float(slope), Ts, excluded)


def bound_values(spec: ScoreSpec, alpha, T: int) -> dict:
    return {
        "mistake": float(mistake_bound(spec, alpha, T)),
        "abstention": abstention_bound(spec, alpha, T),
        "combined": combined_bound(spec, alpha, T),
    }


def emit_report(rows: Sequence[ResultRow], bounds: dict | None = None) -> tuple[str, str]:
    """Summary text and CSV. ``bounds`` maps T to the dict of
    :func:`bound_values`; missing bounds give means only."""
    if not rows:
        raise ValueError("no rows")
    bounds = bounds or {}
    lines = []
    failed = False
    for T in sorted({r.T for r in rows}):
        sel = [r for r in rows if r.T == T]
        parts = [f"T={T} n={len(sel)}"]
        for name in ("err_mis", "err_abs", "combined"):
            m, lo, hi = mean_ci([getattr(r, name) for r in sel])
            parts.append(f"{name}={m:.2f} [{lo:.2f}, {hi:.2f}]")
        b = bounds.get(T)
        if b:
            worst = max(r.err_mis for r in sel)
            mis_ok = worst <= b["mistake"]
            comb_ok = float(np.mean([r.combined for r in sel])) <= b["combined"]
            failed |= not (mis_ok and comb_ok)
            parts.append(f"mistake_bound={b['mistake']:.2f} {'PASS' if mis_ok else 'FAIL'}")
            parts.append(f"combined_bound={b['combined']:.2f} {'PASS' if comb_ok else 'FAIL'}")
        lines.append("  ".join(parts))
    try:
        fit = fit_scaling(rows)
        lines.append(f"fitted exponent {fit.exponent:.3f} over T={fit.horizons}"
                     + (f" (excluded {fit.excluded})" if fit.excluded else ""))
    except ValueError:
        pass
    if bounds:
        lines.append("overall: " + ("FAIL" if failed else "PASS"))
    return "\n".join(lines), rows_to_csv(rows)
