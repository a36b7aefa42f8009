import csv
import math

import pytest

from injectlab import harness
from injectlab.harness import (
    CSV_HEADER, ConfigError, ExperimentConfig, ResultRow, bound_values, emit_report, fit_scaling, read_csv,
    rows_to_csv, run_one, run_sweep, trial_seed,
)
from injectlab.learner import combined_bound, mistake_bound
from injectlab.scores import ScoreSpec

RECT = {"score": "rect", "alpha": "auto"}
IID = {"kind": "iid", "domain": "rect", "d": 2}


def _rows(fn, horizons=(64, 128, 256, 512), trials=3):
    return [ResultRow(T, i, 0, "1", 0, int(round(fn(T))), int(round(fn(T))), 0)
            for T in horizons for i in range(trials)]


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(RECT, IID, [10], trials=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(RECT, IID, [20, 10])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"learner": RECT})


def test_single_row(tmp_path):
    out = tmp_path / "r.csv"
    rows = run_sweep(ExperimentConfig(RECT, IID, [32], 1, seed=1, out=str(out)))
    assert len(rows) == 1
    r = rows[0]
    assert r.combined == r.err_mis + r.err_abs
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 2


def test_same_config_byte_identical(tmp_path):
    paths = []
    for name in ("a.csv", "b.csv"):
        p = tmp_path / name
        run_sweep(ExperimentConfig(RECT, {"kind": "schedule", "domain": "rect", "d": 2, "schedule": "bernoulli:0.5",
                                           "pool": "boundary"}, [32, 64], 3, 5, str(p), timing=False))
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]
    rows = read_csv(tmp_path / "a.csv")
    assert [(r.T, r.trial) for r in rows] == [(32, 0), (32, 1), (32, 2), (64, 0), (64, 1), (64, 2)]
    assert all(r.runtime_ms == 0 for r in rows)


def test_parallel_sweep_keeps_order():
    cfg = dict(learner=RECT, adversary=IID, horizons=[16, 32], trials=2, seed=3, timing=False)
    serial = run_sweep(ExperimentConfig(**cfg))
    parallel = run_sweep(ExperimentConfig(**cfg, workers=2))
    assert serial == parallel


def test_trial_seed():
    assert trial_seed(0, 64, 1) == trial_seed(0, 64, 1)
    assert len({trial_seed(0, T, i) for T in (64, 128) for i in range(5)}) == 10


def test_fit_scaling_synthetic():
    assert fit_scaling(_rows(lambda T: T)).exponent == pytest.approx(1.0)
    sq = [ResultRow(T, 0, 0, "", 0, 0, 0, 0) for T in (64, 256, 1024, 4096)]
    for r in sq:
        r.combined = int(math.isqrt(r.T))
    assert fit_scaling(sq).exponent == pytest.approx(0.5)


def test_fit_scaling_excludes_zero_means():
    rows = _rows(lambda T: T) + [ResultRow(1024, 0, 0, "", 0, 0, 0, 0)]
    fit = fit_scaling(rows)
    assert fit.excluded == [1024] and fit.exponent == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_scaling(_rows(lambda T: T, horizons=(64, 128)))


def test_bound_values_recompute_exactly():
    spec = ScoreSpec(1, 5, 2)
    b = bound_values(spec, 7, 256)
    assert b["mistake"] == float(mistake_bound(spec, 7, 256)) == 2 * 256 / 7
    assert b["combined"] == combined_bound(spec, 7, 256)


def test_emit_report_means_only():
    text, csv_text = emit_report(_rows(lambda T: 3))
    assert "PASS" not in text and "FAIL" not in text
    assert csv_text.splitlines()[0] == ",".join(CSV_HEADER)


def test_emit_report_flags_mistake_violation():
    rows = [ResultRow(64, 0, 0, "1", 50, 0, 50, 0)]
    text, _ = emit_report(rows, {64: {"mistake": 10.0, "abstention": 100.0, "combined": 110.0}})
    assert "mistake_bound=10.00 FAIL" in text and text.endswith("overall: FAIL")


def test_emit_report_hard_tree_baselines():
    cfg = ExperimentConfig({"score": "abstain"}, {"kind": "hard_tree"}, [400], 20, 0, timing=False)
    rows = run_sweep(cfg)
    text, _ = emit_report(rows)
    mean = sum(r.combined for r in rows) / len(rows)
    assert mean >= 0.1 * math.sqrt(400)
    assert "combined=20.00" in text


def test_build_errors():
    with pytest.raises(ConfigError):
        harness.build_adversary({"kind": "nope"}, 10)
    with pytest.raises(ConfigError):
        harness.build_adversary({"kind": "iid", "domain": "sphere"}, 10)
    with pytest.raises(ConfigError):
        run_one({"score": "transcript-halfspace"}, {"kind": "iid", "domain": "halfspace"}, 8, 0, 0)
    with pytest.raises(ConfigError):
        run_one({"score": "rect", "bootstrap": True}, IID, 8, 0, 0)
    with pytest.raises(ConfigError):
        run_one({"score": "seg"}, IID, 8, 0, 0)


def test_bootstrap_episode_records_switch():
    res = run_one({"score": "cert-halfspace", "bootstrap": True}, {"kind": "iid", "domain": "halfspace"}, 64, 0, 4)
    assert res.switch_round is not None and res.inner_horizon == 64 - res.switch_round
    assert res.inner_err_mis <= res.row.err_mis


def test_sqrt_alpha():
    res = run_one({"score": "seg", "alpha": "sqrt"}, {"kind": "iid", "domain": "tree", "branching": 2, "depth": 3},
                  100, 0, 0)
    assert res.alpha == 10
