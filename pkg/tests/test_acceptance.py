"""Acceptance criteria 1-10 at their stated tolerances.

One [PASS]/[FAIL] line per criterion is printed in the terminal summary.
Criteria 6-9 are Monte-Carlo runs marked slow. Criterion 1 runs last and
checks every episode the battery collected; when the slow criteria are
deselected it first tops the battery up with a small spread of episodes.
"""

import pytest

from injectlab.acceptance import CRITERIA, Battery, _timed

LINES: list[str] = []


@pytest.fixture(scope="module")
def battery():
    return Battery(seed=0)


def _check(number, battery):
    name, fn = CRITERIA[number]
    res = _timed(number, name, fn, battery)
    LINES.append(res.line())
    print(res.line())
    assert res.passed, res.line()


@pytest.mark.parametrize("number", [2, 3, 4, 5, 10])
def test_deterministic_criterion(number, battery):
    _check(number, battery)


@pytest.mark.slow
@pytest.mark.parametrize("number", [6, 7, 8, 9])
def test_monte_carlo_criterion(number, battery):
    _check(number, battery)


def test_criterion_1_mistake_bound(battery):
    if not any(res.spec is not None for res in battery.episodes):
        battery.sweep({"score": "rect", "alpha": "auto"}, {"kind": "iid", "domain": "rect", "d": 2}, [64, 256], 10)
        battery.sweep({"score": "rect", "alpha": 1}, {"kind": "schedule", "domain": "rect", "d": 2,
                                                       "schedule": "bernoulli:0.5", "pool": "boundary"}, [256], 10)
        battery.sweep({"score": "seg", "alpha": "sqrt"}, {"kind": "iid", "domain": "tree", "branching": 3, "depth": 4},
                      [256], 10)
        battery.sweep({"score": "cert-halfspace", "bootstrap": True}, {"kind": "iid", "domain": "halfspace"}, [64], 5)
    _check(1, battery)
