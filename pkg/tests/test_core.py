import numpy as np
import pytest

from injectlab.core import (
    ABSTAIN, ContradictionError, History, LabeledExample, ProtocolViolation, RoundRecord, Transcript,
    as_example, dedup_insert, episode_streams, round_charges, run_episode, tally,
)
from injectlab.adversaries import FiniteDistribution, IIDAdversary, ScheduleAdversary
from injectlab.classes import RectangleClass


def test_labels_must_be_signs():
    with pytest.raises(ValueError):
        LabeledExample((1,), 0)
    assert LabeledExample((1,), 1).flipped() == LabeledExample((1,), -1)


def test_as_example_accepts_pairs():
    assert as_example(((2, 3), -1)) == LabeledExample((2, 3), -1)


def test_history_dedups_and_rejects_contradictions():
    h = History([((1,), 1)])
    assert not h.add(((1,), 1))
    assert len(h) == 1
    with pytest.raises(ContradictionError):
        h.add(((1,), -1))


def test_dedup_insert_is_pure():
    h = History([((1,), 1)])
    h2 = dedup_insert(h, ((2,), -1))
    assert len(h) == 1 and len(h2) == 2
    assert dedup_insert(h2, ((2,), -1)) is h2


def test_round_charges():
    assert round_charges(RoundRecord(1, 0, (0,), ABSTAIN, 1)) == (0, 1)
    assert round_charges(RoundRecord(1, 1, (0,), ABSTAIN, 1)) == (0, 0)
    assert round_charges(RoundRecord(1, 1, (0,), -1, 1)) == (1, 0)
    assert round_charges(RoundRecord(1, 0, (0,), 1, 1)) == (0, 0)


def test_tally_combined():
    tr = Transcript(3, [RoundRecord(1, 0, 0, 0, 1), RoundRecord(2, 1, 0, -1, 1), RoundRecord(3, 1, 0, 0, 1)])
    t = tally(tr)
    assert (t.err_mis, t.err_abs, t.combined) == (1, 1, 2)


def test_streams_are_independent_and_reproducible():
    a = [g.integers(1 << 30) for g in episode_streams(5)]
    b = [g.integers(1 << 30) for g in episode_streams(5)]
    assert a == b and len(set(a)) == 3


class _Const:
    def __init__(self, value):
        self.value = value

    def reset(self, horizon, rng):
        pass

    def predict(self, x):
        return self.value

    def update(self, x, y):
        pass


def _adversary():
    return IIDAdversary(FiniteDistribution([(0.2,), (0.9,)]), lambda x: 1 if x[0] <= 0.5 else -1)


def test_episode_length_and_labels_from_target():
    tr = run_episode(_adversary(), _Const(ABSTAIN), RectangleClass(1), 25, seed=3)
    assert len(tr.rounds) == 25
    assert all(r.y == (1 if r.x[0] <= 0.5 else -1) for r in tr.rounds)
    assert tally(tr).err_abs == 25


def test_zero_horizon():
    tr = run_episode(_adversary(), _Const(1), None, 0)
    assert tr.rounds == [] and tally(tr).combined == 0


def test_injected_abstentions_are_free():
    adv = ScheduleAdversary(FiniteDistribution([(0.2,)]), lambda x: 1, "always", pool=[(0.3,)] * 10)
    tr = run_episode(adv, _Const(ABSTAIN), RectangleClass(1), 10)
    assert all(r.q == 1 for r in tr.rounds)
    assert tally(tr).err_abs == 0


def test_bad_prediction_is_a_violation():
    with pytest.raises(ProtocolViolation):
        run_episode(_adversary(), _Const(2), RectangleClass(1), 3)


def test_bad_hidden_bit_is_a_violation():
    class Bad(IIDAdversary):
        def choose(self, t, history):
            return 2, (0.1,)

    with pytest.raises(ProtocolViolation):
        run_episode(Bad(FiniteDistribution([(0.1,)]), lambda x: 1), _Const(1), RectangleClass(1), 2)


def test_inconsistent_target_is_a_violation():
    flip = {"n": 0}

    def target(x):
        flip["n"] += 1
        return 1 if flip["n"] % 2 else -1

    with pytest.raises(ProtocolViolation):
        run_episode(IIDAdversary(FiniteDistribution([(0.1,)]), target), _Const(1), RectangleClass(1), 4)


def test_same_seed_same_transcript():
    a = run_episode(_adversary(), _Const(-1), RectangleClass(1), 30, seed=11)
    b = run_episode(_adversary(), _Const(-1), RectangleClass(1), 30, seed=11)
    assert [r.x for r in a.rounds] == [r.x for r in b.rounds]
