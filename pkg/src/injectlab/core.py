"""Protocol engine for sequential prediction under clean-label injection.

One episode is a game between an adversary, which decides on every round
whether the point is a fresh draw from its declared distribution or an
injected point of its choosing, and a learner, which sees only the points
and their true labels and may abstain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Iterator, Protocol

import numpy as np

ABSTAIN = 0
"""Prediction value meaning the learner declined to predict."""


class ProtocolViolation(RuntimeError):
    """An adversary or learner broke the rules of the injection game."""


class ContradictionError(ValueError):
    """A point was inserted with both labels."""


@dataclass(frozen=True)
class LabeledExample:
    point: Hashable
    label: int

    def __post_init__(self):
        if self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label!r}")

    def flipped(self) -> "LabeledExample":
        return LabeledExample(self.point, -self.label)

    def __iter__(self):
        yield self.point
        yield self.label


def as_example(item) -> LabeledExample:
    if isinstance(item, LabeledExample):
        return item
    point, label = item
    return LabeledExample(point, int(label))


def as_examples(items: Iterable) -> list[LabeledExample]:
    return [as_example(z) for z in items]


class History:
    """Deduplicated set of labeled examples; insertion order kept for reporting."""

    def __init__(self, examples: Iterable = ()):
        self._labels: dict[Hashable, int] = {}
        self._order: list[LabeledExample] = []
        for z in examples:
            self.add(z)

    def add(self, example) -> bool:
        """Insert in place. Returns False when the example was already present."""
        z = as_example(example)
        old = self._labels.get(z.point)
        if old is not None:
            if old != z.label:
                raise ContradictionError(f"point {z.point!r} already labeled {old:+d}")
            return False
        self._labels[z.point] = z.label
        self._order.append(z)
        return True

    def label_of(self, point) -> int | None:
        return self._labels.get(point)

    def copy(self) -> "History":
        h = History()
        h._labels = dict(self._labels)
        h._order = list(self._order)
        return h

    def __contains__(self, example) -> bool:
        z = as_example(example)
        return self._labels.get(z.point) == z.label

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self) -> Iterator[LabeledExample]:
        return iter(self._order)

    def __repr__(self) -> str:
        return f"History({self._order!r})"


def dedup_insert(history: History, example) -> History:
    """Return ``history`` with ``example`` added; the input is not modified."""
    z = as_example(example)
    if z in history:
        return history
    out = history.copy()
    out.add(z)
    return out


@dataclass(frozen=True)
class RoundRecord:
    t: int
    q: int
    x: Any
    prediction: int
    y: int


@dataclass
class ErrorTally:
    err_mis: int = 0
    err_abs: int = 0

    @property
    def combined(self) -> int:
        return self.err_mis + self.err_abs


@dataclass
class Transcript:
    horizon: int
    rounds: list[RoundRecord] = field(default_factory=list)
    seed: int | None = None


def round_charges(r: RoundRecord) -> tuple[int, int]:
    """(mistake, charged abstention) indicators for a single round."""
    mis = int(r.prediction != ABSTAIN and r.prediction != r.y)
    abs_ = int(r.prediction == ABSTAIN and r.q == 0)
    return mis, abs_


def tally(transcript: Transcript) -> ErrorTally:
    out = ErrorTally()
    for r in transcript.rounds:
        mis, abs_ = round_charges(r)
        out.err_mis += mis
        out.err_abs += abs_
    return out


class Distribution(Protocol):
    def sample(self, rng: np.random.Generator) -> Any: ...


class Adversary(Protocol):
    """Chooses the distribution and target at setup, then the hidden bits."""

    distribution: Distribution

    def setup(self, horizon: int, rng: np.random.Generator) -> None: ...

    def target(self, x) -> int: ...

    def choose(self, t: int, history: History) -> tuple[int, Any]: ...


class Learner(Protocol):
    def reset(self, horizon: int, rng: np.random.Generator) -> None: ...

    def predict(self, x) -> int: ...

    def update(self, x, y: int) -> None: ...


def episode_streams(seed) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (engine, adversary, learner) generators for one episode."""
    ss = np.random.SeedSequence(seed)
    return tuple(np.random.default_rng(s) for s in ss.spawn(3))


def run_episode(adversary, learner, concept_class, horizon: int, seed=0) -> Transcript:
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    engine_rng, adv_rng, learner_rng = episode_streams(seed)
    adversary.setup(horizon, adv_rng)
    learner.reset(horizon, learner_rng)
    history = History()
    transcript = Transcript(horizon=horizon, seed=seed)
    for t in range(1, horizon + 1):
        q, x = adversary.choose(t, history)
        if q == 0:
            x = adversary.distribution.sample(engine_rng)
        elif q != 1:
            raise ProtocolViolation(f"round {t}: hidden bit must be 0 or 1, got {q!r}")
        if concept_class is not None:
            concept_class.check_point(x)
        prediction = learner.predict(x)
        if prediction not in (1, -1, ABSTAIN):
            raise ProtocolViolation(f"round {t}: learner emitted {prediction!r}")
        y = adversary.target(x)
        try:
            history.add(LabeledExample(x, y))
        except (ContradictionError, ValueError) as exc:
            raise ProtocolViolation(f"round {t}: {exc}") from exc
        learner.update(x, y)
        transcript.rounds.append(RoundRecord(t, q, x, prediction, y))
    return transcript
