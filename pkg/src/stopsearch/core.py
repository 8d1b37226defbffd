"""Domain-independent contracts for optimal stopping.

An optimal stopping problem is a stochastic sequence of observations with
two actions per step, continue or halt, where the return on halting is a
known deterministic function of the observations seen so far.  The types
here are deliberately small and immutable:

* ``FullTrajectory`` -- a complete horizon-length observation sequence,
  obtained by never halting.  Because the observation process does not
  depend on actions until the halt, one full trajectory yields a sample
  return for *every* stopping policy (replay it and stop where the policy
  would have stopped).  That replay property is what the rest of the
  package is built on.
* ``Policy`` -- a deterministic map from observation prefixes to
  continue/halt.
* ``RewardModel`` -- a deterministic, bounded map from a halting prefix to
  a scalar return.  Returns are always maximized; cost-shaped domains
  encode costs as negative returns.
* ``StoppingDomain`` -- a seeded observation-sequence generator plus its
  reward model.

Policies that refuse to halt are forcibly halted at the final step of a
trajectory, so every (policy, trajectory) pair has a well-defined return.
"""

from __future__ import annotations

import enum
import itertools
from abc import ABC, abstractmethod
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ._seeding import generator

Observation = tuple[float, ...]
"""One step of a trajectory: a flat record of named scalar features.

Feature names are carried once per trajectory/prefix rather than per
observation; every observation in one trajectory has the same schema.
"""


class SchemaError(ValueError):
    """An observation record does not carry the features a consumer expects."""


def _feature_index(feature_names: tuple[str, ...], name: str) -> int:
    try:
        return feature_names.index(name)
    except ValueError:
        raise SchemaError(
            f"feature {name!r} not present in schema {feature_names!r}"
        ) from None


class Action(enum.Enum):
    CONTINUE = "continue"
    HALT = "halt"


@dataclass(frozen=True)
class Prefix:
    """The first ``t`` observations of a trajectory, ``1 <= t <= H``."""

    feature_names: tuple[str, ...]
    observations: tuple[Observation, ...]

    def __len__(self) -> int:
        return len(self.observations)

    def latest(self, name: str) -> float:
        """Value of feature ``name`` in the most recent observation."""
        if not self.observations:
            raise ValueError("empty prefix has no latest observation")
        return self.observations[-1][_feature_index(self.feature_names, name)]

    def column(self, name: str) -> tuple[float, ...]:
        """Values of feature ``name`` across all observations, in order."""
        i = _feature_index(self.feature_names, name)
        return tuple(row[i] for row in self.observations)


@dataclass(frozen=True)
class FullTrajectory:
    """A full-horizon observation sequence.

    ``seed`` is a 64-bit reproducibility tag: for generated trajectories it
    is the sub-seed that regenerates the sequence; for data-derived
    trajectories it is an arbitrary stable identifier.
    """

    feature_names: tuple[str, ...]
    observations: tuple[Observation, ...]
    seed: int
    domain_id: str

    def __post_init__(self) -> None:
        if not self.observations:
            raise ValueError("a trajectory must contain at least one observation")
        arity = len(self.feature_names)
        if any(len(row) != arity for row in self.observations):
            raise SchemaError("observation arity differs from feature schema")

    def __len__(self) -> int:
        return len(self.observations)

    def prefix(self, t: int) -> Prefix:
        """The first ``t`` observations as a :class:`Prefix`."""
        if not 1 <= t <= len(self.observations):
            raise ValueError(f"prefix length {t} outside [1, {len(self.observations)}]")
        return Prefix(self.feature_names, self.observations[:t])

    def column(self, name: str) -> tuple[float, ...]:
        i = _feature_index(self.feature_names, name)
        return tuple(row[i] for row in self.observations)


class Policy(ABC):
    """A deterministic stopping rule over observation prefixes.

    ``decide`` is a pure function of the prefix.  Consumers treat the final
    step of any trajectory as a forced halt, so ``decide`` is never asked
    about continuing past the horizon.
    """

    class_id: ClassVar[str] = "abstract"

    @property
    @abstractmethod
    def theta(self) -> tuple[float, ...]:
        """The policy's parameter vector."""

    @abstractmethod
    def decide(self, prefix: Prefix) -> Action:
        """Continue or halt, given everything observed so far."""

    def first_halt(
        self, feature_names: tuple[str, ...], rows: Sequence[Observation]
    ) -> int | None:
        """Smallest step ``t`` (1-based) at which the policy halts, else None.

        The default implementation replays ``decide`` on growing prefixes.
        Subclasses may override with an equivalent single-pass scan; the
        override must agree with ``decide`` exactly.
        """
        for t in range(1, len(rows) + 1):
            if self.decide(Prefix(feature_names, tuple(rows[:t]))) is Action.HALT:
                return t
        return None


class RewardModel(ABC):
    """Deterministic return for halting at the end of a given prefix."""

    @property
    @abstractmethod
    def v_max(self) -> float:
        """A bound with ``|return_of(prefix)| <= v_max`` for all valid prefixes."""

    @abstractmethod
    def return_of(self, prefix: Prefix) -> float:
        """The return obtained by halting after ``prefix``."""


@dataclass(frozen=True)
class Episode:
    """Outcome of running a policy live for one episode."""

    halt_time: int
    return_value: float
    observations: tuple[Observation, ...]
    seed: int


class StoppingDomain(ABC):
    """A seeded stochastic observation process with a reward model.

    Subclasses implement ``_stream``, which yields observations one step at
    a time from a generator-owned RNG.  Both full-trajectory sampling and
    on-policy rollouts pull from the same stream, so halting early merely
    stops drawing: the observations produced for a given seed are a prefix
    of the full trajectory for that seed, bit for bit.
    """

    def __init__(
        self,
        domain_id: str,
        horizon: int,
        feature_names: tuple[str, ...],
        reward: RewardModel,
    ) -> None:
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        self.domain_id = domain_id
        self.horizon = horizon
        self.feature_names = feature_names
        self.reward = reward

    @abstractmethod
    def _stream(self, rng: np.random.Generator) -> Iterator[Observation]:
        """Yield observations for one trajectory, in step order.

        Implementations must consume randomness in a fixed per-step order
        so that truncating the stream never changes earlier draws.
        """

    def sample_full(self, seed: int) -> FullTrajectory:
        """Generate the complete trajectory for ``seed``.

        Streams normally run for exactly ``horizon`` steps; domains backed
        by finite data may produce shorter trajectories (their own length
        is then the forced-halt point).
        """
        rng = generator(seed)
        rows = tuple(itertools.islice(self._stream(rng), self.horizon))
        return FullTrajectory(self.feature_names, rows, seed, self.domain_id)

    def rollout(self, policy: Policy, seed: int) -> Episode:
        """Run ``policy`` live: observations past its halt are never generated."""
        rng = generator(seed)
        stream = self._stream(rng)
        rows: list[Observation] = []
        names = self.feature_names
        halt_at: int | None = None
        for t in range(1, self.horizon + 1):
            try:
                rows.append(next(stream))
            except StopIteration:
                break  # data-backed stream ended early: forced halt
            if t == self.horizon:
                break
            if policy.decide(Prefix(names, tuple(rows))) is Action.HALT:
                halt_at = t
                break
        if halt_at is None:
            halt_at = len(rows)
        prefix = Prefix(names, tuple(rows))
        return Episode(halt_at, self.reward.return_of(prefix), tuple(rows), seed)


def halt_time(policy: Policy, trajectory: FullTrajectory) -> int:
    """First step at which ``policy`` halts on ``trajectory``.

    Returns the smallest ``t`` with ``decide == HALT``, or the trajectory
    length if the policy never halts (forced halt at the horizon).
    """
    rows = trajectory.observations
    if not rows:
        raise ValueError("cannot compute a halt time on an empty trajectory")
    t = policy.first_halt(trajectory.feature_names, rows)
    return len(rows) if t is None else t


def simulate_return(
    policy: Policy, trajectory: FullTrajectory, reward: RewardModel
) -> float:
    """Replay ``policy`` against a stored trajectory and score where it halts.

    This is the off-policy evaluation primitive: because the observation
    process is action-independent until the halt, the value returned here
    is exactly the return the policy would have obtained live under the
    same random stream.
    """
    t = halt_time(policy, trajectory)
    return reward.return_of(trajectory.prefix(t))
