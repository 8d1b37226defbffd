"""Tiny enumerable stopping domain used as an exact oracle in tests.

Binary i.i.d. observations over a short horizon, a count-minus-cost
reward, and a 32-member finite policy class.  True policy values are
computed by summing over all 2^H observation sequences, which is what
makes this domain useful for checking estimators and the sample bound.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from stopsearch.core import (
    Action,
    FullTrajectory,
    Observation,
    Policy,
    Prefix,
    RewardModel,
    StoppingDomain,
)
from stopsearch.search import PolicyClass

FEATURES = ("hit",)


class CountReward(RewardModel):
    """Number of hits so far minus half the steps spent; |r| <= H/2."""

    def __init__(self, horizon: int) -> None:
        self.horizon = horizon

    @property
    def v_max(self) -> float:
        return self.horizon / 2.0

    def return_of(self, prefix: Prefix) -> float:
        hits = sum(prefix.column("hit"))
        return hits - 0.5 * len(prefix)


class IidBinaryDomain(StoppingDomain):
    def __init__(self, p: float = 0.55, horizon: int = 4) -> None:
        self.p = p
        super().__init__("toy_binary", horizon, FEATURES, CountReward(horizon))

    def _stream(self, rng: np.random.Generator) -> Iterator[Observation]:
        while True:
            yield (1.0 if rng.random() < self.p else 0.0,)


@dataclass(frozen=True)
class CountThresholdPolicy(Policy):
    """Halt once ``min_hits`` hits are seen or ``deadline`` steps have passed."""

    min_hits: int
    deadline: int

    class_id = "count_threshold"

    @property
    def theta(self) -> tuple[float, ...]:
        return (float(self.min_hits), float(self.deadline))

    def decide(self, prefix: Prefix) -> Action:
        if len(prefix) >= self.deadline:
            return Action.HALT
        if sum(prefix.column("hit")) >= self.min_hits:
            return Action.HALT
        return Action.CONTINUE


def toy_policy_class(horizon: int = 4) -> PolicyClass:
    """Not used for sampling; provides make() and the heuristic dimension."""
    return PolicyClass(
        class_id="count_threshold",
        parameter_box=((1.0, 8.0), (1.0, float(horizon))),
        d_hint=3,
        factory=lambda theta: CountThresholdPolicy(int(theta[0]), int(theta[1])),
    )


def toy_policies(horizon: int = 4) -> list[CountThresholdPolicy]:
    """The finite 32-member class: min_hits 1..8 crossed with deadline 1..H."""
    return [
        CountThresholdPolicy(m, tau)
        for m in range(1, 9)
        for tau in range(1, horizon + 1)
    ]


def all_sequences(domain: IidBinaryDomain) -> list[tuple[FullTrajectory, float]]:
    """Every length-H observation sequence with its probability."""
    out = []
    for bits in itertools.product((0.0, 1.0), repeat=domain.horizon):
        probability = 1.0
        for b in bits:
            probability *= domain.p if b == 1.0 else (1.0 - domain.p)
        trajectory = FullTrajectory(
            FEATURES, tuple((b,) for b in bits), 0, domain.domain_id
        )
        out.append((trajectory, probability))
    return out


def exact_value(policy: Policy, domain: IidBinaryDomain) -> float:
    """True expected return by exhaustive enumeration."""
    from stopsearch.core import simulate_return

    total = 0.0
    for trajectory, probability in all_sequences(domain):
        total += probability * simulate_return(policy, trajectory, domain.reward)
    return total
