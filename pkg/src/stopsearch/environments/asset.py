"""Depreciating-asset replacement as a stopping problem.

An asset starts at a fixed valuation and loses a random, nonnegative
amount of value each step (a zero-clipped Gaussian decrement), never
recovering; alongside the valuation, ``d - 1`` noisy signal readings of
it are emitted each step.  Halting at step ``t`` means replacing then:
the return is the utility accrued while holding, minus a replacement
cost that grows with time, minus a penalty if the asset has already
become worthless.

Defaults are tuned so the best policy in the bundled logistic class
replaces at roughly half depreciation: early replacement forfeits cheap
utility, late replacement pays the grown cost and risks the penalty.
"""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

from ..core import Observation, Prefix, RewardModel, StoppingDomain


class AssetReward(RewardModel):
    """Holding utility minus time-growing replacement cost and worthless
    penalty."""

    def __init__(
        self,
        x_max: float,
        utility_per_step: float,
        replacement_cost_base: float,
        cost_growth: float,
        worthless_penalty: float,
        horizon: int,
    ) -> None:
        self.x_max = x_max
        self.utility_per_step = utility_per_step
        self.replacement_cost_base = replacement_cost_base
        self.cost_growth = cost_growth
        self.worthless_penalty = worthless_penalty
        self.horizon = horizon

    @property
    def v_max(self) -> float:
        worst_cost = self.replacement_cost_base * (1.0 + self.cost_growth * self.horizon)
        return (
            self.utility_per_step * self.horizon
            + worst_cost
            + self.worthless_penalty
        )

    def return_of(self, prefix: Prefix) -> float:
        values = prefix.column("value")
        t = len(values)
        utility = self.utility_per_step * sum(v / self.x_max for v in values)
        cost = self.replacement_cost_base * (1.0 + self.cost_growth * t)
        penalty = self.worthless_penalty if values[-1] <= 0.0 else 0.0
        return utility - cost - penalty


class AssetDomain(StoppingDomain):
    """d-dimensional depreciating-asset simulator."""

    def __init__(
        self,
        d: int = 3,
        x_max: float = 100.0,
        depreciation_mean: float = 6.0,
        depreciation_std: float = 2.0,
        signal_noise_std: float = 4.0,
        utility_per_step: float = 12.0,
        replacement_cost_base: float = 40.0,
        cost_growth: float = 0.15,
        worthless_penalty: float = 150.0,
        horizon: int = 30,
    ) -> None:
        if d < 2:
            raise ValueError("observation dimension d must be at least 2")
        if x_max <= 0:
            raise ValueError("x_max must be positive")
        if depreciation_mean < 0 or depreciation_std < 0 or signal_noise_std < 0:
            raise ValueError("depreciation/noise parameters must be nonnegative")
        self.d = d
        self.x_max = x_max
        self.depreciation_mean = depreciation_mean
        self.depreciation_std = depreciation_std
        self.signal_noise_std = signal_noise_std
        reward = AssetReward(
            x_max,
            utility_per_step,
            replacement_cost_base,
            cost_growth,
            worthless_penalty,
            horizon,
        )
        features = ("value",) + tuple(f"signal_{j}" for j in range(1, d))
        super().__init__("asset", horizon, features, reward)

    def _stream(self, rng: np.random.Generator) -> Iterator[Observation]:
        # One decrement draw plus one (d-1)-vector of signal noise per step,
        # in that order; the decrement is a Gaussian clipped at zero.
        value = self.x_max
        while True:
            drop = rng.normal(self.depreciation_mean, self.depreciation_std)
            noise = rng.normal(0.0, 1.0, size=self.d - 1)
            value = max(0.0, value - max(0.0, drop))
            signals = value + self.signal_noise_std * noise
            yield (value, *signals.tolist())
