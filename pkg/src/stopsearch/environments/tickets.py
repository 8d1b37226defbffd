"""Ticket-purchase data handling: CSV ingestion, commencement expansion,
and a synthetic price generator.

A price series tracks one departure date: (days_to_depart, price) pairs
with strictly decreasing days.  A customer could start watching at any
point in the series, so each start index ("commencement point") becomes
its own trajectory whose horizon is its remaining length -- the ticket
domain is the variable-horizon special case of the stopping setting.
Buying corresponds to halting; the return is the negated price paid.

The synthetic generator stands in for non-redistributable fare data.  It
produces mean-reverting log-noise around a base fare with a drift that
strengthens as departure approaches, so buying immediately is a strong
(but beatable) baseline and waiting until departure is poor.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import FullTrajectory, Observation, Prefix, RewardModel, StoppingDomain
from .._seeding import generator, spawn_seed
from ..evaluation import TrajectoryPool

FEATURES = ("price", "days_to_depart")

CSV_HEADER = ["route", "departure_date", "days_to_depart", "price"]


class PriceCsvError(ValueError):
    """Malformed price CSV; carries the offending line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class PriceSeries:
    """All price observations for one (route, departure date)."""

    route: str
    departure_date: str
    days_to_depart: tuple[float, ...]
    prices: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.days_to_depart) != len(self.prices):
            raise ValueError("days and prices must have equal length")
        if any(p <= 0 for p in self.prices):
            raise ValueError(
                f"{self.route}/{self.departure_date}: prices must be positive"
            )
        days = self.days_to_depart
        if any(days[i] <= days[i + 1] for i in range(len(days) - 1)):
            raise ValueError(
                f"{self.route}/{self.departure_date}: days_to_depart must be "
                "strictly decreasing"
            )

    def __len__(self) -> int:
        return len(self.prices)


@dataclass(frozen=True)
class PriceDataset:
    series: tuple[PriceSeries, ...]

    def __len__(self) -> int:
        return len(self.series)

    def max_price(self) -> float:
        return max((max(s.prices) for s in self.series), default=0.0)


def load_price_csv(path: str | Path) -> PriceDataset:
    """Read a price CSV with header ``route,departure_date,days_to_depart,price``.

    Rows for one series must appear contiguously and already ordered by
    decreasing days_to_depart; violations raise with the line number.  An
    empty file yields an empty dataset.
    """
    path = Path(path)
    groups: dict[tuple[str, str], list[tuple[float, float]]] = {}
    order: list[tuple[str, str]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return PriceDataset(())
        if [h.strip() for h in header] != CSV_HEADER:
            raise PriceCsvError(1, f"expected header {','.join(CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise PriceCsvError(line_no, f"expected 4 columns, got {len(row)}")
            route, date = row[0].strip(), row[1].strip()
            try:
                days = float(row[2])
                price = float(row[3])
            except ValueError as exc:
                raise PriceCsvError(line_no, str(exc)) from None
            key = (route, date)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append((days, price))
    series = []
    for route, date in order:
        rows = groups[(route, date)]
        try:
            series.append(
                PriceSeries(
                    route,
                    date,
                    tuple(d for d, _ in rows),
                    tuple(p for _, p in rows),
                )
            )
        except ValueError as exc:
            raise ValueError(f"invalid series in {path.name}: {exc}") from exc
    return PriceDataset(tuple(series))


def save_price_csv(dataset: PriceDataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in dataset.series:
            for days, price in zip(s.days_to_depart, s.prices):
                writer.writerow([s.route, s.departure_date, repr(days), repr(price)])
    return path


def expand_commencements(dataset: PriceDataset, min_length: int = 30) -> TrajectoryPool:
    """One trajectory per commencement point, dropping short ones.

    A series of length T yields up to T suffix trajectories (start index
    0..T-1); suffixes shorter than ``min_length`` are discarded.  Each
    trajectory's horizon is its own length.
    """
    if min_length < 1:
        raise ValueError("min_length must be at least 1")
    trajectories = []
    tag = 0
    for s in dataset.series:
        rows = tuple(zip(s.prices, s.days_to_depart))
        for start in range(len(s)):
            if len(s) - start < min_length:
                break
            trajectories.append(
                FullTrajectory(FEATURES, rows[start:], tag, "tickets")
            )
            tag += 1
    return TrajectoryPool(tuple(trajectories), 0)


@dataclass(frozen=True)
class SyntheticPriceConfig:
    """Knobs for the synthetic fare generator.

    ``drift`` is the total relative fare increase from the farthest
    tracked day to departure day; ``far_weight`` splits it between a slow
    linear climb and a quadratic surge over the final ``ramp_days`` days.
    Log-noise is AR(1) with per-step standard deviation ``volatility``
    and autocorrelation ``persistence``.
    """

    n_series: int = 40
    length_min: int = 32
    length_max: int = 48
    base_price: float = 400.0
    volatility: float = 0.05
    persistence: float = 0.6
    drift: float = 0.45
    ramp_days: int = 10
    far_weight: float = 0.15

    def validate(self) -> None:
        if self.n_series < 1:
            raise ValueError("n_series must be at least 1")
        if not 1 <= self.length_min <= self.length_max:
            raise ValueError("need 1 <= length_min <= length_max")
        if self.base_price <= 0:
            raise ValueError("base_price must be positive")
        if self.volatility < 0:
            raise ValueError("volatility must be nonnegative")
        if not 0 <= self.persistence < 1:
            raise ValueError("persistence must lie in [0, 1)")
        if self.drift < 0:
            raise ValueError("drift must be nonnegative")
        if self.ramp_days < 1:
            raise ValueError("ramp_days must be at least 1")
        if not 0 <= self.far_weight <= 1:
            raise ValueError("far_weight must lie in [0, 1]")

    def price_cap(self) -> float:
        """A hard upper bound on any generated price (noise is clipped)."""
        return self.base_price * (1.0 + self.drift) * math.exp(_NOISE_CLIP)


_NOISE_CLIP = 4.0  # log-noise is clipped at +/- 4 stationary sd, keeping prices bounded


def synth_prices(config: SyntheticPriceConfig, seed: int) -> PriceDataset:
    """Generate a reproducible synthetic price dataset."""
    config.validate()
    day_scale = max(config.length_max - 1, 1)
    if config.volatility > 0:
        stationary_sd = config.volatility / math.sqrt(1.0 - config.persistence**2)
    else:
        stationary_sd = 0.0
    series = []
    for i in range(config.n_series):
        rng = generator(spawn_seed(seed, i))
        length = int(rng.integers(config.length_min, config.length_max + 1))
        noise = 0.0
        days_list, prices = [], []
        for step in range(length):
            days = float(length - 1 - step)
            draw = rng.normal(0.0, 1.0)
            if step == 0:
                noise = stationary_sd * draw
            else:
                noise = config.persistence * noise + config.volatility * draw
            if stationary_sd > 0:
                clip = _NOISE_CLIP * stationary_sd
                noise = min(clip, max(-clip, noise))
            far = 1.0 - days / day_scale
            near = max(0.0, 1.0 - days / config.ramp_days) ** 2
            shape = config.far_weight * far + (1.0 - config.far_weight) * near
            price = config.base_price * (1.0 + config.drift * shape) * math.exp(noise)
            days_list.append(days)
            prices.append(price)
        series.append(
            PriceSeries("synthetic", f"series-{i:05d}", tuple(days_list), tuple(prices))
        )
    return PriceDataset(tuple(series))


class TicketReward(RewardModel):
    """Negated purchase price; bounded by the dataset's price cap."""

    def __init__(self, price_cap: float) -> None:
        if price_cap <= 0:
            raise ValueError("price_cap must be positive")
        self.price_cap = price_cap

    @property
    def v_max(self) -> float:
        return self.price_cap

    def return_of(self, prefix: Prefix) -> float:
        return -prefix.latest("price")


class TicketDataDomain(StoppingDomain):
    """A stopping domain backed by a fixed pool of price trajectories.

    Sampling draws a stored trajectory uniformly (with replacement); its
    own length is the forced-halt horizon, which varies per trajectory.
    """

    def __init__(self, pool: TrajectoryPool, price_cap: float | None = None) -> None:
        if len(pool) == 0:
            raise ValueError("ticket domain needs a nonempty pool")
        if pool.feature_names != FEATURES:
            raise ValueError(f"expected features {FEATURES}, got {pool.feature_names}")
        if price_cap is None:
            price_cap = max(max(t.column("price")) for t in pool)
        self.pool = pool
        super().__init__("tickets", pool.max_length, FEATURES, TicketReward(price_cap))

    def _pick(self, rng: np.random.Generator) -> FullTrajectory:
        return self.pool[int(rng.integers(len(self.pool)))]

    def _stream(self, rng: np.random.Generator) -> Iterator[Observation]:
        yield from self._pick(rng).observations

    def sample_full(self, seed: int) -> FullTrajectory:
        # Keep the stored trajectory's identity (tag and own length).
        return self._pick(generator(seed))


def best_possible_returns(pool: TrajectoryPool) -> list[float]:
    """Hindsight-optimal return per trajectory: the negated minimum price."""
    return [-min(t.column("price")) for t in pool]
