"""Concrete stopping-policy families.

Five parameterized families cover the three bundled domains:

* ticket purchase: a two-threshold wait/buy rule and a banded variant with
  per-period price thresholds,
* tutoring: halt when the predicted probability of the next correct answer
  crosses a threshold, with the prediction produced either by a two-state
  mastery filter or by a logistic count-of-corrects model,
* asset replacement: replace when a logistic function of total observed
  depreciation crosses a threshold.

Decision-time convention: the trajectory step a policy halts at is the
last step that actually happens.  Market-style policies (tickets, assets)
act on the newest observation in the prefix -- halting at step t means
accepting offer t.  Tutoring policies decide whether step t should happen
*before* seeing its outcome, so their halting criterion is computed from
the first t-1 observations; the observation at the halt step is then the
final, scored attempt.

Every ``decide`` is a pure function of (theta, prefix).  The one-pass
``first_halt`` overrides are exact restatements of ``decide`` and are
property-tested against it.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from .core import Action, Policy, Prefix, SchemaError, _feature_index
from .search import PolicyClass


def _logistic(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _binary(value: float) -> bool:
    if value == 1.0:
        return True
    if value == 0.0:
        return False
    raise SchemaError(f"expected a binary correctness value, got {value!r}")


# ---------------------------------------------------------------------------
# Two-state mastery filter (knowledge tracing)
# ---------------------------------------------------------------------------


def bkt_filter_step(
    mastery: float, correct: bool, p_t: float, p_g: float, p_s: float
) -> float:
    """One observe-then-learn update of the filtered mastery probability."""
    if correct:
        den = mastery * (1.0 - p_s) + (1.0 - mastery) * p_g
        posterior = mastery * (1.0 - p_s) / den if den > 0.0 else mastery
    else:
        den = mastery * p_s + (1.0 - mastery) * (1.0 - p_g)
        posterior = mastery * p_s / den if den > 0.0 else mastery
    return posterior + (1.0 - posterior) * p_t


def bkt_filtered_mastery(
    p_i: float, p_t: float, p_g: float, p_s: float, outcomes: Sequence[float]
) -> float:
    """Filtered mastery probability after incorporating ``outcomes`` in order."""
    mastery = p_i
    for value in outcomes:
        mastery = bkt_filter_step(mastery, _binary(value), p_t, p_g, p_s)
    return mastery


def bkt_predict_correct(
    p_i: float, p_t: float, p_g: float, p_s: float, outcomes: Sequence[float]
) -> float:
    """Probability the next attempt is correct, given past outcomes.

    ``outcomes`` may be empty, in which case this is the prior prediction
    ``p_i (1 - p_s) + (1 - p_i) p_g``.
    """
    mastery = bkt_filtered_mastery(p_i, p_t, p_g, p_s, outcomes)
    return mastery * (1.0 - p_s) + (1.0 - mastery) * p_g


def afm_predict_correct(beta1: float, beta2: float, outcomes: Sequence[float]) -> float:
    """Logistic prediction from the count of past correct attempts."""
    n_correct = 0
    for value in outcomes:
        if _binary(value):
            n_correct += 1
    return _logistic(beta1 + beta2 * n_correct)


# ---------------------------------------------------------------------------
# Ticket purchase
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TicketSimplePolicy(Policy):
    """Wait while the current price and days-to-departure both sit above
    their thresholds; otherwise buy."""

    theta0: float  # price threshold
    theta1: float  # days-to-departure threshold

    class_id = "ticket_simple"

    def __post_init__(self) -> None:
        if self.theta0 < 0 or self.theta1 < 0:
            raise ValueError("ticket thresholds must be nonnegative")

    @property
    def theta(self) -> tuple[float, ...]:
        return (self.theta0, self.theta1)

    def decide(self, prefix: Prefix) -> Action:
        price = prefix.latest("price")
        days = prefix.latest("days_to_depart")
        if price > self.theta0 and days > self.theta1:
            return Action.CONTINUE
        return Action.HALT

    def first_halt(self, feature_names, rows):
        ip = _feature_index(feature_names, "price")
        id_ = _feature_index(feature_names, "days_to_depart")
        t0, t1 = self.theta0, self.theta1
        for t, row in enumerate(rows, start=1):
            if not (row[ip] > t0 and row[id_] > t1):
                return t
        return None


@dataclass(frozen=True)
class TicketComplexPolicy(Policy):
    """Banded wait/buy rule: a separate price threshold per days-to-departure
    band, plus an unconditional buy once departure is at most ``d_buy`` days
    away.

    Bands: days > b1 uses p1, b2 < days <= b1 uses p2, days <= b2 uses p3.
    """

    b1: float
    b2: float
    d_buy: float
    p1: float
    p2: float
    p3: float

    class_id = "ticket_complex"

    def __post_init__(self) -> None:
        if self.b1 < self.b2:
            lo, hi = self.b1, self.b2
            object.__setattr__(self, "b1", hi)
            object.__setattr__(self, "b2", lo)
        if min(self.b2, self.d_buy, self.p1, self.p2, self.p3) < 0:
            raise ValueError("ticket parameters must be nonnegative")

    @property
    def theta(self) -> tuple[float, ...]:
        return (self.b1, self.b2, self.d_buy, self.p1, self.p2, self.p3)

    def _band_threshold(self, days: float) -> float:
        if days > self.b1:
            return self.p1
        if days > self.b2:
            return self.p2
        return self.p3

    def decide(self, prefix: Prefix) -> Action:
        price = prefix.latest("price")
        days = prefix.latest("days_to_depart")
        if days <= self.d_buy:
            return Action.HALT
        if price <= self._band_threshold(days):
            return Action.HALT
        return Action.CONTINUE

    def first_halt(self, feature_names, rows):
        ip = _feature_index(feature_names, "price")
        id_ = _feature_index(feature_names, "days_to_depart")
        for t, row in enumerate(rows, start=1):
            days = row[id_]
            if days <= self.d_buy or row[ip] <= self._band_threshold(days):
                return t
        return None


# ---------------------------------------------------------------------------
# Tutoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BktThresholdPolicy(Policy):
    """Stop tutoring once the mastery filter predicts the next attempt is
    correct with probability above ``theta0``.

    The filter parameters are part of the policy (they need not match the
    process that generated the data); no identifiability constraint is
    enforced between guess and slip.
    """

    p_i: float
    p_t: float
    p_g: float
    p_s: float
    theta0: float

    class_id = "bkt_threshold"

    def __post_init__(self) -> None:
        for name in ("p_i", "p_t", "p_g", "p_s"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if not 0.0 <= self.theta0 <= 1.0:
            raise ValueError("theta0 must lie in [0, 1]")

    @property
    def theta(self) -> tuple[float, ...]:
        return (self.p_i, self.p_t, self.p_g, self.p_s, self.theta0)

    def predict_correct(self, outcomes: Sequence[float]) -> float:
        return bkt_predict_correct(self.p_i, self.p_t, self.p_g, self.p_s, outcomes)

    def decide(self, prefix: Prefix) -> Action:
        outcomes = prefix.column("correct")
        if self.predict_correct(outcomes[:-1]) > self.theta0:
            return Action.HALT
        return Action.CONTINUE

    def first_halt(self, feature_names, rows):
        idx = _feature_index(feature_names, "correct")
        p_t, p_g, p_s, theta0 = self.p_t, self.p_g, self.p_s, self.theta0
        mastery = self.p_i
        for t in range(1, len(rows) + 1):
            if mastery * (1.0 - p_s) + (1.0 - mastery) * p_g > theta0:
                return t
            mastery = bkt_filter_step(mastery, _binary(rows[t - 1][idx]), p_t, p_g, p_s)
        return None


@dataclass(frozen=True)
class AfmThresholdPolicy(Policy):
    """Stop tutoring once a logistic function of the number of past correct
    attempts crosses ``theta0``."""

    beta1: float
    beta2: float
    theta0: float

    class_id = "afm_threshold"

    def __post_init__(self) -> None:
        if not 0.0 < self.theta0 < 1.0:
            raise ValueError("theta0 must lie in (0, 1)")

    @property
    def theta(self) -> tuple[float, ...]:
        return (self.beta1, self.beta2, self.theta0)

    def predict_correct(self, outcomes: Sequence[float]) -> float:
        return afm_predict_correct(self.beta1, self.beta2, outcomes)

    def decide(self, prefix: Prefix) -> Action:
        outcomes = prefix.column("correct")
        if self.predict_correct(outcomes[:-1]) > self.theta0:
            return Action.HALT
        return Action.CONTINUE

    def first_halt(self, feature_names, rows):
        idx = _feature_index(feature_names, "correct")
        b1, b2, theta0 = self.beta1, self.beta2, self.theta0
        n_correct = 0
        for t in range(1, len(rows) + 1):
            if _logistic(b1 + b2 * n_correct) > theta0:
                return t
            if _binary(rows[t - 1][idx]):
                n_correct += 1
        return None


# ---------------------------------------------------------------------------
# Asset replacement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssetLogisticPolicy(Policy):
    """Replace once a logistic function of total observed depreciation
    crosses ``beta3``.

    Depreciation is measured from the asset's initial valuation ``x_max``
    (a fixed property of the domain, not a searched parameter) and clamped
    to [0, 1].
    """

    beta1: float
    beta2: float
    beta3: float
    x_max: float = 100.0

    class_id = "asset_logistic"

    def __post_init__(self) -> None:
        if not 0.0 < self.beta3 < 1.0:
            raise ValueError("beta3 must lie in (0, 1)")
        if self.x_max <= 0:
            raise ValueError("x_max must be positive")

    @property
    def theta(self) -> tuple[float, ...]:
        return (self.beta1, self.beta2, self.beta3)

    def depreciation(self, current_value: float) -> float:
        depr = (self.x_max - current_value) / self.x_max
        return min(1.0, max(0.0, depr))

    def replace_probability(self, current_value: float) -> float:
        return _logistic(self.beta1 + self.beta2 * self.depreciation(current_value))

    def crossover_depreciation(self) -> float:
        """Depreciation level at which the rule first fires (may fall
        outside [0, 1], meaning always / never replace)."""
        if self.beta2 == 0.0:
            return math.inf if _logistic(self.beta1) <= self.beta3 else -math.inf
        z = math.log(self.beta3 / (1.0 - self.beta3))
        return (z - self.beta1) / self.beta2

    def decide(self, prefix: Prefix) -> Action:
        value = prefix.latest("value")
        if self.replace_probability(value) > self.beta3:
            return Action.HALT
        return Action.CONTINUE

    def first_halt(self, feature_names, rows):
        idx = _feature_index(feature_names, "value")
        for t, row in enumerate(rows, start=1):
            if self.replace_probability(row[idx]) > self.beta3:
                return t
        return None


# ---------------------------------------------------------------------------
# Fixed baselines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlwaysHaltPolicy(Policy):
    """Halt on the first observation (e.g. earliest purchase, immediate
    replacement)."""

    class_id = "always_halt"

    @property
    def theta(self) -> tuple[float, ...]:
        return ()

    def decide(self, prefix: Prefix) -> Action:
        return Action.HALT

    def first_halt(self, feature_names, rows):
        return 1 if rows else None


@dataclass(frozen=True)
class NeverHaltPolicy(Policy):
    """Never halt voluntarily; every trajectory runs to its forced end
    (e.g. latest purchase, never replace)."""

    class_id = "never_halt"

    @property
    def theta(self) -> tuple[float, ...]:
        return ()

    def decide(self, prefix: Prefix) -> Action:
        return Action.CONTINUE

    def first_halt(self, feature_names, rows):
        return None


# ---------------------------------------------------------------------------
# Policy classes (search spaces)
# ---------------------------------------------------------------------------

# VC-dimension hints are the documented heuristic "free threshold
# parameters + 1"; they are defaults for the sample bound, not rigorous
# capacity computations.


def ticket_simple_class(
    price_range: tuple[float, float] = (200.0, 600.0),
    day_range: tuple[float, float] = (0.0, 20.0),
) -> PolicyClass:
    return PolicyClass(
        class_id="ticket_simple",
        parameter_box=(price_range, day_range),
        d_hint=3,
        factory=lambda theta: TicketSimplePolicy(*theta),
    )


def ticket_complex_class(
    price_range: tuple[float, float] = (200.0, 600.0),
    boundary_range: tuple[float, float] = (0.0, 30.0),
    d_buy_range: tuple[float, float] = (0.0, 12.0),
) -> PolicyClass:
    box = (boundary_range, boundary_range, d_buy_range) + (price_range,) * 3
    return PolicyClass(
        class_id="ticket_complex",
        parameter_box=box,
        d_hint=7,
        factory=lambda theta: TicketComplexPolicy(*theta),
    )


def bkt_threshold_class(
    probability_range: tuple[float, float] = (0.01, 0.99),
    threshold_range: tuple[float, float] = (0.01, 0.99),
) -> PolicyClass:
    box = (probability_range,) * 4 + (threshold_range,)
    return PolicyClass(
        class_id="bkt_threshold",
        parameter_box=box,
        d_hint=6,
        factory=lambda theta: BktThresholdPolicy(*theta),
    )


def afm_threshold_class(
    intercept_range: tuple[float, float] = (-6.0, 6.0),
    slope_range: tuple[float, float] = (-2.0, 2.0),
    threshold_range: tuple[float, float] = (0.01, 0.99),
) -> PolicyClass:
    return PolicyClass(
        class_id="afm_threshold",
        parameter_box=(intercept_range, slope_range, threshold_range),
        d_hint=4,
        factory=lambda theta: AfmThresholdPolicy(*theta),
    )


def asset_logistic_class(
    x_max: float = 100.0,
    intercept_range: tuple[float, float] = (-15.0, 5.0),
    slope_range: tuple[float, float] = (0.5, 25.0),
    threshold_range: tuple[float, float] = (0.05, 0.95),
) -> PolicyClass:
    return PolicyClass(
        class_id="asset_logistic",
        parameter_box=(intercept_range, slope_range, threshold_range),
        d_hint=4,
        factory=lambda theta: AssetLogisticPolicy(*theta, x_max=x_max),
    )


# ---------------------------------------------------------------------------
# Flat key-value serialization
# ---------------------------------------------------------------------------

_FIELDS: dict[str, tuple[str, ...]] = {
    "ticket_simple": ("theta0", "theta1"),
    "ticket_complex": ("b1", "b2", "d_buy", "p1", "p2", "p3"),
    "bkt_threshold": ("p_i", "p_t", "p_g", "p_s", "theta0"),
    "afm_threshold": ("beta1", "beta2", "theta0"),
    "asset_logistic": ("beta1", "beta2", "beta3", "x_max"),
    "always_halt": (),
    "never_halt": (),
}

_CONSTRUCTORS = {
    "ticket_simple": TicketSimplePolicy,
    "ticket_complex": TicketComplexPolicy,
    "bkt_threshold": BktThresholdPolicy,
    "afm_threshold": AfmThresholdPolicy,
    "asset_logistic": AssetLogisticPolicy,
    "always_halt": AlwaysHaltPolicy,
    "never_halt": NeverHaltPolicy,
}


def save_policy(policy: Policy, path: str | Path) -> Path:
    """Write a policy as flat ``key = value`` lines (repr floats, exact
    round trip)."""
    fields = _FIELDS.get(policy.class_id)
    if fields is None:
        raise ValueError(f"unknown policy class {policy.class_id!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"class_id = {policy.class_id}"]
    lines += [f"{name} = {getattr(policy, name)!r}" for name in fields]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_policy(path: str | Path) -> Policy:
    """Inverse of :func:`save_policy`."""
    entries: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"policy file line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        entries[key] = value
    class_id = entries.pop("class_id", None)
    if class_id is None:
        raise ValueError("policy file is missing class_id")
    fields = _FIELDS.get(class_id)
    if fields is None:
        raise ValueError(f"unknown policy class {class_id!r}")
    missing = [name for name in fields if name not in entries]
    if missing:
        raise ValueError(f"policy file is missing parameters: {missing}")
    kwargs = {name: float(entries[name]) for name in fields}
    return _CONSTRUCTORS[class_id](**kwargs)
