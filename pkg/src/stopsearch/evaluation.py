"""Policy value estimation from shared trajectory pools.

The central mechanism: a pool of full trajectories, gathered once, scores
*any* stopping policy by replay (`core.simulate_return`).  Every policy is
evaluated on the identical trajectories, which both removes the need for
fresh rollouts per candidate and acts as common random numbers across the
candidate set.  The on-policy Monte Carlo estimator that this replaces is
also provided, as a baseline.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from ._seeding import spawn_seed
from .core import (
    FullTrajectory,
    Observation,
    Policy,
    Prefix,
    RewardModel,
    StoppingDomain,
    simulate_return,
)


@dataclass(frozen=True)
class TrajectoryPool:
    """An append-only, schema-homogeneous collection of full trajectories."""

    trajectories: tuple[FullTrajectory, ...]
    created_seed: int

    def __post_init__(self) -> None:
        if self.trajectories:
            names = self.trajectories[0].feature_names
            if any(t.feature_names != names for t in self.trajectories):
                raise ValueError("pool trajectories must share one feature schema")

    def __len__(self) -> int:
        return len(self.trajectories)

    def __getitem__(self, i: int) -> FullTrajectory:
        return self.trajectories[i]

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def feature_names(self) -> tuple[str, ...]:
        if not self.trajectories:
            raise ValueError("empty pool has no schema")
        return self.trajectories[0].feature_names

    @property
    def max_length(self) -> int:
        return max(len(t) for t in self.trajectories)

    def extended(self, extra: Sequence[FullTrajectory]) -> "TrajectoryPool":
        """A new pool with ``extra`` appended (pools are never mutated)."""
        return TrajectoryPool(self.trajectories + tuple(extra), self.created_seed)


@dataclass(frozen=True)
class EvalReport:
    """Value estimate for one policy from one trajectory set."""

    policy_theta: tuple[float, ...]
    estimate: float
    n_used: int
    per_trajectory_returns: tuple[float, ...]


def gather_full(domain: StoppingDomain, n: int, seed: int) -> TrajectoryPool:
    """Draw ``n`` i.i.d. full trajectories from ``domain``.

    Trajectory ``i`` is generated from ``spawn_seed(seed, i)``, so pools are
    reproducible and can be regenerated piecewise.
    """
    if n < 1:
        raise ValueError("must gather at least one trajectory")
    rows = tuple(domain.sample_full(spawn_seed(seed, i)) for i in range(n))
    return TrajectoryPool(rows, seed)


def _mean(values: Sequence[float]) -> float:
    # fsum: the estimate is exactly the correctly-rounded mean, so it is
    # invariant to trajectory order in the pool.
    return math.fsum(values) / len(values)


def evaluate(policy: Policy, pool: TrajectoryPool, reward: RewardModel) -> EvalReport:
    """Estimate a policy's value as its mean replayed return over the pool."""
    if len(pool) == 0:
        raise ValueError("cannot evaluate on an empty pool")
    returns = tuple(simulate_return(policy, t, reward) for t in pool)
    return EvalReport(policy.theta, _mean(returns), len(returns), returns)


def _evaluate_slice(
    policies: Sequence[Policy],
    pool: TrajectoryPool,
    reward: RewardModel,
    indices: Sequence[int],
) -> list[tuple[int, EvalReport]]:
    return [(i, evaluate(policies[i], pool, reward)) for i in indices]


def evaluate_batch(
    policies: Sequence[Policy],
    pool: TrajectoryPool,
    reward: RewardModel,
    workers: int = 1,
) -> list[EvalReport]:
    """Evaluate many policies on one shared pool.

    Output order matches the input order and is bit-identical for any
    worker count: each (policy, trajectory) return is computed independently
    and written into its pre-assigned slot.
    """
    if workers <= 1 or len(policies) <= 1:
        return [evaluate(p, pool, reward) for p in policies]
    chunks = [list(range(w, len(policies), workers)) for w in range(workers)]
    chunks = [c for c in chunks if c]
    out: list[EvalReport | None] = [None] * len(policies)
    with concurrent.futures.ProcessPoolExecutor(max_workers=len(chunks)) as pex:
        futures = [
            pex.submit(_evaluate_slice, list(policies), pool, reward, chunk)
            for chunk in chunks
        ]
        for fut in futures:
            for i, report in fut.result():
                out[i] = report
    assert all(r is not None for r in out)
    return out  # type: ignore[return-value]


def monte_carlo_on_policy(
    policies: Sequence[Policy],
    domain: StoppingDomain,
    budget: int,
    seed: int,
) -> list[EvalReport]:
    """On-policy Monte Carlo evaluation under a shared episode budget.

    Each of the k policies is run live on floor(budget / k) fresh episodes;
    observations past a policy's halt are never generated, and leftover
    budget (budget mod k) goes unused.
    """
    k = len(policies)
    if k == 0:
        raise ValueError("no policies to evaluate")
    if budget < k:
        raise ValueError(f"budget {budget} is below one episode per policy (k={k})")
    per_policy = budget // k
    reports = []
    for j, policy in enumerate(policies):
        returns = tuple(
            domain.rollout(policy, spawn_seed(seed, j * per_policy + i)).return_value
            for i in range(per_policy)
        )
        reports.append(EvalReport(policy.theta, _mean(returns), per_policy, returns))
    return reports


def select_best(reports: Sequence[EvalReport]) -> int:
    """Index of the report with the highest estimate; ties go to the lowest index."""
    if not reports:
        raise ValueError("no reports to select from")
    best = 0
    for i in range(1, len(reports)):
        if reports[i].estimate > reports[best].estimate:
            best = i
    return best


# ---------------------------------------------------------------------------
# Reuse of truncated on-policy episodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StoredEpisode:
    """A stored (possibly truncated) observation sequence for later reuse.

    ``is_full`` marks sequences that reach the domain horizon; those can
    score any policy.  A truncated sequence can score a policy only if the
    policy halts within the observed part -- otherwise the halt step, and
    hence the return, is unknown.  Estimates built this way are biased
    toward late-halting policies (they are scored on fewer sequences);
    callers should report the per-policy sample counts alongside.
    """

    feature_names: tuple[str, ...]
    observations: tuple[Observation, ...]
    is_full: bool


def usable_return(
    policy: Policy, stored: StoredEpisode, reward: RewardModel
) -> float | None:
    """Replayed return of ``policy`` on a stored episode, or None if unusable."""
    t = policy.first_halt(stored.feature_names, stored.observations)
    if t is None:
        if not stored.is_full:
            return None
        t = len(stored.observations)
    return reward.return_of(Prefix(stored.feature_names, stored.observations[:t]))


# ---------------------------------------------------------------------------
# Pool serialization
# ---------------------------------------------------------------------------

_POOL_META_SUFFIX = ".meta.json"


def _pool_meta_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + _POOL_META_SUFFIX)


def save_pool_csv(pool: TrajectoryPool, path: str | Path) -> Path:
    """Write a pool as CSV rows (trajectory_id, step, feature_1..m).

    Feature names, domain id, horizon and all seeds go to a JSON sidecar
    next to the CSV.  Floats are written with ``repr`` so the round trip
    through :func:`load_pool_csv` is bit-exact.
    """
    if len(pool) == 0:
        raise ValueError("refusing to serialize an empty pool")
    path = Path(path)
    names = pool.feature_names
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["trajectory_id", "step"] + [f"feature_{j + 1}" for j in range(len(names))]
        )
        for i, traj in enumerate(pool):
            for step, row in enumerate(traj.observations, start=1):
                writer.writerow([i, step] + [repr(v) for v in row])
    meta = {
        "domain_id": pool[0].domain_id,
        "horizon": pool.max_length,
        "seed": pool.created_seed,
        "feature_names": list(names),
        "trajectory_seeds": [t.seed for t in pool],
    }
    with open(_pool_meta_path(path), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return path


def load_pool_csv(path: str | Path) -> TrajectoryPool:
    """Inverse of :func:`save_pool_csv` (bit-exact)."""
    path = Path(path)
    with open(_pool_meta_path(path)) as fh:
        meta = json.load(fh)
    names = tuple(meta["feature_names"])
    seeds = meta["trajectory_seeds"]
    domain_id = meta["domain_id"]
    by_trajectory: dict[int, list[tuple[int, Observation]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["trajectory_id", "step"] + [
            f"feature_{j + 1}" for j in range(len(names))
        ]
        if header != expected:
            raise ValueError(f"unexpected pool CSV header: {header}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise ValueError(f"line {line_no}: expected {len(expected)} columns")
            tid, step = int(row[0]), int(row[1])
            values = tuple(float(v) for v in row[2:])
            by_trajectory.setdefault(tid, []).append((step, values))
    trajectories = []
    for tid in sorted(by_trajectory):
        steps = sorted(by_trajectory[tid])
        if [s for s, _ in steps] != list(range(1, len(steps) + 1)):
            raise ValueError(f"trajectory {tid}: steps are not contiguous from 1")
        trajectories.append(
            FullTrajectory(
                names, tuple(obs for _, obs in steps), seeds[tid], domain_id
            )
        )
    return TrajectoryPool(tuple(trajectories), meta["seed"])
