"""Gather-full / search / execute (GFSE) policy search.

The method is three steps: collect n full-horizon trajectories by never
halting, score every candidate policy on that shared pool by replay, and
from then on execute the empirical argmax.  ``n`` can be an explicit
budget or certified via :mod:`stopsearch.bounds`.

``gfse_re`` is the online variant: after an initial batch of full
trajectories it re-runs the search every episode, folding each executed
episode's (possibly truncated) trajectory back into the evaluation store.
Truncated trajectories score only policies that halt within them, so the
per-policy sample counts diverge; the reports expose those counts and no
debiasing is attempted.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ._seeding import generator, spawn_seed
from .bounds import BoundInputs, required_trajectories
from .core import Policy, StoppingDomain
from .evaluation import (
    EvalReport,
    StoredEpisode,
    TrajectoryPool,
    evaluate_batch,
    gather_full,
    select_best,
    usable_return,
)

_GATHER_STREAM = 0
_CANDIDATE_STREAM = 1
_EPISODE_STREAM = 2


@dataclass(frozen=True)
class PolicyClass:
    """A parameterized family of policies with a box-shaped parameter space.

    ``d_hint`` is a heuristic VC-dimension (free threshold parameters + 1)
    used as a default for the sample bound; it is not a rigorous capacity
    computation.
    """

    class_id: str
    parameter_box: tuple[tuple[float, float], ...]
    d_hint: int
    factory: Callable[[tuple[float, ...]], Policy]

    @property
    def dim(self) -> int:
        return len(self.parameter_box)

    def make(self, theta: Sequence[float]) -> Policy:
        """Instantiate the policy with parameters ``theta``."""
        return self.factory(tuple(float(v) for v in theta))

    def sample(self, rng: np.random.Generator) -> Policy:
        """Draw a policy uniformly from the parameter box."""
        u = rng.random(self.dim)
        theta = tuple(
            lo + u_i * (hi - lo) for u_i, (lo, hi) in zip(u, self.parameter_box)
        )
        return self.make(theta)


@dataclass(frozen=True)
class SearchConfig:
    """How to search a policy class: currently uniform random candidates."""

    method: str = "random_search"
    n_candidates: int = 500
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.method != "random_search":
            raise ValueError(f"unknown search method {self.method!r}")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be at least 1")


@dataclass(frozen=True)
class GfseResult:
    best_policy: Policy
    best_index: int
    reports: list[EvalReport]
    pool_size: int


def sample_candidates(
    policy_class: PolicyClass, config: SearchConfig, rng: np.random.Generator
) -> list[Policy]:
    return [policy_class.sample(rng) for _ in range(config.n_candidates)]


def search_on_pool(
    pool: TrajectoryPool,
    policy_class: PolicyClass,
    config: SearchConfig,
    reward,
) -> GfseResult:
    """Score sampled candidates on an existing pool and keep the argmax."""
    rng = generator(spawn_seed(config.seed, _CANDIDATE_STREAM))
    candidates = sample_candidates(policy_class, config, rng)
    reports = evaluate_batch(candidates, pool, reward, workers=config.workers)
    best = select_best(reports)
    return GfseResult(candidates[best], best, reports, len(pool))


def gfse(
    domain: StoppingDomain,
    policy_class: PolicyClass,
    config: SearchConfig,
    budget_or_bound: int | BoundInputs,
) -> GfseResult:
    """Gather full trajectories, search the class on them, return the argmax.

    ``budget_or_bound`` is either an explicit trajectory count or
    :class:`BoundInputs`, in which case the certified count is used.
    The entire run is reproducible from ``config.seed``.
    """
    if isinstance(budget_or_bound, BoundInputs):
        n = required_trajectories(budget_or_bound)
    else:
        n = int(budget_or_bound)
    pool = gather_full(domain, n, spawn_seed(config.seed, _GATHER_STREAM))
    return search_on_pool(pool, policy_class, config, domain.reward)


def execute(
    policy: Policy, domain: StoppingDomain, episodes: int, seed: int
) -> list[float]:
    """Run a policy live for a number of episodes; returns per-episode returns."""
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    return [
        domain.rollout(policy, spawn_seed(seed, i)).return_value
        for i in range(episodes)
    ]


def _search_stored(
    store: Sequence[StoredEpisode],
    policy_class: PolicyClass,
    config: SearchConfig,
    reward,
    rng: np.random.Generator,
) -> tuple[Policy, list[EvalReport]]:
    """Search over candidates scored on a mixed full/truncated store."""
    candidates = sample_candidates(policy_class, config, rng)
    reports = []
    for candidate in candidates:
        returns = []
        for episode in store:
            value = usable_return(candidate, episode, reward)
            if value is not None:
                returns.append(value)
        estimate = math.fsum(returns) / len(returns) if returns else -np.inf
        reports.append(
            EvalReport(candidate.theta, estimate, len(returns), tuple(returns))
        )
    best = select_best(reports)
    return candidates[best], reports


@dataclass
class GfseReResult:
    """Episode-by-episode record of an online GFSE run."""

    episode_returns: list[float] = field(default_factory=list)
    cumulative_mean: list[float] = field(default_factory=list)
    episode_policies: list[Policy | None] = field(default_factory=list)
    final_policy: Policy | None = None


def gfse_re(
    domain: StoppingDomain,
    policy_class: PolicyClass,
    config: SearchConfig,
    initial_budget: int,
    total_episodes: int,
) -> GfseReResult:
    """Online GFSE: gather, then re-search before every executed episode.

    Episodes 1..initial_budget gather full trajectories (their return is
    the full-horizon return).  Every later episode re-runs the candidate
    search on everything stored so far -- full trajectories score any
    candidate, truncated ones only candidates that halt inside them --
    then executes the winner live and stores the resulting trajectory.
    """
    if initial_budget < 1:
        raise ValueError("initial_budget must be at least 1")
    if total_episodes <= initial_budget:
        raise ValueError("total_episodes must exceed initial_budget")
    result = GfseReResult()
    store: list[StoredEpisode] = []
    reward = domain.reward
    search_rng = generator(spawn_seed(config.seed, _CANDIDATE_STREAM))
    running_sum = 0.0
    last_policy: Policy | None = None
    for episode_index in range(1, total_episodes + 1):
        episode_seed = spawn_seed(config.seed, _EPISODE_STREAM * 1_000_003 + episode_index)
        if episode_index <= initial_budget:
            trajectory = domain.sample_full(episode_seed)
            prefix = trajectory.prefix(len(trajectory))
            episode_return = reward.return_of(prefix)
            store.append(
                StoredEpisode(trajectory.feature_names, trajectory.observations, True)
            )
            result.episode_policies.append(None)
        else:
            policy, _ = _search_stored(store, policy_class, config, reward, search_rng)
            episode = domain.rollout(policy, episode_seed)
            episode_return = episode.return_value
            store.append(
                StoredEpisode(
                    domain.feature_names,
                    episode.observations,
                    len(episode.observations) == domain.horizon,
                )
            )
            result.episode_policies.append(policy)
            last_policy = policy
        running_sum += episode_return
        result.episode_returns.append(episode_return)
        result.cumulative_mean.append(running_sum / episode_index)
    result.final_policy = last_policy
    return result
