"""Bayesian-optimization baselines over a policy class.

``bo_search`` runs classic GP-EI: propose the policy maximizing expected
improvement under the surrogate, execute it for one episode, feed the
realized return back.  ``bo_re_search`` additionally replays every
proposed policy on all previously stored trajectories and feeds the GP
the mean of the fresh return and the replayed ones, which shrinks the
per-proposal observation noise as the store grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .._seeding import generator, spawn_seed
from ..core import Policy, StoppingDomain
from ..evaluation import StoredEpisode, usable_return
from ..search import PolicyClass
from .gp import GpSurrogate, expected_improvement

_PROPOSAL_STREAM = 11
_GP_STREAM = 12
_EPISODE_STREAM = 13


@dataclass(frozen=True)
class BoConfig:
    seed: int = 0
    n_init: int = 3  # uniformly sampled policies before the GP takes over
    refit_every: int = 5  # hyperparameter refit cadence, in observations
    ei_candidates: int = 256
    ei_polish_starts: int = 3
    gp_restarts: int = 2

    def validate(self) -> None:
        if self.n_init < 1:
            raise ValueError("n_init must be at least 1")
        if self.refit_every < 1:
            raise ValueError("refit_every must be at least 1")
        if self.ei_candidates < 1:
            raise ValueError("ei_candidates must be at least 1")


@dataclass
class BoResult:
    episode_returns: list[float]
    cumulative_mean: list[float]
    observed_values: list[float]  # what the surrogate was fed
    proposed_policies: list[Policy]
    best_policy: Policy


def _denormalize(u: np.ndarray, box) -> tuple[float, ...]:
    return tuple(lo + float(v) * (hi - lo) for v, (lo, hi) in zip(u, box))


def _propose(
    gp: GpSurrogate, config: BoConfig, rng: np.random.Generator
) -> np.ndarray:
    candidates = rng.random((config.ei_candidates, gp.dim))
    incumbent = gp.incumbent()
    mean, variance = gp.posterior(candidates)
    scores = expected_improvement(mean, variance, incumbent)
    order = np.argsort(-scores)

    def negative_ei(u: np.ndarray) -> float:
        m, v = gp.posterior(u[None, :])
        return -float(expected_improvement(m, v, incumbent)[0])

    best_u = candidates[int(order[0])]
    best_score = -float(scores[int(order[0])])
    for start_index in order[: config.ei_polish_starts]:
        result = scipy.optimize.minimize(
            negative_ei,
            candidates[int(start_index)],
            method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * gp.dim,
        )
        if result.fun < best_score:
            best_score, best_u = float(result.fun), np.clip(result.x, 0.0, 1.0)
    return best_u


def _bo_loop(
    domain: StoppingDomain,
    policy_class: PolicyClass,
    total_episodes: int,
    config: BoConfig,
    reuse_store: bool,
) -> BoResult:
    if total_episodes < 2:
        raise ValueError("need at least 2 episodes")
    config.validate()
    proposal_rng = generator(spawn_seed(config.seed, _PROPOSAL_STREAM))
    gp_rng = generator(spawn_seed(config.seed, _GP_STREAM))
    gp = GpSurrogate(policy_class.dim)
    store: list[StoredEpisode] = []
    episode_returns: list[float] = []
    cumulative_mean: list[float] = []
    observed_values: list[float] = []
    proposed_policies: list[Policy] = []
    last_fit_size = 0
    running_sum = 0.0
    for episode_index in range(1, total_episodes + 1):
        if episode_index <= config.n_init or gp.n_observed < 2:
            u = proposal_rng.random(policy_class.dim)
        else:
            if gp.n_observed - last_fit_size >= config.refit_every or last_fit_size < 2:
                gp.fit_hyperparameters(gp_rng, n_restarts=config.gp_restarts)
                last_fit_size = gp.n_observed
            u = _propose(gp, config, proposal_rng)
        theta = _denormalize(u, policy_class.parameter_box)
        policy = policy_class.make(theta)
        episode = domain.rollout(
            policy, spawn_seed(config.seed, _EPISODE_STREAM * 1_000_003 + episode_index)
        )
        observed = episode.return_value
        if reuse_store and store:
            replayed = [
                value
                for stored in store
                if (value := usable_return(policy, stored, domain.reward)) is not None
            ]
            if replayed:
                observed = math.fsum([episode.return_value] + replayed) / (
                    len(replayed) + 1
                )
        gp.add(u, observed)
        if reuse_store:
            store.append(
                StoredEpisode(
                    domain.feature_names,
                    episode.observations,
                    len(episode.observations) == domain.horizon,
                )
            )
        running_sum += episode.return_value
        episode_returns.append(episode.return_value)
        cumulative_mean.append(running_sum / episode_index)
        observed_values.append(observed)
        proposed_policies.append(policy)
    if gp.n_observed >= 2:
        gp.fit_hyperparameters(gp_rng, n_restarts=config.gp_restarts)
        best_index = gp.best_observed_index()
    else:
        best_index = int(np.argmax(observed_values))
    return BoResult(
        episode_returns,
        cumulative_mean,
        observed_values,
        proposed_policies,
        proposed_policies[best_index],
    )


def bo_search(
    domain: StoppingDomain,
    policy_class: PolicyClass,
    total_episodes: int,
    config: BoConfig,
) -> BoResult:
    """GP-EI policy search with one fresh episode per proposal."""
    return _bo_loop(domain, policy_class, total_episodes, config, reuse_store=False)


def bo_re_search(
    domain: StoppingDomain,
    policy_class: PolicyClass,
    total_episodes: int,
    config: BoConfig,
) -> BoResult:
    """GP-EI with trajectory reuse: each proposal's observation averages its
    fresh return with replayed returns on all stored (usable) trajectories."""
    return _bo_loop(domain, policy_class, total_episodes, config, reuse_store=True)
