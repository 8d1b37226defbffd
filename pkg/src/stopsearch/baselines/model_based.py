"""Model-based baseline: fit a student model, then tune the threshold on
data simulated from the fit.

The fitted model is used for everything downstream -- simulating
trajectories and judging the final attempt -- so a mismatched model family
biases both the dynamics and the objective it optimizes.  The deployed
policy is the fitted model's threshold rule with the best simulated
threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._seeding import spawn_seed
from ..core import Policy
from ..environments.tutoring import AfmSimDomain, BktDomain
from ..evaluation import TrajectoryPool, evaluate_batch, gather_full, select_best
from ..policies import AfmThresholdPolicy, BktThresholdPolicy
from .hmm_fit import fit_bkt_mle, outcome_matrix


@dataclass(frozen=True)
class DomainTemplate:
    """Which student-model family to fit, plus the known cost structure."""

    model: str  # "bkt" (matched to the bundled simulator) or "afm"
    horizon: int
    posttest_penalty: float = 20.0
    problem_cost: float = 1.0

    def validate(self) -> None:
        if self.model not in ("bkt", "afm"):
            raise ValueError(f"unknown template model {self.model!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")


def fit_afm(pool: TrajectoryPool, ridge: float = 1e-6) -> tuple[float, float]:
    """Logistic regression of outcome on the prior count of correct attempts.

    Newton-Raphson with a tiny ridge term so separable (e.g. all-correct)
    pools stay finite.  Returns (intercept, slope).
    """
    obs = outcome_matrix(pool)
    n_correct_before = np.concatenate(
        [np.zeros((obs.shape[0], 1)), np.cumsum(obs, axis=1)[:, :-1]], axis=1
    )
    x = n_correct_before.ravel()
    y = obs.ravel()
    beta = np.zeros(2)
    design = np.stack([np.ones_like(x), x], axis=1)
    for _ in range(50):
        z = design @ beta
        w = 1.0 / (1.0 + np.exp(-z))
        gradient = design.T @ (y - w) - ridge * beta
        weights = np.maximum(w * (1.0 - w), 1e-12)
        hessian = design.T @ (design * weights[:, None]) + ridge * np.eye(2)
        step = np.linalg.solve(hessian, gradient)
        beta = beta + step
        if float(np.abs(step).max()) < 1e-10:
            break
    return float(beta[0]), float(beta[1])


def model_based_policy(
    pool: TrajectoryPool,
    domain_template: DomainTemplate,
    threshold_grid: tuple[float, ...],
    sim_trajectories: int = 2000,
    seed: int = 0,
    em_restarts: int = 10,
) -> Policy:
    """Fit the template's model on ``pool``, then pick the best threshold.

    Every candidate threshold is scored on one shared pool simulated from
    the fitted model (common random numbers across the grid), under the
    fitted model's own belief about the final attempt.  Ties go to the
    earliest grid entry.
    """
    domain_template.validate()
    if not threshold_grid:
        raise ValueError("threshold_grid must be nonempty")
    if domain_template.model == "bkt":
        fitted = fit_bkt_mle(pool, n_restarts=em_restarts, seed=spawn_seed(seed, 0))
        sim_domain = BktDomain(
            fitted.p_i,
            fitted.p_t,
            fitted.p_g,
            fitted.p_s,
            horizon=domain_template.horizon,
            posttest_penalty=domain_template.posttest_penalty,
            problem_cost=domain_template.problem_cost,
        )
        candidates = [
            BktThresholdPolicy(fitted.p_i, fitted.p_t, fitted.p_g, fitted.p_s, t0)
            for t0 in threshold_grid
        ]
    else:
        beta1, beta2 = fit_afm(pool)
        sim_domain = AfmSimDomain(
            beta1,
            beta2,
            horizon=domain_template.horizon,
            posttest_penalty=domain_template.posttest_penalty,
            problem_cost=domain_template.problem_cost,
        )
        candidates = [AfmThresholdPolicy(beta1, beta2, t0) for t0 in threshold_grid]
    sim_pool = gather_full(sim_domain, sim_trajectories, spawn_seed(seed, 1))
    reports = evaluate_batch(candidates, sim_pool, sim_domain.reward)
    return candidates[select_best(reports)]
