"""Maximum-likelihood fitting of the two-state mastery model.

EM (Baum-Welch specialized to the absorbing two-state chain) over a pool
of binary-outcome trajectories, vectorized across trajectories.  The
likelihood is multimodal (guess/slip mirror optima), so the fit restarts
from several random initializations and keeps the best.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._seeding import generator
from ..evaluation import TrajectoryPool

_PROB_FLOOR = 1e-4


@dataclass(frozen=True)
class FittedBkt:
    """Point estimates plus the training-pool log-likelihood they achieve."""

    p_i: float
    p_t: float
    p_g: float
    p_s: float
    log_likelihood: float


def outcome_matrix(pool: TrajectoryPool) -> np.ndarray:
    """Pool of binary trajectories as an (n, H) float matrix."""
    if len(pool) == 0:
        raise ValueError("cannot fit on an empty pool")
    lengths = {len(t) for t in pool}
    if len(lengths) > 1:
        raise ValueError("fitting requires equal-length trajectories")
    idx = pool.feature_names.index("correct") if "correct" in pool.feature_names else 0
    data = np.array(
        [[row[idx] for row in t.observations] for t in pool], dtype=float
    )
    if not np.isin(data, (0.0, 1.0)).all():
        raise ValueError("outcomes must be binary")
    return data


def _emissions(obs: np.ndarray, p_g: float, p_s: float) -> np.ndarray:
    """Per-state observation likelihoods, shape (n, H, 2)."""
    n, h = obs.shape
    b = np.empty((n, h, 2))
    b[:, :, 0] = np.where(obs == 1.0, p_g, 1.0 - p_g)
    b[:, :, 1] = np.where(obs == 1.0, 1.0 - p_s, p_s)
    return b


def _forward_backward(
    obs: np.ndarray, p_i: float, p_t: float, p_g: float, p_s: float
) -> tuple[np.ndarray, np.ndarray, float]:
    """Scaled forward-backward pass.

    Returns per-step state posteriors ``gamma`` (n, H, 2), expected
    unmastered-to-mastered transition counts ``xi_um`` (n, H-1), and the
    total log-likelihood.
    """
    n, h = obs.shape
    b = _emissions(obs, p_g, p_s)
    alpha = np.empty((n, h, 2))
    scale = np.empty((n, h))
    prior = np.array([1.0 - p_i, p_i])
    a = prior[None, :] * b[:, 0, :]
    scale[:, 0] = a.sum(axis=1)
    alpha[:, 0, :] = a / scale[:, 0, None]
    stay_u, to_m = 1.0 - p_t, p_t
    for t in range(1, h):
        predicted_u = alpha[:, t - 1, 0] * stay_u
        predicted_m = alpha[:, t - 1, 0] * to_m + alpha[:, t - 1, 1]
        a = np.stack([predicted_u, predicted_m], axis=1) * b[:, t, :]
        scale[:, t] = a.sum(axis=1)
        alpha[:, t, :] = a / scale[:, t, None]
    beta = np.empty((n, h, 2))
    beta[:, h - 1, :] = 1.0
    for t in range(h - 2, -1, -1):
        nxt = b[:, t + 1, :] * beta[:, t + 1, :]
        beta[:, t, 0] = (stay_u * nxt[:, 0] + to_m * nxt[:, 1]) / scale[:, t + 1]
        beta[:, t, 1] = nxt[:, 1] / scale[:, t + 1]
    gamma = alpha * beta
    gamma /= gamma.sum(axis=2, keepdims=True)
    xi_um = np.empty((n, h - 1))
    for t in range(h - 1):
        xi_um[:, t] = (
            alpha[:, t, 0]
            * to_m
            * b[:, t + 1, 1]
            * beta[:, t + 1, 1]
            / scale[:, t + 1]
        )
    return gamma, xi_um, float(np.log(scale).sum())


def bkt_log_likelihood(
    p_i: float, p_t: float, p_g: float, p_s: float, pool: TrajectoryPool
) -> float:
    """Exact log-likelihood of a pool under given parameters."""
    obs = outcome_matrix(pool)
    _, _, ll = _forward_backward(obs, p_i, p_t, p_g, p_s)
    return ll


def _em(
    obs: np.ndarray,
    start: tuple[float, float, float, float],
    max_iter: int,
    tol: float,
) -> tuple[tuple[float, float, float, float], float]:
    p_i, p_t, p_g, p_s = start
    previous = -np.inf
    for _ in range(max_iter):
        gamma, xi_um, ll = _forward_backward(obs, p_i, p_t, p_g, p_s)
        if np.isfinite(previous) and ll - previous < tol:
            # ll is exactly the likelihood of the current parameters.
            return (p_i, p_t, p_g, p_s), ll
        previous = ll
        correct = obs == 1.0
        g_u, g_m = gamma[:, :, 0], gamma[:, :, 1]
        p_i = float(g_m[:, 0].mean())
        denom_t = g_u[:, :-1].sum()
        p_t = float(xi_um.sum() / denom_t) if denom_t > 0 else _PROB_FLOOR
        denom_g = g_u.sum()
        p_g = float((g_u * correct).sum() / denom_g) if denom_g > 0 else _PROB_FLOOR
        denom_s = g_m.sum()
        p_s = float((g_m * ~correct).sum() / denom_s) if denom_s > 0 else _PROB_FLOOR
        p_i, p_t, p_g, p_s = (
            min(1.0 - _PROB_FLOOR, max(_PROB_FLOOR, v)) for v in (p_i, p_t, p_g, p_s)
        )
    _, _, ll = _forward_backward(obs, p_i, p_t, p_g, p_s)
    return (p_i, p_t, p_g, p_s), ll


def fit_bkt_mle(
    pool: TrajectoryPool,
    n_restarts: int = 10,
    max_iter: int = 200,
    tol: float = 1e-7,
    seed: int = 0,
) -> FittedBkt:
    """EM fit with random restarts; the best local optimum wins.

    Each restart's final log-likelihood is at least its starting one (EM
    never decreases the likelihood), and the returned fit is the best
    across restarts.
    """
    obs = outcome_matrix(pool)
    rng = generator(seed)
    best: tuple[tuple[float, float, float, float], float] | None = None
    for restart in range(n_restarts):
        if restart == 0:
            start = (0.3, 0.2, 0.2, 0.1)
        else:
            start = (
                float(rng.uniform(0.05, 0.95)),
                float(rng.uniform(0.05, 0.95)),
                float(rng.uniform(0.05, 0.45)),
                float(rng.uniform(0.05, 0.45)),
            )
        params, ll = _em(obs, start, max_iter, tol)
        if best is None or ll > best[1]:
            best = (params, ll)
    assert best is not None
    (p_i, p_t, p_g, p_s), ll = best
    return FittedBkt(p_i, p_t, p_g, p_s, ll)
