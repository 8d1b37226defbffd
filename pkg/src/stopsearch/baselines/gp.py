"""Gaussian-process surrogate with expected improvement.

A small, self-contained GP regression implementation: squared-exponential
kernel with per-dimension length-scales, signal and noise variances, and
hyperparameters fit by multi-start L-BFGS-B on the log marginal
likelihood (analytic gradients).  Inputs are expected in the unit box;
targets are standardized internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.special import ndtr

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class GpNumericError(RuntimeError):
    """Kernel matrix stayed non-positive-definite after jitter escalation."""

    def __init__(self, message: str, context: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.context = context or {}


@dataclass
class GpHyperparams:
    log_lengthscales: np.ndarray
    log_signal: float
    log_noise: float

    def pack(self) -> np.ndarray:
        return np.concatenate(
            [self.log_lengthscales, [self.log_signal, self.log_noise]]
        )

    @classmethod
    def unpack(cls, vector: np.ndarray) -> "GpHyperparams":
        return cls(np.asarray(vector[:-2], dtype=float), float(vector[-2]), float(vector[-1]))


class GpSurrogate:
    """GP regression over observed (theta, return) pairs."""

    def __init__(
        self,
        dim: int,
        lengthscale_bounds: tuple[float, float] = (0.05, 10.0),
        signal_bounds: tuple[float, float] = (0.05, 5.0),
        noise_bounds: tuple[float, float] = (1e-3, 2.0),
    ) -> None:
        self.dim = dim
        self._x: list[np.ndarray] = []
        self._y: list[float] = []
        self._log_bounds = (
            [(math.log(lengthscale_bounds[0]), math.log(lengthscale_bounds[1]))] * dim
            + [(math.log(signal_bounds[0]), math.log(signal_bounds[1]))]
            + [(math.log(noise_bounds[0]), math.log(noise_bounds[1]))]
        )
        self.hyperparams = GpHyperparams(
            log_lengthscales=np.zeros(dim) + math.log(0.5),
            log_signal=0.0,
            log_noise=math.log(0.3),
        )

    # -- data ---------------------------------------------------------------

    def add(self, x: np.ndarray, y: float) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}")
        self._x.append(x)
        self._y.append(float(y))

    @property
    def n_observed(self) -> int:
        return len(self._y)

    @property
    def x_observed(self) -> np.ndarray:
        return np.array(self._x) if self._x else np.empty((0, self.dim))

    @property
    def y_observed(self) -> np.ndarray:
        return np.array(self._y)

    def _standardized_y(self) -> tuple[np.ndarray, float, float]:
        y = self.y_observed
        mean = float(y.mean())
        std = float(y.std())
        if std < 1e-12:
            std = 1.0
        return (y - mean) / std, mean, std

    # -- kernel -------------------------------------------------------------

    def _scaled_sqdists(self, a: np.ndarray, b: np.ndarray, hp: GpHyperparams):
        ell = np.exp(hp.log_lengthscales)
        diff = (a[:, None, :] - b[None, :, :]) / ell
        return diff, (diff**2).sum(axis=2)

    def _kernel(self, a: np.ndarray, b: np.ndarray, hp: GpHyperparams) -> np.ndarray:
        _, sq = self._scaled_sqdists(a, b, hp)
        return math.exp(2.0 * hp.log_signal) * np.exp(-0.5 * sq)

    def _factorize(self, hp: GpHyperparams) -> tuple[np.ndarray, np.ndarray]:
        x = self.x_observed
        k = self._kernel(x, x, hp)
        noise = math.exp(2.0 * hp.log_noise)
        for jitter in _JITTERS:
            try:
                chol = scipy.linalg.cholesky(
                    k + (noise + jitter) * np.eye(len(x)), lower=True
                )
                return chol, k
            except (scipy.linalg.LinAlgError, ValueError):
                continue  # non-PD or non-finite: escalate the jitter
        raise GpNumericError(
            "kernel matrix is not positive definite after jitter escalation",
            context={
                "n_observed": self.n_observed,
                "hyperparams": hp.pack().tolist(),
                "jitters_tried": list(_JITTERS),
            },
        )

    # -- marginal likelihood -------------------------------------------------

    def _neg_log_marginal(self, packed: np.ndarray) -> tuple[float, np.ndarray]:
        hp = GpHyperparams.unpack(packed)
        x = self.x_observed
        y_std, _, _ = self._standardized_y()
        n = len(x)
        diff, sq = self._scaled_sqdists(x, x, hp)
        signal = math.exp(2.0 * hp.log_signal)
        noise = math.exp(2.0 * hp.log_noise)
        base = signal * np.exp(-0.5 * sq)
        k = base + noise * np.eye(n)
        chol = None
        for jitter in _JITTERS:
            try:
                chol = scipy.linalg.cholesky(k + jitter * np.eye(n), lower=True)
                break
            except (scipy.linalg.LinAlgError, ValueError):
                continue
        if chol is None:
            return 1e25, np.zeros_like(packed)
        alpha = scipy.linalg.cho_solve((chol, True), y_std)
        lml = (
            -0.5 * float(y_std @ alpha)
            - float(np.log(np.diag(chol)).sum())
            - 0.5 * n * math.log(2.0 * math.pi)
        )
        kinv = scipy.linalg.cho_solve((chol, True), np.eye(n))
        inner = np.outer(alpha, alpha) - kinv
        grad = np.empty_like(packed)
        for d in range(self.dim):
            dk = base * diff[:, :, d] ** 2
            grad[d] = 0.5 * float((inner * dk).sum())
        grad[self.dim] = 0.5 * float((inner * (2.0 * base)).sum())
        grad[self.dim + 1] = 0.5 * float(np.trace(inner) * 2.0 * noise)
        return -lml, -grad

    def fit_hyperparameters(
        self, rng: np.random.Generator, n_restarts: int = 2
    ) -> None:
        """Multi-start marginal-likelihood ascent; keeps the best optimum."""
        if self.n_observed < 2:
            return
        starts = [self.hyperparams.pack()]
        lows = np.array([b[0] for b in self._log_bounds])
        highs = np.array([b[1] for b in self._log_bounds])
        for _ in range(n_restarts):
            starts.append(lows + rng.random(len(lows)) * (highs - lows))
        best_value, best_packed = np.inf, starts[0]
        for start in starts:
            result = scipy.optimize.minimize(
                self._neg_log_marginal,
                np.clip(start, lows, highs),
                jac=True,
                method="L-BFGS-B",
                bounds=self._log_bounds,
            )
            if result.fun < best_value:
                best_value, best_packed = float(result.fun), result.x
        self.hyperparams = GpHyperparams.unpack(best_packed)

    # -- prediction -----------------------------------------------------------

    def posterior(self, query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and latent variance (no observation noise) at
        ``query`` points, in raw target units."""
        query = np.atleast_2d(np.asarray(query, dtype=float))
        if self.n_observed == 0:
            signal = math.exp(2.0 * self.hyperparams.log_signal)
            return np.zeros(len(query)), np.full(len(query), signal)
        y_std, mean, std = self._standardized_y()
        hp = self.hyperparams
        chol, _ = self._factorize(hp)
        alpha = scipy.linalg.cho_solve((chol, True), y_std)
        k_star = self._kernel(self.x_observed, query, hp)
        posterior_mean = k_star.T @ alpha
        v = scipy.linalg.solve_triangular(chol, k_star, lower=True)
        signal = math.exp(2.0 * hp.log_signal)
        variance = np.maximum(signal - (v**2).sum(axis=0), 0.0)
        return mean + std * posterior_mean, (std**2) * variance

    def incumbent(self) -> float:
        """Best posterior mean among observed points (noisy-EI convention)."""
        mean, _ = self.posterior(self.x_observed)
        return float(mean.max())

    def best_observed_index(self) -> int:
        """Index of the observed point with the highest posterior mean."""
        mean, _ = self.posterior(self.x_observed)
        return int(np.argmax(mean))


def expected_improvement(
    mean: np.ndarray, variance: np.ndarray, incumbent: float
) -> np.ndarray:
    """EI of candidate points against an incumbent value (nonnegative)."""
    mean = np.asarray(mean, dtype=float)
    std = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    improvement = mean - incumbent
    out = np.maximum(improvement, 0.0)
    positive = std > 1e-12
    z = improvement[positive] / std[positive]
    out[positive] = std[positive] * (z * ndtr(z) + np.exp(-0.5 * z * z) / _SQRT_2PI)
    return out
