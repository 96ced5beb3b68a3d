"""Stein variational gradient descent."""

from __future__ import annotations

import numpy as np

from .ensemble import ParticleEnsemble, TargetModel
from .kernels import MetricState, kernel_matrix


def checked_gradients(model: TargetModel, X: np.ndarray) -> np.ndarray:
    grads = np.asarray(model.grad_log_density(X), dtype=float)
    bad = ~np.all(np.isfinite(grads), axis=1)
    if bad.any():
        raise FloatingPointError(f"gradient of log density is not finite at particle {int(np.argmax(bad))}")
    return grads


def stein_direction(X: np.ndarray, grads: np.ndarray, K: np.ndarray, metric: MetricState) -> np.ndarray:
    """Empirical steepest-descent direction at every particle.

    Row ``s`` is ``(1/n) sum_j [k(x_j, x_s) grad log pi(x_j) + grad_{x_j} k(x_j, x_s)]``.
    The second sum is evaluated in closed form: with ``P = M / g``,
    ``sum_j grad_{x_j} k(x_j, x_s) = -P (sum_j k_js x_j - (sum_j k_js) x_s)``.
    """
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    colsum = K.sum(axis=0)
    drive = K.T @ grads
    spread = (K.T @ Xc - colsum[:, None] * Xc) @ metric.scaled
    return (drive - spread) / n


def svgd_direction(
    ensemble: ParticleEnsemble,
    model: TargetModel,
    metric: MetricState,
) -> np.ndarray:
    """Update direction ``G`` evaluated at each particle, shape ``(n, d)``."""
    X = ensemble.positions
    grads = checked_gradients(model, X)
    return stein_direction(X, grads, kernel_matrix(metric, X), metric)


def svgd_step(
    ensemble: ParticleEnsemble,
    model: TargetModel,
    metric: MetricState,
    step_size: float,
) -> ParticleEnsemble:
    """One SVGD iteration: every particle moves along ``G`` from the same snapshot."""
    if step_size < 0:
        raise ValueError("step size must be nonnegative")
    G = svgd_direction(ensemble, model, metric)
    return ensemble.advance(ensemble.positions + step_size * G)
