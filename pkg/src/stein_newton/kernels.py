"""Gaussian kernels with a median-heuristic or curvature-averaged metric.

Both kernel families share one formula,

    k(x, x') = exp(-(x - x')^T M (x - x') / (2 g)),

so the isotropic kernel ``exp(-|x - x'|^2 / h)`` is stored as ``M = (2/h) I``
with ``g = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .ensemble import ParticleEnsemble, TargetModel

ISOTROPIC = "isotropic"
SCALED_HESSIAN = "scaled-hessian"

Scaling = Union[Callable[[int], float], float, str]


class DegenerateBandwidthError(ValueError):
    pass


@dataclass(frozen=True)
class MetricState:
    """Metric ``M`` and scaling ``g`` for one iteration."""

    M: np.ndarray
    g: float
    variant: str

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ValueError("metric must be square")
        if not self.g > 0:
            raise ValueError("scaling g must be positive")
        M = 0.5 * (M + M.T)
        M.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "g", float(self.g))

    @property
    def scaled(self) -> np.ndarray:
        """``M / g``, the matrix that actually enters the exponent."""
        return self.M / self.g

    @classmethod
    def isotropic(cls, bandwidth: float, d: int) -> "MetricState":
        return cls((2.0 / bandwidth) * np.eye(d), 1.0, ISOTROPIC)


@dataclass(frozen=True)
class KernelEval:
    value: float
    grad1: np.ndarray


def resolve_scaling(g: Scaling, d: int) -> float:
    """Turn a scaling spec into a number: ``"d"``, a constant, or a callable of ``d``."""
    if callable(g):
        val = float(g(d))
    elif isinstance(g, str):
        if g != "d":
            raise ValueError(f"unknown scaling {g!r}; use 'd' or a positive number")
        val = float(d)
    else:
        val = float(g)
    if not val > 0:
        raise ValueError(f"scaling g(d) must be positive, got {val}")
    return val


def average_curvature(curvatures: np.ndarray) -> np.ndarray:
    """Index-ordered mean of per-particle curvature matrices ``(n, d, d)``."""
    bad = ~np.all(np.isfinite(curvatures.reshape(curvatures.shape[0], -1)), axis=1)
    if bad.any():
        raise FloatingPointError(f"curvature at particle {int(np.argmax(bad))} is not finite")
    return np.mean(curvatures, axis=0)


def compute_metric(
    ensemble: ParticleEnsemble,
    model: TargetModel,
    g: Scaling = "d",
    curvatures: np.ndarray | None = None,
) -> MetricState:
    """Ensemble average of the Gauss-Newton curvature, plus ``g(d)``.

    ``curvatures`` may be passed when the caller already evaluated
    ``model.neg_hessian`` at the particles this iteration.
    """
    if curvatures is None:
        curvatures = model.neg_hessian(ensemble.positions, gauss_newton=True)
    M = average_curvature(curvatures)
    return MetricState(M, resolve_scaling(g, ensemble.d), SCALED_HESSIAN)


def median_bandwidth(ensemble: ParticleEnsemble) -> float:
    """``med^2 / log n`` over all ``n(n-1)/2`` pairwise Euclidean distances."""
    n = ensemble.n
    if n < 2:
        raise ValueError("median heuristic needs at least two particles")
    med = float(np.median(pdist(ensemble.positions)))
    if med == 0.0:
        raise DegenerateBandwidthError("median pairwise distance is zero; particles have collapsed")
    return med**2 / np.log(n)


def isotropic_metric(ensemble: ParticleEnsemble) -> MetricState:
    return MetricState.isotropic(median_bandwidth(ensemble), ensemble.d)


def evaluate(metric: MetricState, x: np.ndarray, xp: np.ndarray) -> KernelEval:
    """Kernel value and its gradient in the first argument at a single pair."""
    diff = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    Md = metric.M @ diff
    value = float(np.exp(-0.5 * (diff @ Md) / metric.g))
    return KernelEval(value, -(Md / metric.g) * value)


def kernel_matrix(metric: MetricState, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """``K[a, b] = k(X[a], Y[b])`` for all pairs.

    Squared distances are computed in coordinates whitened by the Cholesky
    factor of ``M / g`` so each entry is a sum of squared differences (no
    cancellation from expanding the quadratic form).
    """
    L = np.linalg.cholesky(metric.scaled)
    Z = X @ L
    W = Z if Y is None else Y @ L
    return np.exp(-0.5 * cdist(Z, W, "sqeuclidean"))
