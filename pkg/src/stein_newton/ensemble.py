"""Particle ensembles, random streams, and the target-model contract."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np


@dataclass(frozen=True)
class ParticleEnsemble:
    """``n`` particles in ``d`` dimensions at iteration ``iteration``.

    Row ``i`` is the same particle at every iteration; updates never reorder
    rows.
    """

    positions: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, copy=True)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise ValueError(f"positions must be an (n, d) array with n, d >= 1, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            bad = int(np.argwhere(~np.all(np.isfinite(pos), axis=1))[0, 0])
            raise ValueError(f"particle {bad} has non-finite coordinates")
        if self.iteration < 0:
            raise ValueError("iteration must be nonnegative")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def advance(self, new_positions: np.ndarray) -> "ParticleEnsemble":
        return ParticleEnsemble(new_positions, self.iteration + 1)


@runtime_checkable
class TargetModel(Protocol):
    """Unnormalized log-posterior with derivatives.

    All methods take a batch of points, shape ``(n, d)``.
    """

    dim: int

    def log_density(self, x: np.ndarray) -> np.ndarray:
        """Log-density up to an additive constant, shape ``(n,)``."""
        ...

    def grad_log_density(self, x: np.ndarray) -> np.ndarray:
        """Gradient of :meth:`log_density`, shape ``(n, d)``."""
        ...

    def neg_hessian(self, x: np.ndarray, gauss_newton: bool = True) -> np.ndarray:
        """Negative Hessian of the log-density, shape ``(n, d, d)``.

        With ``gauss_newton=True`` return the SPD Gauss-Newton surrogate
        instead of the exact Hessian.
        """
        ...


@dataclass(frozen=True)
class GaussianSpec:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of length {mean.size}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


class NotPositiveDefiniteError(ValueError):
    pass


def make_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Two independent PCG64 streams derived from ``seed``.

    The first stream draws problem data (true parameter, noise, random
    coefficients); the second draws the initial ensemble. Keeping them apart
    means changing ``n`` never changes the data realization.
    """
    data_ss, init_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.Generator(np.random.PCG64(data_ss)), np.random.Generator(np.random.PCG64(init_ss))


def leading_minor_failure(C: np.ndarray) -> int | None:
    """Order of the first leading principal minor that is not positive."""
    for k in range(1, C.shape[0] + 1):
        try:
            np.linalg.cholesky(C[:k, :k])
        except np.linalg.LinAlgError:
            return k
    return None


def prior_cholesky(spec: GaussianSpec) -> np.ndarray:
    C = spec.cov
    if not np.allclose(C, C.T, rtol=0, atol=1e-12 * max(1.0, np.abs(C).max())):
        raise NotPositiveDefiniteError("prior covariance is not symmetric")
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        k = leading_minor_failure(C)
        raise NotPositiveDefiniteError(
            f"prior covariance is not SPD: leading minor of order {k} is not positive"
        ) from None


def init_ensemble(prior: GaussianSpec, n: int, rng: np.random.Generator) -> ParticleEnsemble:
    """Draw ``n`` i.i.d. particles from the Gaussian prior.

    Samples are ``mean + L z`` with ``L`` the lower Cholesky factor and ``z``
    standard normal, drawn as one ``(n, d)`` block in row-major order.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    L = prior_cholesky(prior)
    z = rng.standard_normal((n, prior.dim))
    return ParticleEnsemble(prior.mean + z @ L.T, 0)


def grad_check(model: TargetModel, x: np.ndarray, h: float = 1e-5) -> float:
    """Max relative error between the analytic gradient and central differences.

    The relative error for coordinate ``i`` is
    ``|g_i - fd_i| / max(|g|_inf, 1)`` so that near-zero components do not
    blow up the ratio.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    d = x.shape[1]
    stencil = np.concatenate([x + h * np.eye(d), x - h * np.eye(d), x])
    vals = model.log_density(stencil)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("log density is not finite on the finite-difference stencil")
    fd = (vals[:d] - vals[d : 2 * d]) / (2 * h)
    g = model.grad_log_density(x)[0]
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("gradient is not finite")
    scale = max(np.max(np.abs(g)), 1.0)
    return float(np.max(np.abs(g - fd)) / scale)
