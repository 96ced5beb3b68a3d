"""Benchmark posteriors with closed-form derivatives.

Every problem is a Gaussian-prior, Gaussian-noise Bayesian model

    log pi(x) = -1/2 (x - m)^T C^{-1} (x - m) - |y - F(x)|^2 / (2 sigma^2)

with the normalizing constant dropped. Data realizations are drawn from the
first (data) stream of :func:`stein_newton.ensemble.make_rngs`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import GaussianSpec, make_rngs

ROSENBROCK_FLOOR = 1e-12


def _data_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return make_rngs(int(seed_or_rng))[0]


class BayesModel:
    """Gaussian prior times Gaussian likelihood around a forward map.

    Subclasses implement :meth:`forward` ``(n, d) -> (n, m)`` and
    :meth:`jacobian` ``(n, d) -> (n, m, d)``; :meth:`forward_hessian`
    ``(n, d) -> (n, m, d, d)`` is needed only for exact-Hessian curvature.
    """

    constant_curvature = False

    def __init__(self, prior: GaussianSpec, noise_sd: float, data):
        self.prior = prior
        self.noise_sd = float(noise_sd)
        self.data = np.atleast_1d(np.asarray(data, dtype=float))
        self.dim = prior.dim
        self.prior_precision = np.linalg.inv(prior.cov)
        self.prior_precision = 0.5 * (self.prior_precision + self.prior_precision.T)

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def forward_hessian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no exact Hessian; use Gauss-Newton")

    def misfit(self, x: np.ndarray) -> np.ndarray:
        return self.data - self.forward(x)

    def log_density(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        dx = x - self.prior.mean
        prior_term = 0.5 * np.einsum("ni,ij,nj->n", dx, self.prior_precision, dx)
        r = self.misfit(x)
        return -prior_term - 0.5 * np.sum(r * r, axis=1) / self.noise_sd**2

    def grad_log_density(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        r = self.misfit(x)
        J = self.jacobian(x)
        return -(x - self.prior.mean) @ self.prior_precision + np.einsum("nmi,nm->ni", J, r) / self.noise_sd**2

    def neg_hessian(self, x: np.ndarray, gauss_newton: bool = True) -> np.ndarray:
        x = np.atleast_2d(x)
        J = self.jacobian(x)
        H = self.prior_precision[None] + np.einsum("nmi,nmj->nij", J, J) / self.noise_sd**2
        if not gauss_newton:
            r = self.misfit(x)
            H = H - np.einsum("nm,nmij->nij", r, self.forward_hessian(x)) / self.noise_sd**2
        return H

    def realization(self) -> dict:
        """Everything needed to rebuild this model, JSON-friendly."""
        return {"data": self.data.tolist(), "noise_sd": self.noise_sd}


class GaussianTarget:
    """``N(mean, cov)`` as a target; both curvature options return the precision."""

    constant_curvature = True

    def __init__(self, mean, cov):
        self.spec = GaussianSpec(mean, cov)
        self.dim = self.spec.dim
        self.precision = np.linalg.inv(self.spec.cov)
        self.precision = 0.5 * (self.precision + self.precision.T)

    @property
    def mean(self) -> np.ndarray:
        return self.spec.mean

    @property
    def cov(self) -> np.ndarray:
        return self.spec.cov

    def log_density(self, x):
        dx = np.atleast_2d(x) - self.spec.mean
        return -0.5 * np.einsum("ni,ij,nj->n", dx, self.precision, dx)

    def grad_log_density(self, x):
        return -(np.atleast_2d(x) - self.spec.mean) @ self.precision

    def neg_hessian(self, x, gauss_newton=True):
        n = np.atleast_2d(x).shape[0]
        return np.broadcast_to(self.precision, (n, self.dim, self.dim)).copy()


# --------------------------------------------------------------------------
# Double banana


class DoubleBanana(BayesModel):
    """Log-Rosenbrock forward map with a standard normal prior on R^2."""

    def __init__(self, data, noise_sd: float = 0.3, x_true=None):
        super().__init__(GaussianSpec(np.zeros(2), np.eye(2)), noise_sd, data)
        self.x_true = None if x_true is None else np.asarray(x_true, dtype=float)

    @staticmethod
    def rosenbrock(x):
        x1, x2 = x[:, 0], x[:, 1]
        return (1 - x1) ** 2 + 100 * (x2 - x1**2) ** 2 + ROSENBROCK_FLOOR

    def forward(self, x):
        x = np.atleast_2d(x)
        return np.log(self.rosenbrock(x))[:, None]

    def _rosen_grad(self, x):
        x1, x2 = x[:, 0], x[:, 1]
        return np.stack([-2 * (1 - x1) - 400 * x1 * (x2 - x1**2), 200 * (x2 - x1**2)], axis=1)

    def jacobian(self, x):
        x = np.atleast_2d(x)
        return (self._rosen_grad(x) / self.rosenbrock(x)[:, None])[:, None, :]

    def forward_hessian(self, x):
        x = np.atleast_2d(x)
        x1, x2 = x[:, 0], x[:, 1]
        R = self.rosenbrock(x)
        g = self._rosen_grad(x)
        HR = np.empty((x.shape[0], 2, 2))
        HR[:, 0, 0] = 2 - 400 * (x2 - x1**2) + 800 * x1**2
        HR[:, 0, 1] = HR[:, 1, 0] = -400 * x1
        HR[:, 1, 1] = 200.0
        H = HR / R[:, None, None] - g[:, :, None] * g[:, None, :] / (R**2)[:, None, None]
        return H[:, None]

    def realization(self):
        out = super().realization()
        out["x_true"] = None if self.x_true is None else self.x_true.tolist()
        return out


def double_banana(seed=0, noise_sd: float = 0.3) -> DoubleBanana:
    """Single noisy observation of ``F(x_true)`` with ``x_true`` drawn from the prior."""
    rng = _data_rng(seed)
    x_true = rng.standard_normal(2)
    xi = noise_sd * rng.standard_normal()
    F = np.log(DoubleBanana.rosenbrock(x_true[None]))[0]
    return DoubleBanana([F + xi], noise_sd, x_true)


# --------------------------------------------------------------------------
# Nonlinear regression


class NonlinearRegression(BayesModel):
    """``F(x) = c1 x1^3 + c2 x2`` with one datum and a standard normal prior."""

    def __init__(self, coeffs, data, noise_sd: float = 0.3, x_true=None):
        super().__init__(GaussianSpec(np.zeros(2), np.eye(2)), noise_sd, data)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.x_true = None if x_true is None else np.asarray(x_true, dtype=float)

    def forward(self, x):
        x = np.atleast_2d(x)
        c1, c2 = self.coeffs
        return (c1 * x[:, 0] ** 3 + c2 * x[:, 1])[:, None]

    def jacobian(self, x):
        x = np.atleast_2d(x)
        c1, c2 = self.coeffs
        J = np.stack([3 * c1 * x[:, 0] ** 2, np.full(x.shape[0], c2)], axis=1)
        return J[:, None, :]

    def forward_hessian(self, x):
        x = np.atleast_2d(x)
        H = np.zeros((x.shape[0], 1, 2, 2))
        H[:, 0, 0, 0] = 6 * self.coeffs[0] * x[:, 0]
        return H

    def realization(self):
        out = super().realization()
        out["coeffs"] = self.coeffs.tolist()
        out["x_true"] = None if self.x_true is None else self.x_true.tolist()
        return out


def nonlinear_regression(seed=0, noise_sd: float = 0.3) -> NonlinearRegression:
    """Draws, in order: ``(c1, c2)``, ``x_true``, noise."""
    rng = _data_rng(seed)
    coeffs = rng.standard_normal(2)
    x_true = rng.standard_normal(2)
    xi = noise_sd * rng.standard_normal()
    y = coeffs[0] * x_true[0] ** 3 + coeffs[1] * x_true[1] + xi
    return NonlinearRegression(coeffs, [y], noise_sd, x_true)


# --------------------------------------------------------------------------
# Conditioned diffusion


class ConditionedDiffusion(BayesModel):
    """Euler-Maruyama discretized Langevin SDE driven by Brownian increments.

    The parameter ``x`` holds the ``d`` Brownian increments over a uniform
    grid with step ``dt``; the prior ``N(0, dt I)`` on increments is the
    grid restriction of the Brownian covariance ``min(t, t')``. The state
    follows ``u_{k+1} = u_k + f(u_k) dt + x_k`` from ``u_0 = 0`` with
    ``f(u) = beta u (1 - u^2) / (1 + u^2)``, and observation ``i`` reads
    ``u`` after step ``i * obs_every``.
    """

    def __init__(self, data, noise_sd=0.1, beta=10.0, dt=0.01, steps=100, obs_every=5, x_true=None):
        super().__init__(GaussianSpec(np.zeros(steps), dt * np.eye(steps)), noise_sd, data)
        self.beta = float(beta)
        self.dt = float(dt)
        self.steps = int(steps)
        self.obs_every = int(obs_every)
        self.obs_steps = np.arange(obs_every, steps + 1, obs_every)
        self.x_true = None if x_true is None else np.asarray(x_true, dtype=float)
        # GN curvature P + J^T J / sigma^2 with J depending on x
        self.prior_precision = np.eye(steps) / dt

    def drift(self, u):
        return self.beta * u * (1 - u**2) / (1 + u**2)

    def drift_prime(self, u):
        u2 = u * u
        return self.beta * (1 - 4 * u2 - u2 * u2) / (1 + u2) ** 2

    def path(self, x: np.ndarray) -> np.ndarray:
        """State trajectories ``u_0 .. u_steps``, shape ``(n, steps + 1)``."""
        x = np.atleast_2d(x)
        u = np.zeros((x.shape[0], self.steps + 1))
        for k in range(self.steps):
            with np.errstate(over="ignore", invalid="ignore"):
                u[:, k + 1] = u[:, k] + self.drift(u[:, k]) * self.dt + x[:, k]
            if not np.all(np.isfinite(u[:, k + 1])):
                raise FloatingPointError(f"diffusion state is not finite at step {k + 1}")
        return u

    def forward(self, x):
        return self.path(x)[:, self.obs_steps]

    def jacobian(self, x):
        """Forward sensitivities ``s_{k+1} = (1 + f'(u_k) dt) s_k + e_k``."""
        x = np.atleast_2d(x)
        n = x.shape[0]
        u = self.path(x)
        s = np.zeros((n, self.steps))
        J = np.zeros((n, self.obs_steps.size, self.steps))
        obs_index = {int(step): i for i, step in enumerate(self.obs_steps)}
        for k in range(self.steps):
            s = (1 + self.drift_prime(u[:, k]) * self.dt)[:, None] * s
            s[:, k] += 1.0
            i = obs_index.get(k + 1)
            if i is not None:
                J[:, i] = s
        return J

    def realization(self):
        out = super().realization()
        out.update(beta=self.beta, dt=self.dt, steps=self.steps, obs_every=self.obs_every)
        out["x_true"] = None if self.x_true is None else self.x_true.tolist()
        return out


def conditioned_diffusion(seed=0, noise_sd=0.1, beta=10.0, dt=0.01, steps=100, obs_every=5) -> ConditionedDiffusion:
    """Draws, in order: the true increments, then the observation noise."""
    rng = _data_rng(seed)
    x_true = np.sqrt(dt) * rng.standard_normal(steps)
    model = ConditionedDiffusion(np.zeros(steps // obs_every), noise_sd, beta, dt, steps, obs_every, x_true)
    y = model.forward(x_true)[0] + noise_sd * rng.standard_normal(model.obs_steps.size)
    model.data = y
    return model


# --------------------------------------------------------------------------
# Linear Gaussian


@dataclass(frozen=True)
class AnalyticPosterior:
    mean: np.ndarray
    cov: np.ndarray


class LinearGaussian(BayesModel):
    """``F(x) = a^T x`` under the prior ``N(0, K^{-1})``."""

    constant_curvature = True

    def __init__(self, precision, a, data, noise_sd=0.3, x_true=None, variant="custom"):
        precision = np.asarray(precision, dtype=float)
        cov = np.linalg.inv(precision)
        super().__init__(GaussianSpec(np.zeros(len(a)), 0.5 * (cov + cov.T)), noise_sd, data)
        self.prior_precision = precision
        self.a = np.asarray(a, dtype=float)
        self.x_true = None if x_true is None else np.asarray(x_true, dtype=float)
        self.variant = variant

    def forward(self, x):
        return (np.atleast_2d(x) @ self.a)[:, None]

    def jacobian(self, x):
        n = np.atleast_2d(x).shape[0]
        return np.broadcast_to(self.a, (n, 1, self.a.size)).copy()

    def forward_hessian(self, x):
        n = np.atleast_2d(x).shape[0]
        return np.zeros((n, 1, self.a.size, self.a.size))

    def posterior(self) -> AnalyticPosterior:
        """Precision-form posterior ``C = (K + a a^T / sigma^2)^{-1}``, ``m = (y / sigma^2) C a``."""
        s2 = self.noise_sd**2
        post_precision = self.prior_precision + np.outer(self.a, self.a) / s2
        L = np.linalg.cholesky(post_precision)
        Linv = np.linalg.solve(L, np.eye(self.a.size))
        cov = Linv.T @ Linv
        mean = np.linalg.solve(L.T, np.linalg.solve(L, (self.data[0] / s2) * self.a))
        return AnalyticPosterior(mean, 0.5 * (cov + cov.T))

    def realization(self):
        out = super().realization()
        out.update(variant=self.variant, a=self.a.tolist())
        out["x_true"] = None if self.x_true is None else self.x_true.tolist()
        return out


LAPLACE_PRIOR = "laplace-prior"
IDENTITY_PRIOR = "identity-prior"


def laplacian_precision(d: int) -> np.ndarray:
    """Finite-difference ``-u''`` on ``d`` interior nodes of [0, 1], zero boundary."""
    h = 1.0 / (d + 1)
    return (2 * np.eye(d) - np.eye(d, k=1) - np.eye(d, k=-1)) / h**2


def linear_gaussian(variant: str = LAPLACE_PRIOR, d: int = 40, seed=0, noise_sd: float = 0.3):
    """Linear inverse problem and its exact posterior.

    ``laplace-prior``: precision is the finite-difference Laplacian and
    ``a_i = sqrt(h) sin(pi s_i)``, the nodal coordinates being ``sqrt(h)``
    times function values so that ``a^T x`` approximates the L2 pairing
    with ``sin(pi s)``. ``identity-prior``: identity precision and
    ``a_i ~ U(2, 10)``.

    Draws, in order: ``a`` (identity-prior only), ``x_true``, noise.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = _data_rng(seed)
    if variant == LAPLACE_PRIOR:
        h = 1.0 / (d + 1)
        s = h * np.arange(1, d + 1)
        a = np.sqrt(h) * np.sin(np.pi * s)
        K = laplacian_precision(d)
    elif variant == IDENTITY_PRIOR:
        a = rng.uniform(2.0, 10.0, size=d)
        K = np.eye(d)
    else:
        raise ValueError(f"unknown linear-gaussian variant {variant!r}")
    Lk = np.linalg.cholesky(K)
    # x_true ~ N(0, K^{-1}): solve L^T x = z
    x_true = np.linalg.solve(Lk.T, rng.standard_normal(d))
    y = a @ x_true + noise_sd * rng.standard_normal()
    model = LinearGaussian(K, a, [y], noise_sd, x_true, variant)
    return model, model.posterior()
