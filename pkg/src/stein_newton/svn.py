"""Stein variational Newton: Galerkin Newton system, solvers, and iteration.

Unknowns are ordered particle-major: the flattened coefficient vector is
``(alpha^1, alpha^2, ..., alpha^n)`` with each ``alpha^k`` of length ``d``,
which is ``alpha.reshape(-1)`` for an ``(n, d)`` array.

Notation used below: ``K[x, s] = k(x, x_s)`` over particles, ``P = M / g``
and ``U = P (X - mean)`` so that ``grad_x k(x, x_s) = -(u_x - u_s) K[x, s]``.

Blocks of the Newton system come in two flavours, matching the curvature
choice:

* exact: the second variation of the KL divergence restricted to kernel
  sections, ``H^{s,k}_{ij} = (1/n) sum_x [A_ij k_xs k_xk + d_j k_xs d_i k_xk]``
  with ``A`` the exact negative Hessian. The gradient term comes from
  ``E[trace(grad W grad V)]`` and is indefinite in general.
* Gauss-Newton (default): ``A`` is the Gauss-Newton curvature and the
  gradient term is ``d_i k_xs d_j k_xk``, i.e. ``E[div V div W]``, which is
  positive semidefinite. The whole system is then SPD.

Diagonal blocks ``H^{s,s}`` coincide under both pairings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ensemble import ParticleEnsemble, TargetModel
from .kernels import MetricState, evaluate, kernel_matrix
from .linsolve import SolveReport, batched_spd_solve, spd_solve, truncated_cg
from .svgd import checked_gradients, stein_direction

FULL_DENSE = "full-dense"
BLOCK_DIAGONAL = "block-diagonal"
OPERATOR = "operator"
MODES = (FULL_DENSE, BLOCK_DIAGONAL, OPERATOR)

STRATEGY_MODES = {"full": FULL_DENSE, "bd": BLOCK_DIAGONAL, "block-diagonal": BLOCK_DIAGONAL, "ncg": OPERATOR}

DEFAULT_DENSE_LIMIT = 5000
DEFAULT_CG_TOL = 1e-3


class DenseSystemTooLarge(MemoryError):
    pass


def particle_curvatures(model: TargetModel, X: np.ndarray, gauss_newton: bool = True) -> np.ndarray:
    """Curvature matrices at the particles.

    Returns ``(n, d, d)``, or a single ``(d, d)`` matrix when the model
    declares ``constant_curvature`` (linear forward maps).
    """
    if getattr(model, "constant_curvature", False):
        A = np.asarray(model.neg_hessian(X[:1], gauss_newton=gauss_newton), dtype=float)[0]
        if not np.all(np.isfinite(A)):
            raise FloatingPointError("curvature at particle 0 is not finite")
        return A
    A = np.asarray(model.neg_hessian(X, gauss_newton=gauss_newton), dtype=float)
    bad = ~np.all(np.isfinite(A.reshape(A.shape[0], -1)), axis=1)
    if bad.any():
        raise FloatingPointError(f"curvature at particle {int(np.argmax(bad))} is not finite")
    return A


def h_block(
    ensemble: ParticleEnsemble,
    model: TargetModel,
    metric: MetricState,
    s: int,
    k: int,
    gauss_newton: bool = True,
) -> np.ndarray:
    """Block ``H^{s,k}`` by direct summation over the ensemble.

    This is the slow pointwise reference; :func:`assemble` computes the same
    quantity in bulk. ``gauss_newton`` selects both the curvature and the
    gradient-term pairing (see the module docstring).
    """
    X = ensemble.positions
    n, d = X.shape
    A = np.asarray(model.neg_hessian(X, gauss_newton=gauss_newton), dtype=float)
    H = np.zeros((d, d))
    for j in range(n):
        if not np.all(np.isfinite(A[j])):
            raise FloatingPointError(f"curvature at particle {j} is not finite")
        ks = evaluate(metric, X[j], X[s])
        kk = evaluate(metric, X[j], X[k])
        pair = np.outer(ks.grad1, kk.grad1) if gauss_newton else np.outer(kk.grad1, ks.grad1)
        H += A[j] * ks.value * kk.value + pair
    return H / n


@dataclass
class NewtonSystem:
    """Galerkin Newton system ``sum_k H^{s,k} alpha^k = rhs^s``.

    ``blocks`` holds the ``(nd, nd)`` matrix in full-dense mode and the
    ``(n, d, d)`` diagonal blocks in block-diagonal mode. Operator mode keeps
    only the kernel matrix, the scaled particle coordinates, and the
    curvature, and applies the full matrix on demand. ``exact`` marks the
    exact second variation rather than the Gauss-Newton system.
    """

    mode: str
    rhs: np.ndarray
    K: np.ndarray
    U: np.ndarray
    curvature: np.ndarray
    blocks: np.ndarray | None = None
    exact: bool = False
    _KtK: np.ndarray | None = field(default=None, init=False, repr=False)

    @property
    def n(self) -> int:
        return self.rhs.shape[0]

    @property
    def d(self) -> int:
        return self.rhs.shape[1]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply the system matrix to a flattened coefficient vector."""
        alpha = np.asarray(v, dtype=float).reshape(self.n, self.d)
        if self.mode == FULL_DENSE:
            return self.blocks @ alpha.reshape(-1)
        if self.mode == BLOCK_DIAGONAL:
            return np.einsum("sij,sj->si", self.blocks, alpha).reshape(-1)
        if self.exact and self._KtK is None:
            self._KtK = self.K.T @ self.K
        return apply_full_operator(self.K, self.U, self.curvature, alpha, self.exact, self._KtK).reshape(-1)


def apply_full_operator(
    K: np.ndarray,
    U: np.ndarray,
    curvature: np.ndarray,
    alpha: np.ndarray,
    exact: bool = False,
    KtK: np.ndarray | None = None,
) -> np.ndarray:
    """Matrix-free product with the coupled system, O(n^2 d + n d^2).

    The exact pairing also needs ``KtK = K^T K``; pass it in when applying
    the operator repeatedly.
    """
    n = K.shape[0]
    w = K @ alpha  # W evaluated at every particle
    if curvature.ndim == 2:
        Aw = w @ curvature.T
    else:
        Aw = np.einsum("xij,xj->xi", curvature, w)
    curv_term = K.T @ Aw
    if not exact:
        # q[x] = sum_k grad_x k(x, x_k) . alpha^k
        q = -(np.einsum("xi,xi->x", U, w) - K @ np.einsum("ki,ki->k", U, alpha))
        grad_term = -(K.T @ (q[:, None] * U) - (K.T @ q)[:, None] * U)
        return (curv_term + grad_term) / n
    if KtK is None:
        KtK = K.T @ K
    # sum_{x,k} K[x,s] K[x,k] (u_x - u_k) ((u_x - u_s) . alpha^k), expanded
    Y = U @ alpha.T  # Y[a, k] = u_a . alpha^k
    t1 = K.T @ (np.einsum("xi,xi->x", U, w)[:, None] * U)
    t2 = -(K.T * (U @ w.T)) @ U
    t3 = -K.T @ ((K * Y) @ U)
    t4 = (KtK * Y) @ U
    return (curv_term + t1 + t2 + t3 + t4) / n


def _diagonal_blocks(K: np.ndarray, U: np.ndarray, curvature: np.ndarray) -> np.ndarray:
    n, d = U.shape
    W2 = K * K
    S0 = W2.sum(axis=0)
    S1 = W2.T @ U
    UU = (U[:, :, None] * U[:, None, :]).reshape(n, d * d)
    if curvature.ndim == 2:
        S2 = (W2.T @ UU).reshape(n, d, d)
        curv = S0[:, None, None] * curvature[None]
    else:
        S2_plus = (W2.T @ (UU + curvature.reshape(n, d * d))).reshape(n, d, d)
        S2, curv = S2_plus, 0.0
    cross = S1[:, :, None] * U[:, None, :]
    grad = S2 - cross - np.swapaxes(cross, 1, 2) + S0[:, None, None] * (U[:, :, None] * U[:, None, :])
    return (curv + grad) / n


def _dense_matrix(K: np.ndarray, U: np.ndarray, curvature: np.ndarray, exact: bool = False) -> np.ndarray:
    n, d = U.shape
    if curvature.ndim == 2:
        H1 = (K.T @ K)[:, None, :, None] * curvature[None, :, None, :]
    else:
        KA = K[:, :, None, None] * curvature[:, None, :, :]  # (x, k, i, j)
        H1 = np.tensordot(K, KA, axes=(0, 0)).transpose(0, 2, 1, 3)  # (s, i, k, j)
    B = K[:, :, None] * (U[:, None, :] - U[None, :, :])  # (x, s, i)
    H2 = np.tensordot(B, B, axes=(0, 0))  # (s, i, k, j)
    if exact:
        H2 = H2.transpose(2, 1, 0, 3)
    return ((H1 + H2) / n).reshape(n * d, n * d)


def assemble(
    ensemble: ParticleEnsemble,
    model: TargetModel,
    metric: MetricState,
    mode: str,
    gauss_newton: bool = True,
    dense_limit: int = DEFAULT_DENSE_LIMIT,
    curvatures: np.ndarray | None = None,
) -> NewtonSystem:
    """Build the Newton system for the current ensemble.

    The right-hand side is the SVGD direction at the particles, computed by
    the same routine :func:`stein_newton.svgd.svgd_direction` uses.

    Raises:
        DenseSystemTooLarge: full-dense mode with ``n * d > dense_limit``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    X = ensemble.positions
    n, d = X.shape
    if mode == FULL_DENSE and n * d > dense_limit:
        raise DenseSystemTooLarge(
            f"full-dense system with n*d = {n * d} unknowns exceeds the limit {dense_limit}; "
            "use operator mode (strategy 'ncg') instead"
        )
    grads = checked_gradients(model, X)
    if curvatures is None:
        curvatures = particle_curvatures(model, X, gauss_newton)
    K = kernel_matrix(metric, X)
    rhs = stein_direction(X, grads, K, metric)
    U = (X - X.mean(axis=0)) @ metric.scaled
    blocks = None
    if mode == FULL_DENSE:
        blocks = _dense_matrix(K, U, curvatures, exact=not gauss_newton)
    elif mode == BLOCK_DIAGONAL:
        blocks = _diagonal_blocks(K, U, curvatures)
    return NewtonSystem(mode, rhs, K, U, curvatures, blocks, exact=not gauss_newton)


def solve_full(system: NewtonSystem) -> tuple[np.ndarray, SolveReport]:
    if system.mode != FULL_DENSE:
        raise ValueError("solve_full needs a full-dense system")
    x, report = spd_solve(system.blocks, system.rhs.reshape(-1), label="Newton system")
    return x.reshape(system.n, system.d), report


def solve_block_diagonal(system: NewtonSystem) -> tuple[np.ndarray, list[SolveReport]]:
    if system.mode == BLOCK_DIAGONAL:
        blocks = system.blocks
    elif system.mode == FULL_DENSE:
        n, d = system.n, system.d
        H = system.blocks.reshape(n, d, n, d)
        blocks = np.stack([H[s, :, s, :] for s in range(n)])
    else:
        blocks = _diagonal_blocks(system.K, system.U, system.curvature)
    return batched_spd_solve(blocks, system.rhs)


def solve_ncg(
    system: NewtonSystem,
    max_cg_iters: int | None = None,
    cg_tol: float = DEFAULT_CG_TOL,
) -> tuple[np.ndarray, SolveReport]:
    """Inexact Newton-CG on the flattened system (any mode)."""
    nd = system.n * system.d
    if max_cg_iters is None:
        max_cg_iters = min(nd, 100)
    x, report = truncated_cg(system.matvec, system.rhs.reshape(-1), tol=cg_tol, max_iters=max_cg_iters)
    return x.reshape(system.n, system.d), report


def newton_direction(
    ensemble: ParticleEnsemble,
    model: TargetModel,
    metric: MetricState,
    strategy: str = "bd",
    gauss_newton: bool = True,
    cg_tol: float = DEFAULT_CG_TOL,
    max_cg_iters: int | None = None,
    dense_limit: int = DEFAULT_DENSE_LIMIT,
    curvatures: np.ndarray | None = None,
) -> tuple[np.ndarray, list[SolveReport]]:
    """Newton direction at every particle.

    For the coupled strategies (``full``, ``ncg``) this is the Galerkin
    reconstruction ``W(x_i) = sum_k alpha^k k(x_k, x_i)``. The block-diagonal
    strategy drops the coupling blocks ``H^{s,k}``, ``k != s``; the matching
    reconstruction drops the off-diagonal kernel weights as well, giving
    ``W(x_s) = alpha^s``. Summing decoupled coefficients through the full
    kernel matrix instead overcounts the step by roughly ``sum_k k(x_k, x_s)``,
    which diverges for wide kernels and large ``n``. At ``n = 1`` both
    readings coincide.
    """
    try:
        mode = STRATEGY_MODES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; expected full, bd, or ncg") from None
    system = assemble(ensemble, model, metric, mode, gauss_newton, dense_limit, curvatures)
    if mode == FULL_DENSE:
        alpha, report = solve_full(system)
        reports = [report]
    elif mode == BLOCK_DIAGONAL:
        alpha, reports = solve_block_diagonal(system)
    else:
        alpha, report = solve_ncg(system, max_cg_iters, cg_tol)
        reports = [report]
    if mode == BLOCK_DIAGONAL:
        return alpha, reports
    return system.K @ alpha, reports


@dataclass
class ResidualStepControl:
    """Step-size schedule driven by the size of the Stein residual.

    The step starts at ``initial`` and grows by ``grow`` after every iteration
    in which the RMS of the steepest-descent direction did not increase, up
    to ``maximum``. An increase shrinks it by ``shrink``, down to ``minimum``.
    Starting below the full Newton step keeps the first iterations, where the
    kernel is narrow relative to the prior spread, from collapsing the
    ensemble onto the mode.
    """

    initial: float = 0.25
    maximum: float = 1.0
    minimum: float = 1e-3
    shrink: float = 0.5
    grow: float = 1.2
    _step: float | None = field(default=None, init=False, repr=False)
    _previous: float = field(default=np.inf, init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.minimum <= self.initial <= self.maximum:
            raise ValueError("need 0 < minimum <= initial <= maximum")
        if not (0 < self.shrink < 1 <= self.grow):
            raise ValueError("need 0 < shrink < 1 <= grow")

    def next_step(self, residual: float) -> float:
        """Step size for the iteration whose current residual is ``residual``."""
        if self._step is None:
            self._step = self.initial
        elif residual > self._previous:
            self._step = max(self._step * self.shrink, self.minimum)
        else:
            self._step = min(self._step * self.grow, self.maximum)
        self._previous = residual
        return self._step


def svn_step(
    ensemble: ParticleEnsemble,
    model: TargetModel,
    metric: MetricState,
    strategy: str = "bd",
    step_size: float = 1.0,
    **kwargs,
) -> ParticleEnsemble:
    """One SVN iteration; extra keyword arguments go to :func:`newton_direction`."""
    if step_size < 0:
        raise ValueError("step size must be nonnegative")
    W, _ = newton_direction(ensemble, model, metric, strategy, **kwargs)
    return ensemble.advance(ensemble.positions + step_size * W)
