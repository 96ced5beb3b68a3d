"""Dense SPD solves with jitter escalation and truncated conjugate gradient.

Every linear system solved elsewhere in the package goes through one of the
two entry points here, so the jitter policy and CG termination rules live in
a single place.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

# tau in tau * mean(diag(A)) * I, tried in order after a plain Cholesky fails
JITTER_LEVELS = (1e-10, 1e-8, 1e-6, 1e-4, 1e-2)
ASYMMETRY_WARN = 1e-10

CONVERGED = "converged"
MAX_ITERS = "max_iters"
NEGATIVE_CURVATURE = "negative_curvature"


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when jitter escalation cannot make a matrix factorizable."""

    def __init__(self, message: str, jitter: float):
        super().__init__(message)
        self.jitter = jitter


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_relative_residual: float
    termination: str
    jitter_applied: float = 0.0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_relative_residual": self.final_relative_residual,
            "termination": self.termination,
            "jitter_applied": self.jitter_applied,
        }


def _relative_residual(r: np.ndarray, b: np.ndarray) -> float:
    bnorm = np.linalg.norm(b)
    rnorm = np.linalg.norm(r)
    if bnorm == 0.0:
        return float(rnorm)
    return float(rnorm / bnorm)


def symmetrize(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    asym = np.max(np.abs(A - A.T)) if A.size else 0.0
    scale = max(np.max(np.abs(A)), 1.0) if A.size else 1.0
    if asym > ASYMMETRY_WARN * scale:
        warnings.warn(
            f"matrix asymmetry {asym:.3e} exceeds tolerance; symmetrizing",
            RuntimeWarning,
            stacklevel=3,
        )
    return 0.5 * (A + A.T)


def cholesky_with_jitter(A: np.ndarray, label: str = "matrix") -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``A``, adding diagonal jitter on failure.

    Returns the factor of ``A + jitter * I`` and the absolute jitter used.
    """
    A = symmetrize(A)
    if not np.all(np.isfinite(A)):
        raise SingularMatrixError(f"{label} has non-finite entries", 0.0)
    try:
        return np.linalg.cholesky(A), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(A)))
    if not scale > 0.0:
        scale = 1.0
    eye = np.eye(A.shape[0])
    jitter = 0.0
    for tau in JITTER_LEVELS:
        jitter = tau * scale
        try:
            L = np.linalg.cholesky(A + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        logger.debug("%s: Cholesky succeeded with jitter %.3e", label, jitter)
        return L, jitter
    raise SingularMatrixError(
        f"{label} is not positive definite even with jitter {jitter:.3e}", jitter
    )


def spd_solve(A: np.ndarray, b: np.ndarray, label: str = "matrix") -> tuple[np.ndarray, SolveReport]:
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Args:
        A: Symmetric matrix, shape ``(m, m)``. Mild asymmetry is averaged out
            with a warning.
        b: Right-hand side, shape ``(m,)`` or ``(m, r)``.
        label: Name used in error messages (e.g. the block index).

    Returns:
        The solution and a :class:`SolveReport`. The residual is measured
        against the jittered matrix actually factorized.

    Raises:
        SingularMatrixError: if every jitter level fails.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    L, jitter = cholesky_with_jitter(A, label)
    x = scipy.linalg.cho_solve((L, True), b)
    Aj = symmetrize(A) + jitter * np.eye(A.shape[0]) if jitter else symmetrize(A)
    rel = _relative_residual(Aj @ x - b, b)
    return x, SolveReport(1, rel, CONVERGED, jitter)


def batched_spd_solve(blocks: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, list[SolveReport]]:
    """Solve ``blocks[s] @ x[s] = rhs[s]`` for a stack of SPD blocks.

    Tries one vectorized Cholesky over the whole stack and falls back to
    per-block :func:`spd_solve` (with jitter) only for blocks that fail.
    """
    blocks = 0.5 * (blocks + np.swapaxes(blocks, -1, -2))
    n = blocks.shape[0]
    try:
        L = np.linalg.cholesky(blocks)
    except np.linalg.LinAlgError:
        L = None
    if L is not None:
        y = np.linalg.solve(L, rhs[..., None])
        x = np.linalg.solve(np.swapaxes(L, -1, -2), y)[..., 0]
        r = np.einsum("sij,sj->si", blocks, x) - rhs
        rel = np.linalg.norm(r, axis=1) / np.where(
            np.linalg.norm(rhs, axis=1) > 0, np.linalg.norm(rhs, axis=1), 1.0
        )
        return x, [SolveReport(1, float(rel[s]), CONVERGED, 0.0) for s in range(n)]
    x = np.empty_like(rhs)
    reports = []
    for s in range(n):
        x[s], rep = spd_solve(blocks[s], rhs[s], label=f"block {s}")
        reports.append(rep)
    return x, reports


def truncated_cg(
    apply: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    tol: float = 1e-3,
    max_iters: int | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Conjugate gradient from a zero initial iterate, stopped early on
    negative curvature.

    Termination, in order of precedence per iteration:

    * ``p^T A p <= 0``: return the current iterate, or ``b`` itself if this
      happens on the first iteration (steepest-descent fallback).
    * relative residual ``<= tol``: converged.
    * ``max_iters`` reached.

    Starting from zero means every returned iterate has positive inner
    product with ``b`` whenever the operator is positive along the explored
    directions, so the result is a descent direction.
    """
    b = np.asarray(b, dtype=float)
    if max_iters is None:
        max_iters = b.size
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x, SolveReport(0, 0.0, CONVERGED)
    r = b.copy()
    p = r.copy()
    rr = float(r @ r)
    it = 0
    while it < max_iters:
        Ap = apply(p)
        pAp = float(p @ Ap)
        it += 1
        if not np.isfinite(pAp):
            raise FloatingPointError("non-finite curvature in conjugate gradient")
        if pAp <= 0.0:
            if it == 1:
                return b.copy(), SolveReport(it, 1.0, NEGATIVE_CURVATURE)
            return x, SolveReport(it, np.sqrt(rr) / bnorm, NEGATIVE_CURVATURE)
        step = rr / pAp
        x = x + step * p
        r = r - step * Ap
        rr_new = float(r @ r)
        rel = np.sqrt(rr_new) / bnorm
        if rel <= tol:
            return x, SolveReport(it, float(rel), CONVERGED)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x, SolveReport(it, float(np.sqrt(rr) / bnorm), MAX_ITERS)
