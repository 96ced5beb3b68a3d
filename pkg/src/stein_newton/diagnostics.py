"""Ensemble summaries and comparisons against known posteriors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ensemble import ParticleEnsemble


@dataclass(frozen=True)
class EnsembleSummary:
    mean: np.ndarray
    covariance: np.ndarray
    mean_average: float
    cov_trace: float
    quantile_bands: np.ndarray  # (d, 3): q05, q50, q95

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "mean_average": self.mean_average,
            "cov_trace": self.cov_trace,
            "quantile_bands": self.quantile_bands.tolist(),
        }


def _positions(ensemble) -> np.ndarray:
    if isinstance(ensemble, ParticleEnsemble):
        return ensemble.positions
    X = np.asarray(ensemble, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def summarize(ensemble) -> EnsembleSummary:
    """Mean, unbiased covariance, and 5/50/95% quantiles (linear interpolation)."""
    X = _positions(ensemble)
    if X.shape[0] < 2:
        raise ValueError("need at least two particles for a covariance")
    mean = X.mean(axis=0)
    cov = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    cov = 0.5 * (cov + cov.T)
    bands = np.quantile(X, [0.05, 0.5, 0.95], axis=0, method="linear").T
    return EnsembleSummary(mean, cov, float(mean.mean()), float(np.trace(cov)), bands)


def posterior_error(summary: EnsembleSummary, analytic) -> dict:
    """Errors of the ensemble moments against an exact Gaussian posterior."""
    mean = np.asarray(analytic.mean, dtype=float)
    cov = np.atleast_2d(np.asarray(analytic.cov, dtype=float))
    if mean.shape != summary.mean.shape:
        raise ValueError(f"dimension mismatch: summary {summary.mean.shape} vs analytic {mean.shape}")
    true_trace = float(np.trace(cov))
    mnorm = np.linalg.norm(mean)
    diff = np.linalg.norm(summary.mean - mean)
    return {
        "mean_average_abs_err": abs(summary.mean_average - float(mean.mean())),
        "trace_rel_err": abs(summary.cov_trace - true_trace) / true_trace,
        "mean_l2_rel_err": float(diff / mnorm) if mnorm > 0 else float(diff),
    }


def trace_rel_err(estimated: float, theoretical: float) -> float:
    return abs(estimated - theoretical) / theoretical


def mode_split(ensemble, axis: int, threshold: float) -> tuple[float, float]:
    """Fractions of particles with coordinate ``axis`` at/below and strictly above ``threshold``."""
    x = _positions(ensemble)[:, axis]
    below = np.count_nonzero(x <= threshold) / x.size
    above = np.count_nonzero(x > threshold) / x.size
    return below, above


def credible_band(values: np.ndarray, prob: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
    """Per-column central band with mass ``prob``."""
    lo = (1 - prob) / 2
    q = np.quantile(values, [lo, 1 - lo], axis=0, method="linear")
    return q[0], q[1]


def band_coverage(
    ensemble,
    pushforward: Callable[[np.ndarray], np.ndarray],
    truth_points: Sequence[float],
    prob: float = 0.9,
) -> float:
    """Fraction of ``truth_points`` inside the 90% band of the pushed-forward ensemble.

    ``pushforward`` maps the ``(n, d)`` particle array to ``(n, m)`` observables,
    one column per truth point.
    """
    values = np.atleast_2d(np.asarray(pushforward(_positions(ensemble)), dtype=float))
    truth = np.asarray(truth_points, dtype=float).reshape(-1)
    if values.shape[1] != truth.size:
        raise ValueError(f"pushforward gives {values.shape[1]} observables for {truth.size} truth points")
    lo, hi = credible_band(values, prob)
    return float(np.mean((truth >= lo) & (truth <= hi)))
