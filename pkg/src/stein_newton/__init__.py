"""Stein variational gradient descent and Stein variational Newton samplers."""

from .diagnostics import EnsembleSummary, band_coverage, mode_split, posterior_error, summarize
from .ensemble import GaussianSpec, ParticleEnsemble, TargetModel, grad_check, init_ensemble, make_rngs
from .kernels import MetricState, compute_metric, evaluate, isotropic_metric, kernel_matrix, median_bandwidth
from .linsolve import SolveReport, spd_solve, truncated_cg
from .svgd import svgd_direction, svgd_step
from .svn import (
    NewtonSystem,
    ResidualStepControl,
    assemble,
    h_block,
    newton_direction,
    solve_block_diagonal,
    solve_full,
    solve_ncg,
    svn_step,
)

__version__ = "0.1.0"
