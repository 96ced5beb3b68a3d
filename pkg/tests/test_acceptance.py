"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Long runs go through the same driver as ``stein run`` and write to a
temporary directory. All runs use seed 0.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stein_newton.diagnostics import band_coverage, mode_split, summarize
from stein_newton.ensemble import ParticleEnsemble, grad_check
from stein_newton.experiment import execute, moment_discrepancy, parse_run_config, read_particles_csv
from stein_newton.kernels import compute_metric, isotropic_metric
from stein_newton.linsolve import truncated_cg
from stein_newton.problems import GaussianTarget, nonlinear_regression
from stein_newton.svn import FULL_DENSE, OPERATOR, assemble, svn_step

from .conftest import random_spd
from .oracles import second_variation_fd
from .test_problems import MODELS, fd_jacobian

SEED = 0
DIMS = (40, 60, 80, 100)


@pytest.fixture
def verdict(capsys):
    def report(criterion, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return report


def run(tmp_path, name, problem, iterations, checkpoints=None, **kw):
    raw = {"schema_version": 1, "problem": problem, "budget": {"iterations": iterations}, "seed": SEED, **kw}
    raw["checkpoints"] = list(checkpoints) if checkpoints is not None else [0, iterations]
    return execute(parse_run_config(raw), tmp_path / name)


def test_criterion_1_gaussian_one_step_exactness(verdict):
    worst = {"err": 0.0, "seconds": 0.0}

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**31), d=st.sampled_from([1, 2, 10]), strategy=st.sampled_from(["full", "bd", "ncg"]))
    def one_step(seed, d, strategy):
        rng = np.random.default_rng(seed)
        model = GaussianTarget(rng.standard_normal(d), random_spd(rng, d))
        ens = ParticleEnsemble(3 * rng.standard_normal((1, d)))
        t0 = time.perf_counter()
        kwargs = {"cg_tol": 1e-14} if strategy == "ncg" else {}
        out = svn_step(ens, model, compute_metric(ens, model), strategy, 1.0, **kwargs)
        worst["seconds"] = max(worst["seconds"], time.perf_counter() - t0)
        worst["err"] = max(worst["err"], float(np.max(np.abs(out.positions[0] - model.mean))))

    one_step()
    ok = worst["err"] <= 1e-10 and worst["seconds"] < 1.0
    verdict(1, ok, f"max |x1 - mu| = {worst['err']:.2e} (<= 1e-10), slowest step {worst['seconds']:.3f}s (< 1s)")


def linear_gaussian_pattern(tmp_path, variant):
    rows = []
    t0 = time.monotonic()
    for d in DIMS:
        problem = {"name": "linear-gaussian", "variant": variant, "d": d}
        h = run(tmp_path, f"{variant}-H-{d}", problem, 50, n=1000, kernel="scaled-hessian")
        i = run(tmp_path, f"{variant}-I-{d}", problem, 50, n=1000, kernel="isotropic")
        truth = np.trace(h.analytic.cov)
        sh, si = summarize(h.final), summarize(i.final)
        rows.append({
            "d": d,
            "mean_err": abs(sh.mean_average - float(np.mean(h.analytic.mean))),
            "h_trace_err": abs(sh.cov_trace - truth) / truth,
            "i_ratio": si.cov_trace / truth,
        })
    return rows, time.monotonic() - t0


def describe(rows):
    return "; ".join(
        f"d={r['d']}: |dmean|={r['mean_err']:.1e} H trace err={r['h_trace_err']:.3f} I/theory={r['i_ratio']:.3f}"
        for r in rows
    )


@pytest.mark.slow
def test_criterion_2_linear_gaussian_laplace_prior(tmp_path, verdict):
    rows, seconds = linear_gaussian_pattern(tmp_path, "laplace-prior")
    ok = (
        all(r["mean_err"] <= 1e-3 and r["h_trace_err"] <= 0.05 and r["i_ratio"] <= 0.80 for r in rows)
        and seconds <= 600
    )
    verdict(2, ok, f"{describe(rows)}; {seconds:.0f}s (<= 600s)")


@pytest.mark.slow
def test_criterion_3_linear_gaussian_identity_prior(tmp_path, verdict):
    rows, seconds = linear_gaussian_pattern(tmp_path, "identity-prior")
    ok = (
        all(r["mean_err"] <= 1e-3 and r["h_trace_err"] <= 0.15 and r["i_ratio"] <= 0.20 for r in rows)
        and seconds <= 600
    )
    verdict(3, ok, f"{describe(rows)}; {seconds:.0f}s (<= 600s)")


def test_criterion_4_double_banana(tmp_path, verdict):
    t0 = time.monotonic()
    res = run(tmp_path, "banana", "double-banana", 10, n=1000)
    seconds = time.monotonic() - t0
    X0 = read_particles_csv(tmp_path / "banana" / "particles_0.csv")
    lo, hi = mode_split(res.final, 0, 0.0)
    before = float(np.mean(res.model.log_density(X0)))
    after = float(np.mean(res.model.log_density(res.final.positions)))
    ok = min(lo, hi) >= 0.15 and after > before and seconds <= 120
    verdict(4, ok, f"split {lo:.3f}/{hi:.3f} (>= 0.15), mean log pi {before:.3f} -> {after:.3f}, {seconds:.0f}s (<= 120s)")


@pytest.mark.slow
def test_criterion_5_conditioned_diffusion(tmp_path, verdict):
    t0 = time.monotonic()
    res = run(tmp_path, "diffusion", "conditioned-diffusion", 50, n=1000, strategy="bd")
    seconds = time.monotonic() - t0
    model, X = res.model, res.final.positions
    y = np.asarray(model.data)
    coverage = band_coverage(X, model.forward, y)
    rmse = float(np.sqrt(np.mean((model.forward(X).mean(axis=0) - y) ** 2)))
    ok = coverage >= 0.8 and rmse <= 3 * model.noise_sd and seconds <= 600
    verdict(5, ok, f"coverage {coverage:.2f} (>= 0.8), predictive RMSE {rmse:.4f} (<= 0.3), {seconds:.0f}s (<= 600s)")


def test_criterion_6_strategy_equivalence(tmp_path, verdict):
    t0 = time.monotonic()
    finals = {s: run(tmp_path, s, "nonlinear-regression", 20, n=100, strategy=s).final for s in ("full", "bd", "ncg")}
    seconds = time.monotonic() - t0
    summaries = {s: summarize(e) for s, e in finals.items()}
    worst = 0.0
    parts = []
    for a, b in (("full", "bd"), ("full", "ncg"), ("bd", "ncg")):
        rel = moment_discrepancy(summaries[a], summaries[b])
        worst = max(worst, rel["mean_rel"], rel["trace_rel"])
        parts.append(f"{a}/{b}: mean {rel['mean_rel']:.3f} trace {rel['trace_rel']:.3f}")
    traces = ", ".join(f"{s} trace {summaries[s].cov_trace:.4f}" for s in summaries)
    ok = worst <= 0.10 and seconds <= 120
    verdict(6, ok, f"{'; '.join(parts)} (<= 0.10); {traces}; {seconds:.0f}s (<= 120s)")


def test_criterion_7_oracle_suites(verdict):
    t0 = time.monotonic()
    rng = np.random.default_rng(SEED)

    # (a) gradients and Jacobians against central differences
    grad_err = jac_err = 0.0
    for make in MODELS.values():
        model = make()
        scale = np.sqrt(np.diag(model.prior.cov))
        for _ in range(5):
            x = model.prior.mean + scale * rng.standard_normal(model.dim)
            grad_err = max(grad_err, grad_check(model, x, h=1e-5))
            J = model.jacobian(x[None])[0]
            fd = fd_jacobian(lambda z: model.forward(z[None])[0], x)
            jac_err = max(jac_err, np.max(np.abs(J - fd)) / max(np.max(np.abs(J)), 1.0))

    # (b) operator matvec against dense assembly, n=3, d=2
    op_err = 0.0
    for seed in range(5):
        model = nonlinear_regression(seed)
        ens = ParticleEnsemble(0.7 * rng.standard_normal((3, 2)))
        metric = isotropic_metric(ens)
        for gn in (True, False):
            dense = assemble(ens, model, metric, FULL_DENSE, gauss_newton=gn)
            op = assemble(ens, model, metric, OPERATOR, gauss_newton=gn)
            v = rng.standard_normal(6)
            op_err = max(op_err, float(np.max(np.abs(op.matvec(v) - dense.blocks @ v))))

    # (c) truncated CG against a dense solve on SPD systems
    cg_err = 0.0
    for d in (2, 5, 20):
        A = random_spd(rng, d)
        b = rng.standard_normal(d)
        x, _ = truncated_cg(lambda v: A @ v, b, tol=1e-14, max_iters=10 * d)
        exact = np.linalg.solve(A, b)
        cg_err = max(cg_err, float(np.linalg.norm(x - exact) / np.linalg.norm(exact)))

    # (d) assembled second variation against differenced first variation
    sv_err = 0.0
    for seed in range(4):
        r = np.random.default_rng(seed)
        model = GaussianTarget(r.standard_normal(2), random_spd(r, 2))
        ens = ParticleEnsemble(r.standard_normal((3, 2)))
        for metric in (compute_metric(ens, model), isotropic_metric(ens)):
            H = assemble(ens, model, metric, FULL_DENSE, gauss_newton=False).blocks
            a, b = r.standard_normal((3, 2)), r.standard_normal((3, 2))
            fd = second_variation_fd(model, metric, ens.positions, a, b)
            sv_err = max(sv_err, abs(a.reshape(-1) @ H @ b.reshape(-1) - fd) / max(abs(fd), 1e-6))
    seconds = time.monotonic() - t0

    ok = grad_err <= 1e-5 and jac_err <= 1e-5 and op_err <= 1e-12 and cg_err <= 1e-8 and sv_err <= 1e-4 and seconds < 30
    verdict(
        7,
        ok,
        f"(a) grad {grad_err:.1e} jac {jac_err:.1e} (<= 1e-5) (b) {op_err:.1e} (<= 1e-12) "
        f"(c) {cg_err:.1e} (<= 1e-8) (d) {sv_err:.1e} (<= 1e-4), {seconds:.1f}s (< 30s)",
    )


def test_criterion_8_determinism(tmp_path, verdict):
    cases = [
        ("banana", "double-banana", 10, {"n": 1000}),
        ("regression-ncg", "nonlinear-regression", 20, {"n": 100, "strategy": "ncg"}),
        ("laplace-H-40", {"name": "linear-gaussian", "variant": "laplace-prior", "d": 40}, 50, {"n": 1000}),
    ]
    mismatched = []
    for name, problem, iters, kw in cases:
        for rep in ("a", "b"):
            run(tmp_path / rep, name, problem, iters, checkpoints=range(0, iters + 1, 10), **kw)
        for path in sorted((tmp_path / "a" / name).glob("particles_*.csv")):
            if path.read_bytes() != (tmp_path / "b" / name / path.name).read_bytes():
                mismatched.append(f"{name}/{path.name}")
    verdict(8, not mismatched, f"{len(cases)} runs repeated; mismatched CSVs: {mismatched or 'none'}")

