"""Run configuration, the SVGD/SVN driver loop, and run artifacts.

Config files are JSON with ``"schema_version": 1``. A minimal run config::

    {
      "schema_version": 1,
      "problem": {"name": "double-banana"},
      "algorithm": "svn", "strategy": "bd",
      "kernel": "scaled-hessian",
      "n": 50,
      "budget": {"iterations": 5},
      "seed": 7,
      "out_dir": "runs/banana"
    }
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from . import problems
from .diagnostics import posterior_error, summarize
from .ensemble import GaussianSpec, ParticleEnsemble, init_ensemble, make_rngs
from .kernels import ISOTROPIC, SCALED_HESSIAN, compute_metric, isotropic_metric, resolve_scaling
from .linsolve import SolveReport
from .svgd import svgd_direction
from .svn import DEFAULT_CG_TOL, DEFAULT_DENSE_LIMIT, ResidualStepControl, newton_direction, particle_curvatures

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
PROBLEMS = ("double-banana", "nonlinear-regression", "conditioned-diffusion", "linear-gaussian")
ALGORITHMS = ("svgd", "svn")
STRATEGIES = ("full", "bd", "ncg")
KERNELS = (ISOTROPIC, SCALED_HESSIAN)
CURVATURES = ("gauss-newton", "exact")
DEFAULT_STEP = {"svgd": 0.05, "svn": 1.0}
STEP_CONTROLS = ("fixed", "adaptive")
ADAPTIVE_START = 0.25  # first adaptive step as a fraction of the step size
DEFAULT_STEP_CONTROL = {"svgd": "fixed", "svn": "adaptive"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ProblemConfig:
    name: str
    variant: str | None = None
    d: int | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name}
        if self.variant is not None:
            out["variant"] = self.variant
        if self.d is not None:
            out["d"] = self.d
        return out


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    algorithm: str = "svn"
    strategy: str | None = "bd"
    kernel: str = SCALED_HESSIAN
    g: float | str = "d"
    n: int = 100
    iterations: int | None = 10
    wallclock_seconds: float | None = None
    step_size: float | None = None
    step_decay: float = 1.0
    step_control: str | None = None
    seed: int = 0
    checkpoints: tuple[int, ...] | None = None
    out_dir: str = "out"
    curvature: str = "gauss-newton"
    cg_tol: float = DEFAULT_CG_TOL
    max_cg_iters: int | None = None
    dense_limit: int = DEFAULT_DENSE_LIMIT
    label: str | None = None

    @property
    def step(self) -> float:
        return DEFAULT_STEP[self.algorithm] if self.step_size is None else self.step_size

    @property
    def control(self) -> str:
        return DEFAULT_STEP_CONTROL[self.algorithm] if self.step_control is None else self.step_control

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        kern = "H" if self.kernel == SCALED_HESSIAN else "I"
        base = f"{self.algorithm.upper()}-{kern}"
        return f"{base}-{self.strategy}" if self.algorithm == "svn" else base

    def checkpoint_list(self, completed: int) -> list[int]:
        if self.checkpoints is not None:
            return sorted({c for c in self.checkpoints if c <= completed})
        if self.iterations is not None:
            return list(range(completed + 1))
        return sorted({0, completed})

    def to_dict(self) -> dict:
        budget = {"iterations": self.iterations} if self.iterations is not None else {
            "wallclock_seconds": self.wallclock_seconds
        }
        out = {
            "schema_version": SCHEMA_VERSION,
            "problem": self.problem.to_dict(),
            "algorithm": self.algorithm,
            "strategy": self.strategy,
            "kernel": self.kernel,
            "g": self.g,
            "n": self.n,
            "budget": budget,
            "step_size": self.step_size,
            "step_decay": self.step_decay,
            "step_control": self.step_control,
            "seed": self.seed,
            "checkpoints": None if self.checkpoints is None else list(self.checkpoints),
            "out_dir": self.out_dir,
            "curvature": self.curvature,
            "cg_tol": self.cg_tol,
            "max_cg_iters": self.max_cg_iters,
            "dense_limit": self.dense_limit,
        }
        if self.label is not None:
            out["label"] = self.label
        return out


# --------------------------------------------------------------------------
# parsing


def _int(value, field: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(field, f"must be >= {minimum}, got {value}")
    return value


def _float(value, field: str, positive: bool = False, nonnegative: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(field, f"expected a finite number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(field, f"must be positive, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(field, f"must be nonnegative, got {value}")
    return float(value)


def _choice(value, field: str, options) -> str:
    if value not in options:
        raise ConfigError(field, f"unknown value {value!r}; expected one of {list(options)}")
    return value


def parse_problem(raw) -> ProblemConfig:
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict):
        raise ConfigError("problem", "expected a name or an object with 'name'")
    name = _choice(raw.get("name"), "problem.name", PROBLEMS)
    variant = raw.get("variant")
    d = raw.get("d")
    if name == "linear-gaussian":
        variant = _choice(variant or problems.LAPLACE_PRIOR, "problem.variant",
                          (problems.LAPLACE_PRIOR, problems.IDENTITY_PRIOR))
        d = _int(d if d is not None else 40, "problem.d", minimum=2)
    elif variant is not None or d is not None:
        raise ConfigError("problem", f"problem {name!r} takes no variant or d")
    return ProblemConfig(name, variant, d)


_RUN_KEYS = {
    "schema_version", "problem", "algorithm", "strategy", "kernel", "g", "n", "budget", "step_size",
    "step_decay", "step_control", "seed", "checkpoints", "out_dir", "curvature", "cg_tol", "max_cg_iters",
    "dense_limit", "label",
}


def check_schema(raw: dict) -> None:
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")


def parse_run_config(raw: dict, check_version: bool = True) -> RunConfig:
    """Validate a run-config mapping into a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if check_version:
        check_schema(raw)
    unknown = sorted(set(raw) - _RUN_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    if "problem" not in raw:
        raise ConfigError("problem", "missing")
    problem = parse_problem(raw["problem"])

    algorithm = raw.get("algorithm", "svn")
    strategy = raw.get("strategy")
    if isinstance(algorithm, dict):
        strategy = algorithm.get("strategy", strategy)
        algorithm = algorithm.get("name")
    algorithm = _choice(algorithm, "algorithm", ALGORITHMS)
    if algorithm == "svn":
        strategy = _choice(strategy or "bd", "strategy", STRATEGIES)
    elif strategy is not None:
        raise ConfigError("strategy", "only valid with algorithm 'svn'")

    kernel = raw.get("kernel", SCALED_HESSIAN)
    g = raw.get("g", "d")
    if isinstance(kernel, dict):
        g = kernel.get("g", g)
        kernel = kernel.get("name")
    kernel = _choice(kernel, "kernel", KERNELS)
    try:
        resolve_scaling(g, 1)
    except (TypeError, ValueError) as exc:
        raise ConfigError("g", str(exc)) from None

    budget = raw.get("budget", {"iterations": 10})
    if not isinstance(budget, dict) or len(budget) != 1 or not set(budget) <= {"iterations", "wallclock_seconds"}:
        raise ConfigError("budget", "expected exactly one of 'iterations' or 'wallclock_seconds'")
    iterations = wallclock = None
    if "iterations" in budget:
        iterations = _int(budget["iterations"], "budget.iterations", minimum=0)
    else:
        wallclock = _float(budget["wallclock_seconds"], "budget.wallclock_seconds", positive=True)

    checkpoints = raw.get("checkpoints")
    if checkpoints is not None:
        if not isinstance(checkpoints, list):
            raise ConfigError("checkpoints", "expected a list of iteration numbers")
        checkpoints = tuple(sorted({_int(c, "checkpoints", minimum=0) for c in checkpoints}))
        if iterations is not None and checkpoints and checkpoints[-1] > iterations:
            raise ConfigError("checkpoints", f"checkpoint {checkpoints[-1]} exceeds the iteration budget {iterations}")

    step_size = raw.get("step_size")
    if step_size is not None:
        step_size = _float(step_size, "step_size", nonnegative=True)
    step_control = raw.get("step_control")
    if step_control is not None:
        step_control = _choice(step_control, "step_control", STEP_CONTROLS)
    if step_size == 0 and (step_control or DEFAULT_STEP_CONTROL[algorithm]) == "adaptive":
        raise ConfigError("step_control", "adaptive step control needs a positive step_size")
    max_cg = raw.get("max_cg_iters")
    if max_cg is not None:
        max_cg = _int(max_cg, "max_cg_iters", minimum=1)
    n = _int(raw.get("n", 100), "n", minimum=1)
    if kernel == ISOTROPIC and n < 2:
        raise ConfigError("n", "the isotropic kernel needs at least two particles")
    out_dir = raw.get("out_dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError("out_dir", "expected a path string")
    label = raw.get("label")
    if label is not None and not isinstance(label, str):
        raise ConfigError("label", "expected a string")

    return RunConfig(
        problem=problem,
        algorithm=algorithm,
        strategy=strategy,
        kernel=kernel,
        g=g,
        n=n,
        iterations=iterations,
        wallclock_seconds=wallclock,
        step_size=step_size,
        step_decay=_float(raw.get("step_decay", 1.0), "step_decay", positive=True),
        step_control=step_control,
        seed=_int(raw.get("seed", 0), "seed", minimum=0),
        checkpoints=checkpoints,
        out_dir=out_dir,
        curvature=_choice(raw.get("curvature", "gauss-newton"), "curvature", CURVATURES),
        cg_tol=_float(raw.get("cg_tol", DEFAULT_CG_TOL), "cg_tol", positive=True),
        max_cg_iters=max_cg,
        dense_limit=_int(raw.get("dense_limit", DEFAULT_DENSE_LIMIT), "dense_limit", minimum=1),
        label=label,
    )


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"not valid JSON: {exc}") from None


def load_run_config(path) -> RunConfig:
    """Read a run config, or the ``config`` echoed inside a ``report.json``."""
    raw = load_json(path)
    if isinstance(raw, dict) and "config" in raw and "problem" not in raw:
        raw = raw["config"]
    return parse_run_config(raw)


# --------------------------------------------------------------------------
# problems and the driver loop


def build_problem(problem: ProblemConfig, seed: int):
    """Model plus its analytic posterior (``None`` unless linear-Gaussian)."""
    data_rng, _ = make_rngs(seed)
    if problem.name == "double-banana":
        return problems.double_banana(data_rng), None
    if problem.name == "nonlinear-regression":
        return problems.nonlinear_regression(data_rng), None
    if problem.name == "conditioned-diffusion":
        return problems.conditioned_diffusion(data_rng), None
    return problems.linear_gaussian(problem.variant, problem.d, data_rng)


def initial_ensemble(model, n: int, seed: int) -> ParticleEnsemble:
    _, init_rng = make_rngs(seed)
    return init_ensemble(model.prior, n, init_rng)


def summarize_reports(strategy: str | None, reports: list[SolveReport]) -> dict | None:
    if not reports:
        return None
    terms: dict[str, int] = {}
    for r in reports:
        terms[r.termination] = terms.get(r.termination, 0) + 1
    return {
        "strategy": strategy,
        "solves": len(reports),
        "iterations": int(sum(r.iterations for r in reports)),
        "max_relative_residual": float(max(r.final_relative_residual for r in reports)),
        "max_jitter": float(max(r.jitter_applied for r in reports)),
        "terminations": dict(sorted(terms.items())),
    }


@dataclass
class IterationRecord:
    ensemble: ParticleEnsemble
    seconds: float
    step: float
    solver: dict | None = None


def step_once(model, ensemble: ParticleEnsemble, cfg: RunConfig, control: ResidualStepControl | None = None,
              step: float | None = None):
    """Advance one iteration; returns the new ensemble, the step used, and a solver summary.

    With ``control`` the step comes from the residual schedule, otherwise
    ``step`` is used as given.
    """
    X = ensemble.positions
    needs_gn = cfg.algorithm == "svn" or cfg.kernel == SCALED_HESSIAN
    curv = particle_curvatures(model, X, gauss_newton=True) if needs_gn else None
    if cfg.kernel == SCALED_HESSIAN:
        metric = compute_metric(ensemble, model, cfg.g, curvatures=curv[None] if curv.ndim == 2 else curv)
    else:
        metric = isotropic_metric(ensemble)
    if cfg.algorithm == "svgd":
        direction = svgd_direction(ensemble, model, metric)
        residual = direction
        solver = None
    else:
        hcurv = curv if cfg.curvature == "gauss-newton" else particle_curvatures(model, X, gauss_newton=False)
        direction, reports = newton_direction(
            ensemble, model, metric, cfg.strategy,
            gauss_newton=cfg.curvature == "gauss-newton", cg_tol=cfg.cg_tol, max_cg_iters=cfg.max_cg_iters,
            dense_limit=cfg.dense_limit, curvatures=hcurv,
        )
        residual = svgd_direction(ensemble, model, metric) if control is not None else None
        solver = summarize_reports(cfg.strategy, reports)
    if control is not None:
        step = control.next_step(float(np.sqrt(np.mean(residual**2))))
    return ensemble.advance(X + step * direction), step, solver


def step_controller(cfg: RunConfig) -> ResidualStepControl | None:
    if cfg.control == "fixed":
        return None
    return ResidualStepControl(initial=ADAPTIVE_START * cfg.step, maximum=cfg.step, minimum=min(1e-3, cfg.step))


def iterate(model, ensemble: ParticleEnsemble, cfg: RunConfig) -> Iterator[IterationRecord]:
    """Yield one record per completed iteration until the budget is spent.

    Wall-clock budgets are checked between iterations only, so the iteration
    in flight always completes.
    """
    start = time.monotonic()
    current = ensemble
    control = step_controller(cfg)
    while True:
        done = current.iteration - ensemble.iteration
        if cfg.iterations is not None and done >= cfg.iterations:
            return
        if cfg.wallclock_seconds is not None and time.monotonic() - start >= cfg.wallclock_seconds:
            return
        t0 = time.monotonic()
        if control is not None:
            control.maximum = cfg.step * cfg.step_decay**done
            current, step, solver = step_once(model, current, cfg, control=control)
        else:
            current, step, solver = step_once(model, current, cfg, step=cfg.step * cfg.step_decay**done)
        yield IterationRecord(current, time.monotonic() - t0, step, solver)


# --------------------------------------------------------------------------
# files


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def particles_csv(ensemble: ParticleEnsemble) -> str:
    d = ensemble.d
    lines = ["iteration,particle," + ",".join(f"coord_{j}" for j in range(d))]
    it = ensemble.iteration
    for i, row in enumerate(ensemble.positions):
        lines.append(f"{it},{i}," + ",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_json(path: Path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n")


def read_particles_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)[:, 2:]


def checkpoint_entry(ensemble: ParticleEnsemble, analytic) -> dict:
    entry: dict[str, Any] = {"iteration": ensemble.iteration}
    if ensemble.n >= 2:
        summary = summarize(ensemble)
        entry["summary"] = summary.to_dict()
        if analytic is not None:
            entry["posterior_error"] = posterior_error(summary, analytic)
    return entry


@dataclass
class RunResult:
    config: RunConfig
    model: Any
    analytic: Any
    final: ParticleEnsemble
    report: dict
    complete: bool = True


def execute(cfg: RunConfig, out_dir: Path | None = None, plots: bool = False) -> RunResult:
    """Run one configuration end to end, writing CSVs, report, and plots.

    On a runtime failure the report is still written, with
    ``"complete": false`` and the error message, and the exception re-raised.
    """
    from .plots import scatter_svg

    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, analytic = build_problem(cfg.problem, cfg.seed)
    ensemble = initial_ensemble(model, cfg.n, cfg.seed)

    wanted = set(cfg.checkpoints) if cfg.checkpoints is not None else None
    every = wanted is None and cfg.iterations is not None
    snapshots: dict[int, ParticleEnsemble] = {}

    def keep(ens: ParticleEnsemble, final: bool = False):
        if every or (wanted is not None and ens.iteration in wanted) or (wanted is None and (final or ens.iteration == 0)):
            snapshots[ens.iteration] = ens
            write_text(out / f"particles_{ens.iteration}.csv", particles_csv(ens))
            if plots and ens.d == 2:
                write_text(out / f"scatter_{ens.iteration}.svg", scatter_svg(ens.positions, title=f"{cfg.name} iteration {ens.iteration}"))

    report: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "complete": False,
        "config": cfg.to_dict(),
        "realization": model.realization(),
    }
    if analytic is not None:
        report["analytic"] = {
            "mean_average": float(np.mean(analytic.mean)),
            "cov_trace": float(np.trace(analytic.cov)),
        }
    solver_log: list = []
    steps: list[float] = []
    seconds: list[float] = []
    keep(ensemble)
    current = ensemble
    error = None
    t_start = time.monotonic()
    try:
        for rec in iterate(model, ensemble, cfg):
            current = rec.ensemble
            seconds.append(rec.seconds)
            solver_log.append(rec.solver)
            steps.append(rec.step)
            logger.info("%s iteration %d (%.3fs)", cfg.name, current.iteration, rec.seconds)
            keep(current)
    except (ArithmeticError, np.linalg.LinAlgError, MemoryError, ValueError) as exc:
        error = exc
    if wanted is None and not every:
        keep(current, final=True)
    report["complete"] = error is None
    if error is not None:
        report["error"] = f"{type(error).__name__}: {error}"
    report["iterations_completed"] = current.iteration
    report["budget_kind"] = "iterations" if cfg.iterations is not None else "wallclock_seconds"
    report["checkpoints"] = [checkpoint_entry(snapshots[k], analytic) for k in sorted(snapshots)]
    report["step_sizes"] = steps
    report["solver"] = solver_log
    report["timing"] = {"per_iteration_seconds": seconds, "total_seconds": time.monotonic() - t_start}
    write_json(out / "report.json", report)
    if error is not None:
        raise error
    return RunResult(cfg, model, analytic, current, report)


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


# --------------------------------------------------------------------------
# compare and validate


def _variants(raw: dict, section: str) -> list[dict]:
    variants = raw.get("variants")
    if variants is None:
        return [{}]
    if not isinstance(variants, list) or not variants:
        raise ConfigError("variants", "expected a non-empty list")
    for i, v in enumerate(variants):
        if not isinstance(v, dict):
            raise ConfigError(f"variants[{i}]", "expected an object")
    return variants


def _merge_variant(base: dict, variant: dict, index: int) -> RunConfig:
    for key in ("problem", "seed"):
        if key in variant and key in base and variant[key] != base[key]:
            raise ConfigError(f"variants[{index}].{key}", f"all variants must share the same {key}")
    merged = {k: v for k, v in base.items() if k in _RUN_KEYS}
    merged.update(variant)
    try:
        return parse_run_config(merged, check_version=False)
    except ConfigError as exc:
        raise ConfigError(f"variants[{index}].{exc.field}", str(exc).split(": ", 1)[-1]) from None


def parse_compare_config(raw: dict) -> list[RunConfig]:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    check_schema(raw)
    variants = _variants(raw, "compare")
    if len(variants) < 2:
        raise ConfigError("variants", "compare needs at least two variants")
    base = {k: v for k, v in raw.items() if k != "variants"}
    configs = [_merge_variant(base, v, i) for i, v in enumerate(variants)]
    problems_seen = {json.dumps(c.problem.to_dict(), sort_keys=True) for c in configs}
    if len(problems_seen) > 1:
        raise ConfigError("variants", "all variants must share the same problem")
    if len({c.seed for c in configs}) > 1:
        raise ConfigError("variants", "all variants must share the same seed")
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("variants", f"variant labels must be unique, got {names}")
    return configs


def moment_discrepancy(a, b) -> dict:
    """Symmetric relative differences between two ensembles' first two moments."""
    ma, mb = a.mean, b.mean
    denom_m = max(np.linalg.norm(ma), np.linalg.norm(mb))
    dm = float(np.linalg.norm(ma - mb))
    denom_t = max(a.cov_trace, b.cov_trace)
    denom_c = max(np.linalg.norm(a.covariance), np.linalg.norm(b.covariance))
    return {
        "mean_rel": dm / denom_m if denom_m > 0 else dm,
        "trace_rel": abs(a.cov_trace - b.cov_trace) / denom_t if denom_t > 0 else 0.0,
        "cov_rel": float(np.linalg.norm(a.covariance - b.covariance) / denom_c) if denom_c > 0 else 0.0,
    }


def run_compare(configs: list[RunConfig], out_dir: Path, plots: bool = False) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for cfg in configs:
        results.append(execute(cfg, out_dir / cfg.name, plots=plots))
    summaries = {r.config.name: summarize(r.final) for r in results}
    variants = []
    for r in results:
        variants.append({
            "name": r.config.name,
            "config": r.config.to_dict(),
            "iterations_completed": r.final.iteration,
            "summary": summaries[r.config.name].to_dict(),
            "seconds": r.report["timing"]["total_seconds"],
        })
    pairs = []
    names = [c.name for c in configs]
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            pairs.append({"a": names[i], "b": names[j], **moment_discrepancy(summaries[names[i]], summaries[names[j]])})
    comparison = {"schema_version": SCHEMA_VERSION, "variants": variants, "pairwise": pairs}
    write_json(out_dir / "comparison.json", comparison)
    return comparison


DEFAULT_DIMS = (40, 60, 80, 100)


def parse_validate_config(raw: dict) -> tuple[list[RunConfig], list[int]]:
    """Sampler variants and the dimension list for the discretization study."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    check_schema(raw)
    dims = raw.get("dims", list(DEFAULT_DIMS))
    if not isinstance(dims, list) or not dims:
        raise ConfigError("dims", "expected a non-empty list of dimensions")
    dims = [_int(d, "dims", minimum=2) for d in dims]
    base = {k: v for k, v in raw.items() if k not in ("variants", "dims")}
    problem = parse_problem(base.get("problem", "linear-gaussian"))
    if problem.name != "linear-gaussian":
        raise ConfigError("problem.name", "validate needs the linear-gaussian problem")
    variants = _variants(raw, "validate")
    configs = [_merge_variant(base, v, i) for i, v in enumerate(variants)]
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("variants", f"variant labels must be unique, got {names}")
    return configs, dims


def run_validate(configs: list[RunConfig], dims: list[int], out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    table: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "problem": configs[0].problem.variant,
        "dims": dims,
        "mean_average": {"theoretical": []},
        "trace": {"theoretical": []},
        "errors": {},
    }
    for cfg in configs:
        table["mean_average"][cfg.name] = []
        table["trace"][cfg.name] = []
        table["errors"][cfg.name] = []
    for d in dims:
        theory_done = False
        for cfg in configs:
            iters = cfg.iterations
            run_cfg = dataclasses.replace(
                cfg,
                problem=ProblemConfig("linear-gaussian", cfg.problem.variant, d),
                checkpoints=cfg.checkpoints if cfg.checkpoints is not None else ((0, iters) if iters is not None else None),
            )
            res = execute(run_cfg, out_dir / f"{cfg.name}_d{d}")
            summary = summarize(res.final)
            if not theory_done:
                table["mean_average"]["theoretical"].append(float(np.mean(res.analytic.mean)))
                table["trace"]["theoretical"].append(float(np.trace(res.analytic.cov)))
                theory_done = True
            table["mean_average"][cfg.name].append(summary.mean_average)
            table["trace"][cfg.name].append(summary.cov_trace)
            table["errors"][cfg.name].append(posterior_error(summary, res.analytic))
    write_json(out_dir / "tables.json", table)
    return table
