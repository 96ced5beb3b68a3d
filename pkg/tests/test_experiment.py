import json

import numpy as np
import pytest

from stein_newton.experiment import (
    ConfigError,
    RunConfig,
    execute,
    moment_discrepancy,
    parse_compare_config,
    parse_run_config,
    parse_validate_config,
    read_particles_csv,
    run_compare,
    run_validate,
    strip_timing,
)
from stein_newton.diagnostics import summarize


def base(**kw):
    raw = {"schema_version": 1, "problem": "double-banana", "n": 8, "budget": {"iterations": 2}, "seed": 1}
    raw.update(kw)
    return raw


def test_defaults():
    cfg = parse_run_config(base())
    assert cfg.algorithm == "svn" and cfg.strategy == "bd" and cfg.kernel == "scaled-hessian"
    assert cfg.step == 1.0 and cfg.control == "adaptive"
    svgd = parse_run_config(base(algorithm="svgd"))
    assert svgd.strategy is None and svgd.step == 0.05 and svgd.control == "fixed"
    assert svgd.name == "SVGD-H"
    assert parse_run_config(base(kernel="isotropic", strategy="ncg")).name == "SVN-I-ncg"


def test_nested_algorithm_and_kernel_forms():
    cfg = parse_run_config(base(algorithm={"name": "svn", "strategy": "full"}, kernel={"name": "isotropic"}))
    assert cfg.strategy == "full" and cfg.kernel == "isotropic"


@pytest.mark.parametrize(
    "change, field",
    [
        ({"schema_version": 2}, "schema_version"),
        ({"problem": "rosenbrock"}, "problem.name"),
        ({"algorithm": "hmc"}, "algorithm"),
        ({"strategy": "lbfgs"}, "strategy"),
        ({"algorithm": "svgd", "strategy": "bd"}, "strategy"),
        ({"kernel": "laplace"}, "kernel"),
        ({"n": 0}, "n"),
        ({"n": 2.5}, "n"),
        ({"budget": {"iterations": 1, "wallclock_seconds": 1}}, "budget"),
        ({"budget": {"wallclock_seconds": -1}}, "budget.wallclock_seconds"),
        ({"checkpoints": [0, 5]}, "checkpoints"),
        ({"step_size": -1.0}, "step_size"),
        ({"step_size": 0.0}, "step_control"),
        ({"step_control": "armijo"}, "step_control"),
        ({"curvature": "bfgs"}, "curvature"),
        ({"colour": "red"}, "colour"),
        ({"seed": -3}, "seed"),
        ({"g": -1.0}, "g"),
        ({"kernel": "isotropic", "n": 1}, "n"),
        ({"problem": {"name": "double-banana", "d": 3}}, "problem"),
        ({"problem": {"name": "linear-gaussian", "variant": "banded"}}, "problem.variant"),
    ],
)
def test_config_errors_name_the_field(change, field):
    with pytest.raises(ConfigError) as info:
        parse_run_config(base(**change))
    assert info.value.field == field


def test_zero_step_allowed_with_fixed_control(tmp_path):
    cfg = parse_run_config(base(step_size=0.0, step_control="fixed"))
    res = execute(cfg, tmp_path)
    np.testing.assert_array_equal(read_particles_csv(tmp_path / "particles_0.csv"), res.final.positions)


def test_round_trip_through_to_dict():
    cfg = parse_run_config(base(kernel="isotropic", checkpoints=[0, 2], step_control="fixed", label="x"))
    assert parse_run_config(cfg.to_dict()) == cfg


def test_run_writes_csvs_and_report(tmp_path):
    cfg = parse_run_config(base(checkpoints=[0, 2]))
    res = execute(cfg, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["particles_0.csv", "particles_2.csv", "report.json"]
    header = (tmp_path / "particles_2.csv").read_text().splitlines()[0]
    assert header == "iteration,particle,coord_0,coord_1"
    X = read_particles_csv(tmp_path / "particles_2.csv")
    np.testing.assert_array_equal(X, res.final.positions)  # 17 significant digits round-trip exactly
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["complete"] and report["iterations_completed"] == 2
    assert [c["iteration"] for c in report["checkpoints"]] == [0, 2]
    assert len(report["step_sizes"]) == 2 and report["step_sizes"][0] == 0.25
    assert len(report["solver"]) == 2


def test_every_iteration_checkpointed_by_default(tmp_path):
    execute(parse_run_config(base()), tmp_path)
    assert {p.name for p in tmp_path.glob("particles_*.csv")} == {"particles_0.csv", "particles_1.csv", "particles_2.csv"}


def test_identical_seeds_give_identical_bytes(tmp_path):
    cfg = parse_run_config(base(kernel="isotropic", strategy="ncg"))
    a = execute(cfg, tmp_path / "a")
    b = execute(cfg, tmp_path / "b")
    for it in range(3):
        assert (tmp_path / "a" / f"particles_{it}.csv").read_bytes() == (tmp_path / "b" / f"particles_{it}.csv").read_bytes()
    assert strip_timing(a.report) == strip_timing(b.report)


def test_different_seeds_differ(tmp_path):
    a = execute(parse_run_config(base(seed=1)), tmp_path / "a")
    b = execute(parse_run_config(base(seed=2)), tmp_path / "b")
    assert not np.array_equal(a.final.positions, b.final.positions)


def test_wallclock_budget(tmp_path):
    cfg = parse_run_config(base(budget={"wallclock_seconds": 0.5}))
    res = execute(cfg, tmp_path)
    assert res.report["budget_kind"] == "wallclock_seconds"
    assert res.final.iteration >= 1
    assert res.report["timing"]["total_seconds"] < 5.0
    assert {p.name for p in tmp_path.glob("particles_*.csv")} == {"particles_0.csv", f"particles_{res.final.iteration}.csv"}


def test_zero_iterations_returns_initial_ensemble(tmp_path):
    res = execute(parse_run_config(base(budget={"iterations": 0})), tmp_path)
    assert res.final.iteration == 0
    assert res.report["step_sizes"] == []


def test_linear_gaussian_report_has_posterior_error(tmp_path):
    raw = base(problem={"name": "linear-gaussian", "variant": "identity-prior", "d": 5}, n=20)
    res = execute(parse_run_config(raw), tmp_path)
    last = res.report["checkpoints"][-1]
    assert set(last["posterior_error"]) >= {"mean_average_abs_err", "trace_rel_err"}
    assert res.report["analytic"]["cov_trace"] == pytest.approx(np.trace(res.analytic.cov))


def test_step_decay_caps_adaptive_step(tmp_path):
    cfg = parse_run_config(base(budget={"iterations": 4}, step_decay=0.5))
    steps = execute(cfg, tmp_path).report["step_sizes"]
    assert all(s <= 0.5**i + 1e-15 for i, s in enumerate(steps))


def test_fixed_step_is_constant(tmp_path):
    cfg = parse_run_config(base(step_control="fixed", step_size=0.3))
    assert execute(cfg, tmp_path).report["step_sizes"] == [0.3, 0.3]


def compare_raw(**kw):
    raw = base(variants=[{"strategy": "bd"}, {"strategy": "ncg"}])
    raw.update(kw)
    return raw


def test_compare_identical_variants_have_zero_discrepancy(tmp_path):
    configs = parse_compare_config(compare_raw(variants=[{"label": "a"}, {"label": "b"}]))
    out = run_compare(configs, tmp_path)
    pair = out["pairwise"][0]
    assert pair["mean_rel"] == 0.0 and pair["trace_rel"] == 0.0 and pair["cov_rel"] == 0.0
    assert (tmp_path / "comparison.json").exists()
    assert (tmp_path / "a" / "report.json").exists()


@pytest.mark.parametrize(
    "variants",
    [
        [{"strategy": "bd"}],
        [{"strategy": "bd"}, {"strategy": "bd"}],
        [{"problem": "nonlinear-regression"}, {}],
        [{"seed": 4}, {}],
        [{"strategy": "bd"}, {"strategy": "qr"}],
    ],
)
def test_compare_config_errors(variants):
    with pytest.raises(ConfigError):
        parse_compare_config(compare_raw(variants=variants))


def test_moment_discrepancy_is_symmetric():
    rng = np.random.default_rng(0)
    a, b = summarize(rng.standard_normal((50, 3))), summarize(rng.standard_normal((50, 3)) + 0.1)
    assert moment_discrepancy(a, b) == moment_discrepancy(b, a)


def test_validate_table(tmp_path):
    raw = {
        "schema_version": 1,
        "problem": {"name": "linear-gaussian", "variant": "laplace-prior"},
        "n": 10,
        "budget": {"iterations": 1},
        "dims": [3, 4],
        "variants": [{"kernel": "scaled-hessian"}, {"kernel": "isotropic"}],
    }
    configs, dims = parse_validate_config(raw)
    table = run_validate(configs, dims, tmp_path)
    assert list(table["trace"]) == ["theoretical", "SVN-H-bd", "SVN-I-bd"]
    assert all(len(col) == 2 for col in table["trace"].values())
    assert (tmp_path / "tables.json").exists()
    assert (tmp_path / "SVN-I-bd_d4" / "particles_1.csv").exists()


def test_validate_needs_linear_gaussian():
    with pytest.raises(ConfigError, match="linear-gaussian"):
        parse_validate_config({"schema_version": 1, "problem": "double-banana"})


def test_runconfig_name_uses_label():
    from stein_newton.experiment import ProblemConfig

    assert RunConfig(ProblemConfig("double-banana"), label="mine").name == "mine"
