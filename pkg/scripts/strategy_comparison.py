"""Full, block-diagonal and Newton-CG SVN on the two-dimensional nonlinear regression.

Moments are compared with a grid-quadrature reference of the posterior.

    python3 scripts/strategy_comparison.py --n 100 --iterations 20
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from stein_newton.diagnostics import summarize
from stein_newton.experiment import ProblemConfig, build_problem, execute, parse_run_config


def quadrature_moments(model, half_width=5.0, points=1201):
    g = np.linspace(-half_width, half_width, points)
    X1, X2 = np.meshgrid(g, g, indexing="ij")
    P = np.stack([X1.ravel(), X2.ravel()], axis=1)
    lp = model.log_density(P)
    w = np.exp(lp - lp.max())
    w /= w.sum()
    mean = w @ P
    C = (P - mean).T @ ((P - mean) * w[:, None])
    return mean, C


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--iterations", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--step-control", choices=["fixed", "adaptive"], default=None)
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()

    out = Path(args.out_dir or tempfile.mkdtemp(prefix="strategies_"))
    model, _ = build_problem(ProblemConfig("nonlinear-regression"), args.seed)
    mean, C = quadrature_moments(model)
    print(f"{'reference':>10}  mean [{mean[0]: .4f} {mean[1]: .4f}]  trace {np.trace(C):.4f}")
    for strategy in ("full", "bd", "ncg"):
        raw = {
            "schema_version": 1,
            "problem": "nonlinear-regression",
            "strategy": strategy,
            "n": args.n,
            "budget": {"iterations": args.iterations},
            "seed": args.seed,
            "checkpoints": [0, args.iterations],
        }
        if args.step_control:
            raw["step_control"] = args.step_control
        res = execute(parse_run_config(raw), out / strategy)
        s = summarize(res.final)
        print(f"{strategy:>10}  mean [{s.mean[0]: .4f} {s.mean[1]: .4f}]  trace {s.cov_trace:.4f}")


if __name__ == "__main__":
    main()
