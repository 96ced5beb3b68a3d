"""Conditioned diffusion: coverage of the observations by the 90% pushforward band.

    python3 scripts/conditioned_diffusion.py --iterations 50
"""

import argparse
from pathlib import Path

import numpy as np

from stein_newton.diagnostics import band_coverage, credible_band
from stein_newton.experiment import execute, parse_run_config


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--iterations", type=int, default=50)
    parser.add_argument("--strategy", choices=["bd", "ncg"], default="bd")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="out/diffusion")
    args = parser.parse_args()

    cfg = parse_run_config({
        "schema_version": 1,
        "problem": "conditioned-diffusion",
        "strategy": args.strategy,
        "n": args.n,
        "budget": {"iterations": args.iterations},
        "seed": args.seed,
        "checkpoints": [0, args.iterations],
    })
    res = execute(cfg, Path(args.out_dir))
    model, X = res.model, res.final.positions
    y = np.asarray(model.data)
    F = model.forward(X)
    lo, hi = credible_band(F)
    truth = model.forward(model.x_true[None])[0]
    print(f"{'t':>5} {'y':>9} {'truth':>9} {'mean':>9} {'5%':>9} {'95%':>9}")
    for t, yi, ti, m, a, b in zip(model.obs_steps * model.dt, y, truth, F.mean(axis=0), lo, hi):
        print(f"{t:5.2f} {yi:9.4f} {ti:9.4f} {m:9.4f} {a:9.4f} {b:9.4f}")
    print(f"coverage {band_coverage(X, model.forward, y):.2f}")
    print(f"predictive RMSE vs data {np.sqrt(np.mean((F.mean(axis=0) - y) ** 2)):.4f}")


if __name__ == "__main__":
    main()
