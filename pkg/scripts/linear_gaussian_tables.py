"""Mean-average and covariance-trace tables for the linear-Gaussian problem.

Runs SVN with the scaled-Hessian (H) and isotropic (I) kernels, block-diagonal
solves, against the exact posterior for each dimension.

    python3 scripts/linear_gaussian_tables.py --variant identity-prior --n 1000
"""

import argparse
import tempfile
from pathlib import Path

from stein_newton.experiment import parse_validate_config, run_validate


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--variant", choices=["laplace-prior", "identity-prior"], default="laplace-prior")
    parser.add_argument("--dims", type=int, nargs="+", default=[40, 60, 80, 100])
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--iterations", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()

    raw = {
        "schema_version": 1,
        "problem": {"name": "linear-gaussian", "variant": args.variant},
        "n": args.n,
        "budget": {"iterations": args.iterations},
        "seed": args.seed,
        "dims": args.dims,
        "variants": [{"kernel": "scaled-hessian"}, {"kernel": "isotropic"}],
    }
    configs, dims = parse_validate_config(raw)
    out = Path(args.out_dir or tempfile.mkdtemp(prefix="lg_tables_"))
    table = run_validate(configs, dims, out)

    for key, title in (("mean_average", "mean average"), ("trace", "covariance trace")):
        print(f"\n{args.variant}: {title}")
        cols = list(table[key])
        print(f"{'d':>5}" + "".join(f"{c:>14}" for c in cols))
        for i, d in enumerate(dims):
            print(f"{d:>5}" + "".join(f"{table[key][c][i]:>14.4e}" for c in cols))
    print(f"\nfull table: {out / 'tables.json'}")


if __name__ == "__main__":
    main()
