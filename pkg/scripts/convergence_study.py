"""Grid-refinement study of the product-trapezoidal Hadamard integral.

For each (alpha, p, k) case the integrand u^p * u^k is integrated on graded
grids of increasing size and compared with the power-law closed form. Prints
the error table with observed orders; ``--csv`` also writes it to disk.

    python3 scripts/convergence_study.py --q 2 --sizes 64 128 256 512 1024 2048
"""

from __future__ import annotations

import argparse
import csv
import math

import numpy as np

from hilfer_picard.hadamard_calculus import (
    GridFunction,
    LogGrid,
    hadamard_integral,
    hadamard_integral_powerlaw,
)
from hilfer_picard.validation import QUADRATURE_CASES, quadrature_error


def pointwise_error(alpha: float, p: float, k: float, N: int, q: float) -> float:
    """Max over nodes of the *pointwise* relative error (node 0 excluded)."""
    grid = LogGrid(1.0, N, q)
    u = grid.nodes
    num = hadamard_integral(GridFunction(grid, u**p), alpha, k).values
    exact = hadamard_integral_powerlaw(alpha, p + k, u)
    return float(np.max(np.abs(num[1:] - exact[1:]) / exact[1:]))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=float, default=2.0, help="grading exponent")
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512, 1024, 2048])
    ap.add_argument("--pointwise", action="store_true", help="pointwise instead of sup-relative error")
    ap.add_argument("--csv", default=None, help="write the table to this file")
    args = ap.parse_args()

    rows = []
    header = ["alpha", "p", "k", *(f"N={n}" for n in args.sizes), "order"]
    print("  ".join(f"{h:>9}" for h in header))
    for alpha, p, k in QUADRATURE_CASES:
        if args.pointwise:
            errs = [pointwise_error(alpha, p, k, n, args.q) for n in args.sizes]
        else:
            errs = [quadrature_error(alpha, p, k, n, q=args.q) for n in args.sizes]
        a, b = errs[-2], errs[-1]
        order = math.log(a / b) / math.log(args.sizes[-1] / args.sizes[-2]) if b > 1e-13 else math.nan
        rows.append([alpha, p, k, *errs, order])
        cells = [f"{alpha:9g}", f"{p:9g}", f"{k:9g}", *(f"{e:9.2e}" for e in errs), f"{order:9.2f}"]
        print("  ".join(cells))

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows([[repr(float(v)) for v in r] for r in rows])


if __name__ == "__main__":
    main()
