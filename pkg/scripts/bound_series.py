"""Decay of the Picard majorant series and its ratio.

Prints u_n, the ratio u_{n+1}/u_n and the observed decay exponent of the
ratio, together with the iteration count needed for a tail below eps. The
ratio decays like n^(-alpha), so its size at a given n is set by alpha.

    python3 scripts/bound_series.py --alpha 0.5 --beta 0.5 --lam 0.5
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from hilfer_picard.picard_engine import (
    a_priori_iteration_count,
    error_bound_log_terms,
    existence_radius,
)
from hilfer_picard.problem import Problem
from hilfer_picard.rhs_catalog import LinearInLog, derive_hypotheses


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--eps", type=float, default=1e-8)
    ap.add_argument("--n", type=int, nargs="+", default=[0, 5, 10, 20, 50, 100, 200, 1000, 5000])
    args = ap.parse_args()

    p = Problem(args.alpha, args.beta, 1.0, LinearInLog(args.lam, 0.0))
    hyp = derive_hypotheses(p.rhs, p)
    l = existence_radius(hyp, p)
    logs = error_bound_log_terms(max(args.n) + 2, hyp, p, l)
    log_ratio = np.diff(logs)
    print(f"k={hyp.k:g} M={hyp.M:g} A={hyp.A:g} l={l:.6g}")
    print(f"{'n':>6} {'log10 u_n':>11} {'ratio':>10} {'decay exp':>9}")
    prev = None
    for n in args.n:
        r = math.exp(log_ratio[n])
        slope = "" if prev is None or prev[0] == 0 else (
            f"{-math.log(r / prev[1]) / math.log(n / prev[0]):9.3f}"
        )
        print(f"{n:6d} {logs[n] / math.log(10):11.2f} {r:10.3e} {slope:>9}")
        prev = (n, r)
    print(f"a-priori iteration count for eps={args.eps:g}: "
          f"{a_priori_iteration_count(hyp, p, l, args.eps)}")


if __name__ == "__main__":
    main()
