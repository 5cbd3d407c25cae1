"""Oracle suites behind ``hilfer-picard validate``.

Three groups of checks, each compared against closed forms that do not touch
the code under test:

* product-trapezoidal Hadamard integral of ``u^p`` (times ``u^k``) against the
  power-law identity, under grid doubling;
* Euler's product limit for the Gamma function;
* Mittag-Leffler special cases with elementary closed forms.

The integral routine is injectable so that a test harness can corrupt it and
check that the suite notices.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from hilfer_picard.hadamard_calculus import (
    GridFunction,
    LogGrid,
    hadamard_integral,
    hadamard_integral_powerlaw,
)
from hilfer_picard.special_functions import gamma_euler_limit, mittag_leffler

__all__ = [
    "QUADRATURE_CASES",
    "QuadratureStudy",
    "ValidationCase",
    "ValidationLevel",
    "format_table",
    "quadrature_study",
    "run_validation",
]

QUADRATURE_ALPHAS = (0.3, 0.5, 0.8)
QUADRATURE_POWERS = (0.0, 0.25, 1.0, 1.75)
QUADRATURE_KS = (0.0, -0.25)
QUADRATURE_CASES = tuple(
    (a, p, k) for a in QUADRATURE_ALPHAS for p in QUADRATURE_POWERS for k in QUADRATURE_KS
)

# errors below this are rounding noise; they need not keep shrinking
NOISE_FLOOR = 1.0e-12

EULER_XS = (0.3, 0.5, 1.5, 2.7)

IntegralFn = Callable[[GridFunction, float, float], GridFunction]


@dataclass(frozen=True)
class ValidationLevel:
    """Resolution and tolerances of one validation level."""

    name: str
    grid_sizes: tuple[int, ...]
    quad_tol: float
    min_order: float
    euler_m: int
    euler_tol: float


LEVELS = {
    # quick is a smoke test: coarse grids cannot reach the fine tolerance, so
    # it additionally demands a positive observed convergence order, which a
    # corrupted weight destroys.
    "quick": ValidationLevel("quick", (64, 128, 256, 512), 5.0e-2, 0.3, 100_000, 1.0e-4),
    "full": ValidationLevel(
        "full", (64, 128, 256, 512, 1024, 2048), 1.0e-6, 0.0, 1_000_000, 1.0e-5
    ),
}


@dataclass(frozen=True)
class ValidationCase:
    name: str
    error: float
    tolerance: float
    passed: bool
    note: str = ""


@dataclass(frozen=True)
class QuadratureStudy:
    """Errors of one ``(alpha, p, k)`` case over a sequence of grid sizes."""

    alpha: float
    p: float
    k: float
    grid_sizes: tuple[int, ...]
    errors: tuple[float, ...]

    @property
    def monotone(self) -> bool:
        e = self.errors
        return all(b <= a or b <= NOISE_FLOOR for a, b in zip(e, e[1:]))

    @property
    def last_order(self) -> float:
        a, b = self.errors[-2], self.errors[-1]
        if b <= NOISE_FLOOR:
            return math.inf
        n0, n1 = self.grid_sizes[-2], self.grid_sizes[-1]
        return math.log(a / b) / math.log(n1 / n0)


def quadrature_error(
    alpha: float,
    p: float,
    k: float,
    N: int,
    *,
    q: float = 2.0,
    integral: IntegralFn = hadamard_integral,
) -> float:
    """Max-over-nodes error of ``I^alpha[u^p u^k]`` relative to the exact sup.

    The relative scale is the largest exact value on the grid; a pointwise
    ratio is dominated by the first node, where the interpolated ``u^p``
    cannot resolve a non-smooth power regardless of ``N``.
    """
    grid = LogGrid(1.0, N, q)
    u = grid.nodes
    num = integral(GridFunction(grid, u**p), alpha, k).values
    exact = hadamard_integral_powerlaw(alpha, p + k, u)
    return float(np.max(np.abs(num - exact)) / np.max(np.abs(exact)))


def quadrature_study(
    alpha: float,
    p: float,
    k: float,
    grid_sizes: Sequence[int],
    *,
    integral: IntegralFn = hadamard_integral,
) -> QuadratureStudy:
    errors = tuple(quadrature_error(alpha, p, k, N, integral=integral) for N in grid_sizes)
    return QuadratureStudy(alpha, p, k, tuple(grid_sizes), errors)


def _quadrature_cases(level: ValidationLevel, integral: IntegralFn) -> list[ValidationCase]:
    out = []
    for alpha, p, k in QUADRATURE_CASES:
        st = quadrature_study(alpha, p, k, level.grid_sizes, integral=integral)
        err = st.errors[-1]
        notes = []
        if not st.monotone:
            notes.append("not monotone")
        if st.last_order < level.min_order:
            notes.append(f"order {st.last_order:.2f} < {level.min_order}")
        ok = err <= level.quad_tol and not notes
        out.append(
            ValidationCase(
                f"integral a={alpha:g} p={p:g} k={k:g} N={level.grid_sizes[-1]}",
                err,
                level.quad_tol,
                ok,
                "; ".join(notes),
            )
        )
    return out


def _euler_cases(level: ValidationLevel) -> list[ValidationCase]:
    out = []
    for x in EULER_XS:
        exact = math.gamma(x)
        err = abs(gamma_euler_limit(x, level.euler_m) - exact) / exact
        out.append(
            ValidationCase(
                f"euler-limit x={x:g} m={level.euler_m}", err, level.euler_tol, err <= level.euler_tol
            )
        )
    return out


def _relerr(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _mittag_leffler_cases() -> list[ValidationCase]:
    zs = np.linspace(-5.0, 5.0, 41)
    tol = 1.0e-12
    checks = {
        "ml E(1,1,z)=exp(z)": max(_relerr(mittag_leffler(1.0, 1.0, z), math.exp(z)) for z in zs),
        "ml E(2,1,z)=cosh(sqrt z)": max(
            _relerr(
                mittag_leffler(2.0, 1.0, z),
                math.cosh(math.sqrt(z)) if z >= 0 else math.cos(math.sqrt(-z)),
            )
            for z in zs
            # cos has roots near z = -2.47; keep away from them
            if abs(math.cos(math.sqrt(max(-z, 0.0)))) > 0.1
        ),
        "ml E(1,2,z)=expm1(z)/z": max(
            _relerr(mittag_leffler(1.0, 2.0, z), math.expm1(z) / z) for z in zs if z != 0.0
        ),
        "ml E(a,b,0)=1/Gamma(b)": max(
            _relerr(mittag_leffler(a, b, 0.0), 1.0 / math.gamma(b))
            for a in (0.3, 0.7, 1.5)
            for b in (0.4, 0.9, 2.5)
        ),
    }
    return [ValidationCase(name, err, tol, err <= tol) for name, err in checks.items()]


def run_validation(
    level: str = "quick", *, integral: IntegralFn = hadamard_integral
) -> list[ValidationCase]:
    """Run every oracle check at ``level`` ("quick" or "full")."""
    try:
        lv = LEVELS[level]
    except KeyError:
        raise ValueError(f"unknown validation level {level!r}; use quick or full") from None
    return [*_quadrature_cases(lv, integral), *_euler_cases(lv), *_mittag_leffler_cases()]


def format_table(cases: Sequence[ValidationCase]) -> str:
    width = max(len(c.name) for c in cases)
    lines = [f"{'case':<{width}}  {'error':>9}  {'tol':>9}  result"]
    for c in cases:
        tag = "PASS" if c.passed else "FAIL"
        note = f"  ({c.note})" if c.note else ""
        lines.append(f"{c.name:<{width}}  {c.error:9.2e}  {c.tolerance:9.2e}  {tag}{note}")
    n_fail = sum(not c.passed for c in cases)
    lines.append(f"{len(cases) - n_fail}/{len(cases)} passed")
    return "\n".join(lines)
