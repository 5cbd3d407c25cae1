r"""Picard successive approximations for the weighted Volterra equation.

The problem :math:`D^{\alpha,\beta} x = f(t, x)` with
:math:`\lim_{u \to 0} u^{1-\gamma} x = x_0` is equivalent to

.. math::

    z(u) = x_0 + \frac{u^{1-\gamma}}{\Gamma(\alpha)} \int_0^u
        (u - s)^{\alpha - 1} f(s, s^{\gamma - 1} z(s)) \,\mathrm{d}s,

for the weighted unknown :math:`z = u^{1-\gamma} x`, which stays continuous
up to :math:`u = 0`. The iteration starts from :math:`z \equiv x_0`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from hilfer_picard.hadamard_calculus import (
    GridFunction,
    LogGrid,
    WeightedSample,
    hadamard_integral,
    hilfer_hadamard_derivative,
)
from hilfer_picard.problem import Hypotheses, PreconditionError, Problem, gamma_order
from hilfer_picard.rhs_catalog import derive_hypotheses, eval_factored, evaluate
from hilfer_picard.special_functions import log_gamma

__all__ = [
    "ConvergenceError",
    "Hypotheses",
    "PicardRun",
    "PreconditionError",
    "Problem",
    "a_priori_iteration_count",
    "box_excess",
    "error_bound_log_terms",
    "error_bound_term",
    "error_bound_terms",
    "existence_radius",
    "gamma_order",
    "initial_condition_check",
    "picard_initial",
    "picard_step",
    "residual",
    "sample_residual",
    "solve",
]

logger = logging.getLogger(__name__)

# slack on the box test; the analytic bound is attained exactly at u = l
BOX_SLACK = 1.0e-9

TAIL_MAX_TERMS = 10_000


class ConvergenceError(RuntimeError):
    """The bound series does not enter its geometric regime within the term cap."""


@dataclass
class PicardRun:
    """History of one :func:`solve` call.

    ``sup_diffs[i]`` is the sup-norm of ``iterates[i + 1] - iterates[i]``
    and ``bound_terms[i]`` is its a-priori bound (the ``u_{i-1}`` term of the
    majorant series), when hypotheses were available.
    """

    iterates: list[WeightedSample]
    sup_diffs: list[float]
    converged: bool
    n_performed: int
    radius_l: float | None
    bound_terms: list[float]
    hypotheses: Hypotheses | None = None
    a_priori_N: int | None = None
    box_violations: list[int] = field(default_factory=list)

    @property
    def final(self) -> WeightedSample:
        return self.iterates[-1]

    @property
    def hypothesis_violating(self) -> bool:
        return bool(self.box_violations)


def existence_radius(hyp: Hypotheses, problem: Problem) -> float:
    """Log-length ``l`` on which the iterates provably stay in the box.

    ``l = min(h, (b Gamma(alpha+k+1) / (M Gamma(k+1)))^(1/(mu+k)))``.
    """
    if not hyp.valid_H1:
        raise PreconditionError(hyp.diagnostic or "(H1) does not hold")
    if hyp.M == 0.0:
        return problem.h
    expo = problem.mu + hyp.k
    if expo <= 0.0:
        raise PreconditionError(f"mu + k = {expo} must be positive")
    log_r = (
        math.log(problem.b)
        + log_gamma(problem.alpha + hyp.k + 1.0)
        - log_gamma(hyp.k + 1.0)
        - math.log(hyp.M)
    ) / expo
    return min(problem.h, math.exp(log_r))


def picard_initial(problem: Problem, grid: LogGrid) -> WeightedSample:
    """Weighted form of ``phi_0 = x0 u^(gamma-1)``: constant ``x0``."""
    return WeightedSample(grid, problem.gamma, np.full(grid.N + 1, float(problem.x0)))


def picard_step(z_prev: WeightedSample, problem: Problem, grid: LogGrid) -> WeightedSample:
    """One successive approximation in weighted form.

    The integral term vanishes at ``u = 0`` after weighting, so node 0 is set
    to ``x0`` exactly.
    """
    if z_prev.grid != grid:
        raise ValueError("z_prev lives on a different grid")
    gamma = problem.gamma
    u = grid.nodes
    g, k = eval_factored(problem.rhs, u, z_prev.zvalues, gamma)
    if not k > -1.0:
        raise PreconditionError(f"integrand exponent k={k} is not integrable")

    integral = hadamard_integral(GridFunction(grid, g), problem.alpha, k).values
    z = problem.x0 + u ** (1.0 - gamma) * integral
    z[0] = problem.x0
    return WeightedSample(grid, gamma, z)


def box_excess(z: WeightedSample, problem: Problem) -> float:
    """``max |z - x0| - b``; positive values leave the box."""
    return float(np.max(np.abs(z.zvalues - problem.x0)) - problem.b)


# {{{ bound series


def _log_bound_terms(n_terms: int, hyp: Hypotheses, problem: Problem, l: float) -> np.ndarray:
    """``log u_n`` for ``n = -1, 0, ..., n_terms - 2``."""
    alpha, gamma, k = problem.alpha, problem.gamma, hyp.k
    e = alpha + k + 1.0 - gamma
    i = np.arange(n_terms, dtype=float)
    num = (i + 1.0) * k + i * (alpha + 1.0 - gamma) + 1.0
    den = (i + 1.0) * (alpha + k) + i * (1.0 - gamma) + 1.0
    if np.any(num <= 0.0) or np.any(den <= 0.0):
        raise ValueError("bound series has a non-positive Gamma argument")
    log_prod = np.cumsum(log_gamma(num) - log_gamma(den))
    # entry j corresponds to n = j - 1: A^(n+1) l^((n+2) e) prod_{i=0}^{n+1}
    n = i - 1.0
    return (
        math.log(hyp.M)
        + (n + 1.0) * math.log(hyp.A)
        + (n + 2.0) * e * math.log(l)
        + log_prod
    )


def _check_bound_inputs(hyp: Hypotheses, problem: Problem, l: float) -> None:
    hyp.require_valid()
    if not l > 0.0:
        raise PreconditionError(f"radius l must be positive, got {l!r}")


def error_bound_log_terms(
    n_max: int, hyp: Hypotheses, problem: Problem, l: float
) -> np.ndarray:
    """``[log u_0, ..., log u_{n_max-1}]``; ``-inf`` throughout when ``M = 0``.

    Prefer this over :func:`error_bound_terms` for ratios deep into the
    series, where the terms themselves underflow.
    """
    _check_bound_inputs(hyp, problem, l)
    if hyp.M == 0.0:
        return np.full(n_max, -np.inf)
    return _log_bound_terms(n_max + 1, hyp, problem, l)[1:]


def error_bound_terms(n_max: int, hyp: Hypotheses, problem: Problem, l: float) -> np.ndarray:
    """``[u_0, ..., u_{n_max-1}]`` of the majorant series (see :func:`error_bound_term`)."""
    _check_bound_inputs(hyp, problem, l)
    if hyp.M == 0.0:
        return np.zeros(n_max)
    return np.exp(_log_bound_terms(n_max + 1, hyp, problem, l)[1:])


def error_bound_term(n: int, hyp: Hypotheses, problem: Problem, l: float) -> float:
    r"""Majorant term bounding the weighted difference of iterates ``n+2`` and ``n+1``.

    .. math::

        u_n = M A^{n+1} l^{(n+2)(\alpha+k+1-\gamma)}
            \prod_{i=0}^{n+1} \frac{\Gamma((i+1)k + i(\alpha+1-\gamma) + 1)}
                                   {\Gamma((i+1)(\alpha+k) + i(1-\gamma) + 1)}

    evaluated in log space. ``n = -1`` is accepted and bounds the first
    difference.
    """
    if n < -1:
        raise ValueError(f"n must be >= -1, got {n!r}")
    _check_bound_inputs(hyp, problem, l)
    if hyp.M == 0.0:
        return 0.0
    return float(math.exp(_log_bound_terms(n + 2, hyp, problem, l)[-1]))


def a_priori_iteration_count(
    hyp: Hypotheses, problem: Problem, l: float, eps: float
) -> int:
    """Least ``N`` with ``sum_{n >= N} u_n < eps``.

    Terms are summed directly until they drop below ``eps * 1e-6`` with a
    ratio under 1/2; the remainder is bounded by the geometric majorant,
    valid because the ratios decrease monotonically.
    """
    _check_bound_inputs(hyp, problem, l)
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if hyp.M == 0.0:
        return 0

    logs = _log_bound_terms(TAIL_MAX_TERMS + 1, hyp, problem, l)[1:]
    ratios = np.exp(np.diff(logs))
    terms = np.exp(logs)
    stop = None
    for n in range(TAIL_MAX_TERMS - 1):
        if ratios[n] < 0.5 and terms[n] < eps * 1.0e-6:
            stop = n
            break
    if stop is None:
        raise ConvergenceError(
            "bound-series ratio did not fall below 1/2 within "
            f"{TAIL_MAX_TERMS} terms (k={hyp.k}, A={hyp.A}, l={l})"
        )

    r = ratios[stop]
    geometric = terms[stop] * r / (1.0 - r)
    # tails[N] = sum_{n=N}^{stop} u_n + geometric remainder
    tails = np.cumsum(terms[: stop + 1][::-1])[::-1] + geometric
    below = np.nonzero(tails < eps)[0]
    return int(below[0]) if below.size else stop + 1


# }}}


def solve(
    problem: Problem,
    grid: LogGrid,
    tol: float = 1.0e-10,
    n_max: int | None = None,
    *,
    start: WeightedSample | np.ndarray | float | None = None,
    eps: float | None = None,
    hyp: Hypotheses | None = None,
) -> PicardRun:
    """Iterate :func:`picard_step` until successive iterates differ by ``<= tol``.

    ``n_max=None`` uses the a-priori iteration count for ``eps`` (default
    ``tol``) plus 10, which requires valid hypotheses. ``start`` overrides
    the initial iterate. Running out of iterations is reported through
    ``converged=False``; leaving the box is reported in ``box_violations``.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if grid.a != problem.a:
        raise ValueError(f"grid base point {grid.a} differs from problem.a={problem.a}")

    if hyp is None:
        hyp = derive_hypotheses(problem.rhs, problem)
    radius = existence_radius(hyp, problem) if hyp.valid_H1 else None

    a_priori = None
    bounds: list[float] = []
    if radius is not None:
        a_priori = a_priori_iteration_count(hyp, problem, radius, eps or tol)
        if grid.L > radius * (1.0 + 1e-12):
            logger.warning(
                "grid length %.6g exceeds the existence radius %.6g; "
                "convergence is not guaranteed",
                grid.L,
                radius,
            )
    if n_max is None:
        if a_priori is None:
            raise PreconditionError(
                "n_max='auto' needs valid hypotheses: " + hyp.diagnostic
            )
        n_max = a_priori + 10
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max!r}")
    if radius is not None:
        first = error_bound_term(-1, hyp, problem, radius)
        bounds = [first, *error_bound_terms(n_max - 1, hyp, problem, radius).tolist()]

    if start is None:
        z = picard_initial(problem, grid)
    elif isinstance(start, WeightedSample):
        z = start
    else:
        z = WeightedSample(
            grid, problem.gamma, np.broadcast_to(np.asarray(start, float), grid.N + 1)
        )

    iterates = [z]
    sup_diffs: list[float] = []
    violations: list[int] = []
    if box_excess(z, problem) > BOX_SLACK * problem.b:
        violations.append(0)

    converged = False
    for n in range(1, n_max + 1):
        z_next = picard_step(z, problem, grid)
        diff = float(np.max(np.abs(z_next.zvalues - z.zvalues)))
        iterates.append(z_next)
        sup_diffs.append(diff)
        if box_excess(z_next, problem) > BOX_SLACK * problem.b:
            violations.append(n)
        logger.info("picard iteration %d: sup|z_n - z_(n-1)| = %.3e", n, diff)
        z = z_next
        if diff <= tol:
            converged = True
            break

    if violations:
        logger.warning("iterates left the box |z - x0| <= b at steps %s", violations)

    return PicardRun(
        iterates=iterates,
        sup_diffs=sup_diffs,
        converged=converged,
        n_performed=len(sup_diffs),
        radius_l=radius,
        bound_terms=bounds,
        hypotheses=hyp,
        a_priori_N=a_priori,
        box_violations=violations,
    )


# {{{ verification


def sample_residual(sample: WeightedSample, problem: Problem) -> float:
    """Scaled residual ``max |D^{alpha,beta} x - f(t, x)| u^{-k}`` on interior nodes.

    The two nodes at each end are excluded. The known leading power
    ``alpha + k + 1 - gamma`` of ``z - x0`` is split off before
    differentiating.
    """
    grid = sample.grid
    u = grid.nodes
    gamma = problem.gamma
    k = problem.rhs.exponent(gamma)
    lead = max(problem.alpha + k + 1.0 - gamma, 0.0)

    hh = hilfer_hadamard_derivative(sample, problem.alpha, problem.beta, lead=lead).values
    x = sample.x()
    inner = slice(2, grid.N - 1)
    f = evaluate(problem.rhs, u[inner], x[inner])
    return float(np.max(np.abs(hh[inner] - f) * u[inner] ** (-k)))


def residual(run: PicardRun, problem: Problem, grid: LogGrid) -> float:
    """Residual of the final iterate in the differential equation."""
    if not run.converged:
        raise PreconditionError("residual needs a converged run")
    if run.final.grid != grid:
        raise ValueError("run was computed on a different grid")
    return sample_residual(run.final, problem)


def initial_condition_check(run: PicardRun, problem: Problem) -> float:
    """``max(|z(u_0) - x0|, |z(u_1) - x0|)`` of the final iterate.

    The first term is zero by construction; the second indicates how fast
    the weighted limit is approached.
    """
    if not run.iterates:
        raise PreconditionError("run has no iterates")
    z = run.final.zvalues
    return max(abs(z[0] - problem.x0), abs(z[1] - problem.x0))


# }}}
