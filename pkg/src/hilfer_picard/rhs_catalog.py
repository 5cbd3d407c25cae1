"""Closed catalog of right-hand sides ``f(t, x)`` with analytic constants.

Every family is written in the log variable ``u = log(t/a)``. Evaluation is
always through the weighted substitution ``x = u^(gamma-1) z``, which turns
``f`` into ``g(u, z) * u^k`` with ``g`` regular at ``u = 0``.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from hilfer_picard.problem import Hypotheses, Problem
from hilfer_picard.special_functions import log_gamma, mittag_leffler

__all__ = [
    "LinearInLog",
    "PowerNonlinear",
    "PowerSource",
    "RhsSpec",
    "Sum",
    "closed_form_solution",
    "derive_hypotheses",
    "eval_factored",
    "evaluate",
]

VACUOUS_A = 1.0e-300


@dataclass(frozen=True)
class PowerSource:
    """``f = c u^nu``, independent of ``x``."""

    c: float
    nu: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and math.isfinite(self.nu)):
            raise ValueError("PowerSource parameters must be finite")

    def exponent(self, gamma: float) -> float:
        return self.nu

    def factor(self, u, z, gamma):
        return np.full(np.broadcast(u, z).shape, float(self.c))

    def __call__(self, u, x):
        return self.c * np.asarray(u, dtype=float) ** self.nu

    def constants(self, problem: Problem) -> tuple[float, float | None]:
        return abs(self.c), None


@dataclass(frozen=True)
class LinearInLog:
    """``f = lam u^kappa x``."""

    lam: float
    kappa: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lam) and math.isfinite(self.kappa)):
            raise ValueError("LinearInLog parameters must be finite")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa!r}")

    def exponent(self, gamma: float) -> float:
        return self.kappa + gamma - 1.0

    def factor(self, u, z, gamma):
        return self.lam * np.asarray(z, dtype=float) + 0.0 * np.asarray(u, dtype=float)

    def __call__(self, u, x):
        return self.lam * np.asarray(u, dtype=float) ** self.kappa * x

    def constants(self, problem: Problem) -> tuple[float, float | None]:
        return abs(self.lam) * (abs(problem.x0) + problem.b), abs(self.lam)


@dataclass(frozen=True)
class PowerNonlinear:
    """``f = lam u^mu |x|^m`` with ``m > 1``."""

    lam: float
    mu: float
    m: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.lam, self.mu, self.m)):
            raise ValueError("PowerNonlinear parameters must be finite")
        if not self.m > 1.0:
            raise ValueError(f"power m must exceed 1, got {self.m!r}")

    def exponent(self, gamma: float) -> float:
        return self.mu + self.m * (gamma - 1.0)

    def factor(self, u, z, gamma):
        return self.lam * np.abs(np.asarray(z, dtype=float)) ** self.m + 0.0 * np.asarray(
            u, dtype=float
        )

    def __call__(self, u, x):
        return self.lam * np.asarray(u, dtype=float) ** self.mu * np.abs(x) ** self.m

    def constants(self, problem: Problem) -> tuple[float, float | None]:
        r = abs(problem.x0) + problem.b
        return abs(self.lam) * r**self.m, abs(self.lam) * self.m * r ** (self.m - 1.0)


@dataclass(frozen=True)
class Sum:
    """Sum of catalog terms, reduced to the smallest term exponent."""

    terms: tuple

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("Sum needs at least one term")
        if any(isinstance(t, Sum) for t in terms):
            raise ValueError("nested Sum terms are not supported")
        object.__setattr__(self, "terms", terms)

    def exponent(self, gamma: float) -> float:
        return min(t.exponent(gamma) for t in self.terms)

    def factor(self, u, z, gamma):
        u = np.asarray(u, dtype=float)
        kc = self.exponent(gamma)
        total = 0.0
        for t in self.terms:
            total = total + t.factor(u, z, gamma) * u ** (t.exponent(gamma) - kc)
        return total

    def __call__(self, u, x):
        return sum(t(u, x) for t in self.terms)


RhsSpec = PowerSource | LinearInLog | PowerNonlinear | Sum


def eval_factored(spec: RhsSpec, u, z, gamma: float):
    """Return ``(g, k)`` with ``f(t, u^(gamma-1) z) = g * u^k``.

    Vectorized over ``u`` and ``z``. For :class:`Sum` the common exponent is
    the smallest term exponent.
    """
    return spec.factor(u, z, gamma), spec.exponent(gamma)


def evaluate(spec: RhsSpec, u, x):
    """Direct evaluation ``f(t, x)`` at log-time ``u`` and unweighted ``x``."""
    return spec(u, x)


def _term_name(t) -> str:
    return f"{type(t).__name__}({', '.join(f'{v!r}' for v in vars(t).values())})"


def derive_hypotheses(spec: RhsSpec, problem: Problem) -> Hypotheses:
    """Analytic ``(k, M, A)`` over the box ``|z - x0| <= b`` and ``u <= h``.

    ``valid_H1`` holds iff ``k > beta (1 - alpha) - 1``; otherwise the
    diagnostic names the offending term.
    """
    gamma = problem.gamma
    terms = spec.terms if isinstance(spec, Sum) else (spec,)
    ks = [t.exponent(gamma) for t in terms]
    k = min(ks)

    M = 0.0
    A = 0.0
    vacuous = True
    for t, kt in zip(terms, ks):
        Mt, At = t.constants(problem)
        # u^(kt - k) <= h^(kt - k) on the log-domain
        lift = problem.h ** (kt - k)
        M += Mt * lift
        if At is not None:
            vacuous = False
            A += At * lift
    if vacuous or A == 0.0:
        A = VACUOUS_A
        vacuous = True

    floor = problem.k_floor
    valid = k > floor
    diagnostic = ""
    if not valid:
        worst = terms[ks.index(k)]
        diagnostic = (
            f"term {_term_name(worst)} has exponent k={k:g} <= "
            f"beta(1-alpha)-1={floor:g}"
        )
    return Hypotheses(
        k=k,
        M=M,
        A=A,
        valid_H1=valid,
        valid_H2=valid,
        vacuous_lipschitz=vacuous,
        diagnostic=diagnostic,
    )


def closed_form_solution(
    spec: RhsSpec, problem: Problem
) -> Callable[[np.ndarray], np.ndarray] | None:
    """Exact weighted solution ``z*(u)`` when one is known, else ``None``.

    Known cases: :class:`PowerSource`, and :class:`LinearInLog` with
    ``kappa = 0`` (a Mittag-Leffler function).
    """
    alpha, gamma, x0 = problem.alpha, problem.gamma, problem.x0

    if isinstance(spec, PowerSource):
        nu, c = spec.nu, spec.c
        if nu <= -1.0:
            return None
        coeff = c * math.exp(log_gamma(nu + 1.0) - log_gamma(alpha + nu + 1.0))
        power = nu + alpha + 1.0 - gamma

        def power_solution(u):
            return x0 + coeff * np.asarray(u, dtype=float) ** power

        return power_solution

    if isinstance(spec, LinearInLog) and spec.kappa == 0.0:
        lam = spec.lam
        scale = x0 * math.exp(log_gamma(gamma))

        def ml_solution(u):
            u = np.asarray(u, dtype=float)
            flat = [scale * mittag_leffler(alpha, gamma, lam * v**alpha) for v in u.ravel()]
            return np.asarray(flat).reshape(u.shape)

        return ml_solution

    return None
