"""Problem and hypothesis containers shared by the catalog and the engine."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from hilfer_picard.rhs_catalog import RhsSpec

__all__ = ["Hypotheses", "PreconditionError", "Problem", "gamma_order"]


class PreconditionError(ValueError):
    """An operation was called on inputs that violate its stated precondition."""


def gamma_order(alpha: float, beta: float) -> float:
    """Weight order ``gamma = alpha + beta (1 - alpha)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta!r}")
    return alpha + beta * (1.0 - alpha)


@dataclass(frozen=True)
class Problem:
    """Hilfer-Hadamard initial value problem in weighted form.

    ``x0`` is the limit of ``(log(t/a))^(1-gamma) x(t)`` at ``t = a``; ``h``
    caps the log-time domain and ``b`` is the half-width of the box
    ``|z - x0| <= b`` on which the right-hand side is controlled.
    """

    alpha: float
    beta: float
    x0: float
    rhs: RhsSpec
    a: float = 1.0
    h: float = 1.0
    b: float = 1.0

    def __post_init__(self) -> None:
        gamma_order(self.alpha, self.beta)
        for name in ("x0", "a", "h", "b"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.a <= 0.0:
            raise ValueError("base point a must be positive")
        if self.h <= 0.0:
            raise ValueError("log-domain cap h must be positive")
        if self.b <= 0.0:
            raise ValueError("box radius b must be positive")

    @property
    def gamma(self) -> float:
        return gamma_order(self.alpha, self.beta)

    @property
    def mu(self) -> float:
        """``1 - beta (1 - alpha)``, the exponent offset in the existence radius."""
        return 1.0 - self.beta * (1.0 - self.alpha)

    @property
    def k_floor(self) -> float:
        """Exponents ``k`` must strictly exceed this value: ``beta (1 - alpha) - 1``."""
        return self.beta * (1.0 - self.alpha) - 1.0


@dataclass(frozen=True)
class Hypotheses:
    """Growth envelope ``|f| <= M u^k`` and weighted Lipschitz constant ``A``.

    ``vacuous_lipschitz`` marks right-hand sides that do not depend on ``x``;
    ``A`` is then a tiny positive placeholder.
    """

    k: float
    M: float
    A: float
    valid_H1: bool
    valid_H2: bool
    vacuous_lipschitz: bool = False
    diagnostic: str = ""

    def require_valid(self) -> None:
        if not (self.valid_H1 and self.valid_H2):
            raise PreconditionError(self.diagnostic or "hypotheses are not satisfied")
