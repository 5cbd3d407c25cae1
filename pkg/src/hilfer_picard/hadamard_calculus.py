r"""Hadamard-type fractional operators on a graded log-time grid.

All computation happens in the log variable :math:`u = \log(t/a)`, where the
Hadamard integral

.. math::

    (I^\alpha f)(t) = \frac{1}{\Gamma(\alpha)} \int_a^t
        \Big(\log\frac{t}{s}\Big)^{\alpha - 1} f(s) \frac{\mathrm{d}s}{s}

becomes the Riemann-Liouville-type convolution
:math:`\Gamma(\alpha)^{-1} \int_0^u (u - s)^{\alpha - 1} f(s) \,\mathrm{d}s`
and the Hadamard :math:`\delta = t\,\mathrm{d}/\mathrm{d}t` becomes
:math:`\mathrm{d}/\mathrm{d}u`.

Integrands are passed in factored form :math:`f(u) = u^k g(u)` with ``g``
sampled on the grid. The integral uses a product-trapezoidal rule: ``g`` is
interpolated linearly on each cell and the kernel times :math:`u^k` is
integrated exactly against the two hat functions.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from hilfer_picard.special_functions import log_gamma, rgamma

__all__ = [
    "GridFunction",
    "LogGrid",
    "WeightedSample",
    "clear_weight_cache",
    "get_num_threads",
    "hadamard_derivative",
    "hadamard_derivative_powerlaw",
    "hadamard_integral",
    "hadamard_integral_powerlaw",
    "hilfer_hadamard_derivative",
    "integral_weights",
    "set_num_threads",
]

GAUSS_POINTS = 8
# cells [u_i, u_i+1] with 1 <= i <= _NEAR_CELLS sit within a few cell widths of
# the u^k singularity at 0 and get a longer rule
_NEAR_CELLS = 4
_NEAR_POINTS = 24
# rows of the weight matrix are built in fixed-size blocks; the block layout
# never depends on the thread count, which keeps results bit-identical
_ROW_BLOCK = 64
_SERIES_RHO = 0.25
_SERIES_TERMS = 30

_num_threads = 1


def set_num_threads(n: int) -> None:
    """Set the worker count used when assembling quadrature weights (0 = auto)."""
    global _num_threads
    if n < 0:
        raise ValueError("thread count must be >= 0")
    _num_threads = n if n > 0 else (os.cpu_count() or 1)


def get_num_threads() -> int:
    return _num_threads


# {{{ grid types


@dataclass(frozen=True)
class LogGrid:
    """Graded grid :math:`u_i = L (i/N)^q` on :math:`[0, L]` in log-time.

    ``a`` is the base point of the original time variable, so node ``i``
    corresponds to :math:`t_i = a e^{u_i}`.
    """

    L: float
    N: int
    q: float = 2.0
    a: float = 1.0

    nodes: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.L) and self.L > 0.0):
            raise ValueError(f"L must be positive, got {self.L!r}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if not (math.isfinite(self.q) and self.q >= 1.0):
            raise ValueError(f"grading exponent q must be >= 1, got {self.q!r}")
        if not (math.isfinite(self.a) and self.a > 0.0):
            raise ValueError(f"base point a must be positive, got {self.a!r}")

        xi = np.arange(self.N + 1, dtype=float) / self.N
        u = self.L * xi**self.q
        u[-1] = self.L
        u.setflags(write=False)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "nodes", u)

    @property
    def t(self) -> np.ndarray:
        return self.a * np.exp(self.nodes)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)


@dataclass(frozen=True)
class GridFunction:
    """Values of a function at the nodes of a :class:`LogGrid`."""

    grid: LogGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.N + 1,):
            raise ValueError(
                f"expected {self.grid.N + 1} values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class WeightedSample:
    r"""Grid values of the weighted unknown :math:`z(u) = u^{1-\gamma} x(t)`.

    ``zvalues[0]`` is the weighted limit at the initial point; ``x`` itself is
    singular there whenever ``gamma < 1``.
    """

    grid: LogGrid
    gamma: float
    zvalues: np.ndarray

    def __post_init__(self) -> None:
        z = np.asarray(self.zvalues, dtype=float)
        if z.shape != (self.grid.N + 1,):
            raise ValueError(f"expected {self.grid.N + 1} values, got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("weighted sample contains non-finite values")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        object.__setattr__(self, "zvalues", z)

    def x(self) -> np.ndarray:
        """Unweighted values; ``nan`` at ``u = 0`` when ``gamma < 1``."""
        u = self.grid.nodes
        out = np.empty_like(self.zvalues)
        out[1:] = u[1:] ** (self.gamma - 1.0) * self.zvalues[1:]
        out[0] = self.zvalues[0] if self.gamma == 1.0 else np.nan
        return out


# }}}


# {{{ closed forms


def hadamard_integral_powerlaw(alpha: float, p: float, u):
    r"""Exact :math:`I^\alpha u^p = \Gamma(p+1)/\Gamma(\alpha+p+1)\, u^{\alpha+p}`."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if not p > -1.0:
        raise ValueError(f"p must exceed -1 (integrable singularity), got {p!r}")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0):
        raise ValueError("u must be non-negative")
    c = math.exp(log_gamma(p + 1.0) - log_gamma(alpha + p + 1.0))
    out = c * u ** (alpha + p)
    return float(out) if out.ndim == 0 else out


def hadamard_derivative_powerlaw(alpha: float, p: float, u):
    r"""Exact :math:`D^\alpha u^p = \Gamma(p+1)/\Gamma(p+1-\alpha)\, u^{p-\alpha}`.

    The reciprocal Gamma is taken as zero at its poles, so e.g.
    :math:`D^\alpha u^{\alpha-1} = 0`.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha!r}")
    if not p > -1.0:
        raise ValueError(f"p must exceed -1, got {p!r}")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0):
        raise ValueError("u must be non-negative")
    if p < alpha and np.any(u == 0.0):
        raise ValueError("derivative is singular at u = 0 for p < alpha")
    c = math.exp(log_gamma(p + 1.0)) * rgamma(p + 1.0 - alpha)
    if c == 0.0:
        out = np.zeros_like(u)
    else:
        out = c * u ** (p - alpha)
    return float(out) if out.ndim == 0 else out


# }}}


# {{{ quadrature weights


@lru_cache(maxsize=None)
def _gauss_rule(
    a: float, b: float, n: int = GAUSS_POINTS
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes in tau and weights for int_0^1 (1-tau)^a tau^b phi(tau) dtau."""
    x, w = special.roots_jacobi(n, a, b)
    return 0.5 * (1.0 + x), w * 2.0 ** (-(a + b + 1.0))


def _hat_integrals(rho: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    r"""Return :math:`\int_0^1 (1-\rho\tau)^{\alpha-1} \{1, \tau\} \mathrm{d}\tau`.

    A power series is used for small ``rho`` where the closed form cancels.
    """
    j0 = np.empty_like(rho)
    j1 = np.empty_like(rho)

    small = rho <= _SERIES_RHO
    if np.any(small):
        r = rho[small]
        c = np.ones_like(r)
        s0 = np.ones_like(r)
        s1 = 0.5 * np.ones_like(r)
        for n in range(1, _SERIES_TERMS):
            c = c * r * ((n - alpha) / n)
            s0 = s0 + c / (n + 1)
            s1 = s1 + c / (n + 2)
        j0[small] = s0
        j1[small] = s1

    big = ~small
    if np.any(big):
        r = rho[big]
        with np.errstate(divide="ignore"):
            lg = np.log1p(-r)
        p0 = -np.expm1(alpha * lg) / alpha
        p1 = -np.expm1((alpha + 1.0) * lg) / (alpha + 1.0)
        j0[big] = p0 / r
        j1[big] = (p0 - p1) / r**2

    return j0, j1


def _block_weights(
    u: np.ndarray, alpha: float, k: float, j0: int, j1: int
) -> np.ndarray:
    """Weight rows ``j0 <= j < j1`` (unnormalized by Gamma(alpha))."""
    n = u.size
    out = np.zeros((j1 - j0, n))
    jj, ii = np.nonzero(np.arange(n)[None, :-1] < np.arange(j0, j1)[:, None])
    rows = jj
    jj = jj + j0
    if ii.size == 0:
        return out

    uj = u[jj]
    ui = u[ii]
    h = u[ii + 1] - ui

    if k == 0.0:
        A = uj - ui
        rho = h / A
        J0, J1 = _hat_integrals(rho, alpha)
        scale = h * A ** (alpha - 1.0)
        wl = scale * (J0 - J1)
        wr = scale * J1
    else:
        wl = np.empty_like(h)
        wr = np.empty_like(h)

        # single cell carrying both singularities: Beta functions
        m = (ii == 0) & (jj == 1)
        if np.any(m):
            c = u[1] ** (alpha + k)
            wl[m] = c * math.exp(
                log_gamma(k + 1.0) + log_gamma(alpha + 1.0) - log_gamma(alpha + k + 2.0)
            )
            wr[m] = c * math.exp(
                log_gamma(k + 2.0) + log_gamma(alpha) - log_gamma(alpha + k + 2.0)
            )

        # first cell: weight tau^k absorbs the singularity at s = 0
        m = (ii == 0) & (jj > 1)
        if np.any(m):
            tau, w = _gauss_rule(0.0, k)
            s = u[1] * tau[None, :]
            ker = w[None, :] * (uj[m][:, None] - s) ** (alpha - 1.0)
            c = u[1] ** (k + 1.0)
            wl[m] = c * (ker * (1.0 - tau)).sum(axis=1)
            wr[m] = c * (ker * tau).sum(axis=1)

        # last cell: weight (1 - tau)^(alpha - 1) absorbs the kernel singularity
        for npts, sel in (
            (GAUSS_POINTS, ii > _NEAR_CELLS),
            (_NEAR_POINTS, ii <= _NEAR_CELLS),
        ):
            m = (ii == jj - 1) & (jj > 1) & sel
            if np.any(m):
                tau, w = _gauss_rule(alpha - 1.0, 0.0, npts)
                hm = h[m][:, None]
                s = ui[m][:, None] + hm * tau[None, :]
                f = w[None, :] * s**k
                c = hm[:, 0] ** alpha
                wl[m] = c * (f * (1.0 - tau)).sum(axis=1)
                wr[m] = c * (f * tau).sum(axis=1)

        # remaining cells are smooth: Gauss-Legendre
        for npts, sel in (
            (GAUSS_POINTS, ii > _NEAR_CELLS),
            (_NEAR_POINTS, ii <= _NEAR_CELLS),
        ):
            m = (ii > 0) & (ii < jj - 1) & sel
            if np.any(m):
                tau, w = _gauss_rule(0.0, 0.0, npts)
                hm = h[m][:, None]
                s = ui[m][:, None] + hm * tau[None, :]
                f = w[None, :] * (uj[m][:, None] - s) ** (alpha - 1.0) * s**k
                wl[m] = hm[:, 0] * (f * (1.0 - tau)).sum(axis=1)
                wr[m] = hm[:, 0] * (f * tau).sum(axis=1)

    np.add.at(out, (rows, ii), wl)
    np.add.at(out, (rows, ii + 1), wr)
    return out


@lru_cache(maxsize=12)
def _cached_weights(grid: LogGrid, alpha: float, k: float) -> np.ndarray:
    u = grid.nodes
    n = u.size
    starts = list(range(0, n, _ROW_BLOCK))

    def build(j0: int) -> np.ndarray:
        return _block_weights(u, alpha, k, j0, min(j0 + _ROW_BLOCK, n))

    if _num_threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=_num_threads) as pool:
            blocks = list(pool.map(build, starts))
    else:
        blocks = [build(j0) for j0 in starts]

    W = np.vstack(blocks) * math.exp(-log_gamma(alpha))
    W.setflags(write=False)
    return W


def clear_weight_cache() -> None:
    """Drop all cached weight matrices."""
    _cached_weights.cache_clear()


def integral_weights(grid: LogGrid, alpha: float, k_singular: float = 0.0) -> np.ndarray:
    r"""Dense lower-triangular matrix ``W`` with ``(I^alpha u^k g)(u_j) = W[j] @ g``.

    Cell moments are closed-form when ``k_singular == 0``; otherwise each cell
    uses an 8-point Gauss-Jacobi rule whose weight function carries whichever
    endpoint singularity the cell touches. The first few cells next to the
    ``u^k`` singularity use 24 points. Matrices are cached per
    ``(grid, alpha, k_singular)``; see :func:`clear_weight_cache`.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    if not k_singular > -1.0:
        raise ValueError(f"k_singular must exceed -1, got {k_singular!r}")
    return _cached_weights(grid, float(alpha), float(k_singular))


# }}}


def _apply(W: np.ndarray, g: np.ndarray) -> np.ndarray:
    # row sums in a fixed order; BLAS matvec may reorder with thread count
    return (W * g[None, :]).sum(axis=1)


def hadamard_integral(
    f: GridFunction, alpha: float, k_singular: float = 0.0
) -> GridFunction:
    """Hadamard integral of order ``alpha`` of :math:`u^{k} g(u)`.

    ``f.values`` holds the regular factor ``g``; ``k_singular`` is the power
    of ``u`` split off from the integrand. The value at ``u_0`` is zero.
    """
    W = integral_weights(f.grid, alpha, k_singular)
    return GridFunction(f.grid, _apply(W, f.values))


# {{{ differentiation

# fourth-order stencils on a uniform grid with unit spacing
_CENTERED = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FORWARD0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_FORWARD1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _d_dxi(F: np.ndarray, order: int) -> np.ndarray:
    n = F.size - 1
    d = np.empty_like(F)
    if order == 4:
        d[2:-2] = (
            _CENTERED[0] * F[:-4]
            + _CENTERED[1] * F[1:-3]
            + _CENTERED[3] * F[3:-1]
            + _CENTERED[4] * F[4:]
        )
        d[0] = _FORWARD0 @ F[:5]
        d[1] = _FORWARD1 @ F[:5]
        d[-1] = -(_FORWARD0 @ F[::-1][:5])
        d[-2] = -(_FORWARD1 @ F[::-1][:5])
    elif order == 2:
        d[1:-1] = 0.5 * (F[2:] - F[:-2])
        d[0] = -1.5 * F[0] + 2.0 * F[1] - 0.5 * F[2]
        d[-1] = 1.5 * F[-1] - 2.0 * F[-2] + 0.5 * F[-3]
    else:
        raise ValueError(f"stencil order must be 2 or 4, got {order!r}")
    return d * n


def _d_du(grid: LogGrid, F: np.ndarray, order: int = 4) -> np.ndarray:
    """Derivative in ``u``, taken in the grading variable ``xi = i/N``.

    On the graded grid ``u = L xi^q`` the chain rule gives
    ``dF/du = (dF/dxi) / (q L xi^(q-1))``. The value at ``u_0`` is a linear
    extrapolation from the next two nodes when ``q > 1``.
    """
    dxi = _d_dxi(F, order)
    xi = np.arange(grid.N + 1, dtype=float) / grid.N
    out = np.empty_like(F)
    out[1:] = dxi[1:] / (grid.q * grid.L * xi[1:] ** (grid.q - 1.0))
    if grid.q == 1.0:
        out[0] = dxi[0] / grid.L
    else:
        _extrapolate_first(grid, out)
    return out


def _extrapolate_first(grid: LogGrid, values: np.ndarray) -> None:
    u = grid.nodes
    values[0] = values[1] - (values[2] - values[1]) * u[1] / (u[2] - u[1])


def _d_du_factored(
    grid: LogGrid, Q: np.ndarray, rho: float, order: int = 4
) -> np.ndarray:
    """Derivative of ``u^rho Q(u)`` by the product rule.

    Uses ``u d/du = (xi/q) d/dxi`` so only the regular factor ``Q`` is
    differentiated numerically. Node 0 is extrapolated.
    """
    u = grid.nodes
    xi = np.arange(grid.N + 1, dtype=float) / grid.N
    dQ = _d_dxi(Q, order)
    out = np.empty_like(Q)
    out[1:] = u[1:] ** (rho - 1.0) * (rho * Q[1:] + xi[1:] * dQ[1:] / grid.q)
    _extrapolate_first(grid, out)
    return out


def hadamard_derivative(
    f: GridFunction, alpha: float, k_singular: float = 0.0, *, order: int = 4
) -> GridFunction:
    r"""Hadamard derivative :math:`D^\alpha = \delta I^{1-\alpha}` of :math:`u^k g`.

    With :math:`\rho = k + 1 - \alpha`, the inner integral is written as
    :math:`F = u^\rho Q(u)`, where ``Q`` inherits the regularity of ``g``;
    ``Q`` is differentiated with ``order``-accurate finite differences in the
    grading variable and the power is handled exactly by the product rule.
    ``Q(0)`` follows from the power-law identity with ``g(0)``.

    ``alpha = 1`` is accepted and reduces to the plain derivative in ``u``
    (requires ``k_singular >= 0``). The value at ``u_0`` is extrapolated;
    the derivative is generally singular there.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    if f.grid.N < 4:
        raise ValueError("differentiation needs N >= 4")
    grid = f.grid
    u = grid.nodes
    if alpha == 1.0:
        if k_singular < 0.0:
            raise ValueError("alpha = 1 needs k_singular >= 0")
        return GridFunction(grid, _d_du_factored(grid, f.values, k_singular, order))

    rho = k_singular + 1.0 - alpha
    F = hadamard_integral(f, 1.0 - alpha, k_singular).values
    Q = np.empty_like(F)
    Q[1:] = F[1:] * u[1:] ** (-rho)
    Q[0] = f.values[0] * math.exp(
        log_gamma(k_singular + 1.0) - log_gamma(k_singular + 2.0 - alpha)
    )
    return GridFunction(grid, _d_du_factored(grid, Q, rho, order))


def hilfer_hadamard_derivative(
    x: WeightedSample,
    alpha: float,
    beta: float,
    *,
    lead: float = 0.0,
    form: str = "subtracted",
    order: int = 4,
) -> GridFunction:
    r"""Hilfer-Hadamard derivative of order ``alpha`` and type ``beta``.

    ``form="composite"`` evaluates the defining composition
    :math:`I^{\beta(1-\alpha)} D^{\gamma}` literally. The default
    ``form="subtracted"`` uses the equivalent

    .. math::

        D^{\alpha,\beta} x = D^{\alpha}\big[x - z(0)\, u^{\gamma-1}\big],

    which holds because :math:`D^\gamma u^{\gamma-1} = 0`; it needs a single
    differentiation of a much smoother function. ``lead`` is a known power
    with :math:`z(u) - z(0) = O(u^{\mathrm{lead}})`; it is split off before
    interpolation.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta!r}")
    gamma = alpha + beta * (1.0 - alpha)
    if abs(gamma - x.gamma) > 1e-14:
        raise ValueError(f"sample carries gamma={x.gamma}, operator needs {gamma}")

    grid = x.grid
    u = grid.nodes
    z = x.zvalues

    if form == "composite":
        d = hadamard_derivative(GridFunction(grid, z), gamma, gamma - 1.0, order=order)
        outer = beta * (1.0 - alpha)
        if outer == 0.0:
            return d
        return hadamard_integral(d, outer, 0.0)

    if form != "subtracted":
        raise ValueError(f"unknown form {form!r}")

    g = np.empty_like(z)
    g[1:] = (z[1:] - z[0]) * u[1:] ** (-lead)
    if lead == 0.0:
        g[0] = 0.0
    else:
        g[0] = g[1] - (g[2] - g[1]) * u[1] / (u[2] - u[1])
    return hadamard_derivative(
        GridFunction(grid, g), alpha, gamma - 1.0 + lead, order=order
    )


# }}}
