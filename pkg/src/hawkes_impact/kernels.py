"""Excitation-kernel families, near-instability schedules, and derived kernels.

Two unit-mass families: the shifted power law alpha*(1+t)^(-alpha-1), whose
tail integral (1+t)^(-alpha) is the long-memory driver of everything else,
and a unit exponential used purely as a closed-form oracle. The resolvent
(sum of self-convolutions) is computed by product integration of its
Volterra equation, with exact per-cell kernel moments so nearly singular
rescaled kernels stay resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .common import SampledFunction, ScheduleError, StabilityError

POWER_LAW = "power_law_shifted"
EXPONENTIAL = "exponential_test"


@dataclass(frozen=True)
class KernelSpec:
    """Unit-mass excitation kernel with closed-form tail and moments."""

    family: str
    alpha: float | None = None

    def __post_init__(self):
        if self.family not in (POWER_LAW, EXPONENTIAL):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == POWER_LAW:
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise ValueError("power-law kernel needs tail exponent alpha in (0, 1)")

    def phi(self, t):
        """Kernel value; non-negative and non-increasing on t >= 0."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("kernel is supported on t >= 0")
        if self.family == POWER_LAW:
            return self.alpha * (1.0 + t) ** (-self.alpha - 1.0)
        return np.exp(-t)

    def tail(self, t):
        """Mass beyond t: integral of phi over (t, infinity)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("kernel is supported on t >= 0")
        if self.family == POWER_LAW:
            return (1.0 + t) ** (-self.alpha)
        return np.exp(-t)

    def integrated_tail(self, t):
        """R(t) = integral of the tail over [0, t]."""
        t = np.asarray(t, dtype=float)
        if self.family == POWER_LAW:
            a = self.alpha
            return ((1.0 + t) ** (1.0 - a) - 1.0) / (1.0 - a)
        return 1.0 - np.exp(-t)

    def slowly_varying(self, t):
        """L(t) = R(t) * t^(alpha-1); tends to 1/(1-alpha) for the power family."""
        if self.family != POWER_LAW:
            raise ValueError("slowly varying factor is defined for the power-law family")
        t = np.asarray(t, dtype=float)
        return self.integrated_tail(t) * t ** (self.alpha - 1.0)

    # Exact cell moments, used by the product-integration Volterra solver and
    # by the finite-horizon impact quadrature.

    def moment0(self, a, b):
        """Integral of phi over [a, b]."""
        return self.tail(a) - self.tail(b)

    def moment1(self, a, b):
        """Integral of t*phi(t) over [a, b]."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.family == POWER_LAW:
            al = self.alpha

            def anti(x):
                return al * (1.0 + x) ** (1.0 - al) / (1.0 - al) + (1.0 + x) ** (-al)

            return anti(b) - anti(a)
        return (a + 1.0) * np.exp(-a) - (b + 1.0) * np.exp(-b)

    def tail_moment1(self, a, b):
        """Integral of t*tail(t) over [a, b]."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.family == POWER_LAW:
            al = self.alpha

            def anti(x):
                return ((1.0 + x) ** (2.0 - al) / (2.0 - al)
                        - (1.0 + x) ** (1.0 - al) / (1.0 - al))

            return anti(b) - anti(a)
        return (a + 1.0) * np.exp(-a) - (b + 1.0) * np.exp(-b)


@dataclass(frozen=True)
class MarketParams:
    """Flow and metaorder parameters at one horizon."""

    T: float
    aT: float
    muT: float
    K: float
    delta: float
    gamma: float

    def __post_init__(self):
        if not (0.0 <= self.aT < 1.0):
            raise StabilityError(f"branching ratio must lie in [0, 1), got {self.aT}")
        if self.muT < 0 or self.T <= 0:
            raise ValueError("need muT >= 0 and T > 0")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("metaorder participation gamma must lie in [0, 1)")

    @property
    def beta_T(self) -> float:
        """Stationary mean intensity muT / (1 - aT)."""
        return self.muT / (1.0 - self.aT)

    @property
    def I_T(self) -> float:
        """Metaorder intensity scale gamma * beta_T."""
        return self.gamma * self.beta_T


def mittag_rate(K: float, alpha: float) -> float:
    """Rate lambda = 1 / (K * Gamma(2 - alpha)) of the limiting waiting-time law."""
    return 1.0 / (K * gamma_fn(2.0 - alpha))


def schedule(T: float, spec: KernelSpec, K: float, delta: float, gamma: float) -> MarketParams:
    """Near-instability parameters at horizon T.

    Fixes a_T so that (1-a_T)^(-1) T^(-alpha) L(T) equals K exactly, and mu_T
    so that (1-a_T) mu_T T equals delta.
    """
    if spec.family != POWER_LAW:
        raise ScheduleError("schedules are defined for the power-law family")
    if K <= 0 or delta <= 0:
        raise ValueError("need K > 0 and delta > 0")
    aT = 1.0 - float(spec.integrated_tail(T)) / (T * K)
    if not (0.0 < aT < 1.0):
        raise ScheduleError(
            f"horizon T={T} gives branching ratio {aT:.4g} outside (0, 1); increase T")
    muT = delta / ((1.0 - aT) * T)
    return MarketParams(T=float(T), aT=aT, muT=muT, K=float(K),
                        delta=float(delta), gamma=float(gamma))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("grid must be a 1-d array with at least two points")
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must start at 0 and increase strictly")
    return grid


def resolvent_psi(spec: KernelSpec, aT: float, grid) -> SampledFunction:
    """Resolvent of a_T * phi: the solution of psi = a_T*phi + (a_T*phi) * psi.

    Product-integration collocation: the unknown is piecewise linear on the
    grid while every kernel cell integral is exact, so the scheme survives
    grids that under-resolve the kernel peak. The grid may be non-uniform.
    """
    if not (0.0 <= aT < 1.0):
        raise StabilityError(f"resolvent diverges for branching ratio {aT} >= 1")
    grid = _check_grid(grid)
    n = len(grid)
    phi_grid = aT * spec.phi(grid)
    psi = np.empty(n)
    psi[0] = phi_grid[0]
    if aT == 0.0:
        return SampledFunction(grid, np.zeros(n), _psi_meta(spec, aT))

    uniform = np.allclose(np.diff(grid), grid[1] - grid[0], rtol=1e-12, atol=0.0)
    if uniform:
        h = grid[1] - grid[0]
        # lag-k cell [(k-1)h, kh]: exact moments of a_T*phi
        edges = grid
        m0 = aT * spec.moment0(edges[:-1], edges[1:])
        m1 = aT * spec.moment1(edges[:-1], edges[1:])
        # weight of the value at the cell's small-lag edge and large-lag edge
        w_near = (edges[1:] * m0 - m1) / h
        w_far = (m1 - edges[:-1] * m0) / h
        for i in range(1, n):
            acc = phi_grid[i]
            acc += float(np.dot(w_near[1:i], psi[i - 1:0:-1]) +
                         np.dot(w_far[1:i], psi[i - 2::-1])) if i > 1 else 0.0
            acc += w_far[0] * psi[i - 1]
            psi[i] = acc / (1.0 - w_near[0])
        return SampledFunction(grid, psi, _psi_meta(spec, aT))

    for i in range(1, n):
        lo = grid[i] - grid[1:i + 1]   # lag of cell right ends, decreasing to 0
        hi = grid[i] - grid[0:i]       # lag of cell left ends
        m0 = aT * spec.moment0(lo, hi)
        m1 = aT * spec.moment1(lo, hi)
        widths = hi - lo
        w_right = (hi * m0 - m1) / widths   # multiplies psi at the later node
        w_left = (m1 - lo * m0) / widths    # multiplies psi at the earlier node
        acc = phi_grid[i] + float(np.dot(w_left, psi[:i]))
        if i > 1:
            acc += float(np.dot(w_right[:-1], psi[1:i]))
        psi[i] = acc / (1.0 - w_right[-1])
    return SampledFunction(grid, psi, _psi_meta(spec, aT))


def _psi_meta(spec: KernelSpec, aT: float) -> dict:
    meta = {"kernel": spec.family, "aT": aT}
    if spec.alpha is not None:
        meta["alpha"] = spec.alpha
    return meta


def psi_total_mass(aT: float) -> float:
    """Geometric identity: the resolvent integrates to aT / (1 - aT)."""
    if not (0.0 <= aT < 1.0):
        raise StabilityError(f"resolvent diverges for branching ratio {aT} >= 1")
    return aT / (1.0 - aT)


def xi_callable(spec: KernelSpec, aT: float):
    """Price response per order: xi(t) = 1 + aT/(1-aT) * tail(t)."""
    if not (0.0 <= aT < 1.0):
        raise StabilityError(f"price response diverges for branching ratio {aT} >= 1")
    factor = aT / (1.0 - aT)

    def xi(t):
        return 1.0 + factor * spec.tail(t)

    return xi


def xi_grid(spec: KernelSpec, aT: float, grid) -> SampledFunction:
    """xi sampled on a grid, via the closed identity (no resolvent quadrature)."""
    grid = _check_grid(grid)
    return SampledFunction(grid, xi_callable(spec, aT)(grid), _psi_meta(spec, aT))
