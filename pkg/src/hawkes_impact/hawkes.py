"""Order-flow simulation: buy/sell self-exciting streams, the metaorder
stream, microscopic price paths and their rescaling, and the fast
sum-of-exponentials kernel approximation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from . import engine
from .common import FitError, StabilityError, read_csv, stream, write_csv
from .kernels import (EXPONENTIAL, POWER_LAW, KernelSpec, MarketParams,
                      xi_callable)

SIDE_BUY, SIDE_SELL, SIDE_META = 0, 1, 2
_SIDE_NAMES = {SIDE_BUY: "buy", SIDE_SELL: "sell", SIDE_META: "meta"}


def _check_times(times, horizon, label):
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(np.diff(times) <= 0) or times[0] < 0 or times[-1] > horizon):
        raise ValueError(f"{label} times must increase strictly within [0, horizon]")
    return times


@dataclass(frozen=True)
class EventStream:
    """Time-stamped buy/sell/metaorder arrivals on [0, horizon]."""

    buys: np.ndarray
    sells: np.ndarray
    metas: np.ndarray
    horizon: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "buys", _check_times(self.buys, self.horizon, "buy"))
        object.__setattr__(self, "sells", _check_times(self.sells, self.horizon, "sell"))
        object.__setattr__(self, "metas", _check_times(self.metas, self.horizon, "meta"))

    @classmethod
    def merge(cls, *streams: "EventStream") -> "EventStream":
        horizon = max(s.horizon for s in streams)
        meta = {}
        for s in streams:
            meta.update(s.meta)
        return cls(np.sort(np.concatenate([s.buys for s in streams])),
                   np.sort(np.concatenate([s.sells for s in streams])),
                   np.sort(np.concatenate([s.metas for s in streams])),
                   horizon, meta)

    def to_csv(self, path):
        times = np.concatenate([self.buys, self.sells, self.metas])
        sides = np.concatenate([np.full(len(self.buys), "buy", dtype=object),
                                np.full(len(self.sells), "sell", dtype=object),
                                np.full(len(self.metas), "meta", dtype=object)])
        order = np.argsort(times, kind="stable")
        write_csv(path, [times[order], sides[order]], ["time", "side"], self.meta)

    @classmethod
    def from_csv(cls, path, horizon=None) -> "EventStream":
        meta, cols = read_csv(path)
        times, sides = cols["time"], cols["side"]
        if horizon is None:
            horizon = float(meta.get("T", times.max() if len(times) else 0.0))
        return cls(times[sides == "buy"], times[sides == "sell"],
                   times[sides == "meta"], horizon, meta)


@dataclass(frozen=True)
class PricePath:
    """Price sampled on a grid; micro scale or rescaled to the unit horizon."""

    grid: np.ndarray
    values: np.ndarray
    scale: str = "micro"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape:
            raise ValueError("grid and values must have identical shape")
        if self.scale not in ("micro", "rescaled"):
            raise ValueError("scale must be 'micro' or 'rescaled'")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def to_csv(self, path):
        write_csv(path, [self.grid, self.values], ["t", "price"], self.meta)


class ExecutionProfile:
    """Non-negative execution rate on [0, 1], zero outside."""

    name = "custom"

    def __call__(self, u):
        raise NotImplementedError

    @property
    def sup(self) -> float:
        raise NotImplementedError

    @property
    def mass(self) -> float:
        """Integral of the rate over [0, 1]."""
        raise NotImplementedError

    def cumulative(self, u):
        """Integral of the rate over [0, min(u, 1)]."""
        raise NotImplementedError


class FlatProfile(ExecutionProfile):
    """Constant unit rate on [0, 1]: steady execution."""

    name = "flat"

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where((u >= 0.0) & (u <= 1.0), 1.0, 0.0)

    sup = 1.0
    mass = 1.0

    def cumulative(self, u):
        return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)


class TabulatedProfile(ExecutionProfile):
    """Piecewise-linear rate from (u, f) knots on [0, 1]."""

    def __init__(self, knots, values, name="custom"):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise ValueError("execution profile must be non-negative")
        if knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must increase strictly from 0 to 1")
        self._knots, self._values = knots, values
        self.name = name
        self._cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(knots))])

    @classmethod
    def from_csv(cls, path) -> "TabulatedProfile":
        _, cols = read_csv(path)
        return cls(cols["u"], cols["f"], name="custom")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u >= 0.0) & (u <= 1.0)
        return np.where(inside, np.interp(u, self._knots, self._values), 0.0)

    @property
    def sup(self):
        return float(self._values.max())

    @property
    def mass(self):
        return float(self._cum[-1])

    def cumulative(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return np.interp(u, self._knots, self._cum)


@dataclass(frozen=True)
class SoEApproximation:
    """phi approximated as sum_k w_k exp(-r_k t), with unit total mass."""

    weights: np.ndarray
    rates: np.ndarray
    sup_rel_error: float

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t, self.rates)) @ self.weights

    def mass(self) -> float:
        return float(np.sum(self.weights / self.rates))


def soe_fit(spec: KernelSpec, n_terms: int, horizon: float,
            h_min: float = 1e-2) -> SoEApproximation:
    """Least-squares exponential mixture matching phi on [h_min, horizon].

    The fit minimises pointwise relative error on a log-spaced collocation
    grid under an exact unit-mass constraint; near instability the branching
    ratio is what the thinning engine actually feels, so the mass must not
    drift.
    """
    if n_terms < 1:
        raise FitError("need at least one exponential term")
    if spec.family == EXPONENTIAL:
        return SoEApproximation(np.array([1.0]), np.array([1.0]), 0.0)
    if n_terms >= 14:
        # one deliberately slow rate absorbs the kernel mass beyond the horizon
        rates = np.concatenate([[0.05 / horizon],
                                np.geomspace(1.0 / horizon, 1.0 / h_min, n_terms - 1)])
    else:
        rates = np.geomspace(1.0 / horizon, 1.0 / h_min, n_terms)
    t_col = np.geomspace(h_min, horizon, 400)
    phi_col = spec.phi(t_col)
    # unknowns v_k = w_k / r_k so the unit-mass constraint reads sum v = 1
    base = np.exp(-np.outer(t_col, rates)) * rates[None, :] / phi_col[:, None]
    penalty = 1e7
    weight = np.ones(len(t_col))
    v = None
    for _ in range(8):  # reweighting pushes the fit toward equal ripple
        design = np.vstack([base * weight[:, None], penalty * np.ones((1, n_terms))])
        target = np.concatenate([weight, [penalty]])
        v, _ = nnls(design, target)
        if v.sum() <= 0:
            raise FitError("sum-of-exponentials fit collapsed to zero mass")
        v /= v.sum()
        residual = np.abs(base @ v - 1.0)
        weight = weight * np.sqrt(0.1 + residual / residual.max())
        weight /= weight.mean()
    weights = v * rates
    t_check = np.geomspace(h_min, horizon, 2000)
    rel = np.abs(SoEApproximation(weights, rates, 0.0).phi(t_check)
                 / spec.phi(t_check) - 1.0)
    return SoEApproximation(weights, rates, float(rel.max()))


def _family_code(spec: KernelSpec) -> int:
    return engine.FAMILY_POWER if spec.family == POWER_LAW else engine.FAMILY_EXP


def simulate_hawkes(params: MarketParams, spec: KernelSpec, horizon: float,
                    seed: int, engine_name: str = "exact",
                    soe: SoEApproximation | None = None) -> EventStream:
    """One realization of independent buy and sell self-exciting streams.

    Deterministic in (seed, engine): each side draws from its own named
    counter-based stream.
    """
    if params.aT >= 1.0:
        raise StabilityError("branching ratio must be below one")
    sides = []
    for side in (SIDE_BUY, SIDE_SELL):
        gen = stream(seed, side)
        if engine_name == "exact":
            alpha = spec.alpha if spec.alpha is not None else 0.0
            times = engine.thin_exact(params.muT, params.aT, horizon,
                                      _family_code(spec), alpha, gen)
        elif engine_name == "soe":
            if soe is None:
                soe = soe_fit(spec, n_terms=12, horizon=max(horizon, 10.0))
            times = engine.thin_soe(params.muT, params.aT, horizon,
                                    np.ascontiguousarray(soe.weights),
                                    np.ascontiguousarray(soe.rates), gen)
        else:
            raise ValueError(f"unknown engine {engine_name!r}")
        sides.append(times)
    meta = {"seed": seed, "T": horizon, "aT": params.aT, "engine": engine_name}
    if spec.alpha is not None:
        meta["alpha"] = spec.alpha
    return EventStream(sides[0], sides[1], np.empty(0), horizon, meta)


def simulate_metaorder(params: MarketParams, profile: ExecutionProfile,
                       T: float, seed: int) -> EventStream:
    """Inhomogeneous Poisson child orders with rate I_T * f(t/T) on [0, T]."""
    sup = profile.sup
    if sup < 0 or np.any(profile(np.linspace(0, 1, 101)) < 0):
        raise ValueError("execution profile must be non-negative")
    rate = params.I_T * sup
    out = []
    if rate > 0:
        gen = stream(seed, SIDE_META)
        t = 0.0
        while True:
            t += -math.log(gen.random()) / rate
            if t > T:
                break
            if gen.random() * sup <= float(profile(t / T)):
                out.append(t)
    meta = {"seed": seed, "T": T, "profile": profile.name, "gamma": params.gamma}
    return EventStream(np.empty(0), np.empty(0), np.array(out), T, meta)


def _kernel_sum(times, grid, func, chunk_elems=8_000_000):
    """sum_i func(t - t_i) * 1[t >= t_i] evaluated on the grid."""
    out = np.zeros(len(grid))
    if len(times) == 0:
        return out
    rows = max(1, chunk_elems // max(1, len(grid)))
    for start in range(0, len(times), rows):
        dt = grid[None, :] - times[start:start + rows, None]
        mask = dt >= 0.0
        out += np.where(mask, func(np.where(mask, dt, 0.0)), 0.0).sum(axis=0)
    return out


def price_path(streams, spec: KernelSpec, params: MarketParams, grid) -> PricePath:
    """Microscopic price: signed response-kernel sum over all arrivals.

    Buys and metaorder children push the price up by xi(t - t_i), sells push
    it down; the pre-event price is zero.
    """
    merged = EventStream.merge(*streams) if isinstance(streams, (tuple, list)) \
        else streams
    grid = np.asarray(grid, dtype=float)
    if grid.max() > merged.horizon:
        raise ValueError("price grid extends beyond the simulated horizon")
    xi = xi_callable(spec, params.aT)
    values = (_kernel_sum(merged.buys, grid, xi)
              + _kernel_sum(merged.metas, grid, xi)
              - _kernel_sum(merged.sells, grid, xi))
    return PricePath(grid, values, "micro", dict(merged.meta))


def price_path_martingale(streams, spec: KernelSpec, params: MarketParams,
                          grid, refine: int = 10) -> PricePath:
    """Price rebuilt from compensated counts: (1 + total resolvent mass)
    times the buy/sell martingale difference.

    The compensator is integrated numerically from sampled intensities
    (trapezoid on a ``refine``-times finer grid), deliberately not reusing
    the closed-form kernel tail, so agreement with :func:`price_path` is a
    real check and not an algebraic identity.
    """
    merged = EventStream.merge(*streams) if isinstance(streams, (tuple, list)) \
        else streams
    if len(merged.metas):
        raise ValueError("martingale decomposition applies to the flow without metaorder")
    grid = np.asarray(grid, dtype=float)
    if grid.max() > merged.horizon:
        raise ValueError("price grid extends beyond the simulated horizon")
    fine = np.linspace(grid.min(), grid.max(), refine * (len(grid) - 1) + 1)

    def compensated(times):
        lam = params.muT + params.aT * _kernel_sum(times, fine, spec.phi)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (lam[1:] + lam[:-1]) * np.diff(fine))])
        counts = np.searchsorted(times, grid, side="right")
        return counts - np.interp(grid, fine, cum)

    amplification = 1.0 / (1.0 - params.aT)  # 1 + resolvent mass
    values = amplification * (compensated(merged.buys) - compensated(merged.sells))
    return PricePath(grid, values, "micro", dict(merged.meta))


def rescale_price(path: PricePath, params: MarketParams, T: float | None = None) -> PricePath:
    """Divide time by T and price by T * beta_T (total-volume units)."""
    if path.scale != "micro":
        raise ValueError("path is already rescaled")
    T = params.T if T is None else T
    return PricePath(path.grid / T, path.values / (T * params.beta_T),
                     "rescaled", dict(path.meta))
