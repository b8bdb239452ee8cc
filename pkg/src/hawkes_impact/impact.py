"""Metaorder impact curves: finite-horizon analytic, Monte Carlo, and the
macroscopic power-law limit, with permanent/transient decomposition and
log-log exponent fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .common import FitError, replicated_map, write_csv
from .hawkes import (ExecutionProfile, EventStream, price_path, rescale_price,
                     simulate_hawkes, simulate_metaorder)
from .kernels import KernelSpec, MarketParams

_SUBCELLS = 256  # quadrature cells across the profile support per output time


@dataclass(frozen=True)
class ImpactCurve:
    """Expected rescaled price displacement and its decomposition.

    ``mi = pmi + tmi`` pointwise (up to Monte Carlo noise in MC mode); the
    permanent part is non-decreasing.
    """

    grid: np.ndarray
    mi: np.ndarray
    pmi: np.ndarray
    tmi: np.ndarray
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self, path):
        cols = [self.grid, self.mi, self.pmi, self.tmi]
        names = ["t", "mi", "pmi", "tmi"]
        if self.stderr is not None:
            cols.append(self.stderr)
            names.append("stderr")
        write_csv(path, cols, names, self.meta)


def _check_profile(profile: ExecutionProfile):
    if np.any(profile(np.linspace(0.0, 1.0, 201)) < 0):
        raise ValueError("execution profile must be non-negative")


def _support_cells(t: float):
    """Integration cells covering u in [max(0, t-1), t], where f(t-u) lives."""
    lo = max(0.0, t - 1.0)
    return np.linspace(lo, t, _SUBCELLS + 1)


def _transient_quadrature(profile, grid, m0_fn, m1_fn):
    """integral of f(t-u) d(kernel mass)(u) with exact kernel cell moments
    and the profile interpolated linearly inside each cell."""
    out = np.zeros(len(grid))
    for i, t in enumerate(grid):
        if t <= 0.0:
            continue
        edges = _support_cells(t)
        lo, hi = edges[:-1], edges[1:]
        m0 = m0_fn(lo, hi)
        m1 = m1_fn(lo, hi)
        f_edges = profile(t - edges)
        f_lo, f_hi = f_edges[:-1], f_edges[1:]
        widths = hi - lo
        w_lo = (hi * m0 - m1) / widths
        w_hi = (m1 - lo * m0) / widths
        out[i] = float(np.dot(f_lo, w_lo) + np.dot(f_hi, w_hi))
    return out


def analytic_mi(params: MarketParams, spec: KernelSpec, profile: ExecutionProfile,
                grid) -> ImpactCurve:
    """Expected impact at horizon T from the mean metaorder intensity.

    Transient part: gamma * aT/(1-aT) * integral f(t-u) tail(T u) du, with
    the sharply peaked tail integrated in closed form per cell.
    """
    _check_profile(profile)
    grid = np.asarray(grid, dtype=float)
    T, aT, gamma = params.T, params.aT, params.gamma
    pmi = gamma * profile.cumulative(grid)
    factor = gamma * aT / (1.0 - aT)
    tmi = factor * _transient_quadrature(
        profile, grid,
        lambda lo, hi: (spec.integrated_tail(T * hi) - spec.integrated_tail(T * lo)) / T,
        lambda lo, hi: spec.tail_moment1(T * lo, T * hi) / T ** 2)
    meta = {"T": T, "alpha": spec.alpha, "K": params.K, "gamma": gamma,
            "profile": profile.name, "mode": "analytic"}
    return ImpactCurve(grid, pmi + tmi, pmi, tmi, None, meta)


def macroscopic_mi(alpha: float, K: float, gamma: float,
                   profile: ExecutionProfile, grid) -> ImpactCurve:
    """Long-horizon limit: transient part gamma*K*(1-alpha) * (f * u^-alpha),
    degenerating to gamma*K*f at alpha = 1."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError("macroscopic impact needs alpha in (0, 1]")
    _check_profile(profile)
    grid = np.asarray(grid, dtype=float)
    pmi = gamma * profile.cumulative(grid)
    if alpha == 1.0:
        tmi = gamma * K * profile(grid)
    else:
        tmi = gamma * K * (1.0 - alpha) * _transient_quadrature(
            profile, grid,
            lambda lo, hi: (hi ** (1.0 - alpha) - lo ** (1.0 - alpha)) / (1.0 - alpha),
            lambda lo, hi: (hi ** (2.0 - alpha) - lo ** (2.0 - alpha)) / (2.0 - alpha))
    meta = {"T": "limit", "alpha": alpha, "K": K, "gamma": gamma,
            "profile": profile.name, "mode": "limit"}
    return ImpactCurve(grid, pmi + tmi, pmi, tmi, None, meta)


def mc_mi(params: MarketParams, spec: KernelSpec, profile: ExecutionProfile,
          grid, reps: int, seed: int, engine_name: str = "exact",
          noise: str = "paired", soe=None) -> ImpactCurve:
    """Monte Carlo impact: mean of rescaled price paths with the metaorder
    injected, on a rescaled grid.

    ``noise='paired'`` differences each path against the matched metaorder-free
    control; the response kernel is additive over arrivals, so buy/sell flow
    cancels exactly and only metaorder Poisson noise remains. ``noise='full'``
    keeps the flow noise (the estimator the definition states literally).
    """
    if reps < 1:
        raise ValueError("need at least one replication")
    if noise not in ("paired", "full"):
        raise ValueError("noise must be 'paired' or 'full'")
    _check_profile(profile)
    grid = np.asarray(grid, dtype=float)
    T = params.T
    micro_grid = T * grid
    horizon = float(micro_grid.max())
    acc = np.zeros(len(grid))
    acc2 = np.zeros(len(grid))
    for rep in range(reps):
        rep_seed = (seed, rep)
        meta_stream = simulate_metaorder(params, profile, T, rep_seed)
        if horizon > T:  # child orders end at T; the price keeps decaying after
            meta_stream = EventStream(meta_stream.buys, meta_stream.sells,
                                      meta_stream.metas, horizon, meta_stream.meta)
        if noise == "paired":
            streams = meta_stream
        else:
            flow = simulate_hawkes(params, spec, horizon, rep_seed,
                                   engine_name=engine_name, soe=soe)
            streams = EventStream.merge(flow, meta_stream)
        path = rescale_price(price_path(streams, spec, params, micro_grid),
                             params, T)
        acc += path.values
        acc2 += path.values ** 2
    mean = acc / reps
    var = np.maximum(acc2 / reps - mean ** 2, 0.0)
    stderr = np.sqrt(var / max(reps - 1, 1))
    pmi = params.gamma * profile.cumulative(grid)
    meta = {"T": T, "alpha": spec.alpha, "K": params.K, "gamma": params.gamma,
            "profile": profile.name, "mode": "mc", "reps": reps, "seed": seed,
            "noise": noise, "engine": engine_name}
    return ImpactCurve(grid, mean, pmi, mean - pmi, stderr, meta)


def fit_power_law(curve: ImpactCurve, window: str = "execution",
                  t_lo: float | None = None, t_hi: float | None = None,
                  completion: float = 1.0):
    """Least-squares log-log slope of the transient part.

    Execution window regresses log tmi on log t inside (0, completion];
    decay regresses on log(t - completion) far past completion, where the
    power tail dominates the curve.
    """
    if window == "execution":
        lo = 0.02 if t_lo is None else t_lo
        hi = completion if t_hi is None else t_hi
        x_all = curve.grid
    elif window == "decay":
        lo = 5.0 if t_lo is None else t_lo
        hi = 50.0 if t_hi is None else t_hi
        x_all = curve.grid - completion
    else:
        raise ValueError("window must be 'execution' or 'decay'")
    mask = (x_all > 0) & (curve.grid >= lo) & (curve.grid <= hi) & (curve.tmi > 0)
    x = np.log(x_all[mask])
    y = np.log(curve.tmi[mask])
    if len(x) < 5:
        raise FitError("fewer than 5 usable points in the fit window")
    n = len(x)
    xc = x - x.mean()
    slope = float(np.dot(xc, y) / np.dot(xc, xc))
    intercept = y.mean() - slope * x.mean()
    resid = y - slope * x - intercept
    se = math.sqrt(float(np.dot(resid, resid)) / (n - 2) / float(np.dot(xc, xc)))
    return slope, se
