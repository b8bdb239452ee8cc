"""Macroscopic limit simulators.

Above the roughness boundary (alpha > 1/2) the spot variance exists and
solves a square-root Volterra equation: explicit product-integration Euler
with full truncation. At and below the boundary only integrated variance
makes sense: an explicit time-change scheme draws each Gaussian increment
with variance equal to the just-computed variance increment, exploiting the
vanishing self-weight of the integrated-kernel at lag zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gamma as gamma_fn

from .common import RegimeError, stream, write_csv
from .mittag import MittagLefflerParams, ml_cdf_grid, ml_cell_moments

_SIDE_A, _SIDE_B = 0, 1


@dataclass(frozen=True)
class VariancePath:
    """Integrated variance per side and combined; spot variance when it exists.

    Arrays are (n_paths, n_steps + 1); ``dWa``/``dWb`` hold the Gaussian
    increments actually consumed, one column per grid cell.
    """

    grid: np.ndarray
    Xa: np.ndarray
    Xb: np.ndarray
    X: np.ndarray
    dWa: np.ndarray
    dWb: np.ndarray
    Ya: np.ndarray | None = None
    Yb: np.ndarray | None = None
    Y: np.ndarray | None = None
    clamped_fraction: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_csv(self, path, path_index: int = 0):
        cols = [self.grid, self.Xa[path_index], self.Xb[path_index], self.X[path_index]]
        names = ["t", "Xa", "Xb", "X"]
        if self.Y is not None:
            cols += [self.Ya[path_index], self.Yb[path_index], self.Y[path_index]]
            names += ["Ya", "Yb", "Y"]
        write_csv(path, cols, names, self.meta)


@dataclass(frozen=True)
class MacroPricePath:
    """Limit price (and the flow-asymmetry correlation when spot variance exists)."""

    grid: np.ndarray
    price: np.ndarray
    rho: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self, path, path_index: int = 0):
        cols = [self.grid, self.price[path_index]]
        names = ["t", "price"]
        if self.rho is not None:
            cols.append(self.rho[path_index])
            names.append("rho")
        write_csv(path, cols, names, self.meta)


def _check_uniform_grid(grid) -> tuple[np.ndarray, float]:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3 or grid[0] != 0.0:
        raise ValueError("grid must be 1-d, start at 0, with at least two steps")
    h = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), h, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniform")
    return grid, h


def _normals(seed, side: int, n_paths: int, n_steps: int) -> np.ndarray:
    """One named stream per (path, side): parallel replication stays exact."""
    out = np.empty((n_paths, n_steps))
    for p in range(n_paths):
        out[p] = stream(seed, p, side).standard_normal(n_steps)
    return out


def simulate_rough_heston(alpha: float, lam: float, delta: float, grid, seed,
                          n_paths: int = 1):
    """Spot-variance regime. Each side solves
    Y = (lam/Gamma(alpha)) * [(t-s)^(alpha-1) * ((1-Y) ds + sqrt(Y/(delta lam)) dB)]
    and the price increments are (sqrt(Ya) dBa - sqrt(Yb) dBb)/sqrt(delta).
    """
    if not (0.5 < alpha <= 1.0):
        raise RegimeError("alpha <= 1/2 has no spot variance; use simulate_hyper_rough")
    grid, h = _check_uniform_grid(grid)
    n = len(grid) - 1
    k = np.arange(1, n + 1, dtype=float)
    cell_int = (h ** alpha / alpha) * (k ** alpha - (k - 1) ** alpha)
    drift_w = (lam / gamma_fn(alpha)) * cell_int
    noise_w = drift_w / h
    # the singular cell gets the variance-exact weight, not the averaged one
    noise_w[0] = (lam / gamma_fn(alpha)) * h ** (alpha - 1.0) / math.sqrt(2.0 * alpha - 1.0)
    noise_w = noise_w / math.sqrt(delta * lam)
    drift_cum = (lam / gamma_fn(alpha)) * grid[1:] ** alpha / alpha

    dB = {s: _normals(seed, s, n_paths, n) * math.sqrt(h) for s in (_SIDE_A, _SIDE_B)}
    Y = {s: np.zeros((n_paths, n + 1)) for s in (_SIDE_A, _SIDE_B)}
    shock = {s: np.zeros((n_paths, n)) for s in (_SIDE_A, _SIDE_B)}
    for i in range(1, n + 1):
        for s in (_SIDE_A, _SIDE_B):
            Ys = Y[s]
            past = Ys[:, :i]
            drift = drift_cum[i - 1] - past @ drift_w[:i][::-1]
            shock[s][:, i - 1] = np.sqrt(np.maximum(past[:, i - 1], 0.0)) * dB[s][:, i - 1]
            Ys[:, i] = drift + shock[s][:, :i] @ noise_w[:i][::-1]

    # full truncation: the stored spot variance is the non-negative part the
    # dynamics actually uses, keeping rho and X consistent with it
    Ya = np.maximum(Y[_SIDE_A], 0.0)
    Yb = np.maximum(Y[_SIDE_B], 0.0)
    Xa = np.concatenate([np.zeros((n_paths, 1)),
                         np.cumsum(Ya[:, :-1] * h, axis=1)], axis=1)
    Xb = np.concatenate([np.zeros((n_paths, 1)),
                         np.cumsum(Yb[:, :-1] * h, axis=1)], axis=1)
    X = (Xa + Xb) / delta
    Ycomb = (Ya + Yb) / delta
    price_incr = (np.sqrt(Ya[:, :-1]) * dB[_SIDE_A]
                  - np.sqrt(Yb[:, :-1]) * dB[_SIDE_B]) / math.sqrt(delta)
    price = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(price_incr, axis=1)], axis=1)
    denom = Ya + Yb
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0, (Ya - Yb) / denom, 0.0)
    meta = {"alpha": alpha, "lam": lam, "delta": delta, "seed": seed,
            "regime": "rough"}
    vp = VariancePath(grid, Xa, Xb, X, dB[_SIDE_A], dB[_SIDE_B],
                      Ya, Yb, Ycomb, 0.0, meta)
    return vp, MacroPricePath(grid, price, rho, meta)


def simulate_hyper_rough(alpha: float, lam: float, delta: float, grid, seed,
                         n_paths: int = 1):
    """Time-change regime (alpha <= 1/2). Per side,
    X_{j+1} = int_0^{t_{j+1}} F + sum_{k<j} F(t_{j+1}-t_{k+1}) dW_k / sqrt(delta lam),
    then dW_j ~ N(0, max(dX_j, 0)); F(0) = 0 makes the self-weight vanish.
    """
    if not (0.0 < alpha <= 0.5):
        raise RegimeError("alpha > 1/2 has a spot variance; use simulate_rough_heston")
    grid, h = _check_uniform_grid(grid)
    n = len(grid) - 1
    params = MittagLefflerParams(alpha, lam)
    F = ml_cdf_grid(params, grid)
    _, m1 = ml_cell_moments(params, grid)
    # int_0^t F = t F(t) - int_0^t v f(v) dv, exactly per cell
    drift = grid * F - np.concatenate([[0.0], np.cumsum(m1)])
    c_noise = 1.0 / math.sqrt(delta * lam)

    Z = {s: _normals(seed, s, n_paths, n) for s in (_SIDE_A, _SIDE_B)}
    X = {s: np.zeros((n_paths, n + 1)) for s in (_SIDE_A, _SIDE_B)}
    dW = {s: np.zeros((n_paths, n)) for s in (_SIDE_A, _SIDE_B)}
    clock = {s: np.zeros(n_paths) for s in (_SIDE_A, _SIDE_B)}
    clamped = 0
    for j in range(n):
        for s in (_SIDE_A, _SIDE_B):
            Xs = X[s]
            mart = dW[s][:, :j] @ F[j:0:-1] if j else 0.0
            x_next = drift[j + 1] + c_noise * mart
            # the Brownian clock only runs forward: new driver variance is the
            # advance beyond the running maximum. Feeding the clamp back into
            # the path would bias it upward by an amount that does not vanish
            # with h, so the path itself stays the raw iterate.
            dx = x_next - clock[s]
            clamped += int(np.count_nonzero(dx < 0))
            dW[s][:, j] = Z[s][:, j] * np.sqrt(np.maximum(dx, 0.0))
            Xs[:, j + 1] = x_next
            clock[s] = np.maximum(clock[s], x_next)
    Xa, Xb = X[_SIDE_A], X[_SIDE_B]
    price = np.concatenate(
        [np.zeros((n_paths, 1)),
         np.cumsum((dW[_SIDE_A] - dW[_SIDE_B]) / math.sqrt(delta), axis=1)], axis=1)
    meta = {"alpha": alpha, "lam": lam, "delta": delta, "seed": seed,
            "regime": "hyper-rough"}
    vp = VariancePath(grid, Xa, Xb, (Xa + Xb) / delta, dW[_SIDE_A], dW[_SIDE_B],
                      None, None, None, clamped / (2.0 * n_paths * n), meta)
    return vp, MacroPricePath(grid, price, None, meta)


def fractional_derivative(values, alpha: float, grid) -> np.ndarray:
    """Power-kernel derivative of a path vanishing at 0, by product
    integration of the kernel against piecewise-linear increments."""
    grid, h = _check_uniform_grid(grid)
    values = np.asarray(values, dtype=float)
    squeeze = values.ndim == 1
    values = np.atleast_2d(values)
    if values.shape[1] != len(grid):
        raise ValueError("values must be sampled on the grid")
    if np.any(values[:, 0] != 0.0):
        raise ValueError("fractional derivative requires path(0) = 0")
    if not (0.0 <= alpha < 1.0):
        raise ValueError("order must lie in [0, 1)")
    if alpha == 0.0:
        out = values.copy()
        return out[0] if squeeze else out
    n = len(grid) - 1
    k = np.arange(1, n + 1, dtype=float)
    w = (h ** (1.0 - alpha) / (1.0 - alpha)) * (k ** (1.0 - alpha) - (k - 1) ** (1.0 - alpha))
    slopes = np.diff(values, axis=1) / h
    conv = fftconvolve(slopes, w[None, :], axes=1)[:, :n]
    out = np.concatenate([np.zeros((values.shape[0], 1)), conv], axis=1)
    out /= gamma_fn(1.0 - alpha)
    return out[0] if squeeze else out


def roughness_estimate(paths, grid, q_list, delta_list):
    """Structure-function regularity estimate.

    For each power q, regresses log mean |X_{t+d} - X_t|^q on log d over the
    requested lags and reports (slope/q, stderr/q): the estimated Holder-type
    regularity at that moment order.
    """
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    grid, h = _check_uniform_grid(grid)
    lags = []
    for d in delta_list:
        m = int(round(d / h))
        if m < 1 or m >= paths.shape[1]:
            raise ValueError(f"lag {d} outside the grid resolution")
        lags.append(m)
    out = {}
    logd = np.log(np.array(lags, dtype=float) * h)
    xc = logd - logd.mean()
    for q in q_list:
        logm = []
        for m in lags:
            diffs = np.abs(paths[:, m:] - paths[:, :-m])
            logm.append(math.log(float(np.mean(diffs ** q))))
        logm = np.array(logm)
        slope = float(np.dot(xc, logm) / np.dot(xc, xc))
        resid = logm - slope * logd - (logm.mean() - slope * logd.mean())
        dof = max(len(lags) - 2, 1)
        se = math.sqrt(float(np.dot(resid, resid)) / dof / float(np.dot(xc, xc)))
        out[q] = (slope / q, se / q)
    return out
