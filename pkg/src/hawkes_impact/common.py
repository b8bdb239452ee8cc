"""Shared plumbing: error types, sampled functions, CSV round-trips, RNG
streams, and the replication fan-out used by every Monte Carlo front end."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np


class StabilityError(ValueError):
    """Branching ratio at or above one: the process explodes."""


class ScheduleError(ValueError):
    """The requested horizon does not admit a valid near-instability schedule."""


class RegimeError(ValueError):
    """Parameter falls in the other roughness regime; use the sibling simulator."""


class ConvergenceError(RuntimeError):
    """A fixed-point iteration failed to reach its tolerance."""


class FitError(RuntimeError):
    """Not enough usable data for a least-squares fit."""


def format_float(x) -> str:
    """Shortest decimal that round-trips to the same float."""
    return repr(float(x))


def write_csv(path, columns, names, header_meta=None):
    """Write named columns in full round-trip precision.

    ``header_meta`` is a mapping rendered as a single ``# key=value ...`` line.
    """
    columns = [np.asarray(c) for c in columns]
    n = len(columns[0])
    with open(path, "w") as fh:
        if header_meta:
            parts = " ".join(f"{k}={v}" for k, v in header_meta.items())
            fh.write(f"# {parts}\n")
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(format_float(c[i]) if np.issubdtype(c.dtype, np.floating)
                              else str(c[i]) for c in columns) + "\n")


def read_csv(path):
    """Inverse of :func:`write_csv`: returns (meta dict, name -> array)."""
    meta = {}
    with open(path) as fh:
        line = fh.readline()
        if line.startswith("#"):
            for part in line[1:].split():
                if "=" in part:
                    k, v = part.split("=", 1)
                    meta[k] = v
            line = fh.readline()
        names = line.strip().split(",")
        rows = [ln.strip().split(",") for ln in fh if ln.strip()]
    cols = {}
    for j, name in enumerate(names):
        raw = [r[j] for r in rows]
        try:
            cols[name] = np.array([float(x) for x in raw])
        except ValueError:
            cols[name] = np.array(raw)
    return meta, cols


@dataclass(frozen=True)
class SampledFunction:
    """A function tabulated on an increasing grid, linearly interpolated."""

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)

    def integral(self) -> float:
        """Trapezoidal integral over the whole grid."""
        return float(np.trapezoid(self.values, self.grid))

    def to_csv(self, path):
        write_csv(path, [self.grid, self.values], ["t", "value"], self.meta)

    @classmethod
    def from_csv(cls, path) -> "SampledFunction":
        meta, cols = read_csv(path)
        return cls(cols["t"], cols["value"], meta)


def stream(seed, *key: int) -> np.random.Generator:
    """Named counter-based RNG stream: one per (seed, replication, side, ...).

    ``seed`` may itself be a tuple (e.g. master seed plus replication index).
    """
    def flatten(item):
        if isinstance(item, tuple):
            out = ()
            for part in item:
                out += flatten(part)
            return out
        return (int(item),)

    ss = np.random.SeedSequence(flatten(seed) + tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def worker_count() -> int:
    """Replication workers; capped by HAWKES_IMPACT_THREADS, default serial."""
    cap = os.environ.get("HAWKES_IMPACT_THREADS", "")
    if cap:
        return max(1, int(cap))
    return 1


def replicated_map(job, common, n_reps: int, workers: int | None = None) -> list:
    """Run job((common, rep)) for rep = 0..n_reps-1, folding in index order.

    Work units are keyed by replication index, so any scheduler satisfying
    "each unit once, fold in index order" reproduces the serial result; here
    units go to a process pool when more than one worker is allowed.
    """
    workers = worker_count() if workers is None else workers
    if workers <= 1:
        return [job((common, rep)) for rep in range(n_reps)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, [(common, rep) for rep in range(n_reps)],
                             chunksize=max(1, n_reps // (8 * workers))))
