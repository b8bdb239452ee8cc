"""Nearly unstable Hawkes order flow, metaorder impact, and the rough /
hyper-rough Heston scaling limits, with oracle-validated numerics."""

__version__ = "0.1.0"

from .common import (ConvergenceError, FitError, RegimeError, SampledFunction,
                     ScheduleError, StabilityError)
from .kernels import (EXPONENTIAL, POWER_LAW, KernelSpec, MarketParams,
                      mittag_rate, psi_total_mass, resolvent_psi, schedule,
                      xi_callable, xi_grid)
from .mittag import MittagLefflerParams, ml_cdf, ml_cdf_grid, ml_density, ml_e

__all__ = [
    "ConvergenceError", "FitError", "RegimeError", "SampledFunction",
    "ScheduleError", "StabilityError", "EXPONENTIAL", "POWER_LAW",
    "KernelSpec", "MarketParams", "mittag_rate", "psi_total_mass",
    "resolvent_psi", "schedule", "xi_callable", "xi_grid",
    "MittagLefflerParams", "ml_cdf", "ml_cdf_grid", "ml_density", "ml_e",
    "__version__",
]
