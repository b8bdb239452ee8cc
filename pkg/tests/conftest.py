import numpy as np
import pytest

from hawkes_impact.kernels import EXPONENTIAL, POWER_LAW, KernelSpec


@pytest.fixture
def exp_kernel():
    return KernelSpec(EXPONENTIAL)


@pytest.fixture
def power_kernel():
    return KernelSpec(POWER_LAW, alpha=0.5)


def graded_grid(t_max, n_lin=400, n_log=2200, t_lin=1.0):
    """Dense near 0, log-spaced out to t_max: resolves kernels and resolvents
    that live on several scales at once."""
    head = np.linspace(0.0, t_lin, n_lin, endpoint=False)
    tail = np.geomspace(t_lin, t_max, n_log)
    return np.concatenate([head, tail])
