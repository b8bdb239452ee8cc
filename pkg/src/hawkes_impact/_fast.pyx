# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled thinning kernels: exact O(N) intensity recomputation and the
O(1)-update sum-of-exponentials engine. Draw order (one uniform for the
waiting time, one for the accept test) matches the pure-python engine."""

from libc.math cimport exp, log, pow

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

cnp.import_array()

FAMILY_POWER = 0
FAMILY_EXP = 1


cdef inline double next_u(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


cdef bitgen_t *get_bitgen(object generator):
    capsule = generator.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


def thin_exact(double mu, double a, double horizon, int family, double alpha,
               object generator):
    """Event times of a self-exciting stream with kernel a*phi on [0, horizon]."""
    cdef bitgen_t *rng = get_bitgen(generator)
    cdef Py_ssize_t cap = 1024
    cdef Py_ssize_t n = 0, j
    buf = np.empty(cap, dtype=np.float64)
    cdef double[::1] times = buf
    cdef double t = 0.0, lam_ub, lam, u, dt, s
    cdef double phi0 = alpha if family == FAMILY_POWER else 1.0
    lam_ub = mu
    if lam_ub <= 0.0:
        return buf[:0].copy()
    while True:
        u = next_u(rng)
        t += -log(u) / lam_ub
        if t > horizon:
            break
        lam = mu
        if family == FAMILY_POWER:
            for j in range(n):
                s = t - times[j]
                lam += a * alpha * pow(1.0 + s, -alpha - 1.0)
        else:
            for j in range(n):
                lam += a * exp(-(t - times[j]))
        u = next_u(rng)
        if u * lam_ub <= lam:
            if n == cap:
                cap *= 2
                grown = np.empty(cap, dtype=np.float64)
                grown[:n] = buf[:n]
                buf = grown
                times = buf
            times[n] = t
            n += 1
            lam_ub = lam + a * phi0
        else:
            lam_ub = lam  # intensity only decays until the next event
    return buf[:n].copy()


def thin_soe(double mu, double a, double horizon, double[::1] weights,
             double[::1] rates, object generator):
    """Same thinning with phi approximated as sum_k w_k exp(-r_k t)."""
    cdef bitgen_t *rng = get_bitgen(generator)
    cdef Py_ssize_t m = weights.shape[0]
    cdef Py_ssize_t cap = 1024
    cdef Py_ssize_t n = 0, k
    buf = np.empty(cap, dtype=np.float64)
    cdef double[::1] times = buf
    state_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] state = state_arr
    cdef double t = 0.0, lam_ub, lam, u, dt, fac
    lam_ub = mu
    if lam_ub <= 0.0:
        return buf[:0].copy()
    while True:
        u = next_u(rng)
        dt = -log(u) / lam_ub
        t += dt
        if t > horizon:
            break
        lam = mu
        for k in range(m):
            state[k] *= exp(-rates[k] * dt)
            lam += state[k]
        u = next_u(rng)
        if u * lam_ub <= lam:
            if n == cap:
                cap *= 2
                grown = np.empty(cap, dtype=np.float64)
                grown[:n] = buf[:n]
                buf = grown
                times = buf
            times[n] = t
            n += 1
            lam = mu
            for k in range(m):
                state[k] += a * weights[k]
                lam += state[k]
            lam_ub = lam
        else:
            lam_ub = lam
    return buf[:n].copy()
