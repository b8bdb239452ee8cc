"""Pure-python thinning engines, mirroring the compiled core draw for draw."""

from __future__ import annotations

import numpy as np

FAMILY_POWER = 0
FAMILY_EXP = 1


def thin_exact(mu, a, horizon, family, alpha, generator):
    """Event times of a self-exciting stream with kernel a*phi on [0, horizon]."""
    cap = 1024
    times = np.empty(cap)
    n = 0
    t = 0.0
    phi0 = alpha if family == FAMILY_POWER else 1.0
    lam_ub = mu
    if lam_ub <= 0.0:
        return times[:0].copy()
    while True:
        t += -np.log(generator.random()) / lam_ub
        if t > horizon:
            break
        s = t - times[:n]
        if family == FAMILY_POWER:
            lam = mu + a * alpha * np.sum((1.0 + s) ** (-alpha - 1.0))
        else:
            lam = mu + a * np.sum(np.exp(-s))
        if generator.random() * lam_ub <= lam:
            if n == cap:
                cap *= 2
                grown = np.empty(cap)
                grown[:n] = times[:n]
                times = grown
            times[n] = t
            n += 1
            lam_ub = lam + a * phi0
        else:
            lam_ub = lam  # intensity only decays until the next event
    return times[:n].copy()


def thin_soe(mu, a, horizon, weights, rates, generator):
    """Same thinning with phi approximated as sum_k w_k exp(-r_k t)."""
    weights = np.asarray(weights, dtype=float)
    rates = np.asarray(rates, dtype=float)
    cap = 1024
    times = np.empty(cap)
    n = 0
    t = 0.0
    state = np.zeros_like(weights)
    lam_ub = mu
    if lam_ub <= 0.0:
        return times[:0].copy()
    while True:
        dt = -np.log(generator.random()) / lam_ub
        t += dt
        if t > horizon:
            break
        state *= np.exp(-rates * dt)
        lam = mu + state.sum()
        if generator.random() * lam_ub <= lam:
            if n == cap:
                cap *= 2
                grown = np.empty(cap)
                grown[:n] = times[:n]
                times = grown
            times[n] = t
            n += 1
            state += a * weights
            lam_ub = mu + state.sum()
        else:
            lam_ub = lam
    return times[:n].copy()
