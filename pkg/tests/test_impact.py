import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hawkes_impact.common import FitError
from hawkes_impact.hawkes import FlatProfile, TabulatedProfile
from hawkes_impact.impact import (ImpactCurve, analytic_mi, fit_power_law,
                                  macroscopic_mi, mc_mi)
from hawkes_impact.kernels import schedule

FLAT = FlatProfile()


def test_macroscopic_flat_closed_form():
    grid = np.linspace(0.0, 5.0, 201)
    curve = macroscopic_mi(0.5, 1.0, 0.1, FLAT, grid)
    ref = 0.1 * (np.sqrt(grid) - np.sqrt(np.maximum(grid - 1.0, 0.0)))
    assert_allclose(curve.tmi, ref, atol=1e-12)
    assert_allclose(curve.pmi, 0.1 * np.clip(grid, 0, 1), atol=1e-15)
    assert_allclose(curve.mi, curve.pmi + curve.tmi, atol=1e-12)


def test_macroscopic_named_values():
    grid = np.array([0.0, 0.25, 2.0])
    curve = macroscopic_mi(0.5, 1.0, 0.1, FLAT, grid)
    assert_allclose(curve.tmi[1], 0.05, atol=1e-10)
    assert_allclose(curve.tmi[2], 0.1 * (math.sqrt(2.0) - 1.0), atol=1e-10)


def test_macroscopic_alpha_one_is_instant():
    grid = np.linspace(0.0, 3.0, 61)
    curve = macroscopic_mi(1.0, 1.0, 0.1, FLAT, grid)
    assert_allclose(curve.tmi, 0.1 * FLAT(grid), atol=1e-15)
    assert curve.tmi[grid > 1.0].max() == 0.0  # decays instantly after completion


def test_macroscopic_domain():
    with pytest.raises(ValueError):
        macroscopic_mi(1.2, 1.0, 0.1, FLAT, np.linspace(0, 1, 11))


def test_zero_gamma_zero_curve(power_kernel):
    grid = np.linspace(0.0, 2.0, 41)
    assert np.all(macroscopic_mi(0.5, 1.0, 0.0, FLAT, grid).mi == 0.0)
    params = schedule(1e3, power_kernel, 1.0, 1.0, 0.0)
    assert np.all(analytic_mi(params, power_kernel, FLAT, grid).mi == 0.0)


def test_pmi_flat_after_completion(power_kernel):
    grid = np.linspace(0.0, 4.0, 81)
    params = schedule(1e3, power_kernel, 1.0, 1.0, 0.1)
    curve = analytic_mi(params, power_kernel, FLAT, grid)
    after = curve.pmi[grid >= 1.0]
    assert_allclose(after, 0.1, atol=1e-14)
    assert np.all(np.diff(curve.pmi) >= 0)


def test_analytic_approaches_limit(power_kernel):
    grid = np.linspace(0.0, 2.0, 51)
    limit = macroscopic_mi(0.5, 1.0, 0.1, FLAT, grid)
    devs = []
    for T in (1e2, 1e3, 1e4):
        params = schedule(T, power_kernel, 1.0, 1.0, 0.1)
        finite = analytic_mi(params, power_kernel, FLAT, grid)
        devs.append(np.max(np.abs(finite.mi - limit.mi)))
    assert devs[0] > devs[1] > devs[2]
    params = schedule(1e4, power_kernel, 1.0, 1.0, 0.1)
    curve = analytic_mi(params, power_kernel, FLAT, grid)
    t_idx = np.searchsorted(grid, 0.25)
    assert abs(curve.tmi[t_idx] - 0.05) <= 0.005


def test_gamma_linearity_exact(power_kernel):
    grid = np.linspace(0.0, 3.0, 61)
    base = macroscopic_mi(0.5, 1.0, 0.1, FLAT, grid)
    doubled = macroscopic_mi(0.5, 1.0, 0.2, FLAT, grid)
    assert_allclose(doubled.mi, 2.0 * base.mi, rtol=1e-14, atol=0)
    p1 = schedule(1e3, power_kernel, 1.0, 1.0, 0.1)
    p2 = schedule(1e3, power_kernel, 1.0, 1.0, 0.2)
    a1 = analytic_mi(p1, power_kernel, FLAT, grid)
    a2 = analytic_mi(p2, power_kernel, FLAT, grid)
    assert_allclose(a2.mi, 2.0 * a1.mi, rtol=1e-14, atol=0)


def test_limit_transient_vanishes(power_kernel):
    grid = np.array([0.0, 1.0, 50.0])
    curve = macroscopic_mi(0.5, 1.0, 0.1, FLAT, grid)
    assert curve.tmi[2] <= 0.1 * curve.tmi[1]


@pytest.mark.parametrize("alpha,expected", [(0.5, 0.5), (0.3, 0.7)])
def test_execution_window_fit(alpha, expected):
    grid = np.linspace(0.0, 1.0, 301)
    curve = macroscopic_mi(alpha, 1.0, 0.1, FLAT, grid)
    slope, se = fit_power_law(curve, "execution")
    assert abs(slope - expected) <= 1e-3
    assert se <= 1e-3


def test_decay_window_fit():
    grid = np.linspace(0.0, 50.0, 2001)
    curve = macroscopic_mi(0.5, 1.0, 0.1, FLAT, grid)
    slope, _ = fit_power_law(curve, "decay")
    assert abs(slope - (-0.5)) <= 0.05  # asymptote -alpha, mild curvature left


def test_fit_requires_points():
    grid = np.linspace(0.0, 1.0, 4)
    curve = macroscopic_mi(0.5, 1.0, 0.1, FLAT, grid)
    with pytest.raises(FitError):
        fit_power_law(curve, "execution")
    with pytest.raises(ValueError):
        fit_power_law(curve, "sideways")


def test_mc_paired_matches_analytic(power_kernel):
    params = schedule(1e4, power_kernel, 1.0, 1.0, 0.1)
    grid = np.linspace(0.0, 5.0, 51)
    mc = mc_mi(params, power_kernel, FLAT, grid, reps=400, seed=42, noise="paired")
    ana = analytic_mi(params, power_kernel, FLAT, grid)
    z = np.abs(mc.mi - ana.mi) / np.maximum(mc.stderr, 1e-12)
    assert np.max(z) <= 4.0  # 51 correlated points, 3-sigma pointwise scale
    assert_allclose(mc.mi, mc.pmi + mc.tmi, atol=1e-14)


def test_mc_full_noise_matches_analytic(power_kernel):
    params = schedule(2000.0, power_kernel, 1.0, 1.0, 0.1)
    grid = np.linspace(0.0, 2.0, 21)
    mc = mc_mi(params, power_kernel, FLAT, grid, reps=4000, seed=7,
               engine_name="soe", noise="full")
    ana = analytic_mi(params, power_kernel, FLAT, grid)
    z = np.abs(mc.mi - ana.mi) / np.maximum(mc.stderr, 1e-12)
    assert np.max(z) <= 3.0


def test_mc_zero_gamma_is_noise(power_kernel):
    params = schedule(1e3, power_kernel, 1.0, 1.0, 0.0)
    grid = np.linspace(0.0, 1.0, 11)
    mc = mc_mi(params, power_kernel, FLAT, grid, reps=200, seed=3, noise="paired")
    assert np.max(np.abs(mc.mi)) == 0.0  # no metaorder, paired estimator is exact
    full = mc_mi(params, power_kernel, FLAT, grid, reps=100, seed=3,
                 engine_name="soe", noise="full")
    z = np.abs(full.mi[1:]) / full.stderr[1:]
    assert np.max(z) <= 4.0


def test_mc_gamma_scaling_within_error(power_kernel):
    grid = np.linspace(0.0, 2.0, 21)
    p1 = schedule(1e3, power_kernel, 1.0, 1.0, 0.1)
    p2 = schedule(1e3, power_kernel, 1.0, 1.0, 0.2)
    m1 = mc_mi(p1, power_kernel, FLAT, grid, reps=600, seed=11, noise="paired")
    m2 = mc_mi(p2, power_kernel, FLAT, grid, reps=600, seed=12, noise="paired")
    se = np.sqrt((2.0 * m1.stderr) ** 2 + m2.stderr ** 2)
    assert np.max(np.abs(m2.mi - 2.0 * m1.mi)[1:] / se[1:]) <= 4.0


def test_mc_curve_shape(power_kernel):
    params = schedule(1e4, power_kernel, 1.0, 1.0, 0.1)
    grid = np.linspace(0.0, 3.0, 61)
    mc = mc_mi(params, power_kernel, FLAT, grid, reps=2000, seed=5, noise="paired")
    during = mc.mi[(grid > 0.05) & (grid <= 1.0)]
    assert np.all(np.diff(during) > 0)
    assert np.all(np.diff(during, 2) < 2e-3)  # concave at MC resolution
    after = mc.mi[grid >= 1.0]
    assert np.all(np.diff(after) < 1e-3)


def test_general_profile_quadrature(power_kernel):
    # triangular execution: closed-form transient for the limit curve at t <= 1
    knots = np.linspace(0.0, 1.0, 401)
    tri = TabulatedProfile(knots, 2.0 * knots, name="ramp")
    grid = np.linspace(0.0, 1.0, 21)
    curve = macroscopic_mi(0.5, 1.0, 0.1, tri, grid)
    alpha = 0.5
    t = grid[1:]
    # integral of 2(t-u) u^-alpha over [0,t] = 2 t^(2-a)(1/(1-a) - 1/(2-a))
    ref = 0.1 * (1 - alpha) * 2.0 * t ** (2 - alpha) * (1/(1-alpha) - 1/(2-alpha))
    assert_allclose(curve.tmi[1:], ref, rtol=5e-5)


def test_mi_equals_pmi_plus_tmi_everywhere(power_kernel):
    grid = np.linspace(0.0, 4.0, 81)
    params = schedule(1e3, power_kernel, 1.0, 1.0, 0.15)
    for curve in (analytic_mi(params, power_kernel, FLAT, grid),
                  macroscopic_mi(0.5, 1.0, 0.15, FLAT, grid)):
        assert np.max(np.abs(curve.mi - curve.pmi - curve.tmi)) <= 1e-12


def test_impact_csv(tmp_path, power_kernel):
    grid = np.linspace(0.0, 2.0, 21)
    curve = macroscopic_mi(0.5, 1.0, 0.1, FLAT, grid)
    out = tmp_path / "impact.csv"
    curve.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[1] == "t,mi,pmi,tmi"
    assert lines[0].startswith("#") and "mode=limit" in lines[0]
    params = schedule(1e3, power_kernel, 1.0, 1.0, 0.1)
    mc = mc_mi(params, power_kernel, FLAT, grid, reps=50, seed=1)
    mc.to_csv(out)
    assert out.read_text().splitlines()[1] == "t,mi,pmi,tmi,stderr"
