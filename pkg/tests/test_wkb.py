import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from tunnelkit.constants import CONSTANTS
from tunnelkit.potentials import Potential, gaussian_double, make_potential, rectangular_double
from tunnelkit.wkb import (AssumptionViolation, TurningPointError, TurningPoints, WkbFactors, action_integral,
                           gaussian_turning_points, simpson, transmission_wkb_many, turning_points,
                           wkb_coefficients, wkb_factors, wkb_single_transmission, wkb_transmission)

C = CONSTANTS.kinetic_scale(1.0)


def parabola(v0=3.0, half=0.8):
    def f(x):
        x = np.asarray(x, dtype=float)
        return np.clip(v0 * (1.0 - (x / half) ** 2), 0.0, None)
    return Potential(f, -half, half, v0)


def test_simpson_exact_for_cubics_and_order_four():
    x = np.linspace(0, 2, 5)
    assert simpson(x**3 - x, x[1] - x[0]) == pytest.approx(2.0, abs=1e-14)
    errs = []
    for n in (8, 16, 32, 64):
        x = np.linspace(0, math.pi, n + 1)
        errs.append(abs(simpson(np.sin(x), x[1] - x[0]) - 2.0))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 16) < 0.5)
    with pytest.raises(ValueError):
        simpson(np.ones(4), 0.1)


def test_action_parabolic_closed_form():
    v0, half, e = 3.0, 0.8, 1.2
    p = parabola(v0, half)
    xt = half * math.sqrt((v0 - e) / v0)
    exact = 0.5 * math.pi * xt * math.sqrt((v0 - e) / C)
    errs = [abs(action_integral(p, e, -xt, xt, n) - exact) for n in (4, 8, 16)]
    assert errs[-1] < 1e-10 * exact
    # the substitution makes the integrand a polynomial in cos(theta): exact early
    assert errs[0] < 1e-10 * exact


def test_action_gaussian_converges_fourth_order_against_quad():
    spec = gaussian_double(4.0, 0.0, 0.3, 0.2, 3.0)
    p = make_potential(spec)
    e = 1.0
    h = 0.3 * math.sqrt(2 * math.log(4.0 / e))
    ref, _ = quad(lambda x: math.sqrt(max(p(x) - e, 0.0) / C), -h, h, limit=200, epsabs=1e-13, epsrel=1e-13)
    errs = [abs(action_integral(p, e, -h, h, n) - ref) for n in (8, 16, 32)]
    assert errs[-1] < 1e-8 * ref
    assert errs[0] / errs[1] > 12


def test_gaussian_turning_points_solve_v_equals_e():
    spec = gaussian_double(4.0, 3.0, 0.2, 0.3, 4.0)
    p = make_potential(spec)
    tp = gaussian_turning_points(spec, 1.5)
    for x in (tp.x1, tp.x2, tp.x3, tp.x4):
        assert p(x) == pytest.approx(1.5, rel=1e-6)
    scan = turning_points(p, 1.5, "numeric")
    assert np.allclose([tp.x1, tp.x2, tp.x3, tp.x4], [scan.x1, scan.x2, scan.x3, scan.x4], atol=1e-6)


def test_turning_point_errors():
    close = gaussian_double(4.0, 4.0, 0.2, 0.2, 1.0)
    with pytest.raises(AssumptionViolation):
        gaussian_turning_points(close, 1.0)
    tp = turning_points(make_potential(close), 1.0, "auto")  # falls back to the scan
    assert isinstance(tp, TurningPoints)
    with pytest.raises(TurningPointError):
        turning_points(make_potential(close), 4.5)
    with pytest.raises(TurningPointError):
        turning_points(make_potential(gaussian_double(4.0, 0.0, 0.2, 0.2, 3.0)), 1.0)
    with pytest.raises(ValueError):
        turning_points(make_potential(close), 1.0, "magic")
    with pytest.raises(TurningPointError):
        TurningPoints(1.0, 0.0, 2.0, 3.0)


def test_rectangular_factors():
    v, w, a, e = 4.0, 0.6, 1.5, 2.0
    p = make_potential(rectangular_double(v, v, w, w, a))
    f = wkb_factors(p, e, turning_points(p, e, "numeric"))
    kappa, k = math.sqrt((v - e) / C), math.sqrt(e / C)
    assert f.t1 == pytest.approx(math.exp(-kappa * w), rel=1e-9)
    assert f.t3 == pytest.approx(math.exp(-kappa * w), rel=1e-9)
    assert f.t2 == pytest.approx(k * a, rel=1e-9)


def _unscaled(f):
    c = wkb_coefficients(f)
    m = f.t3 * (c.c4 - c.c3) / 4 + (c.c3 + c.c4) / f.t3
    return 1.0 / abs(m) ** 2


@given(st.floats(0.05, 1.0), st.floats(0.0, 20.0), st.floats(0.05, 1.0))
def test_scaled_assembly_matches_direct(t1, t2, t3):
    f = WkbFactors(t1, t2, t3)
    assert wkb_transmission(f) == pytest.approx(_unscaled(f), rel=1e-10)


@given(st.floats(1e-6, 1.0), st.floats(0.0, 20.0), st.floats(1e-6, 1.0))
def test_period_pi_in_well_phase(t1, t2, t3):
    a = wkb_transmission(WkbFactors(t1, t2, t3))
    b = wkb_transmission(WkbFactors(t1, t2 + math.pi, t3))
    assert a == pytest.approx(b, rel=1e-9)
    assert 0.0 < a <= 1.0 + 1e-12


@given(st.floats(1e-3, 1.0), st.integers(0, 10))
def test_symmetric_quantisation_gives_full_transmission(t, n):
    assert wkb_transmission(WkbFactors(t, (n + 0.5) * math.pi, t)) == pytest.approx(1.0, rel=1e-9)


def test_transparent_factors_value():
    # T1 = T3 = 1, T2 = 0: (C3 + C4) = 2 and T3 (C4 - C3) / 4 = 1/8
    assert wkb_transmission(WkbFactors(1.0, 0.0, 1.0)) == pytest.approx(1.0 / 2.125**2)


@given(st.floats(1e-3, 1.0))
def test_absent_well_and_left_barrier(t1):
    # with T3 = 1 and T2 = 0 the formula still keeps a unit-transparency left "barrier"
    got = wkb_transmission(WkbFactors(t1, 0.0, 1.0))
    assert got == pytest.approx(t1**2 / (2.0 + t1**2 / 8.0) ** 2, rel=1e-12)


def test_c3_c4_definition():
    c = wkb_coefficients(WkbFactors(0.5, 0.3, 0.7))
    assert c.c3 == pytest.approx((2.0 - 0.125) * np.exp(0.3j))
    assert c.c4 == pytest.approx((0.125 + 2.0) * np.exp(-0.3j))


def test_single_barrier_wkb():
    v, w, e = 4.0, 0.6, 2.0
    spec = rectangular_double(v, 0.0, w, w, 1.0)
    t = math.exp(-math.sqrt((v - e) / C) * w)
    assert wkb_single_transmission(spec, e) == pytest.approx((1 / t + t / 4) ** -2, rel=1e-9)
    assert wkb_single_transmission(spec, e, small_t=True) == pytest.approx(t * t, rel=1e-9)
    with pytest.raises(TurningPointError):
        wkb_single_transmission(spec, 5.0)


def test_many_flags_invalid_points():
    p = make_potential(gaussian_double(4.0, 4.0, 0.2, 0.2, 4.0))
    pts = transmission_wkb_many(p, [1.0, 3.0, 4.5])
    assert [q.flag == "" for q in pts] == [True, True, False]
    assert pts[2].flag.startswith("wkb_invalid")
    assert math.isnan(pts[2].transmission)
    assert all(math.isnan(q.phase) for q in pts)
