import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.optimize import minimize_scalar

from oracles import five_region, transfer_matrix_amplitude
from tunnelkit.constants import CONSTANTS
from tunnelkit.potentials import rectangular_double
from tunnelkit.rect_analytic import (DegenerateEnergyError, RectDoubleParams, piecewise_constant_amplitude,
                                     rect_double_amplitude, rect_double_transmission, rect_single,
                                     rect_single_transmission_closed)

RECT_PAIR = RectDoubleParams(4.0, 4.0, 0.6, 0.6, 0.75)


def test_no_barrier_is_transparent():
    p = RectDoubleParams(4.0, 4.0, 0.0, 0.0, 1.0)
    t = rect_double_amplitude(p, np.array([0.5, 2.0, 7.0]))
    assert np.allclose(np.abs(t), 1.0, atol=1e-15)


def test_rect_pair_point_against_transfer_matrix():
    edges, heights = five_region(4.0, 4.0, 0.6, 0.6, 0.75)
    ref = transfer_matrix_amplitude(edges, heights, 2.0)
    t = rect_double_amplitude(RECT_PAIR, 2.0)
    assert abs(t - ref) / abs(ref) < 1e-12
    assert abs(t) ** 2 < 0.1  # off resonance


@given(st.floats(0.1, 6.0), st.floats(0.1, 6.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0),
       st.floats(0.0, 3.0), st.floats(0.01, 10.0), st.floats(0.1, 2.0))
def test_matches_transfer_matrix(v1, v2, w1, w2, a, e, mf):
    assume(abs(e - v1) > 1e-3 and abs(e - v2) > 1e-3)
    p = RectDoubleParams(v1, v2, w1, w2, a, mf)
    edges, heights = five_region(v1, v2, w1, w2, a)
    ref = transfer_matrix_amplitude(edges, heights, e, mf)
    t = rect_double_amplitude(p, e)
    assert abs(t - ref) <= 1e-10 * abs(ref)


@given(st.floats(0.1, 6.0), st.floats(0.1, 6.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0),
       st.floats(0.0, 3.0), st.floats(0.01, 10.0))
def test_matches_local_origin_matcher(v1, v2, w1, w2, a, e):
    assume(abs(e - v1) > 1e-3 and abs(e - v2) > 1e-3)
    edges, heights = five_region(v1, v2, w1, w2, a)
    t = rect_double_amplitude(RectDoubleParams(v1, v2, w1, w2, a), e)
    ref = piecewise_constant_amplitude(edges, heights, e)
    assert abs(t - ref) <= 1e-10 * abs(ref)


@given(st.floats(0.1, 6.0), st.floats(0.1, 6.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0),
       st.floats(0.0, 3.0), st.floats(0.01, 10.0))
def test_swap_symmetry_and_bound(v1, v2, w1, w2, a, e):
    assume(abs(e - v1) > 1e-3 and abs(e - v2) > 1e-3)
    t12 = rect_double_transmission(RectDoubleParams(v1, v2, w1, w2, a), e)
    t21 = rect_double_transmission(RectDoubleParams(v2, v1, w2, w1, a), e)
    assert t12 == pytest.approx(t21, rel=1e-9)
    assert 0.0 < t12 <= 1.0 + 1e-12


def test_single_barrier_limit():
    p = RectDoubleParams(4.0, 0.0, 0.6, 0.0, 0.75)
    for e in (0.5, 2.0, 5.0):
        assert rect_double_transmission(p, e) == pytest.approx(rect_single(4.0, 0.6, e).transmission, rel=1e-12)


def test_from_spec_with_empty_first_barrier():
    p = RectDoubleParams.from_spec(rectangular_double(0.0, 3.0, 0.5, 0.4, 1.0))
    assert (p.w1, p.w2, p.a) == (0.0, 0.4, 1.5)


def test_degenerate_energy():
    with pytest.raises(DegenerateEnergyError):
        rect_double_amplitude(RECT_PAIR, 4.0)
    with pytest.raises(ValueError):
        rect_double_amplitude(RECT_PAIR, 0.0)
    with pytest.raises(DegenerateEnergyError):
        rect_single(4.0, 0.6, 4.0)


def test_symmetric_resonances_reach_unity():
    e = np.linspace(0.05, 3.95, 4000)
    t = rect_double_transmission(RECT_PAIR, e)
    i = int(np.argmax(t))
    res = minimize_scalar(lambda x: -rect_double_transmission(RECT_PAIR, x), bracket=(e[i - 1], e[i], e[i + 1]),
                          tol=1e-12)
    assert -res.fun > 1 - 1e-6


def test_single_zero_length():
    s = rect_single(4.0, 0.0, 1.0)
    assert (s.transmission, s.alpha, s.reflection) == (1.0, 0.0, 0.0)


@given(st.floats(0.2, 8.0), st.floats(0.05, 2.0), st.floats(0.01, 0.99), st.floats(0.1, 2.0))
def test_single_closed_forms(v0, length, frac, mf):
    e = frac * v0
    s = rect_single(v0, length, e, mf)
    assert s.transmission == pytest.approx(rect_single_transmission_closed(v0, length, e, mf), rel=1e-10)
    assert s.transmission + s.reflection == pytest.approx(1.0)
    c = CONSTANTS.kinetic_scale(mf)
    k, kap = math.sqrt(e / c), math.sqrt((v0 - e) / c)
    alpha = -math.atan((kap**2 - k**2) * math.tanh(kap * length) / (2 * kap * k))
    assert s.alpha == pytest.approx(alpha, abs=1e-12)


def test_single_above_barrier_continuation():
    # above the top the closed form continues through sin instead of sinh
    v0, length, e = 2.0, 0.7, 3.0
    c = CONSTANTS.kinetic_scale(1.0)
    q = math.sqrt((e - v0) / c)
    ref = 1.0 / (1.0 + v0**2 * math.sin(q * length) ** 2 / (4 * e * (e - v0)))
    assert rect_single(v0, length, e).transmission == pytest.approx(ref, rel=1e-12)
