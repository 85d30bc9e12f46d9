import math

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from tunnelkit.numeric import TransmissionPoint
from tunnelkit.potentials import free_space, gaussian_double, make_potential, rectangular_double
from tunnelkit.rect_analytic import RectDoubleParams, rect_double_transmission
from tunnelkit.spectrum import (EnergyGrid, ResonancePeak, TransmissionCurve, compare, find_resonances,
                                refine_resonances, sweep, transmission_function, wkb_resonance_seeds)
from tunnelkit.wkb import turning_points, wkb_factors

RECT_PAIR = rectangular_double(4.0, 4.0, 0.6, 0.6, 0.75)


def curve_of(e, t, engine="test"):
    return TransmissionCurve([TransmissionPoint(float(x), float(y), 0.0, engine) for x, y in zip(e, t)], engine)


def lorentz(e, e0, gamma, height=1.0):
    return height / (1.0 + ((e - e0) / (0.5 * gamma)) ** 2)


def test_grid():
    g = EnergyGrid.default(4.0)
    assert (g.e_max, g.n) == (8.0, 2000)
    assert g.energies()[0] == pytest.approx(g.e_min) and g.energies()[-1] == 8.0
    assert g.spacing == pytest.approx((8.0 - g.e_min) / 1999)
    for bad in ((0.0, 1.0, 10), (2.0, 1.0, 10), (0.1, 1.0, 1)):
        with pytest.raises(ValueError):
            EnergyGrid(*bad)


def test_two_point_free_sweep():
    c = sweep(free_space(), EnergyGrid(0.5, 1.0, 2), "numeric")
    assert list(c.transmission) == [1.0, 1.0]


def test_sweep_errors_and_flags():
    with pytest.raises(ValueError):
        sweep(gaussian_double(4, 4, 0.2, 0.2, 1), [1.0], "analytic")
    with pytest.raises(ValueError):
        sweep(RECT_PAIR, [1.0], "exact")
    c = sweep(RECT_PAIR, [1.0, 4.0, 5.0], "analytic")
    assert c.flags == ["", "degenerate_energy", ""]
    assert math.isnan(c.transmission[1]) and len(c) == 3
    with pytest.raises(ValueError):
        curve_of([1.0, 0.5], [0.1, 0.2])


def test_monotone_curve_has_no_peaks():
    e = np.linspace(0.1, 5, 100)
    assert find_resonances(curve_of(e, 1 - np.exp(-e))) == []


def test_lorentzian_widths():
    e = np.linspace(0.0, 2.0, 4001)
    t = lorentz(e, 0.5, 0.02) + lorentz(e, 1.3, 0.1, 0.6)
    peaks = find_resonances(curve_of(e, t))
    assert [round(p.e_peak, 6) for p in peaks] == [0.5, 1.3]
    assert peaks[0].fwhm == pytest.approx(0.02, rel=5e-3)
    assert peaks[1].fwhm == pytest.approx(0.1, rel=2e-2)  # tail of the first peak lifts the half level
    assert all(p.censored == "" for p in peaks)


def test_censored_side():
    e = np.linspace(0.0, 1.0, 1001)
    t = lorentz(e, 0.95, 0.2)
    (p,) = find_resonances(curve_of(e, t))
    assert p.censored == "right"
    assert p.fwhm == pytest.approx(0.2, rel=1e-2)


def test_prominence_floor():
    e = np.linspace(0, 1, 501)
    t = 0.5 + 0.01 * lorentz(e, 0.5, 0.05)
    assert find_resonances(curve_of(e, t)) == []
    assert len(find_resonances(curve_of(e, t), prominence=0.001)) == 1


def _analytic_peaks(params, lo, hi):
    """Resonance energies of the closed form by a fine scan plus bounded maximisation."""
    e = np.linspace(lo, hi, 20001)
    t = rect_double_transmission(params, e)
    idx = np.nonzero((t[1:-1] > t[:-2]) & (t[1:-1] > t[2:]))[0] + 1
    out = []
    for i in idx:
        r = minimize_scalar(lambda x: -rect_double_transmission(params, x), bounds=(e[i - 1], e[i + 1]),
                            method="bounded", options={"xatol": 1e-13})
        out.append((r.x, -r.fun))
    return out


def _nearest(x, values):
    return min(values, key=lambda v: abs(v - x))


def test_rect_pair_grid_peaks_sit_on_closed_form_resonances():
    params = RectDoubleParams.from_spec(RECT_PAIR)
    grid = EnergyGrid.default(4.0)
    peaks = [p for p in find_resonances(sweep(RECT_PAIR, grid, "analytic")) if p.e_peak < 4.0]
    ref = [x for x, t in _analytic_peaks(params, 0.01, 3.99) if t > 0.5]
    assert 1 <= len(peaks) <= len(ref)
    for p in peaks:
        assert abs(p.e_peak - _nearest(p.e_peak, ref)) <= grid.spacing


def test_refined_widths_match_root_finding():
    params = RectDoubleParams.from_spec(RECT_PAIR)
    c = sweep(RECT_PAIR, EnergyGrid.default(4.0), "analytic")
    ref = _analytic_peaks(params, 0.01, 3.99)
    refined = [p for p in refine_resonances(RECT_PAIR, c) if p.e_peak < 4.0]
    assert refined
    for p in refined:
        e0, t0 = min(ref, key=lambda r: abs(r[0] - p.e_peak))
        assert p.e_peak == pytest.approx(e0, abs=p.fwhm / 40)  # half a zoom spacing at 20 samples per width
        assert p.t_peak == pytest.approx(1.0, abs=3e-3)  # Lorentzian drop at FWHM/40 off centre
        f = lambda x: rect_double_transmission(params, x) - 0.5 * t0
        left = brentq(f, e0 - 5 * p.fwhm, e0, xtol=1e-15)
        right = brentq(f, e0, e0 + 5 * p.fwhm, xtol=1e-15)
        assert p.fwhm == pytest.approx(right - left, rel=1e-3)


def test_seeds_sit_on_half_integer_well_phase():
    p = make_potential(gaussian_double(4.0, 4.0, 0.2, 0.2, 3.0))
    seeds = wkb_resonance_seeds(p)
    assert len(seeds) >= 5
    for n, s in enumerate(seeds):
        t2 = wkb_factors(p, s, turning_points(p, s)).t2
        assert t2 == pytest.approx((n + 0.5) * math.pi, rel=1e-8)
    assert wkb_resonance_seeds(gaussian_double(4.0, 0.0, 0.2, 0.2, 3.0)) == []


def test_seeded_refinement_finds_unsampled_resonance():
    # a narrow resonance falls between points of a coarse grid
    spec = rectangular_double(6.0, 6.0, 0.5, 0.5, 2.0)
    c = sweep(spec, EnergyGrid(0.01, 3.0, 40), "analytic")
    params = RectDoubleParams.from_spec(spec)
    truth = [x for x, t in _analytic_peaks(params, 0.01, 3.0) if t > 0.5]
    seeds = [x * (1 + 0.01 * (-1) ** i) for i, x in enumerate(truth)]
    refined = refine_resonances(spec, c, seeds=seeds)
    assert len(refined) == len(truth)
    for p, x in zip(refined, truth):
        assert p.e_peak == pytest.approx(x, abs=p.fwhm / 40)


def test_asymmetric_gaussian_peaks_stay_below_one():
    spec = gaussian_double(4.0, 3.0, 0.2, 0.2, 3.0)
    c = sweep(spec, EnergyGrid(0.01, 2.9, 600), "numeric")
    refined = refine_resonances(spec, c)
    assert refined and all(p.t_peak < 0.99 for p in refined)


def test_compare_report():
    e = np.linspace(0.1, 4.0, 50)
    a = curve_of(e, lorentz(e, 1.0, 0.2) + 1e-3, "numeric")
    b = curve_of(e, 10 * (lorentz(e, 1.0, 0.2) + 1e-3), "wkb")
    r = compare(a, b, compare_below=2.0)
    assert r.max_abs_log10_ratio == pytest.approx(1.0)
    assert r.median_abs_log10_ratio == pytest.approx(1.0)
    assert r.ratio_min == pytest.approx(10.0) and r.ratio_max == pytest.approx(10.0)
    assert r.peak_offsets and r.peak_offsets[0][1] == 0.0
    assert any(line.startswith("max_abs_log10_ratio") for line in r.lines())
    with pytest.raises(ValueError):
        compare(a, curve_of(e[:-1], np.ones(49)))


def test_compare_annotates_wkb_invalid_region():
    spec = gaussian_double(4.0, 4.0, 0.2, 0.2, 4.0)
    grid = EnergyGrid(0.05, 6.0, 60)
    r = compare(sweep(spec, grid, "numeric"), sweep(spec, grid, "wkb"))
    assert r.invalid_from == 4.0 and r.compare_below == 2.0
    assert r.flagged_points > 0


def test_transmission_function_accepts_unsorted():
    f = transmission_function(RECT_PAIR, "analytic")
    e = np.array([3.0, 1.0, 2.0])
    assert np.allclose(f(e), rect_double_transmission(RectDoubleParams.from_spec(RECT_PAIR), e))
