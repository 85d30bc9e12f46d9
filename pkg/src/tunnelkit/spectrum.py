"""Energy sweeps, resonance detection and engine-to-engine comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from .constants import CONSTANTS
from .numeric import SolverOptions, TransmissionPoint, transmission_numeric_many
from .potentials import DoubleBarrierSpec, Potential, make_potential
from .rect_analytic import EPS_DEGENERATE, RectDoubleParams, rect_double_amplitude
from .wkb import DEFAULT_SIMPSON, TurningPointError, transmission_wkb_many, turning_points, wkb_factors

ENGINES = ("analytic", "numeric", "wkb")
DEFAULT_POINTS = 2000
DEFAULT_PROMINENCE = 0.05


@dataclass(frozen=True)
class EnergyGrid:
    e_min: float
    e_max: float
    n: int = DEFAULT_POINTS

    def __post_init__(self):
        if not 0 < self.e_min < self.e_max:
            raise ValueError(f"need 0 < e_min < e_max, got {self.e_min}, {self.e_max}")
        if self.n < 2:
            raise ValueError("grid needs at least two points")

    @classmethod
    def default(cls, v_max: float, n: int = DEFAULT_POINTS) -> "EnergyGrid":
        """n points up to twice the potential maximum, starting one spacing above zero."""
        e_max = 2.0 * v_max if v_max > 0 else 1.0
        return cls(e_max / n, e_max, n)

    @property
    def spacing(self) -> float:
        return (self.e_max - self.e_min) / (self.n - 1)

    def energies(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.n)


@dataclass
class TransmissionCurve:
    points: list[TransmissionPoint]
    engine: str
    spec: DoubleBarrierSpec | None = None

    def __post_init__(self):
        e = self.energies
        if len(e) > 1 and not np.all(np.diff(e) > 0):
            raise ValueError("curve energies must be strictly increasing")

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.points])

    @property
    def transmission(self) -> np.ndarray:
        return np.array([p.transmission for p in self.points])

    @property
    def phase(self) -> np.ndarray:
        return np.array([p.phase for p in self.points])

    @property
    def flags(self) -> list[str]:
        return [p.flag for p in self.points]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ResonancePeak:
    e_peak: float  # eV
    t_peak: float
    fwhm: float  # eV
    censored: str = ""  # "", "left", "right" or "both"


def _analytic_points(spec: DoubleBarrierSpec, energies: np.ndarray) -> list[TransmissionPoint]:
    params = RectDoubleParams.from_spec(spec)
    bad = np.zeros(len(energies), dtype=bool)
    for v, w in ((params.v1, params.w1), (params.v2, params.w2)):
        if w > 0:
            bad |= np.abs(energies - v) <= EPS_DEGENERATE
    out = [TransmissionPoint(float(e), math.nan, math.nan, "analytic", "degenerate_energy") for e in energies]
    good = np.nonzero(~bad)[0]
    if len(good):
        e = energies[good]
        t = rect_double_amplitude(params, e)
        k = np.sqrt(e / CONSTANTS.kinetic_scale(spec.mass_factor))
        phase = np.angle(t * np.exp(1j * k * params.b))
        for i, ti, ph in zip(good, np.atleast_1d(t), np.atleast_1d(phase)):
            out[i] = TransmissionPoint(float(energies[i]), float(abs(ti) ** 2), float(ph), "analytic")
    return out


def sweep(p: Potential | DoubleBarrierSpec, grid: EnergyGrid | Sequence[float], engine: str = "numeric",
          solver: SolverOptions | None = None, wkb_mode: str = "auto",
          n_simpson: int = DEFAULT_SIMPSON) -> TransmissionCurve:
    """Transmission curve over ``grid`` with one engine.

    Points an engine cannot evaluate carry a non-empty flag and NaN values;
    they are never dropped.
    """
    pot = make_potential(p) if isinstance(p, DoubleBarrierSpec) else p
    energies = grid.energies() if isinstance(grid, EnergyGrid) else np.asarray(grid, dtype=float)
    return TransmissionCurve(_points(pot, energies, engine, solver, wkb_mode, n_simpson), engine, pot.spec)


def _points(pot, energies, engine, solver, wkb_mode, n_simpson) -> list[TransmissionPoint]:
    spec = pot.spec
    if engine == "analytic":
        if spec is None or not spec.is_rectangular:
            raise ValueError("analytic engine needs a rectangular double barrier spec")
        pts = _analytic_points(spec, energies)
    elif engine == "numeric":
        pts = transmission_numeric_many(pot, energies, solver)
    elif engine == "wkb":
        pts = transmission_wkb_many(pot, energies, wkb_mode, n_simpson)
    else:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    return pts


def _half_crossing(e, t, i, stop, half, step):
    """Walk from peak index i towards ``stop`` (inclusive); interpolated energy where t drops to half."""
    j = i
    while j != stop:
        nxt = j + step
        if t[nxt] <= half:
            f = (t[j] - half) / (t[j] - t[nxt])
            return e[j] + f * (e[nxt] - e[j])
        j = nxt
    return None


def _basin_edge(t, i, step):
    """Index of the nearest local minimum from peak i in direction ``step``."""
    j = i
    while 0 <= j + step < len(t) and t[j + step] <= t[j]:
        j += step
    return j


def find_resonances(curve: TransmissionCurve | tuple, prominence: float = DEFAULT_PROMINENCE) -> list[ResonancePeak]:
    """Resonance peaks with full width at half maximum.

    A peak is an interior point strictly above both neighbours whose
    prominence is at least ``prominence``.  Half-maximum crossings are
    linearly interpolated inside the peak's own valley-to-valley basin; a side
    that does not reach half maximum there is reported as censored and the
    width is estimated from the other side.
    """
    if isinstance(curve, TransmissionCurve):
        e, t = curve.energies, curve.transmission
    else:
        e, t = (np.asarray(v, dtype=float) for v in curve)
    peaks: list[ResonancePeak] = []
    finite = np.isfinite(t)
    # process contiguous finite runs independently
    edges = np.flatnonzero(np.diff(np.concatenate([[0], finite.astype(int), [0]])))
    for lo, hi in zip(edges[::2], edges[1::2]):
        es, ts = e[lo:hi], t[lo:hi]
        if len(ts) < 3:
            continue
        idx, _ = find_peaks(ts, prominence=prominence)
        for i in idx:
            if not (ts[i] > ts[i - 1] and ts[i] > ts[i + 1]):
                continue
            half = 0.5 * ts[i]
            left = _half_crossing(es, ts, i, _basin_edge(ts, i, -1), half, -1)
            right = _half_crossing(es, ts, i, _basin_edge(ts, i, +1), half, +1)
            if left is not None and right is not None:
                width, cens = right - left, ""
            elif left is not None:
                width, cens = 2.0 * (es[i] - left), "right"
            elif right is not None:
                width, cens = 2.0 * (right - es[i]), "left"
            else:
                width = es[_basin_edge(ts, i, 1)] - es[_basin_edge(ts, i, -1)]
                cens = "both"
            peaks.append(ResonancePeak(float(es[i]), float(ts[i]), float(width), cens))
    return peaks


def transmission_function(p: Potential | DoubleBarrierSpec, engine: str = "numeric",
                          solver: SolverOptions | None = None, wkb_mode: str = "auto",
                          n_simpson: int = DEFAULT_SIMPSON):
    """Vectorised ``energies -> transmission`` callable bound to one engine.

    Energies need not be sorted; flagged points come back as NaN (or the
    engine's value when it still produced one).
    """
    pot = make_potential(p) if isinstance(p, DoubleBarrierSpec) else p

    def f(energies):
        pts = _points(pot, np.atleast_1d(np.asarray(energies, dtype=float)), engine, solver, wkb_mode, n_simpson)
        return np.array([q.transmission for q in pts])
    return f


def wkb_resonance_seeds(p: Potential | DoubleBarrierSpec, n_scan: int = 400, mode: str = "auto",
                        n_simpson: int = DEFAULT_SIMPSON) -> list[float]:
    """Energies below the lower barrier top where the well phase T2 equals (n + 1/2) pi.

    These are the WKB quasi-bound levels; they serve as starting brackets for
    resonances too narrow for a sweep grid to sample.
    """
    pot = make_potential(p) if isinstance(p, DoubleBarrierSpec) else p
    spec = pot.spec
    if spec is None or spec.is_single:
        return []
    v_low = min(spec.v1, spec.v2)
    es = np.linspace(v_low / n_scan, v_low * (1.0 - 1e-3), n_scan)

    def t2(e):
        return wkb_factors(pot, e, turning_points(pot, e, mode), n_simpson).t2

    vals = np.full(n_scan, np.nan)
    for i, e in enumerate(es):
        try:
            vals[i] = t2(e)
        except TurningPointError:
            pass
    seeds = []
    for i in range(n_scan - 1):
        if not (np.isfinite(vals[i]) and np.isfinite(vals[i + 1])):
            continue
        n_lo = math.floor(vals[i] / math.pi - 0.5)
        n_hi = math.floor(vals[i + 1] / math.pi - 0.5)
        for n in range(n_lo + 1, n_hi + 1):
            target = (n + 0.5) * math.pi
            seeds.append(float(brentq(lambda e: t2(e) - target, es[i], es[i + 1], xtol=1e-12)))
    return seeds


@dataclass
class _Zoom:
    lo: float
    hi: float
    b_lo: float  # crossing search limits
    b_hi: float
    e_pk: float = math.nan
    t_pk: float = math.nan
    done: bool = False


def _batched(f, grids):
    """Evaluate ``f`` once on the concatenation of ``grids`` and split the result."""
    if not grids:
        return []
    sizes = np.cumsum([len(g) for g in grids])[:-1]
    return np.split(f(np.concatenate(grids)), sizes)


def _run_zooms(f, zooms, zoom_points, max_iter, resolved):
    for _ in range(max_iter):
        active = [z for z in zooms if not z.done]
        if not active:
            break
        grids = [np.linspace(z.lo, z.hi, zoom_points) for z in active]
        for z, g, t in zip(active, grids, _batched(f, grids)):
            j = int(np.nanargmax(t))
            z.e_pk, z.t_pk = float(g[j]), float(t[j])
            new_lo, new_hi = g[max(j - 1, 0)], g[min(j + 1, zoom_points - 1)]
            if np.count_nonzero(t > 0.5 * z.t_pk) >= resolved or new_hi - new_lo <= 8 * np.spacing(z.e_pk):
                z.done = True
            else:
                z.lo, z.hi = new_lo, new_hi


def _measure_widths(f, zooms, zoom_points, rungs=48) -> list[ResonancePeak]:
    """Half-maximum crossings on both sides: a geometric ladder to bracket, then one dense pass."""
    jobs = []  # (zoom index, side sign, ladder)
    for n, z in enumerate(zooms):
        step = max((z.hi - z.lo) / (zoom_points - 1), 4 * np.spacing(z.e_pk))
        for sign, limit in ((-1.0, z.e_pk - z.b_lo), (1.0, z.b_hi - z.e_pk)):
            if limit > step:
                jobs.append((n, sign, np.geomspace(step, limit, rungs)))
    ladders = _batched(f, [zooms[n].e_pk + sign * d for n, sign, d in jobs])
    fine_jobs = []
    for (n, sign, d), t in zip(jobs, ladders):
        below = np.nonzero(t <= 0.5 * zooms[n].t_pk)[0]
        if len(below):
            j = below[0]
            fine_jobs.append((n, sign, np.linspace(d[j - 1] if j else 0.0, d[j], zoom_points)))
    fine = _batched(f, [zooms[n].e_pk + sign * d for n, sign, d in fine_jobs])
    sides: dict[tuple[int, float], float] = {}
    for (n, sign, d), t in zip(fine_jobs, fine):
        half = 0.5 * zooms[n].t_pk
        j = int(np.nonzero(t <= half)[0][0])
        if j == 0:
            sides[(n, sign)] = float(d[0])
            continue
        frac = (t[j - 1] - half) / (t[j - 1] - t[j])
        sides[(n, sign)] = float(d[j - 1] + frac * (d[j] - d[j - 1]))
    out = []
    for n, z in enumerate(zooms):
        left, right = sides.get((n, -1.0)), sides.get((n, 1.0))
        if left is not None and right is not None:
            width, cens = left + right, ""
        elif left is not None:
            width, cens = 2.0 * left, "right"
        elif right is not None:
            width, cens = 2.0 * right, "left"
        else:
            width, cens = z.b_hi - z.b_lo, "both"
        out.append(ResonancePeak(z.e_pk, z.t_pk, float(width), cens))
    return out


def refine_resonances(p: Potential | DoubleBarrierSpec, curve: TransmissionCurve,
                      peaks: Sequence[ResonancePeak] | None = None, seeds: Sequence[float] = (),
                      engine: str | None = None, solver: SolverOptions | None = None,
                      wkb_mode: str = "auto", n_simpson: int = DEFAULT_SIMPSON,
                      prominence: float = DEFAULT_PROMINENCE, zoom_points: int = 201,
                      max_iter: int = 16, resolved: int = 20) -> list[ResonancePeak]:
    """Re-measure resonances that the sweep grid under-resolves or misses.

    Every detected peak is zoomed (dense re-evaluation around the running
    maximum) until ``resolved`` samples lie above half maximum or the window
    reaches machine resolution, which places the peak energy within
    FWHM / (2 ``resolved``).  Half-maximum crossings are searched inside the
    peak's valley-to-valley basin on ``curve``.

    ``seeds`` are extra energies (e.g. :func:`wkb_resonance_seeds`) that may
    sit on resonances falling between grid points.  Each seed is zoomed
    inside the bracket reaching halfway to its neighbouring seeds and is kept
    when it yields a new peak rising ``prominence`` above the bracket ends.
    All zoom windows of one round are evaluated in a single engine call.
    """
    pot = make_potential(p) if isinstance(p, DoubleBarrierSpec) else p
    f = transmission_function(pot, engine or curve.engine, solver, wkb_mode, n_simpson)
    e, t = curve.energies, curve.transmission
    peaks = find_resonances(curve, prominence) if peaks is None else peaks
    zooms = []
    for pk in peaks:
        i = int(np.argmin(np.abs(e - pk.e_peak)))
        zooms.append(_Zoom(e[max(i - 1, 0)], e[min(i + 1, len(e) - 1)],
                           e[_basin_edge(t, i, -1)], e[_basin_edge(t, i, +1)]))
    seeds = sorted(float(x) for x in seeds)
    seed_zooms = []
    for n, s0 in enumerate(seeds):
        left = 0.5 * (seeds[n - 1] + s0) if n else max(e[0], s0 - 0.5 * ((seeds[1] - s0) if len(seeds) > 1 else s0))
        right = 0.5 * (s0 + seeds[n + 1]) if n + 1 < len(seeds) else min(e[-1], s0 + 0.5 * (s0 - left) * 2)
        if right > left > 0:
            seed_zooms.append(_Zoom(left, right, left, right))
    _run_zooms(f, zooms + seed_zooms, zoom_points, max_iter, resolved)

    # seeds whose bracket already holds a detected peak, or that found no peak, are dropped
    kept = []
    if seed_zooms:
        ends = _batched(f, [np.array([z.b_lo, z.b_hi]) for z in seed_zooms])
        for z, te in zip(seed_zooms, ends):
            if any(z.b_lo <= d.e_pk <= z.b_hi for d in zooms):
                continue
            if not (z.lo > z.b_lo and z.hi < z.b_hi):
                continue  # maximum sits on the bracket edge: not an interior peak
            if z.t_pk - np.nanmax(te) >= prominence:
                kept.append(z)
    found = _measure_widths(f, zooms + kept, zoom_points)
    return sorted(found, key=lambda pk: pk.e_peak)


@dataclass
class ComparisonReport:
    engine_a: str
    engine_b: str
    n_points: int
    ratio_min: float
    ratio_max: float
    compare_below: float  # eV, upper energy bound of the order-of-magnitude window
    max_abs_log10_ratio: float
    median_abs_log10_ratio: float
    peak_offsets: list[tuple[float, float]] = field(default_factory=list)  # (e_peak_a, e_b - e_a)
    invalid_from: float | None = None  # eV, start of the annotated WKB-invalid region
    flagged_points: int = 0

    def lines(self) -> list[str]:
        out = [
            f"engines: {self.engine_a} vs {self.engine_b}",
            f"points: {self.n_points}",
            f"ratio_min: {self.ratio_min:.6e}",
            f"ratio_max: {self.ratio_max:.6e}",
            f"order_of_magnitude_window_ev: E < {self.compare_below:.6g}",
            f"max_abs_log10_ratio: {self.max_abs_log10_ratio:.6f}",
            f"median_abs_log10_ratio: {self.median_abs_log10_ratio:.6f}",
            f"flagged_points: {self.flagged_points}",
        ]
        if self.invalid_from is not None:
            out.append(f"wkb_invalid_region_ev: E >= {self.invalid_from:.6g}")
        for ea, off in self.peak_offsets:
            out.append(f"peak_offset: e_peak={ea:.9f} offset_ev={off:+.6e}")
        return out


def compare(curve_a: TransmissionCurve, curve_b: TransmissionCurve,
            compare_below: float | None = None, prominence: float = DEFAULT_PROMINENCE) -> ComparisonReport:
    """Pointwise and peak-position comparison of two curves on the same grid.

    ``compare_below`` defaults to half the lower barrier height when the
    curves carry a spec.
    """
    ea, eb = curve_a.energies, curve_b.energies
    if len(ea) != len(eb) or not np.array_equal(ea, eb):
        raise ValueError("curves must share an identical energy grid")
    spec = curve_a.spec or curve_b.spec
    v_low = None
    if spec is not None:
        heights = [v for v in (spec.v1, spec.v2) if v > 0]
        v_low = min(heights) if heights else None
    if compare_below is None:
        compare_below = 0.5 * v_low if v_low else math.inf

    ta, tb = curve_a.transmission, curve_b.transmission
    ok = np.isfinite(ta) & np.isfinite(tb) & (ta > 0) & (tb > 0)
    ratio = np.where(ok, tb / np.where(ok, ta, 1.0), np.nan)
    window = ok & (ea < compare_below)
    logs = np.abs(np.log10(ratio[window])) if np.any(window) else np.array([np.nan])

    pa = find_resonances(curve_a, prominence)
    pb = find_resonances(curve_b, prominence)
    offsets = []
    if pb:
        eb_peaks = np.array([p.e_peak for p in pb])
        for p in pa:
            j = int(np.argmin(np.abs(eb_peaks - p.e_peak)))
            offsets.append((p.e_peak, float(eb_peaks[j] - p.e_peak)))

    invalid_from = None
    if "wkb" in (curve_a.engine, curve_b.engine) and v_low is not None and spec is not None and not spec.is_single:
        invalid_from = v_low
    flagged = sum(1 for c in (curve_a, curve_b) for f in c.flags if f)
    return ComparisonReport(
        curve_a.engine, curve_b.engine, len(ea),
        float(np.nanmin(ratio)) if np.any(ok) else math.nan,
        float(np.nanmax(ratio)) if np.any(ok) else math.nan,
        float(compare_below), float(np.nanmax(logs)), float(np.nanmedian(logs)),
        offsets, invalid_from, flagged,
    )
