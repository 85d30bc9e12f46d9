"""Group delay (phase time) tau = hbar d(phase)/dE for single and double barriers.

All derivatives are central differences of a phase that is unwrapped across
the stencil, so principal-value jumps of +-pi never leak into tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .constants import CONSTANTS
from .numeric import SolverOptions, transmission_numeric_many
from .potentials import DoubleBarrierSpec, Gaussian, Lorentzian, Potential, make_potential
from .rect_analytic import RectDoubleParams, rect_double_amplitude, rect_single
from .wkb import (DEFAULT_SIMPSON, TurningPointError, WkbFactors, _scaled_denominator,
                  turning_points, wkb_factors)

RESONANCE_WINDOW = 0.05  # rad, on the round-trip phase 2 k1 a (mod 2 pi)
DEFAULT_REL_STEP = 1e-4
MIN_REL_STEP = 1e-11
CONVERGENCE_RTOL = 1e-4
PRECOMPUTED_HALVINGS = 8


class PhaseUnwrapError(ArithmeticError):
    """The transmitted amplitude vanished inside the difference stencil."""


@dataclass(frozen=True)
class GroupDelay:
    tau: float  # fs
    energy: float  # eV
    method: str
    classification: str = "off"
    flag: str = ""


class SingleBarrierRefs(NamedTuple):
    r0: float
    t0: float
    v: float  # nm / fs
    kappa: float  # 1 / nm
    length: float  # nm


def _k(energy, mass_factor):
    return math.sqrt(energy / CONSTANTS.kinetic_scale(mass_factor))


def velocity(energy: float, mass_factor: float = 1.0) -> float:
    """Group velocity hbar k / m in nm/fs."""
    return 2.0 * CONSTANTS.kinetic_scale(mass_factor) * _k(energy, mass_factor) / CONSTANTS.hbar


def classify(round_trip_phase: float, window: float = RESONANCE_WINDOW) -> str:
    """'resonance' when the phase is within ``window`` of 2 m pi, 'anti-resonance' near (2m+1) pi."""
    x = math.fmod(round_trip_phase, 2.0 * math.pi)
    if x < 0:
        x += 2.0 * math.pi
    if min(x, 2.0 * math.pi - x) < window:
        return "resonance"
    if abs(x - math.pi) < window:
        return "anti-resonance"
    return "off"


def hartman_limit(energy: float, v: float, mass_factor: float = 1.0) -> float:
    """Opaque-barrier phase time 2m / (hbar k kappa), in fs."""
    if not 0 < energy < v:
        raise ValueError(f"need 0 < E < V, got E = {energy}, V = {v}")
    c = CONSTANTS.kinetic_scale(mass_factor)
    return CONSTANTS.hbar / (c * _k(energy, mass_factor) * _k(v - energy, mass_factor))


def single_barrier_refs(v0: float, length: float, energy: float, mass_factor: float = 1.0,
                        kind: str = "exact") -> SingleBarrierRefs:
    """Single-barrier reflection/transmission used by the resonance delay formulas.

    ``kind="exact"`` uses the closed-form rectangular result;
    ``kind="wkb"`` uses T0 = (1/T + T/4)^-2, R0 = 1 - T0 with T = exp(-kappa L).
    """
    kappa = _k(v0 - energy, mass_factor) if energy < v0 else 0.0
    if kind == "exact":
        s = rect_single(v0, length, energy, mass_factor)
        t0 = float(s.transmission)
    elif kind == "wkb":
        t = math.exp(-kappa * length)
        t0 = (t / (1.0 + t * t / 4.0)) ** 2
    else:
        raise ValueError(f"unknown reference kind {kind!r}")
    return SingleBarrierRefs(1.0 - t0, t0, velocity(energy, mass_factor), kappa, length)


def resonance_delay(refs: SingleBarrierRefs, a: float) -> float:
    """(1 + R0) / T0 * a / v."""
    return (1.0 + refs.r0) / refs.t0 * a / refs.v


def antiresonance_delay(refs: SingleBarrierRefs, a: float) -> float:
    """T0 / (1 + R0) * a / v."""
    return refs.t0 / (1.0 + refs.r0) * a / refs.v


def _stencil(phase_fn, energy, de):
    """Central difference of a complex-valued phase carrier z(E); returns d arg z / dE."""
    zm, z0, zp = phase_fn(energy - de), phase_fn(energy), phase_fn(energy + de)
    if zm == 0 or z0 == 0 or zp == 0:
        raise PhaseUnwrapError(f"amplitude vanished near E = {energy}")
    return (np.angle(z0 / zm) + np.angle(zp / z0)) / (2.0 * de), max(abs(np.angle(z0 / zm)), abs(np.angle(zp / z0)))


def _one_step(phase_fn, energy, de):
    """Slope at one stencil width, retrying once at dE/10 if the amplitude vanishes."""
    try:
        return _stencil(phase_fn, energy, de)
    except PhaseUnwrapError:
        return _stencil(phase_fn, energy, de / 10.0)


def _derivative(phase_fn, energy, de, method, classification, rtol=CONVERGENCE_RTOL):
    """hbar d(arg z)/dE by central differences, halving dE until two widths agree to ``rtol``.

    Narrow resonances make the phase vary on scales far below the default
    stencil; halving stops at MIN_REL_STEP * E and the result is then flagged.
    """
    if not de > 0:
        raise ValueError("dE must be positive")
    if energy - de <= 0:
        raise ValueError("stencil reaches non-positive energy")
    try:
        prev, jump = _one_step(phase_fn, energy, de)
        flag = "not_converged"
        while de / 2.0 >= MIN_REL_STEP * energy:
            de /= 2.0
            slope, jump = _one_step(phase_fn, energy, de)
            done = abs(slope - prev) <= rtol * abs(slope)
            prev = slope
            if done:
                flag = ""
                break
    except PhaseUnwrapError as exc:
        return GroupDelay(math.nan, energy, method, classification, f"unwrap_failed: {exc}")
    if jump > 0.5 * math.pi:
        flag = (flag + ";" if flag else "") + f"phase_jump={jump:.3f}"
    return GroupDelay(CONSTANTS.hbar * float(prev), energy, method, classification, flag)


def phase_time_rect_double(p: RectDoubleParams, energy: float, de: float | None = None) -> GroupDelay:
    """hbar d/dE arg[t exp(i k1 b)] for the rectangular double barrier."""
    de = de if de is not None else DEFAULT_REL_STEP * energy

    def carrier(e):
        k = _k(e, p.mass_factor)
        return complex(rect_double_amplitude(p, e) * np.exp(1j * k * p.b))

    cls = classify(2.0 * _k(energy, p.mass_factor) * p.a)
    return _derivative(carrier, energy, de, "analytic", cls)


def phase_time_rect_single(v0: float, length: float, energy: float, de: float | None = None,
                           mass_factor: float = 1.0) -> GroupDelay:
    """hbar d alpha / dE for one rectangular barrier of height v0 and width ``length``."""
    de = de if de is not None else DEFAULT_REL_STEP * energy
    if length == 0:
        return GroupDelay(0.0, energy, "analytic")

    def carrier(e):
        return complex(np.exp(1j * float(rect_single(v0, length, e, mass_factor).alpha)))

    return _derivative(carrier, energy, de, "analytic", "off")


def wkb_phase_carrier(f: WkbFactors, form: str = "atan") -> complex:
    """Complex number whose argument is the WKB transmitted phase.

    ``form="atan"``: arg(T1^2 cos T2 + 2i sin T2), a continuous branch of
    atan(2 tan T2 / T1^2).  ``form="amplitude"``: the argument of the
    inverse WKB amplitude denominator, using both T1 and T3.
    """
    if form == "atan":
        return complex(f.t1**2 * math.cos(f.t2), 2.0 * math.sin(f.t2))
    if form == "amplitude":
        return 1.0 / _scaled_denominator(f)
    raise ValueError(f"unknown WKB phase form {form!r}")


def phase_time_wkb(p: Potential | DoubleBarrierSpec, energy: float, de: float | None = None,
                   mode: str = "auto", n_simpson: int = DEFAULT_SIMPSON, form: str = "atan") -> GroupDelay:
    """WKB group delay hbar d phi / dE with phi = atan(2 tan T2 / T1^2).

    Turning points and factors are recomputed at each stencil energy.
    """
    pot = make_potential(p) if isinstance(p, DoubleBarrierSpec) else p
    de = de if de is not None else DEFAULT_REL_STEP * energy

    def factors(e):
        return wkb_factors(pot, e, turning_points(pot, e, mode), n_simpson)

    try:
        f0 = factors(energy)

        def carrier(e):
            return wkb_phase_carrier(f0 if e == energy else factors(e), form)

        return _derivative(carrier, energy, de, "wkb", classify(2.0 * f0.t2))
    except TurningPointError as exc:
        return GroupDelay(math.nan, energy, "wkb", "off", f"wkb_invalid: {exc}")


def phase_time_numeric(p: Potential | DoubleBarrierSpec, energy: float, de: float | None = None,
                       solver: SolverOptions | None = None) -> GroupDelay:
    """hbar d/dE of the numeric engine's transmitted phase (incident at x_min, outgoing at x_max)."""
    pot = make_potential(p) if isinstance(p, DoubleBarrierSpec) else p
    de = de if de is not None else DEFAULT_REL_STEP * energy
    z: dict[float, complex] = {}

    def fill(energies):
        for pt in transmission_numeric_many(pot, energies, solver):
            z[pt.energy] = complex(np.exp(1j * pt.phase))

    # the whole halving ladder in one vectorised pass; stragglers on demand
    steps = de / 2.0 ** np.arange(PRECOMPUTED_HALVINGS)
    fill(np.concatenate([[energy], energy - steps, energy + steps]))

    def carrier(e):
        if e not in z:
            fill([e])
        return z[e]

    cls = "off"
    spec = pot.spec
    if spec is not None and spec.is_rectangular:
        cls = classify(2.0 * _k(energy, spec.mass_factor) * spec.a)
    return _derivative(carrier, energy, de, "numeric", cls)


DELAY_METHODS = ("analytic", "wkb", "numeric")
AXES = ("energy", "sigma", "a")


def _with_width(spec: DoubleBarrierSpec, width: float) -> DoubleBarrierSpec:
    def resize(shape):
        if isinstance(shape, Gaussian):
            return Gaussian(width)
        if isinstance(shape, Lorentzian):
            return Lorentzian(width)
        return type(shape)(width)
    return replace(spec, shape1=resize(spec.shape1), shape2=resize(spec.shape2))


def group_delay(spec: DoubleBarrierSpec, energy: float, method: str = "wkb", de: float | None = None,
                mode: str = "auto", n_simpson: int = DEFAULT_SIMPSON, solver: SolverOptions | None = None,
                form: str = "atan") -> GroupDelay:
    if method == "analytic":
        return phase_time_rect_double(RectDoubleParams.from_spec(spec), energy, de)
    if method == "wkb":
        return phase_time_wkb(spec, energy, de, mode, n_simpson, form)
    if method == "numeric":
        return phase_time_numeric(spec, energy, de, solver)
    raise ValueError(f"unknown delay method {method!r}; expected one of {DELAY_METHODS}")


def delay_curve(spec: DoubleBarrierSpec, axis: str, values: Sequence[float], energy: float | None = None,
                method: str = "wkb", **kwargs) -> list[tuple[float, GroupDelay]]:
    """tau_g along one axis: incident energy, barrier width (both barriers) or separation ``a``.

    Values are processed in the given order; each point is independent.
    """
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}")
    out = []
    for x in values:
        x = float(x)
        if axis == "energy":
            s, e = spec, x
        elif axis == "sigma":
            s, e = _with_width(spec, x), energy
        else:
            s, e = replace(spec, a=x), energy
        if e is None:
            raise ValueError("a fixed energy is required for width and separation sweeps")
        try:
            out.append((x, group_delay(s, e, method, **kwargs)))
        except (ValueError, ArithmeticError) as exc:
            out.append((x, GroupDelay(math.nan, e, method, "off", f"failed: {exc}")))
    return out
