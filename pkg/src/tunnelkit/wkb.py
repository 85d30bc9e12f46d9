"""WKB transmission for single and double barriers.

Action integrals run between classical turning points, where the integrand
vanishes like a square root.  They are evaluated with composite Simpson
after the substitution ``x = m - r cos(theta)``, which makes the integrand
smooth in ``theta`` and restores fourth-order convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .constants import CONSTANTS
from .numeric import TransmissionPoint
from .potentials import DoubleBarrierSpec, Gaussian, Potential, make_potential

DEFAULT_SIMPSON = 512
SCAN_DIVISIONS = 4096


class TurningPointError(ValueError):
    """The required number of classical turning points does not exist."""


class AssumptionViolation(TurningPointError):
    """Closed-form Gaussian turning points requested outside a - 3 s1 - 3 s2 > 0."""


@dataclass(frozen=True)
class TurningPoints:
    x1: float
    x2: float
    x3: float
    x4: float

    def __post_init__(self):
        if not (self.x1 < self.x2 <= self.x3 < self.x4):
            raise TurningPointError(f"turning points out of order: {self}")


@dataclass(frozen=True)
class WkbFactors:
    """Barrier transmissions ``t1`` (right), ``t3`` (left) and well phase ``t2`` (rad)."""

    t1: float
    t2: float
    t3: float


@dataclass(frozen=True)
class WkbCoefficients:
    c3: complex
    c4: complex


def _as_potential(p) -> Potential:
    return make_potential(p) if isinstance(p, DoubleBarrierSpec) else p


def _both_gaussian(spec: DoubleBarrierSpec) -> bool:
    return isinstance(spec.shape1, Gaussian) and isinstance(spec.shape2, Gaussian)


def gaussian_turning_points(spec: DoubleBarrierSpec, energy: float) -> TurningPoints:
    """Closed-form turning points, each barrier ignoring its partner's tail."""
    if not _both_gaussian(spec):
        raise TurningPointError("closed-form turning points need two Gaussian barriers")
    _check_below(spec, energy)
    s1, s2 = spec.shape1.sigma, spec.shape2.sigma
    if spec.a - 3 * s1 - 3 * s2 <= 0:
        raise AssumptionViolation(f"a - 3 sigma1 - 3 sigma2 = {spec.a - 3 * s1 - 3 * s2:.4g} <= 0")
    c1, c2 = spec.offsets()
    h1 = s1 * math.sqrt(2.0 * math.log(spec.v1 / energy))
    h2 = s2 * math.sqrt(2.0 * math.log(spec.v2 / energy))
    return TurningPoints(c1 - h1, c1 + h1, c2 - h2, c2 + h2)


def _check_below(spec: DoubleBarrierSpec, energy: float):
    if energy <= 0:
        raise ValueError("energy must be positive")
    if spec.is_single:
        raise TurningPointError("single barrier: only two turning points")
    if energy >= min(spec.v1, spec.v2):
        raise TurningPointError(f"E = {energy} >= min(V1, V2) = {min(spec.v1, spec.v2)}: no four turning points")


def scan_turning_points(p: Potential, energy: float, divisions: int = SCAN_DIVISIONS) -> list[float]:
    """All roots of V(x) = E on the support, bracketed by a uniform scan and refined by Brent."""
    if p.x_max <= p.x_min:
        return []
    step = (p.x_max - p.x_min) / divisions
    x = np.linspace(p.x_min - step, p.x_max + step, divisions + 3)
    f = p(x) - energy
    roots = []
    for i in np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]:
        if f[i] == 0.0:
            roots.append(float(x[i]))
            continue
        roots.append(brentq(lambda z: p(z) - energy, x[i], x[i + 1], xtol=1e-13, rtol=1e-14))
    return roots


def turning_points(p, energy: float, mode: str = "auto") -> TurningPoints:
    """Four turning points of a double barrier at ``energy``.

    ``mode`` is ``"gaussian-analytic"`` (closed form), ``"numeric"`` (scan and
    bracket the full potential) or ``"auto"`` (closed form when its
    assumptions hold, numeric otherwise).
    """
    spec = p if isinstance(p, DoubleBarrierSpec) else getattr(p, "spec", None)
    if mode in ("gaussian-analytic", "analytic"):
        if spec is None:
            raise TurningPointError("closed-form turning points need a barrier spec")
        return gaussian_turning_points(spec, energy)
    if mode == "auto" and spec is not None and _both_gaussian(spec):
        try:
            return gaussian_turning_points(spec, energy)
        except AssumptionViolation:
            pass
    elif mode not in ("numeric", "auto"):
        raise ValueError(f"unknown turning point mode {mode!r}")
    if spec is not None:
        _check_below(spec, energy)
    roots = scan_turning_points(_as_potential(p), energy)
    if len(roots) != 4:
        raise TurningPointError(f"found {len(roots)} turning points at E = {energy}, need 4")
    return TurningPoints(*roots)


def simpson(y: np.ndarray, h: float) -> float:
    """Composite Simpson rule on an odd number of equally spaced samples."""
    n = len(y) - 1
    if n < 2 or n % 2:
        raise ValueError("Simpson needs an even number (>= 2) of panels")
    return h / 3.0 * float(y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def action_integral(p: Potential, energy: float, xa: float, xb: float,
                    n_simpson: int = DEFAULT_SIMPSON, forbidden: bool = True,
                    tol: float = 1e-3) -> float:
    """Dimensionless action  int_xa^xb sqrt(2m |V - E|) / hbar dx.

    ``forbidden`` selects the sign of ``V - E`` expected inside the interval;
    samples of the wrong sign larger than ``tol * E`` mean the turning points
    do not match the potential.
    """
    if xb <= xa:
        return 0.0
    c = CONSTANTS.kinetic_scale(p.mass_factor)
    theta = np.linspace(0.0, math.pi, n_simpson + 1)
    mid, half = 0.5 * (xa + xb), 0.5 * (xb - xa)
    x = mid - half * np.cos(theta)
    d = (p(x) - energy) if forbidden else (energy - p(x))
    if np.any(d[1:-1] < -tol * energy):
        raise TurningPointError(f"integrand radicand {d.min():.3g} eV of wrong sign on [{xa}, {xb}]")
    g = np.sqrt(np.clip(d, 0.0, None) / c) * half * np.sin(theta)
    return simpson(g, math.pi / n_simpson)


def wkb_factors(p, energy: float, tp: TurningPoints, n_simpson: int = DEFAULT_SIMPSON) -> WkbFactors:
    pot = _as_potential(p)
    s3 = action_integral(pot, energy, tp.x1, tp.x2, n_simpson, forbidden=True)
    t2 = action_integral(pot, energy, tp.x2, tp.x3, n_simpson, forbidden=False)
    s1 = action_integral(pot, energy, tp.x3, tp.x4, n_simpson, forbidden=True)
    return WkbFactors(math.exp(-s1), t2, math.exp(-s3))


def wkb_coefficients(f: WkbFactors) -> WkbCoefficients:
    c3 = (1.0 / f.t1 - f.t1 / 4.0) * np.exp(1j * f.t2)
    c4 = (f.t1 / 4.0 + 1.0 / f.t1) * np.exp(-1j * f.t2)
    return WkbCoefficients(complex(c3), complex(c4))


def _scaled_denominator(f: WkbFactors) -> complex:
    """T1 T3 [T3 (C4 - C3) / 4 + (C3 + C4) / T3], free of 1/T overflow."""
    u3 = (1.0 - f.t1**2 / 4.0) * np.exp(1j * f.t2)  # T1 C3
    u4 = (1.0 + f.t1**2 / 4.0) * np.exp(-1j * f.t2)  # T1 C4
    return complex(f.t3**2 * (u4 - u3) / 4.0 + (u3 + u4))


def wkb_transmission(f: WkbFactors) -> float:
    """|T3 (C4 - C3)/4 + (C3 + C4)/T3|^-2, assembled in scaled form."""
    m = _scaled_denominator(f)
    return (f.t1 * f.t3) ** 2 / abs(m) ** 2


def single_turning_points(p, energy: float, mode: str = "auto") -> tuple[float, float]:
    spec = p if isinstance(p, DoubleBarrierSpec) else getattr(p, "spec", None)
    if energy <= 0:
        raise ValueError("energy must be positive")
    if spec is not None and mode != "numeric" and spec.is_single:
        v, shape = (spec.v1, spec.shape1) if spec.v1 > 0 else (spec.v2, spec.shape2)
        if v == 0 or energy >= v:
            raise TurningPointError(f"E = {energy} is not below the barrier top")
        if isinstance(shape, Gaussian):
            ref = spec.offsets()[0 if spec.v1 > 0 else 1]
            h = shape.sigma * math.sqrt(2.0 * math.log(v / energy))
            return ref - h, ref + h
    roots = scan_turning_points(_as_potential(p), energy)
    if len(roots) != 2:
        raise TurningPointError(f"found {len(roots)} turning points at E = {energy}, need 2")
    return roots[0], roots[1]


def wkb_single_transmission(p, energy: float, n_simpson: int = DEFAULT_SIMPSON,
                            small_t: bool = False, mode: str = "auto") -> float:
    """(1/T + T/4)^-2 with T = exp(-action); ``small_t`` returns T^2 instead."""
    pot = _as_potential(p)
    xa, xb = single_turning_points(p, energy, mode)
    t = math.exp(-action_integral(pot, energy, xa, xb, n_simpson, forbidden=True))
    if small_t:
        return t * t
    return (t / (1.0 + t * t / 4.0)) ** 2


def transmission_wkb_many(p, energies: Sequence[float], mode: str = "auto",
                          n_simpson: int = DEFAULT_SIMPSON) -> list[TransmissionPoint]:
    """WKB transmission per energy; points outside the method's validity are flagged, not raised."""
    pot = _as_potential(p)
    spec = pot.spec
    single = spec is not None and spec.is_single
    out = []
    for e in energies:
        e = float(e)
        try:
            if single:
                t = wkb_single_transmission(pot, e, n_simpson, mode=mode)
            else:
                t = wkb_transmission(wkb_factors(pot, e, turning_points(pot, e, mode), n_simpson))
            out.append(TransmissionPoint(e, t, math.nan, "wkb"))
        except TurningPointError as exc:
            out.append(TransmissionPoint(e, math.nan, math.nan, "wkb", f"wkb_invalid: {exc}"))
    return out
