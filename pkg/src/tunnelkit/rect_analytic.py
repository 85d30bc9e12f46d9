"""Exact transmission through rectangular single and double barriers.

Wavenumbers are evaluated with complex square roots (branch with
non-negative imaginary part), so one expression covers energies below and
above each barrier.  The transmission amplitude ``t`` is defined by
``psi -> t exp(i k x)`` to the right of the structure when the incident wave
is ``exp(i k x)`` and the first barrier starts at ``x = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import CONSTANTS
from .potentials import DoubleBarrierSpec, Rectangular

EPS_DEGENERATE = 1e-9  # eV


class DegenerateEnergyError(ValueError):
    """Energy coincides with a barrier height, where the closed form is 0/0."""


@dataclass(frozen=True)
class RectDoubleParams:
    v1: float
    v2: float
    w1: float
    w2: float
    a: float
    mass_factor: float = 1.0

    def __post_init__(self):
        if min(self.w1, self.w2, self.a) < 0:
            raise ValueError("widths and separation must be non-negative")
        if not self.mass_factor > 0:
            raise ValueError("mass_factor must be positive")

    @property
    def g(self) -> float:
        return self.w1 + self.w2

    @property
    def b(self) -> float:
        return self.w1 + self.a + self.w2

    @classmethod
    def from_spec(cls, spec: DoubleBarrierSpec) -> "RectDoubleParams":
        if not spec.is_rectangular:
            raise ValueError("closed-form engine needs two rectangular barriers")
        w1 = spec.shape1.width if spec.v1 > 0 else 0.0
        w2 = spec.shape2.width if spec.v2 > 0 else 0.0
        # a zero-height barrier still occupies space for the gap convention
        a = spec.a
        if spec.v1 == 0:
            a += spec.shape1.width
        if spec.v2 == 0:
            w2 = 0.0
        return cls(spec.v1, spec.v2, w1, w2, a, spec.mass_factor)


class WaveNumbers(NamedTuple):
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray


def _k(energy_diff, mass_factor):
    c = CONSTANTS.kinetic_scale(mass_factor)
    return np.sqrt(np.asarray(energy_diff, dtype=complex) / c)


def wave_numbers(p: RectDoubleParams, energy) -> WaveNumbers:
    """k1 outside, k2 / k3 inside the barriers (decay constants below the top)."""
    e = np.asarray(energy, dtype=float)
    return WaveNumbers(_k(e, p.mass_factor).real, _k(p.v1 - e, p.mass_factor), _k(p.v2 - e, p.mass_factor))


def _check_energy(energy, heights_widths):
    e = np.asarray(energy, dtype=float)
    if np.any(e <= 0):
        raise ValueError("energy must be positive")
    for v, w in heights_widths:
        if w > 0 and np.any(np.abs(e - v) <= EPS_DEGENERATE):
            raise DegenerateEnergyError(f"energy within {EPS_DEGENERATE} eV of barrier height {v}")
    return e


def _plus_minus(k, q):
    return k / q + q / k, k / q - q / k


def rect_double_amplitude(p: RectDoubleParams, energy):
    """Complex transmission amplitude t(E) of the rectangular double barrier.

    Uses the four-barrier-matrix product written in closed form::

        4/t = exp(i k1 g) [ (2 cosh k2 w1 - i k_{1-2} sinh k2 w1)
                            (2 cosh k3 w2 - i k_{1-3} sinh k3 w2)
                          + k_{1+2} k_{1+3} sinh(k2 w1) sinh(k3 w2) exp(2 i k1 a) ]

    with ``k_{i+-j} = k_i/k_j +- k_j/k_i``.
    """
    e = _check_energy(energy, [(p.v1, p.w1), (p.v2, p.w2)])
    k1, k2, k3 = wave_numbers(p, e)
    k1 = k1.astype(complex)
    p12, m12 = _plus_minus(k1, k2)
    p13, m13 = _plus_minus(k1, k3)
    s1, c1 = np.sinh(k2 * p.w1), np.cosh(k2 * p.w1)
    s2, c2 = np.sinh(k3 * p.w2), np.cosh(k3 * p.w2)
    inv = (2 * c1 - 1j * m12 * s1) * (2 * c2 - 1j * m13 * s2) + p12 * p13 * s1 * s2 * np.exp(2j * k1 * p.a)
    t = 4.0 * np.exp(-1j * k1 * p.g) / inv
    return t[()] if np.ndim(t) == 0 else t


def rect_double_transmission(p: RectDoubleParams, energy):
    t = rect_double_amplitude(p, energy)
    return np.abs(t) ** 2


class SingleBarrier(NamedTuple):
    transmission: float
    alpha: float  # rad, phase of t * exp(i k L)
    reflection: float


def rect_single(v0: float, length: float, energy, mass_factor: float = 1.0) -> SingleBarrier:
    """Transmission, transmitted phase shift and reflection of one rectangular barrier.

    ``alpha`` is the phase of ``t exp(i k L)``; below the top it equals
    ``-atan((kappa^2 - k^2) tanh(kappa L) / (2 kappa k))``.
    """
    e = _check_energy(energy, [(v0, length)])
    k = _k(e, mass_factor)
    kappa = _k(v0 - e, mass_factor)
    if length == 0:
        ones = np.ones_like(e)
        return SingleBarrier(ones[()], (0 * ones)[()], (0 * ones)[()])
    z = np.cosh(kappa * length) + 1j * (kappa**2 - k**2) / (2 * kappa * k) * np.sinh(kappa * length)
    trans = 1.0 / np.abs(z) ** 2
    alpha = -np.angle(z)
    return SingleBarrier(trans[()], alpha[()], (1.0 - trans)[()])


def rect_single_transmission_closed(v0: float, length: float, energy, mass_factor: float = 1.0):
    """[1 + V0^2 sinh^2(kappa L) / (4 E (V0 - E))]^-1, continued above the top."""
    e = _check_energy(energy, [(v0, length)])
    kappa = _k(v0 - e, mass_factor)
    val = 1.0 / (1.0 + v0**2 * np.sinh(kappa * length) ** 2 / (4 * e * (v0 - e)))
    return val.real[()]


def piecewise_constant_amplitude(edges, heights, energy: float, mass_factor: float = 1.0) -> complex:
    """Transmission amplitude through a piecewise-constant potential by interface matching.

    ``edges`` are the N interface positions (ascending) and ``heights`` the
    N + 1 region potentials, the outer two being zero.  Inner regions use
    local plane-wave origins at their left edge; the outer regions use the
    global origin, matching the convention of :func:`rect_double_amplitude`.
    """
    edges = [float(x) for x in edges]
    heights = [float(v) for v in heights]
    if len(heights) != len(edges) + 1:
        raise ValueError("need one more region than interfaces")
    if heights[0] != 0 or heights[-1] != 0:
        raise ValueError("outer regions must have zero potential")
    qs = [complex(_k(energy - v, mass_factor)) for v in heights]
    n = len(heights)
    origins = [0.0] + edges[:-1] + [0.0]
    origins[0] = 0.0
    origins[-1] = 0.0

    def basis(j, x):
        q, d = qs[j], x - origins[j]
        ep, em = np.exp(1j * q * d), np.exp(-1j * q * d)
        return np.array([[ep, em], [1j * q * ep, -1j * q * em]])

    coef = np.array([1.0 + 0j, 0.0 + 0j])  # transmitted wave, global origin
    for j in range(n - 1, 0, -1):
        x = edges[j - 1]
        coef = np.linalg.solve(basis(j - 1, x), basis(j, x) @ coef)
    return complex(1.0 / coef[0])
