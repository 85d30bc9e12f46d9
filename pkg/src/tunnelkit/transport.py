"""Band offsets and Tsu-Esaki current density through a double-barrier device.

With parabolic bands and the transverse momentum decoupled from the
longitudinal motion, the double integral over (k_l, k_t) reduces to

    J = q m* kT / (2 pi^2 hbar^3) * int dE T(E) ln[(1 + e^{(EF - E)/kT}) / (1 + e^{(EF - E - qV)/kT})]

which is what :func:`tsu_esaki_current` evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import constants as si

from .constants import KB_EV
from .numeric import SolverOptions
from .potentials import DoubleBarrierSpec, Potential, make_potential
from .spectrum import ENGINES, transmission_function
from .wkb import simpson

TAIL_KT = 20.0
DEFAULT_POINTS = 4001
DEFAULT_RTOL = 1e-3


@dataclass(frozen=True)
class MaterialPair:
    chi1: float  # eV, electron affinity
    chi2: float
    eg1: float  # eV, band gap
    eg2: float

    def __post_init__(self):
        if not (self.eg1 > 0 and self.eg2 > 0):
            raise ValueError("band gaps must be positive")


def band_offsets(m: MaterialPair) -> tuple[float, float]:
    """Conduction and valence band steps (dEc, dEv) in eV."""
    dec = m.chi1 - m.chi2
    return dec, m.eg2 - m.eg1 - dec


@dataclass(frozen=True)
class DeviceConfig:
    """Electrode and transport settings.

    ``well_drop_fraction`` is the share of the applied bias that lowers the
    device's transmission spectrum relative to the emitter, T_bias(E) =
    T_0(E + eta q V).  At the default 0 the bias acts only through the
    collector Fermi level.
    """

    fermi_level: float  # eV above the emitter band edge
    temperature: float  # K
    mass_factor: float = 1.0
    engine: str = "numeric"
    well_drop_fraction: float = 0.0
    n_points: int = DEFAULT_POINTS
    rtol: float = DEFAULT_RTOL

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not self.mass_factor > 0:
            raise ValueError("mass_factor must be positive")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if not 0.0 <= self.well_drop_fraction <= 1.0:
            raise ValueError("well_drop_fraction must lie in [0, 1]")
        if self.n_points < 5 or self.n_points % 2 == 0:
            raise ValueError("n_points must be odd and >= 5")

    @property
    def kt(self) -> float:
        return KB_EV * self.temperature


class CurrentPoint(NamedTuple):
    bias: float  # V
    current: float  # A / m^2
    flag: str = ""
    error_estimate: float = 0.0  # A / m^2


def supply_prefactor(mass_factor: float, temperature: float) -> float:
    """q m* kT / (2 pi^2 hbar^3) times q (so the energy integral can run in eV), in A/m^2 per eV."""
    m = mass_factor * si.m_e
    return si.e * m * si.k * temperature / (2.0 * math.pi**2 * si.hbar**3) * si.e


def supply_log(energy, fermi_level: float, kt: float, bias: float):
    """ln[(1 + e^{(EF - E)/kT}) / (1 + e^{(EF - E - qV)/kT})]; identically zero at zero bias."""
    x = (fermi_level - np.asarray(energy, dtype=float)) / kt
    return np.logaddexp(0.0, x) - np.logaddexp(0.0, x - bias / kt)


def integration_limit(dev: DeviceConfig, bias: float) -> float:
    return dev.fermi_level + TAIL_KT * dev.kt + bias


def _bind(dev: DeviceConfig, spec, solver):
    if callable(spec) and not isinstance(spec, (Potential, DoubleBarrierSpec)):
        return spec
    pot = make_potential(spec) if isinstance(spec, DoubleBarrierSpec) else spec
    if pot.mass_factor != dev.mass_factor:
        raise ValueError(f"device mass factor {dev.mass_factor} differs from potential's {pot.mass_factor}")
    return transmission_function(pot, dev.engine, solver)


def tsu_esaki_current(dev: DeviceConfig, spec: DoubleBarrierSpec | Potential | Callable,
                      bias: float, solver: SolverOptions | None = None) -> CurrentPoint:
    """Current density at one bias, by composite Simpson over [0, EF + 20 kT + bias].

    ``spec`` may also be a vectorised ``energies -> transmission`` callable.
    The error estimate compares against the same rule on every other node;
    a point is flagged when it, or the integrand left at the upper limit,
    exceeds ``dev.rtol`` of the result.
    """
    if bias < 0:
        raise ValueError("bias must be non-negative")
    if bias == 0:
        return CurrentPoint(0.0, 0.0)
    trans = _bind(dev, spec, solver)
    e_hi = integration_limit(dev, bias)
    e = np.linspace(0.0, e_hi, dev.n_points)
    h = e[1] - e[0]
    e_eval = e.copy()
    e_eval[0] = 1e-6 * h  # the band edge itself has k = 0
    t = np.asarray(trans(e_eval + dev.well_drop_fraction * bias), dtype=float)
    if not np.all(np.isfinite(t)):
        bad = e_eval[~np.isfinite(t)][0]
        raise ArithmeticError(f"transmission engine failed at E = {bad:.6g} eV")
    g = t * supply_log(e, dev.fermi_level, dev.kt, bias)
    pre = supply_prefactor(dev.mass_factor, dev.temperature)
    fine = simpson(g, h)
    coarse = simpson(g[::2], 2.0 * h) if (dev.n_points - 1) % 4 == 0 else fine
    j = pre * fine
    err = pre * abs(fine - coarse) / 15.0
    tail = pre * g[-1] * dev.kt
    flag = ""
    scale = abs(j) if j else 1.0
    if err > dev.rtol * scale:
        flag = f"quadrature_error={err / scale:.2e}"
    elif abs(tail) > dev.rtol * scale:
        flag = f"tail={abs(tail) / scale:.2e}"
    return CurrentPoint(float(bias), float(j), flag, float(err))


def iv_curve(dev: DeviceConfig, spec, biases: Sequence[float],
             solver: SolverOptions | None = None) -> list[CurrentPoint]:
    """Current density over a non-decreasing list of biases; failures are flagged per point."""
    biases = [float(b) for b in biases]
    if any(b2 < b1 for b1, b2 in zip(biases, biases[1:])):
        raise ValueError("biases must be non-decreasing")
    trans = _bind(dev, spec, solver)
    out = []
    for b in biases:
        try:
            out.append(tsu_esaki_current(dev, trans, b))
        except ArithmeticError as exc:
            out.append(CurrentPoint(b, math.nan, f"failed: {exc}"))
    return out


def local_maxima(points: Sequence[CurrentPoint]) -> list[int]:
    """Indices of interior points whose current exceeds both neighbours (onset of negative differential resistance)."""
    j = [p.current for p in points]
    return [i for i in range(1, len(j) - 1) if j[i] > j[i - 1] and j[i] > j[i + 1]]
