"""Physical constants in the eV / nm / fs unit system used throughout."""

from dataclasses import dataclass

from scipy import constants as _si


@dataclass(frozen=True)
class PhysicalConstants:
    hbar2_over_2me: float  # eV nm^2
    hbar: float  # eV fs

    def kinetic_scale(self, mass_factor: float) -> float:
        """hbar^2 / (2 m*) in eV nm^2 for a carrier of mass ``mass_factor * m_e``."""
        if mass_factor <= 0:
            raise ValueError(f"mass_factor must be positive, got {mass_factor}")
        return self.hbar2_over_2me / mass_factor


def _codata() -> PhysicalConstants:
    hbar2_over_2me = _si.hbar**2 / (2.0 * _si.m_e) / _si.e * 1e18
    hbar = _si.hbar / _si.e * 1e15
    return PhysicalConstants(hbar2_over_2me=hbar2_over_2me, hbar=hbar)


CONSTANTS = _codata()

HBAR = CONSTANTS.hbar
HBAR2_OVER_2ME = CONSTANTS.hbar2_over_2me
KB_EV = _si.k / _si.e  # eV / K
