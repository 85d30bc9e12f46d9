"""Quantum transmission through one-dimensional single and double barriers.

Three engines cross-check each other: a closed form for rectangular
barriers, direct RK4 integration of the Schrodinger equation, and the WKB
approximation.  On top of them sit resonance detection, group delays and a
Tsu-Esaki current model.
"""

from .constants import CONSTANTS, HBAR, HBAR2_OVER_2ME
from .delay import (GroupDelay, SingleBarrierRefs, delay_curve, group_delay, hartman_limit,
                    phase_time_numeric, phase_time_rect_double, phase_time_rect_single, phase_time_wkb,
                    single_barrier_refs)
from .numeric import (DeepTunnelingOverflow, SolverOptions, TransmissionPoint, scattering_amplitudes,
                      transmission_numeric, transmission_numeric_many)
from .potentials import (DoubleBarrierSpec, Gaussian, Lorentzian, Potential, Rectangular, free_space,
                         gaussian_double, lorentzian_double, make_potential, rectangular_double)
from .rect_analytic import RectDoubleParams, rect_double_amplitude, rect_double_transmission, rect_single
from .spectrum import (ComparisonReport, EnergyGrid, ResonancePeak, TransmissionCurve, compare,
                       find_resonances, refine_resonances, sweep, transmission_function, wkb_resonance_seeds)
from .transport import DeviceConfig, MaterialPair, band_offsets, iv_curve, tsu_esaki_current
from .wkb import (TurningPointError, WkbFactors, transmission_wkb_many, turning_points, wkb_factors,
                  wkb_single_transmission, wkb_transmission)

__version__ = "0.1.0"
