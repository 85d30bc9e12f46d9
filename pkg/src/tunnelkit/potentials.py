"""Barrier shape families and double-barrier potentials.

A double barrier is the pointwise sum of two single barriers, the second one
shifted along x.  Placement conventions:

* smooth shapes (Gaussian, Lorentzian) are centred on their reference point;
* a rectangular barrier occupies the half-open interval ``[ref, ref + width)``;
* the first barrier's reference point is ``x0`` and the second one's is
  ``x0 + a``, plus the first width when the first barrier is rectangular.

So for two rectangles ``a`` is the gap between the inner edges (the well
width), while for Gaussians it is the centre-to-centre distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

DEFAULT_EPS_TAIL = 1e-6  # eV


@dataclass(frozen=True)
class Rectangular:
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"rectangular width must be positive, got {self.width}")


@dataclass(frozen=True)
class Gaussian:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"gaussian sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class Lorentzian:
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"lorentzian gamma must be positive, got {self.gamma}")


BarrierShape = Union[Rectangular, Gaussian, Lorentzian]

SHAPES = {"rectangular": Rectangular, "gaussian": Gaussian, "lorentzian": Lorentzian}


def shape_from_name(name: str, width: float) -> BarrierShape:
    try:
        cls = SHAPES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown barrier shape {name!r}; expected one of {sorted(SHAPES)}") from None
    return cls(width)


def shape_width(shape: BarrierShape) -> float:
    if isinstance(shape, Rectangular):
        return shape.width
    if isinstance(shape, Gaussian):
        return shape.sigma
    return shape.gamma


@dataclass(frozen=True)
class DoubleBarrierSpec:
    """Two barriers of heights ``v1``, ``v2`` (eV) separated by ``a`` (nm).

    ``mass_factor`` is the carrier mass in units of the free electron mass.
    Setting either height to zero gives a single barrier.
    """

    v1: float
    v2: float
    shape1: BarrierShape
    shape2: BarrierShape
    a: float
    mass_factor: float = 1.0
    x0: float = 0.0

    def __post_init__(self):
        if self.v1 < 0 or self.v2 < 0:
            raise ValueError("barrier heights must be non-negative")
        if self.a < 0:
            raise ValueError(f"separation must be non-negative, got {self.a}")
        if not self.mass_factor > 0:
            raise ValueError(f"mass_factor must be positive, got {self.mass_factor}")
        for s in (self.shape1, self.shape2):
            if not isinstance(s, (Rectangular, Gaussian, Lorentzian)):
                raise TypeError(f"unsupported barrier shape {s!r}")

    @property
    def is_rectangular(self) -> bool:
        return isinstance(self.shape1, Rectangular) and isinstance(self.shape2, Rectangular)

    @property
    def is_single(self) -> bool:
        return self.v1 == 0 or self.v2 == 0

    def offsets(self) -> tuple[float, float]:
        """Reference points of the two barriers."""
        second = self.x0 + self.a
        if isinstance(self.shape1, Rectangular):
            second += self.shape1.width
        return self.x0, second

    def mirrored(self) -> "DoubleBarrierSpec":
        """The spec with the two barriers swapped (left-right reflection)."""
        return DoubleBarrierSpec(self.v2, self.v1, self.shape2, self.shape1, self.a,
                                 self.mass_factor, self.x0)


def _single(x, v, shape, ref):
    if v == 0:
        return np.zeros_like(x)
    if isinstance(shape, Rectangular):
        return np.where((x >= ref) & (x < ref + shape.width), v, 0.0)
    if isinstance(shape, Gaussian):
        return v * np.exp(-((x - ref) ** 2) / (2.0 * shape.sigma**2))
    return v / (1.0 + ((x - ref) / shape.gamma) ** 2)


def _extent(v, shape, ref, eps):
    """Interval outside which this barrier alone stays below ``eps``."""
    if isinstance(shape, Rectangular):
        return ref, ref + shape.width
    if v <= eps:
        return ref, ref
    if isinstance(shape, Gaussian):
        half = shape.sigma * math.sqrt(2.0 * math.log(v / eps))
    else:
        half = shape.gamma * math.sqrt(v / eps - 1.0)
    return ref - half, ref + half


@dataclass(frozen=True)
class Potential:
    """An evaluable potential V(x) (eV, x in nm) plus its tail support.

    ``breakpoints`` lists positions of jump discontinuities; integrators keep
    them on their step grid.
    """

    func: Callable[[np.ndarray], np.ndarray]
    x_min: float
    x_max: float
    v_max: float
    mass_factor: float = 1.0
    spec: DoubleBarrierSpec | None = None
    breakpoints: tuple[float, ...] = field(default=())

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.func(x)
        return float(out) if out.ndim == 0 else out

    @property
    def span(self) -> float:
        return self.x_max - self.x_min

    def with_support(self, eps_tail: float) -> "Potential":
        """Recompute the tail support for a different cutoff (spec-built potentials only)."""
        if self.spec is None:
            return self
        return make_potential(self.spec, eps_tail)

    def mirrored(self) -> "Potential":
        """V'(x) = V(x_min + x_max - x), on the same support."""
        lo, hi = self.x_min, self.x_max
        f = self.func
        bps = tuple(sorted(lo + hi - b for b in self.breakpoints))
        return Potential(lambda x: f(lo + hi - x), lo, hi, self.v_max, self.mass_factor, None, bps)


def make_potential(spec: DoubleBarrierSpec, eps_tail: float = DEFAULT_EPS_TAIL) -> Potential:
    """Build the summed double-barrier potential for ``spec``.

    The support ``[x_min, x_max]`` is chosen so that each barrier contributes
    less than ``eps_tail / 2`` outside it; the summed tail is then below
    ``eps_tail``.
    """
    if not eps_tail > 0:
        raise ValueError(f"eps_tail must be positive, got {eps_tail}")
    r1, r2 = spec.offsets()
    parts = [(spec.v1, spec.shape1, r1), (spec.v2, spec.shape2, r2)]
    parts = [p for p in parts if p[0] > 0]

    def func(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for v, shape, ref in parts:
            out = out + _single(x, v, shape, ref)
        return out

    if not parts:
        return Potential(func, 0.0, 0.0, 0.0, spec.mass_factor, spec, ())

    extents = [_extent(v, s, r, eps_tail / 2.0) for v, s, r in parts]
    x_min = min(e[0] for e in extents)
    x_max = max(e[1] for e in extents)
    breaks = sorted({e for (v, s, r), ext in zip(parts, extents)
                     if isinstance(s, Rectangular) for e in ext})

    # global maximum: barrier peaks plus partner contribution, refined on a grid
    grid = np.linspace(x_min, x_max, 4097)
    candidates = np.concatenate([grid, [r for _, s, r in parts]])
    v_max = float(np.max(func(candidates)))
    return Potential(func, float(x_min), float(x_max), v_max, spec.mass_factor, spec, tuple(breaks))


def evaluate(p: Potential, x):
    """V(x) in eV; accepts scalars or arrays."""
    return p(x)


def equivalent_gaussian_separation(w1: float, w2: float, a_rect: float) -> float:
    """Gaussian centre separation matching a rectangular pair of widths w1, w2 and gap a_rect.

    Each Gaussian is taken to occupy +/- 3 sigma with sigma equal to the
    rectangle width.
    """
    if min(w1, w2, a_rect) < 0:
        raise ValueError("widths and separation must be non-negative")
    return 3.0 * w1 + 3.0 * w2 + a_rect


def rectangular_double(v1, v2, w1, w2, a, mass_factor=1.0) -> DoubleBarrierSpec:
    return DoubleBarrierSpec(v1, v2, Rectangular(w1), Rectangular(w2), a, mass_factor)


def gaussian_double(v1, v2, sigma1, sigma2, a, mass_factor=1.0) -> DoubleBarrierSpec:
    return DoubleBarrierSpec(v1, v2, Gaussian(sigma1), Gaussian(sigma2), a, mass_factor)


def lorentzian_double(v1, v2, gamma1, gamma2, a, mass_factor=1.0) -> DoubleBarrierSpec:
    return DoubleBarrierSpec(v1, v2, Lorentzian(gamma1), Lorentzian(gamma2), a, mass_factor)


def free_space(mass_factor: float = 1.0) -> DoubleBarrierSpec:
    return DoubleBarrierSpec(0.0, 0.0, Rectangular(1.0), Rectangular(1.0), 0.0, mass_factor)
