"""Direct RK4 integration of the stationary Schrodinger equation.

The second-order equation is written as the first-order system
``psi' = phi``, ``phi' = (V(x) - E) psi / (hbar^2 / 2m)`` and stepped with
classic fixed-step RK4.  Transmission is obtained by integrating backwards
from a pure outgoing wave at ``x_max`` and decomposing the result into
incident and reflected waves at ``x_min``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .constants import CONSTANTS
from .potentials import Potential

_RESCALE_EVERY = 32
_RESCALE_ABOVE = 2.0**300
OVERFLOW_LIMIT = 1e30


class DeepTunnelingOverflow(ArithmeticError):
    """|psi| grew past the overflow guard during a raw trajectory integration."""


@dataclass(frozen=True)
class SolverOptions:
    step: float = 1e-4  # nm
    eps_tail: float | None = None  # eV; None keeps the potential's own support
    max_flux_error: float = 1e-6
    threads: int = 1

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class TransmissionPoint:
    energy: float  # eV
    transmission: float
    phase: float  # rad
    engine: str
    flag: str = ""


class ScatteringAmplitudes(NamedTuple):
    """Incident ``A`` and reflected ``B`` amplitudes at ``x_min`` for ``C = 1`` at ``x_max``.

    Plane waves are referenced to their own boundary, i.e.
    ``psi = A e^{ik(x - x_min)} + B e^{-ik(x - x_min)}`` on the left and
    ``psi = C e^{ik(x - x_max)}`` on the right.
    """

    A: complex
    B: complex
    C: complex


class Trajectory(NamedTuple):
    x: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray


def step_grid(p: Potential, start: float, stop: float, h: float) -> np.ndarray:
    """Nodes from ``start`` to ``stop`` with spacing ``h``.

    Breakpoints of ``p`` lying strictly between the ends are inserted as
    nodes; the last step of each segment is shortened to land on its end.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    if start == stop:
        return np.array([start])
    lo, hi = min(start, stop), max(start, stop)
    cuts = [lo] + [b for b in p.breakpoints if lo < b < hi] + [hi]
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((b - a) / h - 1e-9))
        seg = a + h * np.arange(n)
        pieces.append(seg[seg < b])
    nodes = np.concatenate(pieces + [np.array([hi])])
    return nodes if stop > start else nodes[::-1].copy()


def _node_potential(p: Potential, nodes: np.ndarray):
    """V at step start, midpoint and end, taken one-sided across jumps."""
    x0, x1 = nodes[:-1], nodes[1:]
    xm = 0.5 * (x0 + x1)
    if p.breakpoints:
        nudge = 1e-9 * (x1 - x0)
        x0, x1 = x0 + nudge, x1 - nudge
    return p(x0), p(xm), p(x1)


def _rk4_step(y1, y2, q0, qm, q1, h):
    """One RK4 step of y1' = y2, y2' = q(x) y1."""
    hh = 0.5 * h
    a1, b1 = y2, q0 * y1
    a2, b2 = y2 + hh * b1, qm * (y1 + hh * a1)
    a3, b3 = y2 + hh * b2, qm * (y1 + hh * a2)
    a4, b4 = y2 + h * b3, q1 * (y1 + h * a3)
    h6 = h / 6.0
    return y1 + h6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4), y2 + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)


def integrate_rk4(p: Potential, energy: float, start: float, stop: float, y0, h: float) -> Trajectory:
    """Integrate one solution from ``start`` to ``stop`` and return the whole trajectory.

    ``y0`` is ``(psi, dpsi/dx)`` at ``start``.  No rescaling is done here, so
    deep tunnelling can overflow; past ``OVERFLOW_LIMIT`` this raises
    :class:`DeepTunnelingOverflow` (the equation is linear, so callers may
    rescale and continue).
    """
    if start == stop:
        raise ValueError("start and stop must differ")
    nodes = step_grid(p, start, stop, h)
    v0, vm, v1 = _node_potential(p, nodes)
    c = CONSTANTS.kinetic_scale(p.mass_factor)
    q0, qm, q1 = (v0 - energy) / c, (vm - energy) / c, (v1 - energy) / c
    hs = np.diff(nodes)
    psi = np.empty(len(nodes), dtype=complex)
    dpsi = np.empty(len(nodes), dtype=complex)
    y1, y2 = complex(y0[0]), complex(y0[1])
    psi[0], dpsi[0] = y1, y2
    for n in range(len(hs)):
        y1, y2 = _rk4_step(y1, y2, q0[n], qm[n], q1[n], hs[n])
        if abs(y1) > OVERFLOW_LIMIT:
            raise DeepTunnelingOverflow(f"|psi| exceeded {OVERFLOW_LIMIT:g} at x = {nodes[n + 1]:.6g} nm")
        psi[n + 1], dpsi[n + 1] = y1, y2
    return Trajectory(nodes, psi, dpsi)


def _propagate(hs, q0v, qmv, q1v, energies, c):
    """Carry the fundamental pair (psi, dpsi) = (1, 0) and (0, 1) across all steps.

    Returns the two solutions at the last node and a base-2 exponent per
    energy; true values are ``solution * 2**exponent``.  Only + and * touch
    the per-energy data, so results do not depend on how energies are batched.
    """
    n_e = len(energies)
    y1 = np.zeros((2, n_e))
    y2 = np.zeros((2, n_e))
    y1[0] = 1.0
    y2[1] = 1.0
    log2 = np.zeros(n_e, dtype=np.int64)
    for n, h in enumerate(hs):
        q0 = (q0v[n] - energies) / c
        qm = (qmv[n] - energies) / c
        q1 = (q1v[n] - energies) / c
        y1, y2 = _rk4_step(y1, y2, q0, qm, q1, h)
        if n % _RESCALE_EVERY == 0:
            big = np.maximum(np.abs(y1).max(axis=0), np.abs(y2).max(axis=0))
            if np.any(big > _RESCALE_ABOVE):
                _, ex = np.frexp(big)
                ex = np.where(big > _RESCALE_ABOVE, ex, 0)
                y1 = np.ldexp(y1, -ex)
                y2 = np.ldexp(y2, -ex)
                log2 += ex
    return y1, y2, log2


class _Decomposition(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    log2: np.ndarray


def _scatter(p: Potential, energies: np.ndarray, opts: SolverOptions) -> _Decomposition:
    energies = np.asarray(energies, dtype=float)
    if np.any(energies <= 0):
        raise ValueError("energies must be positive")
    if opts.eps_tail is not None:
        p = p.with_support(opts.eps_tail)
    c = CONSTANTS.kinetic_scale(p.mass_factor)
    k = np.sqrt(energies / c)
    if p.x_max <= p.x_min:
        one = np.ones_like(energies, dtype=complex)
        return _Decomposition(one, 0 * one, np.zeros(len(energies), dtype=np.int64))

    nodes = step_grid(p, p.x_max, p.x_min, opts.step)
    v0, vm, v1 = (list(map(float, v)) for v in _node_potential(p, nodes))
    hs = list(map(float, np.diff(nodes)))

    def run(chunk):
        return _propagate(hs, v0, vm, v1, energies[chunk], c)

    n_chunks = min(opts.threads, len(energies))
    chunks = [s for s in np.array_split(np.arange(len(energies)), n_chunks) if len(s)]
    if len(chunks) == 1:
        parts = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
    y1 = np.concatenate([pt[0] for pt in parts], axis=1)
    y2 = np.concatenate([pt[1] for pt in parts], axis=1)
    log2 = np.concatenate([pt[2] for pt in parts])

    # psi(x_max) = 1, psi'(x_max) = ik  ->  psi = u + ik v
    psi = y1[0] + 1j * k * y1[1]
    dpsi = y2[0] + 1j * k * y2[1]
    A = 0.5 * (psi + dpsi / (1j * k))
    B = 0.5 * (psi - dpsi / (1j * k))
    return _Decomposition(A, B, log2)


def scattering_amplitudes(p: Potential, energy: float, opts: SolverOptions | None = None) -> ScatteringAmplitudes:
    """A, B, C for one energy (C = 1).  Overflows to inf for extremely opaque barriers."""
    opts = opts or SolverOptions()
    d = _scatter(p, np.array([energy]), opts)
    scale = 2.0 ** float(d.log2[0])
    return ScatteringAmplitudes(complex(d.A[0]) * scale, complex(d.B[0]) * scale, 1.0 + 0j)


def transmission_numeric_many(p: Potential, energies: Sequence[float],
                              opts: SolverOptions | None = None) -> list[TransmissionPoint]:
    """Transmission probability and phase for many energies in one vectorised pass.

    ``phase`` is ``-arg(A)``: the phase of the transmitted wave at ``x_max``
    relative to the incident wave at ``x_min``.
    """
    opts = opts or SolverOptions()
    energies = np.asarray(energies, dtype=float)
    d = _scatter(p, energies, opts)
    a2 = np.abs(d.A) ** 2
    b2 = np.abs(d.B) ** 2
    unit = np.ldexp(1.0, -2 * d.log2)  # |C|^2 in the rescaled frame
    trans = np.ldexp(1.0 / a2, -2 * d.log2)
    flux_err = np.abs(a2 - b2 - unit) / a2
    phase = -np.angle(d.A)
    out = []
    for e, t, ph, fe in zip(energies, trans, phase, flux_err):
        flag = ""
        if not fe <= opts.max_flux_error:
            flag = f"flux_error={fe:.2e}"
        elif t == 0.0:
            flag = "underflow"
        out.append(TransmissionPoint(float(e), float(t), float(ph), "numeric", flag))
    return out


def transmission_numeric(p: Potential, energy: float, opts: SolverOptions | None = None) -> TransmissionPoint:
    return transmission_numeric_many(p, [energy], opts)[0]


def flux_error(p: Potential, energies, opts: SolverOptions | None = None) -> np.ndarray:
    """Relative violation of |A|^2 = |B|^2 + |C|^2 for each energy."""
    d = _scatter(p, np.asarray(energies, dtype=float), opts or SolverOptions())
    a2 = np.abs(d.A) ** 2
    return np.abs(a2 - np.abs(d.B) ** 2 - np.ldexp(1.0, -2 * d.log2)) / a2
