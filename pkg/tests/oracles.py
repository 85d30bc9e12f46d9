"""Independent reference computations used only by the tests."""

import math

import numpy as np
from scipy import constants as si
from scipy.special import roots_legendre

from tunnelkit.constants import CONSTANTS, KB_EV


def gauss_legendre_panels(a, b, panels, order=16):
    """Nodes and weights of composite Gauss-Legendre on [a, b]."""
    x, w = roots_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def fermi(e, mu, kt):
    return 0.5 * (1.0 - np.tanh(0.5 * (e - mu) / kt))


def current_2d(trans, fermi_level, temperature, mass_factor, bias, shift=0.0,
               panels_l=400, panels_t=60, order=16):
    """Brute-force (k_l, k_t) quadrature of the coherent current density, A/m^2.

    J = q / (4 pi^3 hbar) int dk_l int d^2k_t [f(E) - f(E + qV)] T(E_l) dE/dk_l,
    with E = E_l + E_t, E_l = c k_l^2, E_t = c k_t^2, c = hbar^2 / 2m*.
    ``trans`` maps longitudinal energies to transmission; ``shift`` moves
    its argument by a fixed amount (eV).
    """
    c = CONSTANTS.kinetic_scale(mass_factor)
    kt = KB_EV * temperature
    e_top = fermi_level + 40.0 * kt + bias
    k_top = math.sqrt(e_top / c)
    kl, wl = gauss_legendre_panels(0.0, k_top, panels_l, order)
    kt_nodes, wt = gauss_legendre_panels(0.0, k_top, panels_t, order)
    el = c * kl**2
    t = np.asarray(trans(el + shift))
    et = c * kt_nodes**2
    e = el[:, None] + et[None, :]
    window = fermi(e, fermi_level, kt) - fermi(e + bias, fermi_level, kt)
    inner = (window * (2.0 * math.pi * kt_nodes * wt)[None, :]).sum(axis=1)  # d^2k_t
    total = np.sum(wl * t * inner * 2.0 * c * kl)  # eV / nm^2
    return si.e / (4.0 * math.pi**3 * si.hbar) * total * si.e * 1e18


def transfer_matrix_amplitude(edges, heights, energy, mass_factor=1.0):
    """Transmission amplitude of a piecewise-constant potential from 2x2 transfer matrices.

    Plane waves use the global x coordinate in every region, so the
    amplitude refers to an outgoing wave t exp(i k x).  Each interface
    contributes inv(W_left(x)) W_right(x) with W the value/derivative matrix.
    """
    c = CONSTANTS.kinetic_scale(mass_factor)
    q = [np.sqrt(complex(energy - v) / c) for v in heights]

    def w(qj, x):
        ep, em = np.exp(1j * qj * x), np.exp(-1j * qj * x)
        return np.array([[ep, em], [1j * qj * ep, -1j * qj * em]])

    m = np.eye(2, dtype=complex)
    for j, x in enumerate(edges):
        m = m @ np.linalg.inv(w(q[j], x)) @ w(q[j + 1], x)
    # (A, B) on the left = m (t, 0) on the right with A = 1
    return 1.0 / m[0, 0]


def five_region(v1, v2, w1, w2, a):
    """Edges and heights of a rectangular double barrier starting at x = 0 with gap a."""
    return [0.0, w1, w1 + a, w1 + a + w2], [0.0, v1, 0.0, v2, 0.0]
