"""Mode-space couplings and transfer efficiency between two rings.

Angles entering the mode-space sums are measured in each ring's own frame,
counterclockwise about the common normal, with zero pointing along the
line towards the companion ring; the facing site of either ring then sits
at angle zero, which makes the momentum labels match the single-ring
eigenmodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .coupling import coupling_rates
from .geometry import DipoleArray, PolSpec, RingSpec, two_ring_layout
from .spectrum import ModeSet, analytic_ring_spectrum, ring_mode_numbers


def _transport_angles(array: DipoleArray) -> tuple[np.ndarray, np.ndarray]:
    """Per-site mode angles for both rings of a two-ring layout."""
    if array.n_rings != 2:
        raise ValueError("mode couplings are defined for two-ring layouts")
    centers = [array.ring_center(0), array.ring_center(1)]
    out = []
    for ring_id in (0, 1):
        frame = array.rings[ring_id]
        center = centers[ring_id]
        toward = centers[1 - ring_id] - center
        normal = np.asarray(frame.normal)
        u = toward - (toward @ normal) * normal
        u /= np.linalg.norm(u)
        v = np.cross(normal, u)
        rel = array.positions[array.ring_sites(ring_id)] - center[None, :]
        out.append(np.arctan2(rel @ v, rel @ u))
    return out[0], out[1]


def mode_coupling(array: DipoleArray, m1: int, m2: int) -> complex:
    """Complex inter-ring coupling of the (m1, m2) mode pair.

    Sums omega_ij - i gamma_ij / 2 over cross-ring site pairs with the
    spin-wave phases of each ring, normalized by sqrt(N1 N2) so it reduces
    to the 1/N form for equal rings. The dispersive part is the real part;
    the dissipative rate is -2x the imaginary part.
    """
    theta1, theta2 = _transport_angles(array)
    sites1 = array.ring_sites(0)
    sites2 = array.ring_sites(1)
    c = coupling_rates(array)
    hop = c.omega - 0.5j * c.gamma
    block = hop[np.ix_(sites1, sites2)]
    phases = np.exp(1j * (m1 * theta1[:, None] - m2 * theta2[None, :]))
    return complex(np.sum(block * phases) / math.sqrt(len(sites1) * len(sites2)))


@dataclass
class ModeCouplingTable:
    """Inter-ring couplings and efficiencies over all mode label pairs."""

    j: np.ndarray      # dispersive couplings, (n_m1, n_m2)
    g: np.ndarray      # dissipative couplings
    eta: np.ndarray    # transfer efficiencies
    m1_values: np.ndarray
    m2_values: np.ndarray

    def at(self, m1: int, m2: int) -> tuple[float, float, float]:
        i = int(np.nonzero(self.m1_values == m1)[0][0])
        k = int(np.nonzero(self.m2_values == m2)[0][0])
        return float(self.j[i, k]), float(self.g[i, k]), float(self.eta[i, k])


def coupling_efficiency(j_coupling: float, shift1: float, rate1: float,
                        shift2: float, rate2: float) -> float:
    """Figure of merit for resonant mode-to-mode transfer.

    j^2 / (4 (J_m1 - J_m2)^2 + max(rate1^2, rate2^2)); returns inf when
    both the detuning and the rates vanish with a nonzero coupling.
    """
    delta = shift1 - shift2
    denom = 4.0 * delta * delta + max(rate1 * rate1, rate2 * rate2)
    if denom == 0.0:
        if j_coupling == 0.0:
            return 0.0
        return math.inf
    return j_coupling * j_coupling / denom


def _mode_lookup(modes: ModeSet) -> dict[int, tuple[float, float]]:
    return {int(m): (float(s), float(g))
            for m, s, g in zip(modes.labels, modes.shifts, modes.rates)}


def mode_coupling_table(array: DipoleArray, spec1: RingSpec,
                        spec2: RingSpec) -> ModeCouplingTable:
    """All pairwise mode couplings and efficiencies of a two-ring layout.

    Single-ring shifts and rates (for the efficiency denominator) come
    from the isolated rings described by spec1/spec2.
    """
    ms1 = np.asarray(sorted(ring_mode_numbers(spec1.n_sites)))
    ms2 = np.asarray(sorted(ring_mode_numbers(spec2.n_sites)))
    ref1 = _mode_lookup(analytic_ring_spectrum(spec1))
    ref2 = _mode_lookup(analytic_ring_spectrum(spec2))

    theta1, theta2 = _transport_angles(array)
    sites1 = array.ring_sites(0)
    sites2 = array.ring_sites(1)
    c = coupling_rates(array)
    hop = c.omega - 0.5j * c.gamma
    block = hop[np.ix_(sites1, sites2)]
    norm = math.sqrt(len(sites1) * len(sites2))

    phase1 = np.exp(1j * np.outer(ms1, theta1))          # (n_m1, N1)
    phase2 = np.exp(-1j * np.outer(ms2, theta2))         # (n_m2, N2)
    lam = phase1 @ block @ phase2.T / norm

    jmat = lam.real
    gmat = -2.0 * lam.imag
    eta = np.empty_like(jmat)
    for a, m1 in enumerate(ms1):
        s1, g1 = ref1[int(m1)]
        for b, m2 in enumerate(ms2):
            s2, g2 = ref2[int(m2)]
            eta[a, b] = coupling_efficiency(jmat[a, b], s1, g1, s2, g2)
    return ModeCouplingTable(jmat, gmat, eta, ms1, ms2)


def efficiency_sweep(spec1: RingSpec, spec2: RingSpec, xs,
                     pol: PolSpec | None = None) -> np.ndarray:
    """Maximal-momentum transfer efficiency versus ring-to-ring separation.

    Evaluates the efficiency of the (floor(N1/2), floor(N2/2)) mode pair
    for each separation in ``xs`` and returns the resulting curve.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size == 0:
        raise ValueError("separation grid must be nonempty")
    if pol is not None:
        spec1 = replace(spec1, pol=pol)
        spec2 = replace(spec2, pol=pol)
    m1 = spec1.n_sites // 2
    m2 = spec2.n_sites // 2
    ref1 = _mode_lookup(analytic_ring_spectrum(spec1))
    ref2 = _mode_lookup(analytic_ring_spectrum(spec2))
    s1, g1 = ref1[m1]
    s2, g2 = ref2[m2]
    eta = np.empty_like(xs)
    for i, x in enumerate(xs):
        system = two_ring_layout(spec1, spec2, float(x))
        lam = mode_coupling(system, m1, m2)
        eta[i] = coupling_efficiency(lam.real, s1, g1, s2, g2)
    return eta
