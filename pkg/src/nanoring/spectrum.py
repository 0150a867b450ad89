"""Collective eigenmodes of the non-Hermitian effective Hamiltonian.

The single-excitation Hamiltonian on the site basis is
H_ij = omega_ij - i gamma_ij / 2, whose complex eigenvalues carry the
collective frequency shift (real part) and decay rate (-2x imaginary
part) of each mode. The two-excitation manifold uses the C(N,2) basis of
site pairs with hard-core double occupancy.

For a perfect ring with rotationally symmetric dipoles the Hamiltonian is
circulant and diagonalized exactly by spin waves with amplitudes
exp(i m theta_j) / sqrt(N); that closed form is kept as an independent
oracle and fast path.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .coupling import CouplingMatrices, coupling_rates
from .errors import NumericalError
from .geometry import DipoleArray, PolSpec, RingSpec, build_ring

#: minimal decay rate retained in scaling tables (units gamma0); below this
#: double precision cannot distinguish the rate from eigensolver noise
RATE_FLOOR = 1e-15

#: minimal spin-wave subspace overlap for a mode label to be trusted
LABEL_MIN_OVERLAP = 0.9


def ring_mode_numbers(n_sites: int) -> list[int]:
    """Angular momentum labels {0, +-1, ..., +-floor((N-1)/2)} (+ N/2 if even)."""
    ms = [0]
    for m in range(1, (n_sites - 1) // 2 + 1):
        ms.extend([m, -m])
    if n_sites % 2 == 0:
        ms.append(n_sites // 2)
    return ms


def pair_basis(n_sites: int) -> list[tuple[int, int]]:
    """Lexicographic site-pair basis of the two-excitation manifold."""
    return list(combinations(range(n_sites), 2))


def exciton_momentum(n_sites: int, spacing: float, m: int) -> float:
    """Quasi-momentum k_m of the mode m, satisfying k_m d = 2 pi m / N."""
    return 2.0 * math.pi * m / (n_sites * spacing)


@dataclass
class ModeSet:
    """Eigenmodes of one excitation manifold, sorted by ascending decay rate.

    vectors holds one unit-norm eigenvector per column; basis_index maps
    basis positions to sites (manifold 1) or site pairs (manifold 2).
    labels, when present, give each mode's angular momentum; label_quality
    is the smallest spin-wave subspace overlap encountered while labeling.
    """

    shifts: np.ndarray
    rates: np.ndarray
    vectors: np.ndarray
    manifold: int
    basis_index: tuple
    labels: np.ndarray | None = None
    label_quality: float | None = None

    @property
    def n_modes(self) -> int:
        return len(self.rates)

    def mode_vector(self, label: int) -> np.ndarray:
        """Eigenvector of the first mode carrying the given label."""
        if self.labels is None:
            raise ValueError("mode set carries no labels")
        hits = np.nonzero(self.labels == label)[0]
        if not len(hits):
            raise ValueError(f"no mode labeled m = {label}")
        return self.vectors[:, hits[0]]

    def most_subradiant(self) -> int:
        return 0

    def most_superradiant(self) -> int:
        return self.n_modes - 1


def effective_hamiltonian(c: CouplingMatrices, manifold: int = 1) -> np.ndarray:
    """Non-Hermitian generator omega - i gamma / 2 on the chosen manifold."""
    if manifold == 1:
        return c.omega - 0.5j * c.gamma
    if manifold != 2:
        raise ValueError(f"manifold must be 1 or 2, got {manifold}")
    n = c.n_sites
    if n < 2:
        raise ValueError("two-excitation manifold needs at least 2 sites")
    pairs = pair_basis(n)
    index = {p: k for k, p in enumerate(pairs)}
    dim = len(pairs)
    h = np.zeros((dim, dim), dtype=complex)
    hop = c.omega - 0.5j * c.gamma
    for (i, j), p in index.items():
        h[p, p] = -1j * c.gamma0
        for k in range(n):
            if k == i or k == j:
                continue
            # excitation hops j -> k (i fixed) and i -> k (j fixed)
            q = index[(i, k) if i < k else (k, i)]
            h[q, p] += hop[k, j]
            q = index[(j, k) if j < k else (k, j)]
            h[q, p] += hop[k, i]
    return h


def diagonalize(h: np.ndarray, manifold: int = 1,
                basis_index: tuple | None = None) -> ModeSet:
    """Dense non-Hermitian eigendecomposition, modes sorted by rate."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    try:
        evals, evecs = np.linalg.eig(h)
    except np.linalg.LinAlgError as err:
        raise NumericalError(
            f"eigensolver failed to converge (dim={h.shape[0]}, "
            f"cond={np.linalg.cond(h):.3e}): {err}"
        ) from err
    rates = -2.0 * evals.imag
    shifts = evals.real
    order = np.lexsort((shifts, rates))
    evecs = evecs[:, order]
    evecs /= np.linalg.norm(evecs, axis=0)[None, :]
    if basis_index is None:
        basis_index = tuple(range(h.shape[0])) if manifold == 1 \
            else tuple(pair_basis(_sites_from_pairs(h.shape[0])))
    return ModeSet(shifts[order], rates[order], evecs,
                   manifold=manifold, basis_index=tuple(basis_index))


def _sites_from_pairs(dim: int) -> int:
    n = int(round(0.5 * (1.0 + math.sqrt(1.0 + 8.0 * dim))))
    if n * (n - 1) // 2 != dim:
        raise ValueError(f"{dim} is not a C(N,2) dimension")
    return n


def spin_wave(n_sites: int, m: int) -> np.ndarray:
    """Unit spin-wave vector with amplitudes exp(i m theta_j) / sqrt(N)."""
    theta = 2.0 * math.pi * np.arange(n_sites) / n_sites
    return np.exp(1j * m * theta) / math.sqrt(n_sites)


def analytic_ring_spectrum(spec: RingSpec, k0: float | None = None,
                           gamma0: float | None = None) -> ModeSet:
    """Closed-form single-excitation spectrum of a symmetric ring.

    The circulant first row of the effective Hamiltonian is Fourier-summed
    per mode: lambda_m = sum_s H_{0,s} exp(i m theta_s). Eigenvectors are
    the spin waves; the spectrum is symmetric under m -> -m.
    """
    kwargs = {}
    if k0 is not None:
        kwargs["k0"] = k0
    if gamma0 is not None:
        kwargs["gamma0"] = gamma0
    array = build_ring(spec, **kwargs)
    c = coupling_rates(array)
    row = c.omega[0] - 0.5j * c.gamma[0]
    n = spec.n_sites
    theta = 2.0 * math.pi * np.arange(n) / n
    ms = ring_mode_numbers(n)
    evals = np.array([np.sum(row * np.exp(1j * m * theta)) for m in ms])
    vectors = np.column_stack([spin_wave(n, m) for m in ms])
    rates = -2.0 * evals.imag
    shifts = evals.real
    order = np.lexsort((shifts, rates))
    return ModeSet(shifts[order], rates[order], vectors[:, order],
                   manifold=1, basis_index=tuple(range(n)),
                   labels=np.asarray(ms)[order], label_quality=1.0)


def label_modes(ms: ModeSet, spec: RingSpec) -> ModeSet:
    """Assign angular-momentum labels to numeric single-ring modes.

    Each eigenvector is matched against the spin waves by the norm of its
    projection onto the +-m subspace (degenerate pairs are only defined up
    to a rotation within their subspace, so single-wave overlaps are not
    meaningful there). If any best overlap drops below LABEL_MIN_OVERLAP
    the symmetry is considered broken and labels are omitted.
    """
    if ms.manifold != 1:
        raise ValueError("labels are defined for the single-excitation manifold")
    n = spec.n_sites
    if ms.vectors.shape[0] != n:
        raise ValueError("mode set dimension does not match ring size")
    m_groups: dict[int, list[int]] = {}
    for m in ring_mode_numbers(n):
        m_groups.setdefault(abs(m), []).append(m)

    waves = {m: spin_wave(n, m) for m in ring_mode_numbers(n)}
    amp = {}   # (|m|, column) -> per-wave overlap amplitudes
    best = np.empty(ms.n_modes)
    best_abs_m = np.empty(ms.n_modes, dtype=int)
    for col in range(ms.n_modes):
        v = ms.vectors[:, col]
        quality = -1.0
        for abs_m, group in m_groups.items():
            coef = np.array([waves[m].conj() @ v for m in group])
            w = float(np.linalg.norm(coef))
            amp[(abs_m, col)] = {m: abs(c) for m, c in zip(group, coef)}
            if w > quality:
                quality, best_abs_m[col] = w, abs_m
        best[col] = quality

    quality = float(best.min())
    if quality < LABEL_MIN_OVERLAP:
        warnings.warn(
            f"ring symmetry too broken to label modes "
            f"(min overlap {quality:.3f} < {LABEL_MIN_OVERLAP})",
            stacklevel=2,
        )
        return replace(ms, labels=None, label_quality=quality)

    labels = np.empty(ms.n_modes, dtype=int)
    for abs_m, group in m_groups.items():
        cols = np.nonzero(best_abs_m == abs_m)[0]
        if len(group) == 1:
            labels[cols] = group[0]
            continue
        if len(cols) == 1:   # partner absorbed elsewhere; pick the closer sign
            col = cols[0]
            labels[col] = max(group, key=lambda m: amp[(abs_m, col)][m])
            continue
        # degenerate pair: hand +m to the column leaning toward it
        plus, minus = max(group), min(group)
        lead = max(cols, key=lambda col: amp[(abs_m, col)][plus]
                   - amp[(abs_m, col)][minus])
        for col in cols:
            labels[col] = plus if col == lead else minus
    return replace(ms, labels=labels, label_quality=quality)


def magic_angle(beta: float) -> float | None:
    """Dipole elevation at which all collective shifts vanish (dense limit).

    Solves cos(phi) = sqrt(1 / (3 |beta|^2)); only defined for tangential
    weight |beta| >= 1/sqrt(3), returns None below that threshold.
    """
    beta = abs(beta)
    if not 0.0 <= beta <= 1.0 + 1e-12:
        raise ValueError(f"beta modulus must lie in [0, 1], got {beta}")
    arg = 3.0 * beta * beta
    if arg < 1.0 - 1e-12:
        return None
    return math.acos(min(1.0, 1.0 / math.sqrt(arg)))


@dataclass
class AngleSweep:
    """Per-mode shifts and rates over a grid of dipole elevation angles."""

    n_sites: int
    spacing: float
    phis: np.ndarray
    m_values: np.ndarray
    shifts: np.ndarray   # (n_phi, n_modes)
    rates: np.ndarray    # (n_phi, n_modes)

    def column(self, m: int) -> int:
        hits = np.nonzero(self.m_values == m)[0]
        if not len(hits):
            raise ValueError(f"no mode labeled m = {m}")
        return int(hits[0])


def angle_sweep(spec: RingSpec, phis) -> AngleSweep:
    """Shifts and rates of every labeled ring mode across dipole tilts."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    if phis.size == 0:
        raise ValueError("phi grid must be nonempty")
    ms = np.asarray(ring_mode_numbers(spec.n_sites))
    shifts = np.empty((phis.size, ms.size))
    rates = np.empty((phis.size, ms.size))
    for i, phi in enumerate(phis):
        tilted = replace(spec, pol=replace(spec.pol, phi=float(phi)))
        modes = analytic_ring_spectrum(tilted)
        for k, m in enumerate(ms):
            hit = np.nonzero(modes.labels == m)[0][0]
            shifts[i, k] = modes.shifts[hit]
            rates[i, k] = modes.rates[hit]
    return AngleSweep(spec.n_sites, spec.spacing, phis, ms, shifts, rates)


@dataclass
class ScalingFit:
    """Least-squares exponent of ln(rate) vs N for one spacing."""

    xi: float
    r2: float
    n_points: int


@dataclass
class ScalingResult:
    """Minimal decay rates over an (N, d) grid, with per-d exponent fits."""

    n_values: np.ndarray
    d_values: np.ndarray
    gamma_min: np.ndarray
    manifold: int
    fits: dict[float, ScalingFit]

    def rows(self):
        return zip(self.n_values, self.d_values, self.gamma_min)

    def gamma_at(self, n: int, d: float) -> float:
        hits = np.nonzero((self.n_values == n)
                          & np.isclose(self.d_values, d))[0]
        if not len(hits):
            raise KeyError(f"no retained row for N={n}, d={d}")
        return float(self.gamma_min[hits[0]])


def minimal_rate(n_sites: int, spacing: float, pol: PolSpec,
                 manifold: int = 1) -> float:
    """Smallest collective decay rate of a ring in the given manifold."""
    array = build_ring(RingSpec(n_sites, spacing, pol))
    c = coupling_rates(array)
    h = effective_hamiltonian(c, manifold)
    modes = diagonalize(h, manifold=manifold)
    return float(modes.rates[0])


def min_decay_scan(Ns, ds, manifold: int = 1,
                   pol: PolSpec | None = None,
                   max_pair_sites: int = 40) -> ScalingResult:
    """Minimal decay rate per (N, d), with exponential fits per spacing.

    Rows whose rate falls below RATE_FLOOR (in units of gamma0) are
    dropped as numerically indistinguishable from zero. For the
    single-excitation manifold each spacing gets an ordinary least-squares
    fit of ln(rate) vs N; fits with fewer than 3 retained points are
    omitted with a warning.
    """
    Ns = [int(n) for n in np.atleast_1d(Ns)]
    ds = [float(d) for d in np.atleast_1d(ds)]
    if not Ns or not ds:
        raise ValueError("N and d grids must be nonempty")
    if manifold == 2 and max(Ns) > max_pair_sites:
        raise ValueError(
            f"two-excitation scan capped at N <= {max_pair_sites} "
            f"(got N = {max(Ns)}); raise max_pair_sites to override"
        )
    if pol is None:
        pol = PolSpec.transverse()

    rows_n, rows_d, rows_g = [], [], []
    for d in ds:
        for n in Ns:
            g = minimal_rate(n, d, pol, manifold)
            if g < RATE_FLOOR:
                continue
            rows_n.append(n)
            rows_d.append(d)
            rows_g.append(g)

    fits: dict[float, ScalingFit] = {}
    if manifold == 1:
        for d in ds:
            mask = np.isclose(rows_d, d)
            n_arr = np.asarray(rows_n, dtype=float)[mask]
            g_arr = np.asarray(rows_g, dtype=float)[mask]
            if len(n_arr) < 3:
                warnings.warn(
                    f"fit omitted for d={d}: only {len(n_arr)} retained points",
                    stacklevel=2,
                )
                continue
            logg = np.log(g_arr)
            slope, intercept = np.polyfit(n_arr, logg, 1)
            pred = slope * n_arr + intercept
            ss_res = float(np.sum((logg - pred) ** 2))
            ss_tot = float(np.sum((logg - logg.mean()) ** 2))
            r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
            fits[d] = ScalingFit(xi=-float(slope), r2=r2, n_points=len(n_arr))

    return ScalingResult(np.asarray(rows_n), np.asarray(rows_d),
                         np.asarray(rows_g), manifold, fits)
