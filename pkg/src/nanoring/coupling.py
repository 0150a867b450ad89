"""Free-space dipole propagator and pairwise coupling matrices.

The dispersive (omega) and dissipative (gamma) matrices are assembled from
the overlap of the two dipole orientations with the free-space Green's
tensor of an oscillating point dipole; omega_ij is -3 gamma0/4 times the
real part of that overlap and gamma_ij is +3 gamma0/2 times its imaginary
part. Diagonals are fixed to omega_ii = 0 and gamma_ii = gamma0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError, SingularityError
from .geometry import DipoleArray


def greens_tensor(r, k0: float) -> np.ndarray:
    """Free-space Green's tensor of a unit dipole at the origin.

    ``r`` is the observation point relative to the source; the tensor is
    even in r and diverges at r = 0, which raises a SingularityError
    (self-interaction is handled separately by the coupling diagonal).
    """
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r)
    if dist == 0.0:
        raise SingularityError("Green's tensor evaluated at zero separation")
    return _greens_batch(r[None, :], k0)[0]


def _greens_batch(rvecs: np.ndarray, k0: float) -> np.ndarray:
    """Vectorized Green's tensor for a batch of separation vectors (M, 3)."""
    dist = np.linalg.norm(rvecs, axis=-1)
    x = k0 * dist
    inv = 1.0 / x
    iso = inv + 1j * inv**2 - inv**3
    tr = inv + 3j * inv**2 - 3.0 * inv**3
    rhat = rvecs / dist[:, None]
    outer = rhat[:, :, None] * rhat[:, None, :]
    eye = np.eye(3)[None, :, :]
    phase = np.exp(1j * x)
    return phase[:, None, None] * (iso[:, None, None] * eye
                                   - tr[:, None, None] * outer)


@dataclass
class CouplingMatrices:
    """Dispersive and dissipative pairwise rates in units of gamma0.

    omega is real symmetric with zero diagonal, gamma real symmetric with
    gamma0 on the diagonal and (physically) positive semidefinite.
    """

    omega: np.ndarray
    gamma: np.ndarray
    gamma0: float = 1.0

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        n = self.n_sites
        if self.omega.shape != (n, n) or self.gamma.shape != (n, n):
            raise InvalidSpecError("omega and gamma must be square and equal-sized")
        if not np.allclose(self.omega, self.omega.T, atol=1e-10 * self.gamma0):
            raise InvalidSpecError("omega must be symmetric")
        if not np.allclose(self.gamma, self.gamma.T, atol=1e-10 * self.gamma0):
            raise InvalidSpecError("gamma must be symmetric")
        if np.any(np.abs(np.diag(self.omega)) > 0.0):
            raise InvalidSpecError("omega diagonal must be zero")
        if not np.all(np.diag(self.gamma) == self.gamma0):
            raise InvalidSpecError("gamma diagonal must equal gamma0")
        lam_min = np.linalg.eigvalsh(self.gamma).min()
        if lam_min < -1e-9 * self.gamma0:
            raise InvalidSpecError(
                f"gamma has eigenvalue {lam_min:.3e} below the PSD tolerance"
            )
        self.omega.setflags(write=False)
        self.gamma.setflags(write=False)

    @property
    def n_sites(self) -> int:
        return self.omega.shape[0]


def _pair_overlaps(array: DipoleArray) -> np.ndarray:
    """mu_i^* . G(r_i - r_j) . mu_j for all i < j, row-packed."""
    n = array.n_sites
    iu, ju = np.triu_indices(n, k=1)
    rvecs = array.positions[iu] - array.positions[ju]
    dist = np.linalg.norm(rvecs, axis=-1)
    if dist.size and dist.min() == 0.0:
        raise SingularityError("coincident sites in coupling evaluation")
    g = _greens_batch(rvecs, array.k0)
    mi = array.orientations[iu].conj()
    mj = array.orientations[ju]
    return np.einsum("ma,mab,mb->m", mi, g, mj)


def coupling_rates(array: DipoleArray) -> CouplingMatrices:
    """Assemble the full dispersive/dissipative coupling matrices."""
    n = array.n_sites
    overlaps = _pair_overlaps(array)
    iu, ju = np.triu_indices(n, k=1)
    omega = np.zeros((n, n))
    gamma = np.zeros((n, n))
    omega[iu, ju] = -0.75 * array.gamma0 * overlaps.real
    gamma[iu, ju] = 1.5 * array.gamma0 * overlaps.imag
    omega += omega.T
    gamma += gamma.T
    np.fill_diagonal(gamma, array.gamma0)
    return CouplingMatrices(omega, gamma, gamma0=array.gamma0)


def short_range_omega(array: DipoleArray) -> np.ndarray:
    """Near-field 1/(k0 r)^3 limit of the dispersive coupling.

    Leading-order expansion of the full propagator, carrying the static
    angular factor 3 (mu_i^* . rhat)(mu_j . rhat) - mu_i^* . mu_j.  Used
    for tilt-angle analysis and as a cross-check of the full coupling.
    """
    n = array.n_sites
    iu, ju = np.triu_indices(n, k=1)
    rvecs = array.positions[iu] - array.positions[ju]
    dist = np.linalg.norm(rvecs, axis=-1)
    if dist.size and dist.min() == 0.0:
        raise SingularityError("coincident sites in coupling evaluation")
    rhat = rvecs / dist[:, None]
    mi = array.orientations[iu].conj()
    mj = array.orientations[ju]
    angular = 3.0 * (np.einsum("ma,ma->m", mi, rhat)
                     * np.einsum("ma,ma->m", mj, rhat))
    angular -= np.einsum("ma,ma->m", mi, mj)
    vals = -0.75 * array.gamma0 * angular.real / (array.k0 * dist) ** 3
    omega = np.zeros((n, n))
    omega[iu, ju] = vals
    omega += omega.T
    return omega
