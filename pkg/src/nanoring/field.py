"""Emitted field of single-excitation states and sampled intensity maps."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import _greens_batch
from .errors import SingularityError
from .geometry import DipoleArray
from .dynamics import StateVector, site_basis_state
from .spectrum import ModeSet

#: grid points closer than this to a dipole are masked in plane maps
SITE_CLEARANCE = 1e-9


@dataclass
class FieldMap:
    """Sampled emitted-field intensity on a spherical or planar grid.

    intensity is the squared field magnitude summed over components, in
    arbitrary units; mask marks grid points excluded because they
    coincide with a dipole position.
    """

    kind: str
    grid: np.ndarray          # (M, 3) sample points
    intensity: np.ndarray     # (M,)
    metadata: dict = field(default_factory=dict)
    mask: np.ndarray | None = None

    def max_intensity(self) -> float:
        return float(self.intensity.max())


def _geometry_hash(array: DipoleArray) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(array.positions).tobytes())
    digest.update(np.ascontiguousarray(array.orientations).tobytes())
    return digest.hexdigest()[:16]


def emitted_field(array: DipoleArray, psi: StateVector, r) -> np.ndarray:
    """Positive-frequency emitted field of a single-excitation state.

    Coherent sum of each dipole's propagated field weighted by its site
    amplitude, with the 3 gamma0 / 4 prefactor absorbed into the units.
    """
    return emitted_field_many(array, psi, np.asarray(r, dtype=float)[None, :])[0]


def emitted_field_many(array: DipoleArray, psi: StateVector,
                       points: np.ndarray) -> np.ndarray:
    """Vectorized emitted field at many observation points (M, 3)."""
    if len(psi.amplitudes) != array.n_sites:
        raise ValueError("state must live on the array's site basis")
    points = np.asarray(points, dtype=float)
    rel = points[:, None, :] - array.positions[None, :, :]          # (M, N, 3)
    dist = np.linalg.norm(rel, axis=-1)
    if dist.min() == 0.0:
        raise SingularityError("observation point coincides with a dipole")
    g = _greens_batch(rel.reshape(-1, 3), array.k0)
    g = g.reshape(points.shape[0], array.n_sites, 3, 3)
    sources = array.orientations * psi.amplitudes[:, None]          # (N, 3)
    prefactor = 0.75 * array.gamma0
    return prefactor * np.einsum("mnab,nb->ma", g, sources)


def sphere_grid(radius: float, n_theta: int, n_phi: int,
                center=None) -> np.ndarray:
    """Spherical sample grid including both poles."""
    center = np.zeros(3) if center is None else np.asarray(center, dtype=float)
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    points = np.column_stack([
        (radius * np.sin(tt) * np.cos(pp)).ravel(),
        (radius * np.sin(tt) * np.sin(pp)).ravel(),
        (radius * np.cos(tt)).ravel(),
    ])
    return center[None, :] + points


def array_extent(array: DipoleArray) -> float:
    """Largest site distance from the layout centroid."""
    centroid = array.positions.mean(axis=0)
    return float(np.linalg.norm(array.positions - centroid[None, :],
                                axis=1).max())


def farfield_map(array: DipoleArray, psi: StateVector,
                 radius: float | None = None, n_theta: int = 181,
                 n_phi: int = 90) -> FieldMap:
    """Far-field intensity on a sphere centered on the layout.

    The default radius is 200x the layout extent; the full propagator is
    evaluated, near-field terms simply become negligible at that range.
    """
    extent = array_extent(array)
    if radius is None:
        radius = 200.0 * extent
    if radius <= 2.0 * extent:
        raise ValueError("sphere radius must exceed the array extent")
    centroid = array.positions.mean(axis=0)
    grid = sphere_grid(radius, n_theta, n_phi, center=centroid)
    e = emitted_field_many(array, psi, grid)
    intensity = np.sum(np.abs(e) ** 2, axis=1)
    meta = {
        "kind": "sphere",
        "radius": radius,
        "n_theta": n_theta,
        "n_phi": n_phi,
        "geometry": _geometry_hash(array),
        "state_norm": psi.norm,
    }
    return FieldMap("sphere", grid, intensity, meta)


def plane_map(array: DipoleArray, psi: StateVector, z_offset: float,
              extent: float, n_x: int = 101, n_y: int = 101) -> FieldMap:
    """Intensity on a Cartesian grid parallel to the structure plane.

    Grid points within SITE_CLEARANCE of a dipole are masked (zero
    intensity, flagged in the mask) instead of poisoning the map.
    """
    centroid = array.positions.mean(axis=0)
    xs = np.linspace(-extent, extent, n_x) + centroid[0]
    ys = np.linspace(-extent, extent, n_y) + centroid[1]
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    grid = np.column_stack([xx.ravel(), yy.ravel(),
                            np.full(xx.size, centroid[2] + z_offset)])
    dist = np.linalg.norm(grid[:, None, :] - array.positions[None, :, :],
                          axis=-1)
    mask = dist.min(axis=1) < SITE_CLEARANCE
    intensity = np.zeros(len(grid))
    if np.any(~mask):
        e = emitted_field_many(array, psi, grid[~mask])
        intensity[~mask] = np.sum(np.abs(e) ** 2, axis=1)
    meta = {
        "kind": "plane",
        "z_offset": z_offset,
        "extent": extent,
        "n_x": n_x,
        "n_y": n_y,
        "masked_points": int(mask.sum()),
        "geometry": _geometry_hash(array),
        "state_norm": psi.norm,
    }
    return FieldMap("plane", grid, intensity, meta, mask=mask)


def superposition_state(array: DipoleArray, mode_sets: list[ModeSet],
                        choices: list[str]) -> StateVector:
    """Equal-weight superposition of one eigenmode per ring.

    mode_sets holds the isolated single-ring mode sets in ring order;
    choices selects per ring either the most "superradiant" or most
    "subradiant" mode. The per-ring eigenvectors are embedded in the full
    site basis (they stay orthonormal because supports are disjoint).
    """
    if len(mode_sets) != array.n_rings or len(choices) != array.n_rings:
        raise ValueError("need one mode set and one choice per ring")
    amp = np.zeros(array.n_sites, dtype=complex)
    for ring_id, (modes, choice) in enumerate(zip(mode_sets, choices)):
        sites = array.ring_sites(ring_id)
        if modes.vectors.shape[0] != len(sites):
            raise ValueError(
                f"mode set {ring_id} does not match ring {ring_id} size"
            )
        if choice == "superradiant":
            col = modes.most_superradiant()
        elif choice == "subradiant":
            col = modes.most_subradiant()
        else:
            raise ValueError(
                f"choice must be 'superradiant' or 'subradiant', got {choice!r}"
            )
        amp[sites] = modes.vectors[:, col]
    amp /= np.linalg.norm(amp)
    return site_basis_state(array, amp)
