"""Emitter layouts: single rings, two-ring systems, multi-ring complexes, disorder.

All lengths are in units of the transition wavelength lambda0, all rates in
units of the single-emitter linewidth gamma0. Every constructor returns an
immutable :class:`DipoleArray`; the returned arrays have their write flags
cleared so they can be shared freely between threads.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
import numpy as np

from .errors import GeometryError, InvalidSpecError

TWO_PI = 2.0 * math.pi

#: default wavenumber for lengths measured in lambda0
DEFAULT_K0 = TWO_PI
#: default single-emitter linewidth (the rate unit)
DEFAULT_GAMMA0 = 1.0

#: minimal allowed distance between any two sites
MIN_SITE_DISTANCE = 1e-9

DISORDER_KINDS = ("angular", "radial", "vertical")


def _as_unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise InvalidSpecError("zero-length direction vector")
    return v / n


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic right-handed in-plane basis (u, v) with u x v = normal."""
    helper = np.array([1.0, 0.0, 0.0])
    if abs(normal @ helper) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    u = _as_unit(helper - (helper @ normal) * normal)
    v = np.cross(normal, u)
    return u, v


@dataclass(frozen=True)
class PolSpec:
    """Rotationally symmetric dipole orientation pattern.

    The orientation at a site with local basis (e_r, e_t, e_z) is
    ``cos(phi) * (alpha e_r + beta e_t) + sin(phi) * e_z``.  The complex
    weights must satisfy |alpha|^2 + |beta|^2 = 1 and the elevation angle
    phi lies in [0, pi/2].
    """

    alpha: complex = 0.0
    beta: complex = 1.0
    phi: float = 0.0

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise InvalidSpecError(
                f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1 within 1e-12"
            )
        if not (-1e-12 <= self.phi <= math.pi / 2 + 1e-12):
            raise InvalidSpecError(f"phi = {self.phi!r} outside [0, pi/2]")

    @classmethod
    def tangential(cls, phi: float = 0.0) -> "PolSpec":
        """All dipoles along the local tangent, optionally tilted by phi."""
        return cls(alpha=0.0, beta=1.0, phi=phi)

    @classmethod
    def radial(cls, phi: float = 0.0) -> "PolSpec":
        """All dipoles along the local outward radius."""
        return cls(alpha=1.0, beta=0.0, phi=phi)

    @classmethod
    def transverse(cls) -> "PolSpec":
        """All dipoles perpendicular to the ring plane."""
        return cls(alpha=0.0, beta=1.0, phi=math.pi / 2)

    def orientation(self, e_r, e_t, e_z) -> np.ndarray:
        mu = math.cos(self.phi) * (self.alpha * np.asarray(e_r, dtype=complex)
                                   + self.beta * np.asarray(e_t, dtype=complex))
        mu = mu + math.sin(self.phi) * np.asarray(e_z, dtype=complex)
        return mu


@dataclass(frozen=True)
class RingSpec:
    """Regular polygon of emitters with a shared orientation pattern."""

    n_sites: int
    spacing: float
    pol: PolSpec = field(default_factory=PolSpec)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    normal: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.n_sites < 2:
            raise InvalidSpecError(f"a ring needs at least 2 sites, got {self.n_sites}")
        if self.spacing <= 0.0:
            raise InvalidSpecError(f"spacing must be positive, got {self.spacing}")

    @property
    def radius(self) -> float:
        """Circumradius R with nearest-neighbor distance d = 2 R sin(pi/N)."""
        return self.spacing / (2.0 * math.sin(math.pi / self.n_sites))


@dataclass(frozen=True)
class RingFrame:
    """Geometry bookkeeping for one ring inside a :class:`DipoleArray`.

    ``angles`` holds each site's azimuth in the ring plane, measured from
    the in-plane basis vector ``u`` counterclockwise about ``normal``.
    """

    center: tuple[float, float, float]
    normal: tuple[float, float, float]
    u: tuple[float, float, float]
    v: tuple[float, float, float]
    radius: float
    pol: PolSpec
    angles: tuple[float, ...]
    site_offset: int

    @property
    def n_sites(self) -> int:
        return len(self.angles)

    def site_indices(self) -> np.ndarray:
        return np.arange(self.site_offset, self.site_offset + self.n_sites)

    def local_basis(self, angle: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u, v, n = map(np.asarray, (self.u, self.v, self.normal))
        e_r = math.cos(angle) * u + math.sin(angle) * v
        e_t = -math.sin(angle) * u + math.cos(angle) * v
        return e_r, e_t, n

    def site_position(self, angle: float, radius: float | None = None,
                      height: float = 0.0) -> np.ndarray:
        rho = self.radius if radius is None else radius
        u, v, n = map(np.asarray, (self.u, self.v, self.normal))
        return (np.asarray(self.center)
                + rho * (math.cos(angle) * u + math.sin(angle) * v)
                + height * n)


@dataclass
class DipoleArray:
    """Positions and unit orientations of all emitters in a layout.

    positions       (N, 3) float, units of lambda0
    orientations    (N, 3) complex, unit modulus each
    ring_membership (N,) int, contiguous ring ids starting at 0
    """

    positions: np.ndarray
    orientations: np.ndarray
    ring_membership: np.ndarray
    k0: float = DEFAULT_K0
    gamma0: float = DEFAULT_GAMMA0
    rings: tuple[RingFrame, ...] = ()

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.orientations = np.asarray(self.orientations, dtype=complex)
        self.ring_membership = np.asarray(self.ring_membership, dtype=int)
        if self.positions.shape != (self.n_sites, 3):
            raise InvalidSpecError("positions must be (N, 3)")
        if self.orientations.shape != self.positions.shape:
            raise InvalidSpecError("orientations must match positions")
        norms = np.linalg.norm(self.orientations, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise InvalidSpecError("orientations must have unit modulus")
        _check_distinct(self.positions)
        rm = self.ring_membership
        if rm.size and sorted(set(rm.tolist())) != list(range(rm.max() + 1)):
            raise InvalidSpecError("ring ids must be contiguous from 0")
        for arr in (self.positions, self.orientations, self.ring_membership):
            arr.setflags(write=False)

    @property
    def n_sites(self) -> int:
        return len(self.ring_membership)

    @property
    def n_rings(self) -> int:
        return int(self.ring_membership.max()) + 1 if self.n_sites else 0

    def ring_sites(self, ring_id: int) -> np.ndarray:
        """Site indices belonging to one ring."""
        if ring_id < 0 or ring_id >= self.n_rings:
            raise ValueError(f"no ring with id {ring_id}")
        return np.nonzero(self.ring_membership == ring_id)[0]

    def ring_center(self, ring_id: int) -> np.ndarray:
        if self.rings:
            return np.asarray(self.rings[ring_id].center)
        return self.positions[self.ring_sites(ring_id)].mean(axis=0)


def _check_distinct(positions: np.ndarray):
    n = len(positions)
    if n < 2:
        return
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    dist[np.diag_indices(n)] = np.inf
    dmin = dist.min()
    if dmin < MIN_SITE_DISTANCE:
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        raise GeometryError(
            f"sites {i} and {j} are {dmin:.3e} apart (< {MIN_SITE_DISTANCE:.0e})"
        )


def _ring_sites(spec: RingSpec, center, angles, site_offset: int):
    """Positions, orientations and frame of one ring at given site azimuths."""
    normal = _as_unit(spec.normal)
    u, v = _plane_basis(normal)
    frame = RingFrame(
        center=tuple(np.asarray(center, dtype=float)),
        normal=tuple(normal),
        u=tuple(u),
        v=tuple(v),
        radius=spec.radius,
        pol=spec.pol,
        angles=tuple(float(a) for a in angles),
        site_offset=site_offset,
    )
    pos = np.empty((len(angles), 3))
    ori = np.empty((len(angles), 3), dtype=complex)
    for j, ang in enumerate(angles):
        pos[j] = frame.site_position(ang)
        ori[j] = spec.pol.orientation(*frame.local_basis(ang))
    return pos, ori, frame


def build_ring(spec: RingSpec, k0: float = DEFAULT_K0,
               gamma0: float = DEFAULT_GAMMA0) -> DipoleArray:
    """Regular N-gon with site j at azimuth 2 pi j / N and symmetric dipoles."""
    angles = TWO_PI * np.arange(spec.n_sites) / spec.n_sites
    pos, ori, frame = _ring_sites(spec, spec.center, angles, 0)
    return DipoleArray(pos, ori, np.zeros(spec.n_sites, dtype=int),
                       k0=k0, gamma0=gamma0, rings=(frame,))


def _facing_ring_angles(n_sites: int, facing_angle: float, toward: np.ndarray,
                        center, spec: RingSpec) -> np.ndarray:
    """Site azimuths with one site at ``facing_angle`` and index 0 farthest
    from the point ``toward`` (cyclic order preserved)."""
    angles = facing_angle + TWO_PI * np.arange(n_sites) / n_sites
    normal = _as_unit(spec.normal)
    u, v = _plane_basis(normal)
    center = np.asarray(center, dtype=float)
    pos = (center[None, :]
           + spec.radius * (np.cos(angles)[:, None] * u[None, :]
                            + np.sin(angles)[:, None] * v[None, :]))
    dist = np.linalg.norm(pos - np.asarray(toward)[None, :], axis=1)
    k_far = int(np.argmax(dist))
    return np.roll(angles, -k_far)


def two_ring_layout(spec1: RingSpec, spec2: RingSpec, gap: float,
                    k0: float = DEFAULT_K0,
                    gamma0: float = DEFAULT_GAMMA0) -> DipoleArray:
    """Two coplanar rings in site-site configuration.

    Exactly one site of each ring faces the other at separation ``gap``;
    the centers lie on the ring-plane axis through those sites.  Within
    each ring, site index 0 is the site farthest from the companion ring.
    The frame of ``spec1`` (center, normal) defines the system placement;
    ``spec2.center`` is ignored and ``spec2.normal`` must be parallel.
    """
    if gap <= 0.0:
        raise GeometryError(f"gap must be positive, got {gap}")
    n1 = _as_unit(spec1.normal)
    n2 = _as_unit(spec2.normal)
    if abs(abs(n1 @ n2) - 1.0) > 1e-12:
        raise GeometryError("rings must be coplanar (parallel normals)")

    c1 = np.asarray(spec1.center, dtype=float)
    u, _ = _plane_basis(n1)
    separation = spec1.radius + spec2.radius + gap
    c2 = c1 + separation * u
    spec2 = replace(spec2, center=tuple(c2), normal=tuple(n1))

    ang1 = _facing_ring_angles(spec1.n_sites, 0.0, c2, c1, spec1)
    ang2 = _facing_ring_angles(spec2.n_sites, math.pi, c1, c2, spec2)

    pos1, ori1, frame1 = _ring_sites(spec1, c1, ang1, 0)
    pos2, ori2, frame2 = _ring_sites(spec2, c2, ang2, spec1.n_sites)

    membership = np.concatenate([np.zeros(spec1.n_sites, dtype=int),
                                 np.ones(spec2.n_sites, dtype=int)])
    return DipoleArray(np.vstack([pos1, pos2]), np.vstack([ori1, ori2]),
                       membership, k0=k0, gamma0=gamma0,
                       rings=(frame1, frame2))


def _min_cross_distance(pos_a: np.ndarray, pos_b: np.ndarray) -> float:
    diff = pos_a[:, None, :] - pos_b[None, :, :]
    return float(np.linalg.norm(diff, axis=-1).min())


def lhc_layout(n_inner: int, n_outer: int, n_rings_outer: int, d: float,
               pol: PolSpec, k0: float = DEFAULT_K0,
               gamma0: float = DEFAULT_GAMMA0) -> DipoleArray:
    """Central ring surrounded by evenly spaced outer rings.

    The central ring (ring id 0) has ``n_inner`` sites at spacing ``d`` with
    one site at azimuth 0.  Each of the ``n_rings_outer`` outer rings has
    ``n_outer`` sites at the same spacing, sits at azimuth 2 pi q / n_rings_outer,
    is rotated so one of its sites points back at the center, and is pushed
    in until its minimal site-to-site distance from the central ring is ``d``.
    """
    if min(n_inner, n_outer, n_rings_outer) < 1:
        raise InvalidSpecError("all ring counts must be positive")
    if d <= 0.0:
        raise InvalidSpecError(f"spacing must be positive, got {d}")

    inner_spec = RingSpec(n_inner, d, pol)
    outer_spec = RingSpec(n_outer, d, pol)
    inner = build_ring(inner_spec, k0=k0, gamma0=gamma0)

    r_in, r_out = inner_spec.radius, outer_spec.radius

    def outer_positions(azimuth: float, separation: float):
        center = separation * np.array([math.cos(azimuth), math.sin(azimuth), 0.0])
        spec_q = replace(outer_spec, center=tuple(center))
        angles = _facing_ring_angles(n_outer, azimuth + math.pi,
                                     np.zeros(3), center, spec_q)
        return _ring_sites(spec_q, center, angles, 0), center

    def min_gap(azimuth: float, separation: float) -> float:
        (pos, _, _), _ = outer_positions(azimuth, separation)
        return _min_cross_distance(inner.positions, pos)

    positions = [inner.positions]
    orientations = [inner.orientations]
    frames = list(inner.rings)
    membership = [np.zeros(n_inner, dtype=int)]
    offset = n_inner
    centers = []
    for q in range(n_rings_outer):
        azimuth = TWO_PI * q / n_rings_outer
        separation = r_in + r_out + d
        # with a central site on the outer ring's azimuth the face-to-face
        # distance is exactly d; otherwise pull the ring in until it is
        if min_gap(azimuth, separation) > d + 1e-13:
            lo, hi = r_in + r_out, separation
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if min_gap(azimuth, mid) < d:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-14:
                    break
            separation = hi
        (pos, ori, frame), center = outer_positions(azimuth, separation)
        for prev in centers:
            if np.linalg.norm(center - prev) < 2.0 * r_out:
                raise GeometryError(
                    f"outer rings overlap: centers "
                    f"{np.linalg.norm(center - prev):.4f} apart with "
                    f"radius {r_out:.4f}"
                )
        centers.append(center)
        frame = replace(frame, site_offset=offset)
        positions.append(pos)
        orientations.append(ori)
        frames.append(frame)
        membership.append(np.full(n_outer, q + 1, dtype=int))
        offset += n_outer

    try:
        return DipoleArray(np.vstack(positions), np.vstack(orientations),
                           np.concatenate(membership), k0=k0, gamma0=gamma0,
                           rings=tuple(frames))
    except GeometryError as err:
        raise GeometryError(f"outer rings overlap: {err}") from err


def apply_disorder(array: DipoleArray, kind: str, max_shift: float,
                   seed: int) -> DipoleArray:
    """Independent uniform random site displacements within each ring.

    angular   along the ring arc (radius preserved)
    radial    along the local outward radius
    vertical  along the ring normal (in-plane coordinates preserved)

    Orientations follow the local frame at the displaced azimuth, which
    leaves them unchanged for radial and vertical shifts.  Deterministic
    for a fixed seed.
    """
    if kind not in DISORDER_KINDS:
        raise ValueError(f"unknown disorder kind {kind!r}, expected one of {DISORDER_KINDS}")
    if max_shift < 0.0:
        raise ValueError(f"max_shift must be >= 0, got {max_shift}")
    if not array.rings:
        raise InvalidSpecError("array carries no ring frames to disorder")

    rng = np.random.default_rng(seed)
    shifts = rng.uniform(-max_shift, max_shift, size=array.n_sites)
    if max_shift == 0.0:
        shifts = np.zeros(array.n_sites)

    positions = np.array(array.positions)
    orientations = np.array(array.orientations)
    new_frames = []
    for frame in array.rings:
        idx = frame.site_indices()
        new_angles = []
        for local_j, site in enumerate(idx):
            ang = frame.angles[local_j]
            rho, height = frame.radius, 0.0
            if kind == "angular":
                ang = ang + shifts[site] / frame.radius
            elif kind == "radial":
                rho = frame.radius + shifts[site]
            else:
                height = shifts[site]
            positions[site] = frame.site_position(ang, rho, height)
            orientations[site] = frame.pol.orientation(*frame.local_basis(ang))
            new_angles.append(ang)
        new_frames.append(replace(frame, angles=tuple(new_angles)))

    return DipoleArray(positions, orientations, np.array(array.ring_membership),
                       k0=array.k0, gamma0=array.gamma0, rings=tuple(new_frames))


def layout_to_json(array: DipoleArray) -> dict:
    """JSON-serializable layout description, lengths in lambda0."""
    sites = []
    for p, mu, ring in zip(array.positions, array.orientations,
                           array.ring_membership):
        sites.append({
            "x": p[0], "y": p[1], "z": p[2],
            "ux_re": mu[0].real, "ux_im": mu[0].imag,
            "uy_re": mu[1].real, "uy_im": mu[1].imag,
            "uz_re": mu[2].real, "uz_im": mu[2].imag,
            "ring": int(ring),
        })
    rings = []
    for frame in array.rings:
        rings.append({
            "center": list(frame.center),
            "normal": list(frame.normal),
            "radius": frame.radius,
            "n_sites": frame.n_sites,
        })
    return {"sites": sites, "rings": rings, "k0": array.k0,
            "gamma0": array.gamma0}


def save_layout(array: DipoleArray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(layout_to_json(array), fh, indent=1)
