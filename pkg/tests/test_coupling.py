import math

import numpy as np
import pytest

from nanoring import (DipoleArray, PolSpec, RingSpec, SingularityError,
                      build_ring, coupling_rates, greens_tensor,
                      short_range_omega)

K0 = 2 * math.pi

# frozen values from an independent term-by-term transcription of the
# free-space dipole propagator (scripted once, cross-checked against the
# small- and large-separation limits)
G_X1_XX = 2.7635465813520725 + 0.6023373578795135j
G_X1_YY = -0.8414709848078965 + 0.5403023058681398j
TWO_ATOM_OMEGA = 2.5970938737257065   # unit z-dipoles, d = 0.1 lambda0
TWO_ATOM_GAMMA = 0.9226968483822753


def pair_array(separation, ori1=(0, 0, 1.0), ori2=(0, 0, 1.0)):
    pos = np.array([[0.0, 0.0, 0.0], [separation, 0.0, 0.0]])
    ori = np.array([ori1, ori2], dtype=complex)
    return DipoleArray(pos, ori, np.array([0, 0]))


class TestGreensTensor:
    def test_frozen_values_at_unit_argument(self):
        g = greens_tensor([1.0, 0.0, 0.0], k0=1.0)
        assert abs(g[0, 0] - G_X1_XX) < 1e-14
        assert abs(g[1, 1] - G_X1_YY) < 1e-14
        assert abs(g[2, 2] - G_X1_YY) < 1e-14
        off = g - np.diag(np.diag(g))
        assert np.abs(off).max() < 1e-15

    def test_even_in_separation(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            r = rng.normal(size=3)
            assert np.allclose(greens_tensor(r, K0), greens_tensor(-r, K0),
                               atol=1e-15)

    def test_far_field_asymptotics(self):
        # along x: the transverse component tends to e^{ix}/x, the
        # longitudinal one falls off as 1/x^2
        for x in (1e3, 1e5):
            g = greens_tensor([x, 0.0, 0.0], k0=1.0)
            assert abs(g[1, 1] - np.exp(1j * x) / x) < 2.0 / x**2
            assert abs(g[0, 0]) * x**2 < 2.5

    def test_singularity_raises(self):
        with pytest.raises(SingularityError):
            greens_tensor([0.0, 0.0, 0.0], K0)


class TestCouplingRates:
    def test_two_atom_frozen_values(self):
        c = coupling_rates(pair_array(0.1))
        assert math.isclose(c.omega[0, 1], TWO_ATOM_OMEGA, rel_tol=1e-12)
        assert math.isclose(c.gamma[0, 1], TWO_ATOM_GAMMA, rel_tol=1e-12)

    def test_dicke_limit(self):
        c = coupling_rates(pair_array(1e-4))
        assert math.isclose(c.gamma[0, 1], 1.0, abs_tol=1e-6)

    def test_diagonals(self):
        arr = build_ring(RingSpec(9, 0.2, PolSpec.tangential(0.4)))
        c = coupling_rates(arr)
        assert np.all(np.diag(c.omega) == 0.0)
        assert np.all(np.diag(c.gamma) == 1.0)
        assert np.trace(c.gamma) == 9.0

    def test_gamma_positive_semidefinite(self):
        for n, d in ((6, 0.05), (12, 0.1), (9, 0.7)):
            arr = build_ring(RingSpec(n, d, PolSpec.tangential(0.3)))
            c = coupling_rates(arr)
            assert np.linalg.eigvalsh(c.gamma).min() >= -1e-9

    def test_reciprocity_for_real_orientations(self):
        rng = np.random.default_rng(1)
        pos = rng.uniform(-0.5, 0.5, size=(6, 3))
        ori = rng.normal(size=(6, 3))
        ori /= np.linalg.norm(ori, axis=1)[:, None]
        arr = DipoleArray(pos, ori.astype(complex), np.zeros(6, dtype=int))
        c = coupling_rates(arr)
        assert np.allclose(c.omega, c.omega.T, atol=1e-14)
        assert np.allclose(c.gamma, c.gamma.T, atol=1e-14)

    def test_rotational_invariance(self):
        arr = build_ring(RingSpec(7, 0.13, PolSpec(0.6, 0.8, 0.5)))
        c1 = coupling_rates(arr)
        axis = np.array([1.0, 2.0, 0.5])
        axis /= np.linalg.norm(axis)
        angle = 1.234
        kx, ky, kz = axis
        cross = np.array([[0, -kz, ky], [kz, 0, -kx], [-ky, kx, 0]])
        rot = (np.eye(3) + math.sin(angle) * cross
               + (1 - math.cos(angle)) * cross @ cross)
        rotated = DipoleArray(arr.positions @ rot.T, arr.orientations @ rot.T,
                              np.array(arr.ring_membership))
        c2 = coupling_rates(rotated)
        assert np.allclose(c1.omega, c2.omega, atol=1e-12)
        assert np.allclose(c1.gamma, c2.gamma, atol=1e-12)

    def test_decay_envelope_beyond_ten_wavelengths(self):
        rs = np.linspace(10.0, 100.0, 25)
        for r in rs:
            c = coupling_rates(pair_array(r))
            x = K0 * r
            # |overlap| <= (1/x)(1 + 1/x + 1/x^2) for transverse dipoles
            bound = (1 + 1 / x + 1 / x**2) / x
            assert abs(c.omega[0, 1]) <= 0.75 * bound
            assert abs(c.gamma[0, 1]) <= 1.5 * bound
        far = coupling_rates(pair_array(100.0))
        assert abs(far.omega[0, 1]) < 2e-3
        assert abs(far.gamma[0, 1]) < 4e-3

    def test_coincident_sites_raise(self):
        from nanoring import GeometryError
        with pytest.raises((SingularityError, GeometryError)):
            coupling_rates(pair_array(0.0))


class TestShortRangeOmega:
    def test_perpendicular_parallel_dipoles(self):
        r = 0.01 / K0
        sr = short_range_omega(pair_array(r))
        expected = 3.0 / (4.0 * (K0 * r) ** 3)
        assert math.isclose(sr[0, 1], expected, rel_tol=1e-12)

    def test_collinear_dipoles_are_minus_twice_perpendicular(self):
        r = 0.01 / K0
        arr = pair_array(r, ori1=(1.0, 0, 0), ori2=(1.0, 0, 0))
        sr = short_range_omega(arr)
        expected = -6.0 / (4.0 * (K0 * r) ** 3)
        assert math.isclose(sr[0, 1], expected, rel_tol=1e-12)

    def test_matches_full_coupling_in_near_field(self):
        r = 0.01 / K0
        for ori in ((0, 0, 1.0), (1.0, 0, 0), (0, 1.0, 0)):
            arr = pair_array(r, ori1=ori, ori2=ori)
            full = coupling_rates(arr).omega[0, 1]
            sr = short_range_omega(arr)[0, 1]
            assert abs(sr - full) / abs(full) < 0.01
