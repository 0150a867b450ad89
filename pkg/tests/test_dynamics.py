import math

import numpy as np
import pytest

from nanoring import (PolSpec, RingSpec, analytic_ring_spectrum, build_ring,
                      coupling_rates, default_decay_times, diagonalize,
                      disorder_decay_study, effective_hamiltonian, evolve,
                      farthest_site, gaussian_wavepacket, magic_angle,
                      mode_state, ring_population, site_basis_state,
                      transfer_fidelity, transfer_population, two_ring_layout)
from nanoring.dynamics import population_trace

TANGENTIAL = PolSpec.tangential()


def ring_hamiltonian(n, d, pol):
    arr = build_ring(RingSpec(n, d, pol))
    return arr, effective_hamiltonian(coupling_rates(arr))


class TestEvolve:
    def test_single_atom_exponential_decay(self):
        h = np.array([[-0.5j]])
        psi0 = site_basis_state(
            build_ring(RingSpec(2, 0.2, TANGENTIAL)), [1.0, 0.0])
        # single-site decay on a 1x1 generator
        from nanoring import StateVector
        psi0 = StateVector(np.array([1.0 + 0j]), (0,))
        times = np.linspace(0.0, 5.0, 11)
        states = evolve(h, psi0, times)
        pops = population_trace(states)
        assert np.allclose(pops, np.exp(-times), atol=1e-12)

    def test_eigenstate_decays_at_mode_rate(self):
        spec = RingSpec(8, 0.15, PolSpec.tangential(0.4))
        arr = build_ring(spec)
        h = effective_hamiltonian(coupling_rates(arr))
        modes = diagonalize(h)
        k = 2
        psi0 = mode_state(arr, modes, k)
        times = np.linspace(0.0, 3.0, 61)
        pops = population_trace(evolve(h, psi0, times))
        assert np.allclose(pops, np.exp(-modes.rates[k] * times), atol=1e-10)
        # fitted rate agrees to 1e-6 relative
        slope = np.polyfit(times, np.log(pops), 1)[0]
        assert math.isclose(-slope, modes.rates[k], rel_tol=1e-6)
        # the phase rotates at the mode shift
        s1 = evolve(h, psi0, [1.0])[0]
        phase = s1.amplitudes[0] / psi0.amplitudes[0]
        expected = np.exp((-1j * modes.shifts[k] - 0.5 * modes.rates[k]) * 1.0)
        assert abs(phase - expected) < 1e-10

    def test_matches_rk4_integrator(self):
        arr, h = ring_hamiltonian(7, 0.15, PolSpec.tangential(0.5))
        rng = np.random.default_rng(3)
        amp = rng.normal(size=7) + 1j * rng.normal(size=7)
        amp /= np.linalg.norm(amp)
        psi0 = site_basis_state(arr, amp)
        t_end = 1.0
        state = evolve(h, psi0, [0.0, t_end])[1]

        dt = 1e-3
        y = amp.astype(complex)
        rhs = lambda v: -1j * (h @ v)
        for _ in range(int(round(t_end / dt))):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * dt * k1)
            k3 = rhs(y + 0.5 * dt * k2)
            k4 = rhs(y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        assert np.abs(state.amplitudes - y).max() < 1e-8

    def test_norm_never_increases(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n = int(rng.integers(3, 11))
            d = float(rng.uniform(0.05, 0.6))
            phi = float(rng.uniform(0.0, math.pi / 2))
            arr, h = ring_hamiltonian(n, d, PolSpec.tangential(phi))
            amp = rng.normal(size=n) + 1j * rng.normal(size=n)
            amp /= np.linalg.norm(amp)
            states = evolve(h, site_basis_state(arr, amp),
                            np.linspace(0.0, 10.0, 40))
            norms = np.array([s.norm for s in states])
            assert np.all(np.diff(norms) <= 1e-10)

    def test_dissipation_rate_matches_gamma_quadratic_form(self):
        arr, h = ring_hamiltonian(6, 0.1, TANGENTIAL)
        c = coupling_rates(arr)
        rng = np.random.default_rng(5)
        amp = rng.normal(size=6) + 1j * rng.normal(size=6)
        amp /= np.linalg.norm(amp)
        psi0 = site_basis_state(arr, amp)
        dt = 1e-6
        s0, s1 = evolve(h, psi0, [0.0, dt])
        dndt = (s1.population - s0.population) / dt
        expected = -float(np.real(amp.conj() @ c.gamma @ amp))
        assert math.isclose(dndt, expected, rel_tol=1e-4)

    def test_defective_generator_falls_back_to_expm(self):
        h = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        from nanoring import StateVector
        psi0 = StateVector(np.array([0.0, 1.0 + 0j]), (0, 1))
        with pytest.warns(UserWarning, match="matrix-exponential"):
            states = evolve(h, psi0, [0.0, 2.0])
        # nilpotent generator: psi(t) = (1 - i H t) psi0
        assert np.allclose(states[1].amplitudes, [-2j, 1.0], atol=1e-12)

    def test_time_grid_validation(self):
        arr, h = ring_hamiltonian(4, 0.2, TANGENTIAL)
        psi0 = site_basis_state(arr, [1, 0, 0, 0])
        with pytest.raises(ValueError):
            evolve(h, psi0, [1.0, 0.5])
        with pytest.raises(ValueError):
            evolve(h, psi0, [])
        with pytest.raises(ValueError):
            evolve(h[:3, :3], psi0, [0.0, 1.0])


class TestGaussianWavepacket:
    def setup_method(self):
        pol = TANGENTIAL
        self.system = two_ring_layout(RingSpec(9, 0.1, pol),
                                      RingSpec(16, 0.1, pol), 0.12)

    def test_normalized(self):
        for dtheta in (0.1, 1.0, 10.0):
            psi = gaussian_wavepacket(self.system, 0, 3, 0, dtheta)
            assert math.isclose(psi.norm, 1.0, abs_tol=1e-12)

    def test_wide_limit_reduces_to_spin_wave(self):
        psi = gaussian_wavepacket(self.system, 0, 3, 0, 1e6)
        spec = RingSpec(9, 0.1, TANGENTIAL)
        modes = analytic_ring_spectrum(spec)
        target = np.zeros(self.system.n_sites, dtype=complex)
        # compare populations: the spin wave is uniform over ring sites
        sites = self.system.ring_sites(0)
        pops = np.abs(psi.amplitudes[sites]) ** 2
        assert np.allclose(pops, 1.0 / 9.0, atol=1e-9)
        assert np.allclose(np.abs(psi.amplitudes[self.system.ring_sites(1)]),
                           0.0)

    def test_narrow_limit_is_single_site(self):
        psi = gaussian_wavepacket(self.system, 0, 3, 0, 1e-4)
        assert math.isclose(abs(psi.amplitudes[0]), 1.0, abs_tol=1e-12)

    def test_invalid_width(self):
        with pytest.raises(ValueError):
            gaussian_wavepacket(self.system, 0, 3, 0, 0.0)

    def test_site_must_belong_to_ring(self):
        with pytest.raises(ValueError):
            gaussian_wavepacket(self.system, 0, 3, 20, 1.0)


class TestRingPopulation:
    def test_disjoint_supports(self):
        psi = gaussian_wavepacket(
            two_ring_layout(RingSpec(8, 0.1, TANGENTIAL),
                            RingSpec(8, 0.1, TANGENTIAL), 0.15),
            0, 2, 0, 1.0)
        assert ring_population(psi, 1) == 0.0
        assert math.isclose(ring_population(psi, 0), 1.0, abs_tol=1e-12)

    def test_populations_sum_to_norm(self):
        system = two_ring_layout(RingSpec(8, 0.1, TANGENTIAL),
                                 RingSpec(6, 0.1, TANGENTIAL), 0.15)
        rng = np.random.default_rng(2)
        amp = rng.normal(size=14) + 1j * rng.normal(size=14)
        psi = site_basis_state(system, amp)
        total = ring_population(psi, 0) + ring_population(psi, 1)
        assert math.isclose(total, psi.population, rel_tol=1e-12)


class TestTransferFidelity:
    def test_initially_negligible(self):
        system = two_ring_layout(RingSpec(9, 0.1, TANGENTIAL),
                                 RingSpec(16, 0.1, TANGENTIAL), 0.12)
        f = transfer_fidelity(system, 3, 2 * math.pi, [0.0])
        assert f[0] < 1e-12

    def test_bounded_by_one(self):
        system = two_ring_layout(RingSpec(8, 0.1, TANGENTIAL),
                                 RingSpec(8, 0.1, TANGENTIAL), 0.12)
        f = transfer_fidelity(system, 3, 2 * math.pi,
                              np.linspace(0.0, 50.0, 201))
        assert np.all(f >= 0.0)
        assert np.all(f <= 1.0 + 1e-12)

    def test_momentum_inverts_on_transfer(self):
        # the packet arriving in the far ring matches the -m target far
        # better than the +m one at the first transfer maximum
        pol = TANGENTIAL
        system = two_ring_layout(RingSpec(10, 0.1, pol),
                                 RingSpec(10, 0.1, pol), 0.12)
        times = np.linspace(0.0, 50.0, 501)
        m = 3
        f_minus = transfer_fidelity(system, m, 2 * math.pi, times)

        start = farthest_site(system, 0, from_ring=1)
        psi0 = gaussian_wavepacket(system, 0, m, start, 2 * math.pi)
        h = effective_hamiltonian(coupling_rates(system))
        states = evolve(h, psi0, times)
        targets = np.column_stack([
            gaussian_wavepacket(system, 1, +m, int(k), 2 * math.pi).amplitudes
            for k in system.ring_sites(1)])
        amps = np.column_stack([s.amplitudes for s in states])
        f_plus = np.abs(targets.conj().T @ amps).max(axis=0)

        peak = None
        for i in range(1, len(times) - 1):
            if (f_minus[i] > f_minus[i - 1] and f_minus[i] >= f_minus[i + 1]
                    and f_minus[i] > 0.2):
                peak = i
                break
        assert peak is not None
        assert f_minus[peak] > f_plus[peak]

    def test_equal_rings_magic_angle_transfer_dip(self):
        # equal rings: ring-to-ring population transfer collapses around
        # the magic orientation, unlike at neighboring tilts
        phi_star = magic_angle(1.0)
        times = np.linspace(0.0, 150.0, 751)
        pops = {}
        for phi in (phi_star - 0.3, phi_star, phi_star + 0.3):
            pol = PolSpec.tangential(phi)
            system = two_ring_layout(RingSpec(10, 0.1, pol),
                                     RingSpec(10, 0.1, pol), 0.12)
            pops[phi] = transfer_population(system, 5, 2 * math.pi, times).max()
        assert pops[phi_star] < pops[phi_star - 0.3]
        assert pops[phi_star] < pops[phi_star + 0.3]


class TestDisorderDecayStudy:
    def test_zero_shift_matches_unperturbed(self):
        spec = RingSpec(6, 0.3, PolSpec.transverse())
        times = default_decay_times(n_points=30, t_max=10.0)
        mean, ref = disorder_decay_study(spec, "radial", 0.0, n_real=3,
                                         seed=1, times=times)
        assert np.allclose(mean.population, ref.population, atol=1e-12)
        modes = analytic_ring_spectrum(spec)
        assert np.allclose(ref.population, np.exp(-modes.rates[0] * times),
                           atol=1e-10)

    def test_population_starts_at_one(self):
        spec = RingSpec(6, 0.3, PolSpec.transverse())
        mean, ref = disorder_decay_study(spec, "angular", 0.05, n_real=5,
                                         seed=3,
                                         times=default_decay_times(20, t_max=5.0))
        assert math.isclose(mean.population[0], 1.0, abs_tol=1e-12)
        assert math.isclose(ref.population[0], 1.0, abs_tol=1e-12)

    def test_deterministic_for_fixed_seed(self):
        spec = RingSpec(6, 0.4, PolSpec.transverse())
        times = default_decay_times(15, t_max=20.0)
        a, _ = disorder_decay_study(spec, "radial", 0.1, n_real=8, seed=9,
                                    times=times)
        b, _ = disorder_decay_study(spec, "radial", 0.1, n_real=8, seed=9,
                                    times=times)
        assert np.array_equal(a.population, b.population)

    def test_requires_at_least_one_realization(self):
        with pytest.raises(ValueError):
            disorder_decay_study(RingSpec(6, 0.4, PolSpec.transverse()),
                                 "radial", 0.1, n_real=0)
