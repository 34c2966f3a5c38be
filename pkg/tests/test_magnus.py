import numpy as np
import pytest

from helpers import expm_eigh, random_hermitian

from sliceprop.errors import AmplitudeBoundError, SamplingParityError, ShapeError
from sliceprop.hamiltonian import (
    ControlAmplitudes,
    ControlSystem,
    Quadrature,
    build_exponent_batch,
)
from sliceprop.magnus import (
    EffectiveSystem,
    build_effective_system,
    build_magnus_exponent_batch,
    commutator,
    magnus_coefficients,
    magnus_spectral_bound,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def random_system(rng, dim, n_controls):
    return ControlSystem(random_hermitian(rng, dim),
                         [random_hermitian(rng, dim) for _ in range(n_controls)])


def direct_exponent(system, c1, c2, c3, dt):
    """Straightforward dense evaluation of the doubled-step exponent.

    The +i orientation of the commutator corrections is the one that
    cancels the second-order defect; test_local_truncation_order below
    pins it against an order measurement.
    """
    g = 2 * dt * system.drift.astype(complex)
    for k, h in enumerate(system.controls):
        g = g + dt * (c1[k] + 4 * c2[k] + c3[k]) / 3.0 * h
        g = g + 1j * dt * dt / 3.0 * (c3[k] - c1[k]) * commutator(system.drift, h)
    n = system.n_controls
    for k in range(n):
        for kp in range(k + 1, n):
            w = c1[k] * c3[kp] - c3[k] * c1[kp]
            g = g + 1j * dt * dt / 3.0 * w * commutator(system.controls[k],
                                                        system.controls[kp])
    return g


class TestCommutator:
    def test_known_values(self):
        assert np.array_equal(commutator(SIGMA_X, SIGMA_X), np.zeros((2, 2)))
        assert np.allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z,
                           rtol=0, atol=1e-15)
        assert np.array_equal(commutator(np.eye(3), np.arange(9).reshape(3, 3)),
                              np.zeros((3, 3)))

    def test_antisymmetry(self, rng):
        a, b = random_hermitian(rng, 4), random_hermitian(rng, 4)
        assert np.allclose(commutator(a, b), -commutator(b, a), rtol=0, atol=1e-14)

    def test_rejects_mismatch(self):
        with pytest.raises(ShapeError):
            commutator(np.eye(2), np.eye(3))
        with pytest.raises(ShapeError):
            commutator(np.zeros((2, 3)), np.zeros((2, 3)))


class TestEffectiveSystem:
    @pytest.mark.parametrize("n,count", [(0, 0), (1, 2), (2, 5), (3, 9)])
    def test_effective_control_count(self, rng, n, count):
        eff = build_effective_system(random_system(rng, 3, n))
        assert eff.n_effective == count

    def test_ordering(self, rng):
        sys = random_system(rng, 2, 2)
        eff = build_effective_system(sys)
        h0, (h1, h2) = sys.drift, sys.controls
        expect = [h1, h2, 1j * commutator(h0, h1), 1j * commutator(h0, h2),
                  1j * commutator(h1, h2)]
        for got, want in zip(eff.effective_controls, expect):
            assert np.allclose(got, want, rtol=0, atol=1e-14)

    def test_stored_commutators_are_hermitian(self, rng):
        eff = build_effective_system(random_system(rng, 4, 3))
        for h in eff.effective_controls:
            assert np.abs(h - h.conj().T).max() < 1e-13

    def test_commutator_norms(self):
        eff = build_effective_system(ControlSystem(SIGMA_Z / 2, [SIGMA_X / 2]))
        # [sz/2, sx/2] = i sy / 2
        assert eff.drift_comm_norms == pytest.approx((0.5,))
        assert eff.cross_comm_norms == ()


class TestMagnusCoefficients:
    def test_constant_coefficients_kill_corrections(self):
        amps = ControlAmplitudes(np.full((5, 2), 0.3), dt=0.2)
        table = magnus_coefficients(amps)
        assert table.shape == (2, 5)
        assert np.allclose(table[:, :2], 0.2 * 2 * 0.3, rtol=0, atol=1e-16)
        assert np.array_equal(table[:, 2:], np.zeros((2, 3)))

    def test_single_control_ramp(self):
        dt = 0.4
        amps = ControlAmplitudes(np.array([[0.0], [0.5], [1.0]]), dt=dt)
        table = magnus_coefficients(amps)
        assert table.shape == (1, 2)
        assert table[0, 0] == pytest.approx(dt)  # (0 + 4*(1/2) + 1)/3 = 1
        assert table[0, 1] == pytest.approx(dt * dt / 3.0)

    def test_cross_term(self):
        dt = 0.4
        values = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
        table = magnus_coefficients(ControlAmplitudes(values, dt=dt))
        # cross column is (dt^2/3)(c1[0] c2[2] - c1[2] c2[0]) = dt^2/3
        assert table[0, 4] == pytest.approx(dt * dt / 3.0)

    def test_shared_endpoints(self):
        values = np.arange(5, dtype=float).reshape(5, 1) / 10.0
        table = magnus_coefficients(ControlAmplitudes(values, dt=1.0))
        assert table.shape == (2, 2)
        assert table[1, 0] == pytest.approx((0.2 + 4 * 0.3 + 0.4) / 3.0)

    def test_parity_errors(self):
        for pts in (1, 2, 4):
            with pytest.raises(SamplingParityError):
                magnus_coefficients(ControlAmplitudes(np.zeros((pts, 1)), dt=0.1))


class TestMagnusSpectralBound:
    def test_drift_only(self, rng):
        h0 = random_hermitian(rng, 3)
        eff = build_effective_system(ControlSystem(h0))
        amps = ControlAmplitudes(np.zeros((3, 0)), dt=0.2)
        from sliceprop.linalg import one_norm
        assert magnus_spectral_bound(eff, amps) == pytest.approx(0.4 * one_norm(h0))

    def test_commuting_controls(self):
        d1 = np.diag([1.0, -1.0]).astype(complex)
        d2 = np.diag([0.5, 0.25]).astype(complex)
        eff = build_effective_system(ControlSystem(np.eye(2, dtype=complex), [d1, d2]))
        amps = ControlAmplitudes(np.zeros((3, 2)), dt=0.3)
        norms_sum = 1.0 + 1.0 + 0.5
        assert magnus_spectral_bound(eff, amps) == pytest.approx(0.6 * norms_sum)

    def test_qubit_value(self):
        eff = build_effective_system(ControlSystem(SIGMA_Z / 2, [SIGMA_X / 2]))
        amps = ControlAmplitudes(np.zeros((3, 1)), dt=0.1)
        assert magnus_spectral_bound(eff, amps) == pytest.approx(0.2 + 0.02 / 3 * 0.5)


class TestMagnusExponentBatch:
    def test_matches_direct_evaluation(self, rng):
        sys = random_system(rng, 3, 2)
        eff = build_effective_system(sys)
        values = rng.uniform(-1, 1, size=(7, 2))
        amps = ControlAmplitudes(values, dt=0.11)
        g = build_magnus_exponent_batch(eff, amps).to_array()
        assert g.shape == (3, 3, 3)
        for j in range(3):
            expect = direct_exponent(sys, values[2 * j], values[2 * j + 1],
                                     values[2 * j + 2], 0.11)
            assert np.abs(g[j] - expect).max() < 1e-14

    def test_exponents_stay_hermitian(self, rng):
        eff = build_effective_system(random_system(rng, 4, 3))
        amps = ControlAmplitudes(rng.uniform(-1, 1, size=(9, 3)), dt=0.15)
        g = build_magnus_exponent_batch(eff, amps).to_array()
        beta = magnus_spectral_bound(eff, amps)
        assert np.abs(g - g.conj().transpose(0, 2, 1)).max() <= 1e-12 * beta

    def test_norms_stay_inside_bound(self, rng):
        from sliceprop.linalg import one_norm
        eff = build_effective_system(random_system(rng, 3, 2))
        amps = ControlAmplitudes(rng.uniform(-1, 1, size=(11, 2)), dt=0.2)
        beta = magnus_spectral_bound(eff, amps)
        g = build_magnus_exponent_batch(eff, amps)
        for j in range(g.count):
            assert one_norm(g.matrix(j)) <= beta + 1e-12

    def test_constant_coefficients_degenerate_to_midpoint(self, rng):
        sys = random_system(rng, 2, 2)
        eff = build_effective_system(sys)
        values = np.tile([0.4, -0.7], (5, 1))
        g_mag = build_magnus_exponent_batch(eff, ControlAmplitudes(values, dt=0.1))
        g_mid = build_exponent_batch(sys, ControlAmplitudes(values[:2], dt=0.2))
        assert np.abs(g_mag.to_array() - g_mid.to_array()).max() < 1e-15

    def test_isolated_drift_commutator(self, rng):
        # c = (-1, 0, 1) zeroes the three-point average, leaving only
        # 2dt H0 + i (2dt^2/3)[H0, H1]
        sys = random_system(rng, 3, 1)
        eff = build_effective_system(sys)
        dt = 0.3
        amps = ControlAmplitudes(np.array([[-1.0], [0.0], [1.0]]), dt=dt)
        g = build_magnus_exponent_batch(eff, amps).to_array()[0]
        expect = (2 * dt * sys.drift
                  + 1j * (2 * dt * dt / 3) * commutator(sys.drift, sys.controls[0]))
        assert np.abs(g - expect).max() < 1e-14

    def test_isolated_cross_term(self, rng):
        # zero drift and vanishing averages leave only the pair commutator
        h1, h2 = random_hermitian(rng, 3), random_hermitian(rng, 3)
        sys = ControlSystem(np.zeros((3, 3), dtype=complex), [h1, h2])
        eff = build_effective_system(sys)
        dt = 0.3
        values = np.array([[1.0, 0.0], [0.0, -0.25], [-1.0, 1.0]])
        g = build_magnus_exponent_batch(eff, ControlAmplitudes(values, dt=dt))
        expect = 1j * (dt * dt / 3) * commutator(h1, h2)
        assert np.abs(g.to_array()[0] - expect).max() < 1e-14

    def test_local_truncation_order(self):
        # One doubled step against a finely sliced reference: the
        # exponent must be accurate to O(dt^5), which only holds for the
        # +i commutator orientation (the opposite sign loses two orders).
        sys = ControlSystem(SIGMA_Z / 2, [SIGMA_X / 2])
        eff = build_effective_system(sys)
        errs = []
        for dt in (0.2, 0.1, 0.05):
            t = np.array([0.0, dt, 2 * dt])
            amps = ControlAmplitudes(np.cos(t)[:, None], dt=dt)
            g = build_magnus_exponent_batch(eff, amps).to_array()[0]
            u = expm_eigh(g)
            ref = np.eye(2, dtype=complex)
            n = 4000
            fine = 2 * dt / n
            for k in range(n):
                tk = (k + 0.5) * fine
                ref = expm_eigh(fine * (sys.drift + np.cos(tk) * sys.controls[0])) @ ref
            errs.append(np.abs(u - ref).max())
        order_a = np.log2(errs[0] / errs[1])
        order_b = np.log2(errs[1] / errs[2])
        assert order_a > 4.0
        assert order_b > 4.0

    def test_drift_only_system(self, rng):
        h0 = random_hermitian(rng, 2)
        eff = build_effective_system(ControlSystem(h0))
        amps = ControlAmplitudes(np.zeros((5, 0)), dt=0.25)
        g = build_magnus_exponent_batch(eff, amps)
        assert g.count == 2
        assert np.allclose(g.to_array(), np.broadcast_to(0.5 * h0, (2, 2, 2)),
                           rtol=0, atol=1e-15)

    def test_rejections(self, rng):
        eff = build_effective_system(random_system(rng, 2, 1))
        with pytest.raises(SamplingParityError):
            build_magnus_exponent_batch(eff, ControlAmplitudes(np.zeros((4, 1)), 0.1))
        with pytest.raises(AmplitudeBoundError):
            build_magnus_exponent_batch(eff, ControlAmplitudes([[1.0], [2.0], [0.0]], 0.1))
        with pytest.raises(ShapeError):
            build_magnus_exponent_batch(eff, ControlAmplitudes(np.zeros((3, 2)), 0.1))
