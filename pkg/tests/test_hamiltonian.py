import json

import numpy as np
import pytest

from helpers import random_hermitian

from sliceprop.errors import (
    AmplitudeBoundError,
    ConfigError,
    HermiticityError,
    SamplingParityError,
    ShapeError,
)
from sliceprop.hamiltonian import (
    AmplitudeViolation,
    ControlAmplitudes,
    ControlSystem,
    Quadrature,
    build_exponent_batch,
    load_manifest,
    matrix_from_pairs,
    matrix_to_pairs,
    spectral_bound,
    validate_amplitudes,
)
from sliceprop.linalg import Precision, one_norm

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def amps_of(values, dt=0.1):
    return ControlAmplitudes(np.atleast_2d(values), dt)


class TestControlSystem:
    def test_caches_norms(self, rng):
        h0 = random_hermitian(rng, 3)
        h1 = random_hermitian(rng, 3)
        sys = ControlSystem(h0, [h1])
        assert sys.dim == 3 and sys.n_controls == 1
        assert sys.norms == (one_norm(h0), one_norm(h1))

    def test_owns_storage(self, rng):
        h0 = random_hermitian(rng, 2)
        sys = ControlSystem(h0)
        h0[0, 0] = 99.0
        assert sys.drift[0, 0] != 99.0

    def test_rejects_non_hermitian(self, rng):
        with pytest.raises(HermiticityError):
            ControlSystem(np.array([[0, 1], [0, 0]], dtype=complex))
        with pytest.raises(HermiticityError):
            ControlSystem(SIGMA_Z, [np.array([[0, 1j], [1j, 0]])])

    def test_accepts_tiny_asymmetry(self):
        h = SIGMA_X + np.array([[0, 1e-14], [0, 0]])
        ControlSystem(h)  # below the 1e-12 relative tolerance

    def test_rejects_bad_shapes(self):
        with pytest.raises(ShapeError):
            ControlSystem(np.zeros((2, 3)))
        with pytest.raises(ShapeError):
            ControlSystem(SIGMA_Z, [np.eye(3)])


class TestControlAmplitudes:
    def test_basic(self):
        a = ControlAmplitudes([[0.1, 0.2], [0.3, 0.4]], dt=0.5)
        assert a.pts == 2 and a.n_controls == 2 and a.dt == 0.5
        assert not a.values.flags.writeable

    def test_rejects_bad_dt(self):
        for dt in (0.0, -1.0):
            with pytest.raises(ConfigError):
                ControlAmplitudes(np.zeros((2, 1)), dt)

    def test_rejects_bad_shape(self):
        with pytest.raises(ShapeError):
            ControlAmplitudes(np.zeros(4), 0.1)


class TestValidateAmplitudes:
    def test_ok(self):
        assert validate_amplitudes(amps_of(np.zeros((4, 2)))) is None
        assert validate_amplitudes(amps_of([[1.0, -1.0]])) is None  # closed interval

    def test_reports_first_violation(self):
        v = np.zeros((5, 2))
        v[3, 0] = 1.5
        v[4, 1] = -2.0
        assert validate_amplitudes(amps_of(v)) == AmplitudeViolation(3, 0, 1.5)

    def test_non_finite_is_a_violation(self):
        v = np.zeros((2, 1))
        v[1, 0] = np.nan
        report = validate_amplitudes(amps_of(v))
        assert (report.sample, report.control) == (1, 0)


class TestSpectralBound:
    def test_drift_only(self):
        assert spectral_bound(ControlSystem(SIGMA_Z / 2), 0.1) == pytest.approx(0.05)

    def test_zero_hamiltonians(self):
        assert spectral_bound(ControlSystem(np.zeros((2, 2), dtype=complex)), 1.0) == 0.0

    def test_three_paulis(self):
        sys = ControlSystem(SIGMA_Z / 2, [SIGMA_X / 2, SIGMA_Y / 2])
        assert spectral_bound(sys, 1.0) == pytest.approx(1.5)


class TestMidpointExpansion:
    def test_constant_coefficients(self, rng):
        h0, h1 = random_hermitian(rng, 2), random_hermitian(rng, 2)
        sys = ControlSystem(h0, [h1])
        amps = ControlAmplitudes(np.full((6, 1), 0.7), dt=0.2)
        g = build_exponent_batch(sys, amps).to_array()
        expect = 0.2 * (h0 + 0.7 * h1)
        assert np.allclose(g, np.broadcast_to(expect, (6, 2, 2)), rtol=0, atol=1e-15)

    def test_matches_direct_sum(self, rng):
        sys = ControlSystem(random_hermitian(rng, 4),
                            [random_hermitian(rng, 4) for _ in range(3)])
        values = rng.uniform(-1, 1, size=(11, 3))
        amps = ControlAmplitudes(values, dt=0.05)
        g = build_exponent_batch(sys, amps).to_array()
        for k in range(11):
            expect = 0.05 * (sys.drift + sum(values[k, i] * sys.controls[i]
                                             for i in range(3)))
            assert np.abs(g[k] - expect).max() < 1e-14

    def test_norm_bound_invariant(self, rng):
        sys = ControlSystem(random_hermitian(rng, 3),
                            [random_hermitian(rng, 3) for _ in range(2)])
        amps = ControlAmplitudes(rng.uniform(-1, 1, size=(40, 2)), dt=0.3)
        beta = spectral_bound(sys, amps.dt)
        g = build_exponent_batch(sys, amps)
        for k in range(g.count):
            assert one_norm(g.matrix(k)) <= beta + 1e-12

    def test_slices_stay_hermitian(self, rng):
        sys = ControlSystem(random_hermitian(rng, 3), [random_hermitian(rng, 3)])
        amps = ControlAmplitudes(rng.uniform(-1, 1, size=(7, 1)), dt=0.2)
        g = build_exponent_batch(sys, amps).to_array()
        assert np.abs(g - g.conj().transpose(0, 2, 1)).max() < 1e-14

    def test_drift_only_system(self, rng):
        h0 = random_hermitian(rng, 2)
        g = build_exponent_batch(ControlSystem(h0),
                                 ControlAmplitudes(np.zeros((5, 0)), dt=0.4))
        assert g.count == 5
        assert np.allclose(g.to_array(), np.broadcast_to(0.4 * h0, (5, 2, 2)),
                           rtol=0, atol=1e-15)

    def test_fp32_output(self, rng):
        sys = ControlSystem(random_hermitian(rng, 2))
        g = build_exponent_batch(sys, ControlAmplitudes(np.zeros((3, 0)), 0.1),
                                 precision=Precision.FP32)
        assert g.data.dtype == np.complex64


class TestSimpsonExpansion:
    def test_constant_coefficients_double_step(self, rng):
        h0, h1 = random_hermitian(rng, 2), random_hermitian(rng, 2)
        sys = ControlSystem(h0, [h1])
        amps = ControlAmplitudes(np.full((7, 1), 0.5), dt=0.2)
        g = build_exponent_batch(sys, amps, Quadrature.SIMPSON)
        assert g.count == 3
        expect = 2 * 0.2 * (h0 + 0.5 * h1)
        assert np.allclose(g.to_array(), np.broadcast_to(expect, (3, 2, 2)),
                           rtol=0, atol=1e-15)

    def test_linear_ramp_weight(self, rng):
        # samples c(t) = t at (0, dt, 2dt): averaged weight is 2 dt^2
        dt = 0.3
        h0, h1 = random_hermitian(rng, 2), random_hermitian(rng, 2)
        sys = ControlSystem(h0, [h1])
        amps = ControlAmplitudes(np.array([[0.0], [dt], [2 * dt]]), dt=dt)
        g = build_exponent_batch(sys, amps, Quadrature.SIMPSON).to_array()
        expect = 2 * dt * h0 + 2 * dt * dt * h1
        assert np.abs(g[0] - expect).max() < 1e-15

    def test_sampling_parity(self, rng):
        sys = ControlSystem(random_hermitian(rng, 2), [random_hermitian(rng, 2)])
        for pts in (1, 2, 4, 6):
            amps = ControlAmplitudes(np.zeros((pts, 1)), dt=0.1)
            with pytest.raises(SamplingParityError):
                build_exponent_batch(sys, amps, Quadrature.SIMPSON)

    def test_shared_endpoints(self, rng):
        # slice 1 must see samples (2, 3, 4)
        sys = ControlSystem(np.zeros((2, 2), dtype=complex), [SIGMA_X])
        values = np.array([[0.0], [0.0], [0.6], [0.9], [0.3]])
        amps = ControlAmplitudes(values, dt=0.5)
        g = build_exponent_batch(sys, amps, Quadrature.SIMPSON).to_array()
        weight = 0.5 * (0.6 + 4 * 0.9 + 0.3) / 3
        assert np.abs(g[1] - weight * SIGMA_X).max() < 1e-15


class TestExpansionRejections:
    def test_amplitude_violation(self, rng):
        sys = ControlSystem(random_hermitian(rng, 2), [random_hermitian(rng, 2)])
        amps = ControlAmplitudes([[1.5]], dt=0.1)
        with pytest.raises(AmplitudeBoundError):
            build_exponent_batch(sys, amps)

    def test_control_count_mismatch(self, rng):
        sys = ControlSystem(random_hermitian(rng, 2), [random_hermitian(rng, 2)])
        with pytest.raises(ShapeError):
            build_exponent_batch(sys, ControlAmplitudes(np.zeros((3, 2)), 0.1))

    def test_quadrature_parse(self):
        assert Quadrature.parse("midpoint") is Quadrature.MIDPOINT
        assert Quadrature.parse("SIMPSON") is Quadrature.SIMPSON
        with pytest.raises(ConfigError):
            Quadrature.parse("gauss")


class TestManifest:
    def write_manifest(self, tmp_path, doc, name="problem.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    def basic_doc(self):
        return {
            "dim": 2,
            "precision": "fp64",
            "dt": 0.25,
            "drift": matrix_to_pairs(SIGMA_Z / 2),
            "controls": [matrix_to_pairs(SIGMA_X / 2)],
            "amplitudes": {"pts": 3, "data": [[0.1], [0.2], [0.3]]},
        }

    def test_roundtrip_pairs(self, rng):
        m = random_hermitian(rng, 3)
        assert np.array_equal(matrix_from_pairs(matrix_to_pairs(m)), m)

    def test_loads_inline_data(self, tmp_path):
        path = self.write_manifest(tmp_path, self.basic_doc())
        system, amps, precision = load_manifest(path)
        assert precision is Precision.FP64
        assert system.dim == 2 and system.n_controls == 1
        assert np.array_equal(system.drift, SIGMA_Z / 2)
        assert amps.pts == 3 and amps.dt == 0.25
        assert np.array_equal(amps.values, [[0.1], [0.2], [0.3]])

    def test_loads_csv_sidecar(self, tmp_path):
        doc = self.basic_doc()
        doc["controls"].append(matrix_to_pairs(SIGMA_Y / 2))
        doc["amplitudes"] = {"pts": 2, "data_ref": "amps.csv"}
        (tmp_path / "amps.csv").write_text("0.1,0.5\n0.2,0.6\n")
        system, amps, _ = load_manifest(self.write_manifest(tmp_path, doc))
        assert amps.n_controls == 2
        assert np.array_equal(amps.values, [[0.1, 0.5], [0.2, 0.6]])

    def test_drift_only_manifest_needs_no_data(self, tmp_path):
        doc = self.basic_doc()
        doc["controls"] = []
        doc["amplitudes"] = {"pts": 4}
        system, amps, _ = load_manifest(self.write_manifest(tmp_path, doc))
        assert system.n_controls == 0 and amps.values.shape == (4, 0)

    def test_precision_defaults_to_double(self, tmp_path):
        doc = self.basic_doc()
        del doc["precision"]
        _, _, precision = load_manifest(self.write_manifest(tmp_path, doc))
        assert precision is Precision.FP64

    def test_missing_key(self, tmp_path):
        doc = self.basic_doc()
        del doc["drift"]
        with pytest.raises(ConfigError):
            load_manifest(self.write_manifest(tmp_path, doc))

    def test_dim_mismatch(self, tmp_path):
        doc = self.basic_doc()
        doc["dim"] = 3
        with pytest.raises(ConfigError):
            load_manifest(self.write_manifest(tmp_path, doc))

    def test_pts_mismatch(self, tmp_path):
        doc = self.basic_doc()
        doc["amplitudes"]["pts"] = 5
        with pytest.raises(ConfigError):
            load_manifest(self.write_manifest(tmp_path, doc))

    def test_malformed_matrix(self, tmp_path):
        doc = self.basic_doc()
        doc["drift"] = [[1, 0], [0, -1]]  # bare numbers, not [re, im] pairs
        with pytest.raises(ConfigError):
            load_manifest(self.write_manifest(tmp_path, doc))
