"""System model H(t) = H0 + sum_i c_i(t) H_i and the exponent expansion.

A ControlSystem holds the drift and control Hamiltonians (double precision
ingest, rounded to the working precision when slices are expanded) together
with cached induced 1-norms.  ControlAmplitudes is the sampled coefficient
table c_i(t_k) on an equidistant grid with step dt.

build_exponent_batch turns the pair into one Hermitian exponent per slice:

  midpoint:  G[k] = dt (H0 + sum_i c_i(t_k) H_i), one slice per sample,
             sample k taken as the value over [k dt, (k+1) dt)
  simpson:   G[j] = 2dt H0 + dt sum_i (c^(1)/3 + 4 c^(2)/3 + c^(3)/3) H_i
             over samples (2j, 2j+1, 2j+2), so pts must be odd and the
             batch has (pts-1)/2 slices of doubled step

Problem files use a JSON manifest {dim, precision, dt, drift, controls,
amplitudes}; complex matrices are nested arrays of [re, im] pairs and large
amplitude tables may live in a sidecar CSV (column i = control i).
"""

from __future__ import annotations

import json
import os
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import (
    AmplitudeBoundError,
    ConfigError,
    HermiticityError,
    SamplingParityError,
    ShapeError,
)
from .linalg import CpuBackend, MatrixBatch, Precision, expand_linear_combination, one_norm

__all__ = [
    "Quadrature",
    "ControlSystem",
    "ControlAmplitudes",
    "AmplitudeViolation",
    "validate_amplitudes",
    "spectral_bound",
    "build_exponent_batch",
    "load_manifest",
    "matrix_from_pairs",
    "matrix_to_pairs",
]


class Quadrature(Enum):
    MIDPOINT = "midpoint"
    SIMPSON = "simpson"

    @classmethod
    def parse(cls, value) -> "Quadrature":
        if isinstance(value, Quadrature):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown quadrature {value!r}; expected midpoint or simpson") from None


def _ingest_hermitian(matrix, label: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{label} must be a square matrix, got shape {m.shape}")
    norm = one_norm(m)
    asym = np.abs(m - m.conj().T).max()
    if asym > 1e-12 * norm:
        raise HermiticityError(
            f"{label} is not Hermitian: asymmetry {asym:.3g} exceeds "
            f"1e-12 * norm = {1e-12 * norm:.3g}")
    return m.copy()


class ControlSystem:
    """Immutable drift + control Hamiltonians with cached 1-norms.

    Matrices are validated Hermitian on ingest (tolerance 1e-12 relative
    to the 1-norm) and stored in double precision.
    """

    __slots__ = ("dim", "drift", "controls", "norms")

    def __init__(self, drift, controls=()):
        self.drift = _ingest_hermitian(drift, "drift Hamiltonian")
        self.dim = self.drift.shape[0]
        ingested = []
        for i, h in enumerate(controls):
            hm = _ingest_hermitian(h, f"control Hamiltonian {i}")
            if hm.shape[0] != self.dim:
                raise ShapeError(
                    f"control Hamiltonian {i} has dim {hm.shape[0]}, drift has {self.dim}")
            ingested.append(hm)
        self.controls = tuple(ingested)
        self.norms = tuple(one_norm(h) for h in (self.drift, *self.controls))

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    def terms(self) -> list[np.ndarray]:
        return [self.drift, *self.controls]

    def __repr__(self) -> str:
        return f"ControlSystem(dim={self.dim}, n_controls={self.n_controls})"


class ControlAmplitudes:
    """Sampled control coefficients: pts x N table on a grid with step dt."""

    __slots__ = ("values", "dt", "pts")

    def __init__(self, values, dt: float):
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeError(f"amplitude table must be 2-D (pts, N), got ndim={v.ndim}")
        dt = float(dt)
        if not dt > 0.0:
            raise ConfigError(f"time step must be > 0, got {dt}")
        self.values = v.copy()
        self.values.setflags(write=False)
        self.dt = dt
        self.pts = v.shape[0]

    @property
    def n_controls(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:
        return f"ControlAmplitudes(pts={self.pts}, n_controls={self.n_controls}, dt={self.dt})"


class AmplitudeViolation(NamedTuple):
    sample: int
    control: int
    value: float


def validate_amplitudes(amps: ControlAmplitudes) -> AmplitudeViolation | None:
    """None if every entry lies in [-1, 1], else the first offender
    in row-major order (non-finite entries count as violations)."""
    v = amps.values
    bad = ~(np.abs(v) <= 1.0)  # catches NaN as well
    if not bad.any():
        return None
    k, i = np.argwhere(bad)[0]
    return AmplitudeViolation(int(k), int(i), float(v[k, i]))


def spectral_bound(system: ControlSystem, dt: float) -> float:
    """beta = dt * sum of all 1-norms, drift included; alpha is -beta.

    Valid for midpoint slices since |c_i| <= 1; for the doubled-step
    quadrature pass 2*dt.
    """
    return float(dt) * sum(system.norms)


def _check_pair(system: ControlSystem, amps: ControlAmplitudes) -> None:
    if amps.n_controls != system.n_controls:
        raise ShapeError(
            f"amplitude table has {amps.n_controls} controls, "
            f"system has {system.n_controls}")
    violation = validate_amplitudes(amps)
    if violation is not None:
        raise AmplitudeBoundError(
            f"control amplitude {violation.value!r} at sample {violation.sample}, "
            f"control {violation.control} lies outside [-1, 1]")


def simpson_triplets(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample rows (c1, c2, c3) per doubled-step slice; endpoints shared."""
    pts = values.shape[0]
    if pts < 3 or pts % 2 == 0:
        raise SamplingParityError(
            f"three-point quadrature needs an odd number of samples >= 3, got {pts}")
    return values[0:pts - 1:2], values[1:pts:2], values[2:pts:2]


def build_exponent_batch(system: ControlSystem, amps: ControlAmplitudes,
                         quadrature: Quadrature = Quadrature.MIDPOINT,
                         precision: Precision = Precision.FP64,
                         out: MatrixBatch | None = None,
                         backend: CpuBackend | None = None) -> MatrixBatch:
    """One Hermitian exponent G per slice, in the working precision.

    Midpoint emits pts slices with scale dt; Simpson emits (pts-1)/2
    slices with scale 2dt.  Amplitude violations are hard errors, never
    clamped: clamping would silently break the spectral bound.
    """
    _check_pair(system, amps)
    quadrature = Quadrature.parse(quadrature)
    if quadrature is Quadrature.MIDPOINT:
        table = np.column_stack([np.ones(amps.pts), amps.values])
        scale = amps.dt
    else:
        c1, c2, c3 = simpson_triplets(amps.values)
        table = np.column_stack([np.ones(c1.shape[0]), (c1 + 4.0 * c2 + c3) / 6.0])
        scale = 2.0 * amps.dt
    return expand_linear_combination(system.terms(), table, scale, precision,
                                     out, backend=backend)


def matrix_from_pairs(obj, label: str = "matrix") -> np.ndarray:
    """Nested [re, im] pair rows -> complex matrix."""
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (ValueError, TypeError):
        raise ConfigError(f"{label} is not a nested array of [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ConfigError(
            f"{label} must be rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_to_pairs(matrix: np.ndarray) -> list:
    m = np.asarray(matrix, dtype=np.complex128)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def load_manifest(path: str) -> tuple[ControlSystem, ControlAmplitudes, Precision]:
    """Read a problem manifest; amplitude data may sit inline or in a CSV
    sidecar referenced by ``data_ref`` (resolved relative to the manifest)."""
    with open(path) as fh:
        doc = json.load(fh)
    for key in ("dim", "dt", "drift", "controls", "amplitudes"):
        if key not in doc:
            raise ConfigError(f"manifest is missing the {key!r} field")
    precision = Precision.parse(doc.get("precision", "fp64"))
    drift = matrix_from_pairs(doc["drift"], "drift")
    controls = [matrix_from_pairs(c, f"controls[{i}]")
                for i, c in enumerate(doc["controls"])]
    system = ControlSystem(drift, controls)
    if system.dim != int(doc["dim"]):
        raise ConfigError(
            f"manifest dim {doc['dim']} does not match drift dimension {system.dim}")

    amp = doc["amplitudes"]
    if "pts" not in amp:
        raise ConfigError("manifest amplitudes block is missing 'pts'")
    pts = int(amp["pts"])
    if "data" in amp:
        values = np.asarray(amp["data"], dtype=np.float64)
        if values.size == 0:
            values = values.reshape(pts, 0)
    elif "data_ref" in amp:
        ref = os.path.join(os.path.dirname(os.path.abspath(path)), amp["data_ref"])
        values = np.loadtxt(ref, delimiter=",", ndmin=2, dtype=np.float64)
    elif system.n_controls == 0:
        values = np.zeros((pts, 0))
    else:
        raise ConfigError("manifest amplitudes block needs 'data' or 'data_ref'")
    if values.ndim != 2 or values.shape[0] != pts:
        raise ConfigError(
            f"amplitude table shape {values.shape} does not match pts={pts}")
    return system, ControlAmplitudes(values, float(doc["dt"])), precision
