"""Fourth-order effective form of the sliced propagation.

Truncating the time-ordering corrections after the first commutator term
and applying a three-point quadrature turns one doubled step over samples
(c1, c2, c3) into a plain constant exponent

  G = 2dt H0 + dt sum_k (c_k1/3 + 4 c_k2/3 + c_k3/3) H_k
            - i (dt^2/3) sum_k (c_k3 - c_k1) [H0, H_k]
            - i (dt^2/3) sum_{k<k'} (c_k1 c_k'3 - c_k3 c_k'1) [H_k, H_k'],

which has the same drift + coefficient * control shape as the original
system, only with N + N + N(N-1)/2 effective controls.  The commutators
are computed once per system; they are stored premultiplied by i (making
them Hermitian), so the assembled table negates the commutator columns to
keep the exponent above intact with purely real coefficients.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .hamiltonian import ControlAmplitudes, ControlSystem, _check_pair, simpson_triplets
from .linalg import CpuBackend, MatrixBatch, Precision, expand_linear_combination, one_norm

__all__ = [
    "commutator",
    "EffectiveSystem",
    "build_effective_system",
    "magnus_coefficients",
    "magnus_spectral_bound",
    "build_magnus_exponent_batch",
]


def commutator(a, b) -> np.ndarray:
    """AB - BA."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"commutator needs equal square matrices, got {a.shape}, {b.shape}")
    return a @ b - b @ a


class EffectiveSystem:
    """A ControlSystem plus its precomputed commutator controls.

    effective_controls is ordered [H_1..H_N, i[H0,H_1]..i[H0,H_N],
    i[H_1,H_2], .., i[H_{N-1},H_N]] (pair terms lexicographic).  The i
    premultiplication keeps every stored matrix Hermitian.
    """

    __slots__ = ("base", "effective_controls", "drift_comm_norms", "cross_comm_norms")

    def __init__(self, base: ControlSystem, drift_comms, cross_comms):
        self.base = base
        self.effective_controls = (*base.controls,
                                   *(1j * c for c in drift_comms),
                                   *(1j * c for c in cross_comms))
        self.drift_comm_norms = tuple(one_norm(c) for c in drift_comms)
        self.cross_comm_norms = tuple(one_norm(c) for c in cross_comms)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def n_effective(self) -> int:
        return len(self.effective_controls)

    def terms(self) -> list[np.ndarray]:
        return [self.base.drift, *self.effective_controls]

    def __repr__(self) -> str:
        return (f"EffectiveSystem(dim={self.dim}, "
                f"n_controls={self.base.n_controls}, n_effective={self.n_effective})")


def build_effective_system(system: ControlSystem) -> EffectiveSystem:
    """Precompute the commutator controls: N with the drift, N(N-1)/2 pairs."""
    n = system.n_controls
    drift_comms = [commutator(system.drift, system.controls[k]) for k in range(n)]
    cross_comms = [commutator(system.controls[k], system.controls[kp])
                   for k in range(n) for kp in range(k + 1, n)]
    return EffectiveSystem(system, drift_comms, cross_comms)


def magnus_coefficients(amps: ControlAmplitudes) -> np.ndarray:
    """Effective coefficient table, one row per doubled step.

    Columns follow the effective control order: N three-point averages
    dt (c1/3 + 4 c2/3 + c3/3), then N drift-commutator differences
    (dt^2/3)(c3 - c1), then the N(N-1)/2 antisymmetric cross products
    (dt^2/3)(c_k1 c_k'3 - c_k3 c_k'1).  These are the weights of H_k,
    i[H0,H_k] and i[H_k,H_k'] respectively, the stored Hermitian forms.
    """
    c1, c2, c3 = simpson_triplets(amps.values)
    dt = amps.dt
    n = amps.n_controls
    simpson = dt * (c1 + 4.0 * c2 + c3) / 3.0
    drift_comm = (dt * dt / 3.0) * (c3 - c1)
    pairs = [(k, kp) for k in range(n) for kp in range(k + 1, n)]
    cross = np.empty((c1.shape[0], len(pairs)))
    for col, (k, kp) in enumerate(pairs):
        cross[:, col] = (dt * dt / 3.0) * (c1[:, k] * c3[:, kp] - c3[:, k] * c1[:, kp])
    return np.column_stack([simpson, drift_comm, cross])


def magnus_spectral_bound(eff: EffectiveSystem, amps: ControlAmplitudes) -> float:
    """Norm bound on the doubled-step exponent, from |c_i| <= 1.

    Three-point averages are bounded by 2dt, the commutator coefficient
    magnitudes by 2dt^2/3 each.
    """
    dt = amps.dt
    return (2.0 * dt * sum(eff.base.norms)
            + (2.0 * dt * dt / 3.0) * sum(eff.drift_comm_norms)
            + (2.0 * dt * dt / 3.0) * sum(eff.cross_comm_norms))


def build_magnus_exponent_batch(eff: EffectiveSystem, amps: ControlAmplitudes,
                                precision: Precision = Precision.FP64,
                                out: MatrixBatch | None = None,
                                backend: CpuBackend | None = None) -> MatrixBatch:
    """One exponent per doubled step from the effective system.

    Expansion scale is 2dt with a unit drift column.  The commutator
    columns keep the coefficient table's sign: the stored matrices carry
    the factor i, so coeff * (i[A,B]) contributes +i coeff [A,B] to G,
    which is the orientation that cancels the second-order defect (a
    flipped sign demotes the whole integrator to second order).
    """
    _check_pair(eff.base, amps)
    coeffs = magnus_coefficients(amps)
    n = amps.n_controls
    scale = 2.0 * amps.dt
    table = np.empty((coeffs.shape[0], 1 + eff.n_effective))
    table[:, 0] = 1.0
    table[:, 1:] = coeffs / scale
    return expand_linear_combination(eff.terms(), table, scale, precision,
                                     out, backend=backend)
