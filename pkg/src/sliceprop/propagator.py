"""Equidistant propagation: slice, exponentiate, reduce.

The entry point is an IntegratorContext created by :func:`create`.  A
context owns the scratch storage (exponent staging, series workspace,
reduction ping-pong buffers) so repeated propagations with new amplitude
tables reuse memory and never re-upload the Hamiltonians.
"""

from dataclasses import dataclass

import numpy as np

from .chebyshev import ORDER_GRID, Workspace, expm_batch, make_plan
from .errors import ConfigError, SamplingParityError, ShapeError, StateMachineError
from .hamiltonian import (ControlAmplitudes, ControlSystem, Quadrature,
                          build_exponent_batch, spectral_bound)
from .linalg import CpuBackend, MatrixBatch, Precision, default_backend
from .magnus import (EffectiveSystem, build_effective_system,
                     build_magnus_exponent_batch, magnus_spectral_bound)

__all__ = [
    "IntegratorContext",
    "PropagatorResult",
    "CumulativeResult",
    "create",
    "reduce_pairwise",
    "apply",
]


@dataclass(frozen=True)
class PropagatorResult:
    """Total propagator plus bookkeeping from one equiprop call."""

    u: np.ndarray
    slice_count: int
    plan: dict | None

    @property
    def dim(self) -> int:
        return self.u.shape[0]


@dataclass(frozen=True)
class CumulativeResult:
    """Running products U(t_k <- 0) from every slice boundary.

    u_all[k] propagates from 0 through slice k; u_all[-1] equals the
    total propagator of an equivalent equiprop call with sequential
    accumulation, bit for bit.
    """

    u_all: np.ndarray
    slice_count: int
    plan: dict | None

    @property
    def dim(self) -> int:
        return self.u_all.shape[1]

    @property
    def final(self) -> np.ndarray:
        if self.slice_count == 0:
            return np.eye(self.dim, dtype=self.u_all.dtype)
        return self.u_all[-1]


def reduce_pairwise(batch: MatrixBatch, backend: CpuBackend | None = None,
                    scratch: tuple[MatrixBatch, MatrixBatch] | None = None) -> np.ndarray:
    """Time-ordered product U[n-1] @ ... @ U[0] of a propagator batch.

    Pairs are folded level by level (later slice on the left), one
    batched gemm per level, so the whole product costs ceil(log2 n) gemm
    calls; an odd leftover is copied forward unmodified.  The input batch
    is never written.  An empty batch reduces to the identity by the
    usual empty-product convention.

    scratch, when given, must be two batches holding at least
    ceil(n / 2) and ceil(n / 4) matrices; omit it to allocate per call.
    """
    if backend is None:
        backend = default_backend()
    if batch.count == 0:
        return np.eye(batch.dim, dtype=batch.precision.complex_dtype)
    if batch.count == 1:
        return batch.matrix(0).copy()
    if scratch is None:
        scratch = (MatrixBatch.zeros(batch.dim, (batch.count + 1) // 2, batch.precision),
                   MatrixBatch.zeros(batch.dim, (batch.count + 3) // 4, batch.precision))
    front, back = scratch
    src = batch
    while src.count > 1:
        pairs = src.count // 2
        carry = src.count % 2
        later = src.subview(1, pairs, 2)
        earlier = src.subview(0, pairs, 2)
        backend.gemm_strided_batched(later, earlier, 1.0, 0.0, front.subview(0, pairs))
        if carry:
            backend.copy_matrix(src, src.count - 1, front, pairs)
        src = front.subview(0, pairs + carry)
        front, back = back, front
    return src.matrix(0).copy()


def apply(u, state) -> np.ndarray:
    """Propagate a state vector (U psi) or density matrix (U rho U+)."""
    m = u.u if isinstance(u, PropagatorResult) else np.asarray(u)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"propagator must be a square matrix, got shape {m.shape}")
    d = m.shape[0]
    state = np.asarray(state)
    if state.shape == (d,):
        return m @ state
    if state.shape == (d, d):
        return m @ state @ m.conj().T
    raise ShapeError(
        f"state shape {state.shape} matches neither a vector ({d},) "
        f"nor a density matrix ({d}, {d})")


_CREATED = "created"
_LOADED = "loaded"
_CLOSED = "closed"

# Cap on the series workspace footprint per buffer.  Beyond it the
# exponent batch is exponentiated in sub-batches so the Clenshaw
# recurrence stays cache resident; the recurrence is independent per
# matrix, so chunking does not change a single output bit.
_EXPM_CHUNK_BYTES = 1 << 22


class IntegratorContext:
    """Stateful propagation session: configure, load a system, propagate.

    Use :func:`create` to construct one.  The lifecycle is
    created -> loaded (set_hamiltonian) -> closed (close); propagation
    requires the loaded state.  Contexts are independent: each owns its
    backend counter and scratch buffers, so several may coexist.
    """

    def __init__(self, precision: Precision, backend: CpuBackend,
                 m_max: int | None, checked: bool):
        self.precision = precision
        self.backend = backend
        self.m_max = m_max
        self.checked = checked
        self._state = _CREATED
        self._system: ControlSystem | None = None
        self._effective: EffectiveSystem | None = None
        self._magnus = False
        self._quadrature = Quadrature.MIDPOINT
        self._workspace: Workspace | None = None
        self._staging: MatrixBatch | None = None
        self._reduce_a: MatrixBatch | None = None
        self._reduce_b: MatrixBatch | None = None

    # -- lifecycle ---------------------------------------------------

    @property
    def state(self) -> str:
        return self._state

    @property
    def magnus(self) -> bool:
        return self._magnus

    @property
    def quadrature(self) -> Quadrature:
        return self._quadrature

    def _require_open(self) -> None:
        if self._state == _CLOSED:
            raise StateMachineError("context is closed")

    def set_hamiltonian(self, system: ControlSystem, magnus: bool = False,
                        quadrature=None) -> None:
        """Load (or replace) the system; resolves the slicing mode.

        quadrature defaults to simpson when magnus is requested and
        midpoint otherwise.  The fourth-order mode needs the three-point
        rule, so magnus with midpoint is rejected.
        """
        self._require_open()
        if not isinstance(system, ControlSystem):
            raise ShapeError(f"expected a ControlSystem, got {type(system).__name__}")
        magnus = bool(magnus)
        if quadrature is None:
            quadrature = Quadrature.SIMPSON if magnus else Quadrature.MIDPOINT
        quadrature = Quadrature.parse(quadrature)
        if magnus and quadrature is Quadrature.MIDPOINT:
            raise ConfigError("the fourth-order mode requires the three-point "
                              "quadrature; midpoint sampling cannot feed it")
        self._effective = build_effective_system(system) if magnus else None
        if self._workspace is None or self._workspace.dim != system.dim:
            self._workspace = Workspace(system.dim, self.precision)
            self._staging = None
            self._reduce_a = self._reduce_b = None
        self._system = system
        self._magnus = magnus
        self._quadrature = quadrature
        self._state = _LOADED

    def close(self) -> None:
        """Release scratch storage; further calls raise. Idempotent."""
        self._system = None
        self._effective = None
        self._workspace = None
        self._staging = None
        self._reduce_a = self._reduce_b = None
        self._state = _CLOSED

    def __enter__(self) -> "IntegratorContext":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    # -- scratch management ------------------------------------------

    def _staged(self, count: int) -> MatrixBatch:
        dim = self._system.dim
        if self._staging is None or self._staging.count < count:
            self._staging = MatrixBatch.zeros(dim, count, self.precision)
        return self._staging.subview(0, count)

    def _reduce_scratch(self, count: int) -> tuple[MatrixBatch, MatrixBatch]:
        dim = self._system.dim
        need_a = (count + 1) // 2
        need_b = (count + 3) // 4
        if self._reduce_a is None or self._reduce_a.count < need_a:
            self._reduce_a = MatrixBatch.zeros(dim, need_a, self.precision)
        if self._reduce_b is None or self._reduce_b.count < need_b:
            self._reduce_b = MatrixBatch.zeros(dim, need_b, self.precision)
        return self._reduce_a, self._reduce_b

    # -- propagation --------------------------------------------------

    def _slice_propagators(self, amps: ControlAmplitudes):
        """Expand, bound, plan and exponentiate; returns (batch, plan)."""
        self._require_open()
        if self._state != _LOADED:
            raise StateMachineError("no Hamiltonian loaded; call set_hamiltonian first")
        if not isinstance(amps, ControlAmplitudes):
            raise ShapeError(f"expected ControlAmplitudes, got {type(amps).__name__}")
        if self._quadrature is Quadrature.SIMPSON:
            if amps.pts < 3 or amps.pts % 2 == 0:
                raise SamplingParityError(
                    f"three-point quadrature needs an odd number of "
                    f"samples >= 3, got {amps.pts}")
            count = (amps.pts - 1) // 2
        else:
            count = amps.pts
        out = self._staged(count)
        if self._magnus:
            g = build_magnus_exponent_batch(self._effective, amps, self.precision,
                                            out=out, backend=self.backend)
            bound = magnus_spectral_bound(self._effective, amps)
        else:
            g = build_exponent_batch(self._system, amps, self._quadrature,
                                     self.precision, out=out, backend=self.backend)
            step = amps.dt if self._quadrature is Quadrature.MIDPOINT else 2.0 * amps.dt
            bound = spectral_bound(self._system, step)
        plan = make_plan(-bound, bound, self.precision, m_max=self.m_max)
        itemsize = np.dtype(self.precision.complex_dtype).itemsize
        chunk = max(1, _EXPM_CHUNK_BYTES // (g.dim * g.dim * itemsize))
        if g.count <= chunk:
            u = expm_batch(g, plan, self._workspace, self.backend,
                           checked=self.checked)
            return u, plan
        # big batch: exponentiate sub-batches and overwrite the staged
        # exponents with their propagators (expm reads its input once)
        for start in range(0, g.count, chunk):
            sub = g.subview(start, min(chunk, g.count - start))
            out = expm_batch(sub, plan, self._workspace, self.backend,
                             checked=self.checked)
            sub.matrices()[:] = out.matrices()
        return g, plan

    def equiprop(self, amps: ControlAmplitudes,
                 reduction: str = "pairwise") -> PropagatorResult:
        """Total propagator over the sampled window.

        The slice exponents are exponentiated in one batch and folded
        into a single matrix.  reduction picks the fold: "pairwise"
        (logarithmic, the default) or "sequential" (left-multiply one
        slice at a time, matching equiprop_all's accumulation exactly).
        An empty amplitude table yields the identity.
        """
        if reduction not in ("pairwise", "sequential"):
            raise ConfigError(f"unknown reduction {reduction!r}; "
                              f"expected pairwise or sequential")
        self._require_open()
        if self._state != _LOADED:
            raise StateMachineError("no Hamiltonian loaded; call set_hamiltonian first")
        if not isinstance(amps, ControlAmplitudes):
            raise ShapeError(f"expected ControlAmplitudes, got {type(amps).__name__}")
        if amps.pts == 0:
            eye = np.eye(self._system.dim, dtype=self.precision.complex_dtype)
            return PropagatorResult(u=eye, slice_count=0, plan=None)
        u, plan = self._slice_propagators(amps)
        if reduction == "pairwise":
            total = reduce_pairwise(u, self.backend, self._reduce_scratch(u.count))
        else:
            acc = u.matrix(0).copy()
            for k in range(1, u.count):
                acc = np.matmul(u.matrix(k), acc)
            total = acc
        return PropagatorResult(u=total, slice_count=u.count, plan=plan.summary())

    def equiprop_all(self, amps: ControlAmplitudes) -> CumulativeResult:
        """Cumulative propagators at every slice boundary.

        Entry k is U[k] @ ... @ U[0]; the last entry is bitwise equal to
        equiprop(amps, reduction="sequential").u because both run the
        identical left-multiplication order on the identical slice batch.
        """
        self._require_open()
        if self._state != _LOADED:
            raise StateMachineError("no Hamiltonian loaded; call set_hamiltonian first")
        if not isinstance(amps, ControlAmplitudes):
            raise ShapeError(f"expected ControlAmplitudes, got {type(amps).__name__}")
        cdt = self.precision.complex_dtype
        if amps.pts == 0:
            empty = np.zeros((0, self._system.dim, self._system.dim), dtype=cdt)
            return CumulativeResult(u_all=empty, slice_count=0, plan=None)
        u, plan = self._slice_propagators(amps)
        cum = np.empty((u.count, u.dim, u.dim), dtype=cdt)
        cum[0] = u.matrix(0)
        for k in range(1, u.count):
            cum[k] = np.matmul(u.matrix(k), cum[k - 1])
        return CumulativeResult(u_all=cum, slice_count=u.count, plan=plan.summary())


def create(precision="fp64", m_max: int | None = None, checked: bool = False,
           backend=None) -> IntegratorContext:
    """New propagation context.

    precision is "fp32" or "fp64".  m_max, when given, pins the series
    order for every propagation instead of selecting it from the norm
    bound; it must lie on the supported odd grid.  checked enables the
    Hermiticity sanity pass on every exponent batch.  backend accepts a
    CpuBackend instance or the token "cpu"; by default each context gets
    its own backend so gemm counters do not interleave.
    """
    precision = Precision.parse(precision)
    if m_max is not None and m_max not in ORDER_GRID:
        raise ConfigError(f"m_max override {m_max} not an odd integer in "
                          f"{ORDER_GRID[0]}..{ORDER_GRID[-1]}")
    if backend is None:
        backend = CpuBackend()
    elif isinstance(backend, str):
        if backend.lower() != "cpu":
            raise ConfigError(f"unknown backend {backend!r}; expected cpu")
        backend = CpuBackend()
    return IntegratorContext(precision, backend, m_max, checked)
