"""Batched dense complex linear algebra on strided matrix buffers.

The kernels mirror the strided batched-BLAS interface: a :class:`MatrixBatch`
is ``count`` dense complex ``dim x dim`` matrices living in one buffer,
row-major within each matrix, consecutive matrices separated by ``stride``
complex scalars.  Sub-batches (including the interleaved even/odd views the
pairwise reduction uses) share the buffer through :meth:`MatrixBatch.subview`
instead of copying.

The reference backend delegates to numpy's vectorized batched routines.
Within one backend instance every kernel uses a fixed evaluation order, so
repeated calls on identical inputs are bitwise reproducible.
"""

from __future__ import annotations

from enum import Enum
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import AliasingError, ConfigError, ShapeError

__all__ = [
    "Precision",
    "MatrixBatch",
    "CpuBackend",
    "default_backend",
    "gemm_strided_batched",
    "diagonal_add_batched",
    "copy_matrix",
    "one_norm",
    "expand_linear_combination",
]


class Precision(Enum):
    """Working precision of a batch (complex single or complex double)."""

    FP32 = "fp32"
    FP64 = "fp64"

    @property
    def complex_dtype(self) -> np.dtype:
        return np.dtype(np.complex64 if self is Precision.FP32 else np.complex128)

    @property
    def real_dtype(self) -> np.dtype:
        return np.dtype(np.float32 if self is Precision.FP32 else np.float64)

    @property
    def roundoff(self) -> float:
        # unit roundoff (half an eps step at 1.0): 2^-24 / 2^-53
        return 2.0 ** -24 if self is Precision.FP32 else 2.0 ** -53

    @classmethod
    def parse(cls, value) -> "Precision":
        if isinstance(value, Precision):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"unknown precision {value!r}; expected fp32 or fp64") from None

    @classmethod
    def of(cls, array: np.ndarray) -> "Precision":
        if array.dtype == np.complex64:
            return cls.FP32
        if array.dtype == np.complex128:
            return cls.FP64
        raise ShapeError(f"unsupported dtype {array.dtype}; expected complex64 or complex128")


class MatrixBatch:
    """A strided batch of ``count`` dense complex ``dim x dim`` matrices.

    Parameters
    ----------
    data : ndarray
        One-dimensional complex64/complex128 buffer.  Must hold at least
        ``stride * (count - 1) + dim * dim`` scalars when ``count > 0``.
    dim : int
        Matrix dimension, >= 1.
    count : int
        Number of matrices, >= 0.
    stride : int, optional
        Complex scalars between consecutive matrices; defaults to the
        compact ``dim * dim``.
    """

    __slots__ = ("data", "dim", "count", "stride")

    def __init__(self, data: np.ndarray, dim: int, count: int, stride: int | None = None):
        data = np.asarray(data)
        if data.ndim != 1:
            raise ShapeError(f"batch buffer must be 1-D, got ndim={data.ndim}")
        Precision.of(data)  # dtype check
        if dim < 1:
            raise ShapeError(f"dim must be >= 1, got {dim}")
        if count < 0:
            raise ShapeError(f"count must be >= 0, got {count}")
        if stride is None:
            stride = dim * dim
        if stride < dim * dim:
            raise ShapeError(f"stride {stride} smaller than one matrix ({dim * dim})")
        if count > 0 and data.size < stride * (count - 1) + dim * dim:
            raise ShapeError(
                f"buffer of {data.size} scalars cannot hold {count} matrices "
                f"of dim {dim} at stride {stride}")
        self.data = data
        self.dim = int(dim)
        self.count = int(count)
        self.stride = int(stride)

    @property
    def precision(self) -> Precision:
        return Precision.of(self.data)

    @classmethod
    def zeros(cls, dim: int, count: int, precision: Precision = Precision.FP64,
              stride: int | None = None) -> "MatrixBatch":
        stride = dim * dim if stride is None else stride
        size = stride * (count - 1) + dim * dim if count > 0 else 0
        return cls(np.zeros(size, dtype=precision.complex_dtype), dim, count, stride)

    @classmethod
    def from_matrices(cls, matrices, precision: Precision | None = None) -> "MatrixBatch":
        """Copy an (n, d, d) array-like into a fresh compact batch."""
        arr = np.asarray(matrices)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ShapeError(f"expected (n, d, d) matrices, got shape {arr.shape}")
        if precision is None:
            precision = Precision.FP64 if arr.dtype != np.complex64 else Precision.FP32
        flat = np.ascontiguousarray(arr, dtype=precision.complex_dtype).reshape(-1).copy()
        return cls(flat, arr.shape[1], arr.shape[0])

    def matrices(self) -> np.ndarray:
        """Writable (count, dim, dim) view of the batch."""
        isz = self.data.itemsize
        return as_strided(
            self.data, shape=(self.count, self.dim, self.dim),
            strides=(self.stride * isz, self.dim * isz, isz))

    def matrix(self, index: int) -> np.ndarray:
        if not 0 <= index < self.count:
            raise ShapeError(f"matrix index {index} out of range for count {self.count}")
        start = index * self.stride
        return self.data[start:start + self.dim * self.dim].reshape(self.dim, self.dim)

    def diagonals(self) -> np.ndarray:
        """Writable (count, dim) view of every matrix diagonal."""
        isz = self.data.itemsize
        return as_strided(self.data, shape=(self.count, self.dim),
                          strides=(self.stride * isz, (self.dim + 1) * isz))

    def subview(self, first: int, count: int, stride_factor: int = 1) -> "MatrixBatch":
        """Sub-batch sharing this buffer, starting at matrix ``first``.

        ``stride_factor > 1`` produces interleaved views: factor 2 starting
        at 0 selects even-index matrices, starting at 1 the odd ones.
        """
        if first < 0 or stride_factor < 1:
            raise ShapeError("subview needs first >= 0 and stride_factor >= 1")
        return MatrixBatch(self.data[first * self.stride:], self.dim, count,
                           self.stride * stride_factor)

    def to_array(self) -> np.ndarray:
        return self.matrices().copy()

    def __repr__(self) -> str:
        return (f"MatrixBatch(dim={self.dim}, count={self.count}, "
                f"stride={self.stride}, {self.precision.value})")


def _check_conformable(a: MatrixBatch, b: MatrixBatch, c: MatrixBatch) -> None:
    if not (a.dim == b.dim == c.dim):
        raise ShapeError(f"dim mismatch: {a.dim}, {b.dim}, {c.dim}")
    if not (a.count == b.count == c.count):
        raise ShapeError(f"count mismatch: {a.count}, {b.count}, {c.count}")
    if not (a.data.dtype == b.data.dtype == c.data.dtype):
        raise ShapeError(
            f"precision mismatch: {a.precision.value}, {b.precision.value}, {c.precision.value}")


class CpuBackend:
    """Reference CPU backend over numpy's batched kernels.

    ``gemm_calls`` counts strided-batched GEMM invocations; higher layers
    use it to pin their cost contracts in tests.
    """

    name = "cpu"
    supported_precisions = (Precision.FP32, Precision.FP64)
    max_batch_count = 2 ** 31 - 1

    def __init__(self):
        self.gemm_calls = 0

    # accumulating gemms go through a bounded scratch block so large
    # batches never allocate (and fault in) a full-size product temporary
    _GEMM_BLOCK_BYTES = 1 << 23

    def gemm_strided_batched(self, a: MatrixBatch, b: MatrixBatch,
                             alpha: complex, beta: complex, c: MatrixBatch) -> None:
        """C[k] = alpha A[k] B[k] + beta C[k] for every k.

        A and B may alias each other; C must not overlap either input
        (overlapping byte ranges are rejected conservatively).  beta == 0
        never reads C.
        """
        _check_conformable(a, b, c)
        av, bv, cv = a.matrices(), b.matrices(), c.matrices()
        if np.may_share_memory(av, cv) or np.may_share_memory(bv, cv):
            raise AliasingError("gemm output batch overlaps an input batch")
        dtype = c.data.dtype
        if beta == 0:
            np.matmul(av, bv, out=cv)
            if alpha != 1:
                cv *= dtype.type(alpha)
        else:
            if beta != 1:
                cv *= dtype.type(beta)
            step = max(1, self._GEMM_BLOCK_BYTES // (c.dim * c.dim * dtype.itemsize))
            buf = np.empty((min(step, c.count), c.dim, c.dim), dtype=dtype)
            for start in range(0, c.count, step):
                stop = min(start + step, c.count)
                blk = buf[:stop - start]
                np.matmul(av[start:stop], bv[start:stop], out=blk)
                if alpha != 1:
                    blk *= dtype.type(alpha)
                cv[start:stop] += blk
        self.gemm_calls += 1

    def diagonal_add_batched(self, c: MatrixBatch, shift: complex) -> None:
        """C[k] += shift * I for every k."""
        c.diagonals()[:] += c.data.dtype.type(shift)

    def copy_matrix(self, src: MatrixBatch, src_index: int,
                    dst: MatrixBatch, dst_index: int) -> None:
        """Bitwise copy of one matrix between batches."""
        if src.dim != dst.dim or src.data.dtype != dst.data.dtype:
            raise ShapeError("copy_matrix needs equal dim and precision")
        dst.matrix(dst_index)[:] = src.matrix(src_index)

    def expand_linear_combination(self, terms: Sequence[np.ndarray], coeffs: np.ndarray,
                                  scale: float, precision: Precision,
                                  out: MatrixBatch | None = None) -> MatrixBatch:
        """out[k] = scale * sum_i coeffs[k, i] terms[i], as two dense GEMMs.

        ``terms`` is the drift followed by the controls; ``coeffs`` is a
        real (pts, len(terms)) table whose column 0 must be all ones (the
        drift weight).  The batch is produced over the dim^2-flattened
        matrices: one GEMM broadcasts the drift, a second accumulates the
        controls.
        """
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.ndim != 2 or coeffs.shape[1] != len(terms) or len(terms) < 1:
            raise ShapeError(
                f"coefficient table {coeffs.shape} does not match {len(terms)} terms")
        if not np.all(coeffs[:, 0] == 1.0):
            raise ShapeError("coefficient column 0 must be all ones (drift weight)")
        d = int(terms[0].shape[0])
        for t in terms:
            if np.shape(t) != (d, d):
                raise ShapeError(f"term of shape {np.shape(t)} is not ({d}, {d})")
        pts = coeffs.shape[0]
        cdt = precision.complex_dtype
        if out is None:
            out = MatrixBatch.zeros(d, pts, precision)
        elif out.dim != d or out.count < pts or out.stride != d * d or out.precision is not precision:
            raise ShapeError("output batch does not fit the expansion")
        flat = np.stack([np.asarray(t).reshape(d * d) for t in terms]).astype(cdt)
        table = coeffs.astype(cdt)
        view = out.data[:pts * d * d].reshape(pts, d * d)
        np.matmul(table[:, :1], flat[:1], out=view)  # drift broadcast
        if len(terms) > 1:
            # control accumulation, blocked so the product temporary stays small
            step = max(1, self._GEMM_BLOCK_BYTES // (d * d * view.dtype.itemsize))
            buf = np.empty((min(step, pts), d * d), dtype=view.dtype)
            for start in range(0, pts, step):
                stop = min(start + step, pts)
                blk = buf[:stop - start]
                np.matmul(table[start:stop, 1:], flat[1:], out=blk)
                view[start:stop] += blk
        if scale != 1:
            view *= precision.real_dtype.type(scale)
        return out if out.count == pts else out.subview(0, pts)


_DEFAULT_BACKEND = CpuBackend()


def default_backend() -> CpuBackend:
    return _DEFAULT_BACKEND


def gemm_strided_batched(a: MatrixBatch, b: MatrixBatch, alpha: complex, beta: complex,
                         c: MatrixBatch, *, backend: CpuBackend | None = None) -> None:
    (backend or _DEFAULT_BACKEND).gemm_strided_batched(a, b, alpha, beta, c)


def diagonal_add_batched(c: MatrixBatch, shift: complex, *,
                         backend: CpuBackend | None = None) -> None:
    (backend or _DEFAULT_BACKEND).diagonal_add_batched(c, shift)


def copy_matrix(src: MatrixBatch, src_index: int, dst: MatrixBatch, dst_index: int, *,
                backend: CpuBackend | None = None) -> None:
    (backend or _DEFAULT_BACKEND).copy_matrix(src, src_index, dst, dst_index)


def one_norm(matrix: np.ndarray) -> float:
    """Induced 1-norm: the largest absolute column sum."""
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"one_norm expects a square matrix, got shape {m.shape}")
    return float(np.abs(m).sum(axis=0).max())


def expand_linear_combination(terms: Sequence[np.ndarray], coeffs: np.ndarray, scale: float,
                              precision: Precision = Precision.FP64,
                              out: MatrixBatch | None = None, *,
                              backend: CpuBackend | None = None) -> MatrixBatch:
    return (backend or _DEFAULT_BACKEND).expand_linear_combination(
        terms, coeffs, scale, precision, out)
