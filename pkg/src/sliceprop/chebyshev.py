"""Batched exp(-iG) via a truncated Chebyshev series and the Clenshaw recurrence.

For Hermitian G with spectrum inside [alpha, beta],

    exp(-iG) ~= e^{-i(alpha+beta)/2} [a_0 I + 2 sum_{k=1}^{m} a_k T_k(X)],

    X = (2/(beta-alpha)) (G - ((alpha+beta)/2) I),
    a_k = (-i)^k J_k((beta-alpha)/2),

with the truncation error estimate

    eps(m, span) = 4 (e^{1-s^2} s)^{m+1},   s = span / (4m+4).

The smallest odd order m in {3..25} meeting the working-precision target
(2^-24 single, 2^-53 double) is picked from that estimate.  The series is
evaluated for every slice of a batch at once with the Clenshaw recurrence
D_k = a_k I + 2 X D_{k+1} - D_{k+2}, two recurrence steps fused per loop
iteration over a pair of ping-pong buffers, so one evaluation costs exactly
m+1 batched multiplies.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DomainError,
    HermiticityError,
    ShapeError,
    StepTooLargeError,
)
from .linalg import CpuBackend, MatrixBatch, Precision, default_backend

__all__ = [
    "ORDER_GRID",
    "bessel_j",
    "chebyshev_error",
    "select_m_max",
    "norm_capability",
    "ChebyshevPlan",
    "make_plan",
    "Workspace",
    "expm_batch",
]

# odd truncation orders the selector may choose from
ORDER_GRID = tuple(range(3, 26, 2))

_BESSEL_MAX_ORDER = 64
_BESSEL_MAX_ARG = 64.0
# above this the (e^{1-s^2} s)^{m+1} estimate stops shrinking with m and
# cannot be trusted for order selection
_MAX_TRUSTED_S = 1.0 / math.sqrt(2.0)


def bessel_j(k: int, x: float) -> float:
    """Bessel function of the first kind J_k(x) for 0 <= k <= 64, 0 <= x <= 64.

    Miller's backward recurrence, normalized with J_0 + 2 sum J_{2m} = 1.
    Accurate to a few ulp away from the zeros of J_k.
    """
    if not isinstance(k, (int, np.integer)):
        raise DomainError(f"order must be an integer, got {k!r}")
    x = float(x)
    if k < 0 or k > _BESSEL_MAX_ORDER:
        raise DomainError(f"order {k} outside supported range 0..{_BESSEL_MAX_ORDER}")
    if not 0.0 <= x <= _BESSEL_MAX_ARG:
        raise DomainError(f"argument {x} outside supported range 0..{_BESSEL_MAX_ARG}")
    if x == 0.0:
        return 1.0 if k == 0 else 0.0
    if x < 1e-4:
        # series head; the fourth term is < 1e-27 relative here
        y = (0.5 * x) ** 2
        head = 1.0 - y / (k + 1) + y * y / (2.0 * (k + 1) * (k + 2))
        return (0.5 * x) ** k / math.factorial(k) * head

    n_start = max(k, math.ceil(x)) + 52
    n_start += n_start % 2
    # the recurrence runs in extended precision: the normalization sum sits
    # near 1 while small J_k need absolute accuracy well below 1e-16
    ld = np.longdouble
    xl = ld(x)
    jp = ld(0.0)  # unnormalized J_{n+1}
    jc = ld(1e-30)  # unnormalized J_n
    acc = ld(2.0) * jc  # 2 * sum of even orders >= 2 (n_start is even)
    jk = jc if k == n_start else ld(0.0)
    for n in range(n_start, 0, -1):
        jp, jc = jc, (ld(2 * n) / xl) * jc - jp
        m = n - 1
        if m == k:
            jk = jc
        if m > 0 and m % 2 == 0:
            acc += ld(2.0) * jc
        if abs(jc) > 1e250:
            jp *= ld(1e-250)
            jc *= ld(1e-250)
            acc *= ld(1e-250)
            jk *= ld(1e-250)
    return float(jk / (acc + jc))  # jc holds unnormalized J_0 here


def chebyshev_error(m: int, span: float) -> float:
    """Truncation error estimate for order m over a spectral span beta-alpha."""
    s = span / (4.0 * m + 4.0)
    return 4.0 * (math.exp(1.0 - s * s) * s) ** (m + 1)


def select_m_max(norm_bound: float, precision: Precision) -> int:
    """Smallest odd order in 3..25 reaching the precision target for
    spectra inside [-norm_bound, +norm_bound].

    The error estimate is only consulted where it still decreases with m;
    past that the step is simply too large.
    """
    if norm_bound < 0:
        raise DomainError(f"norm bound must be >= 0, got {norm_bound}")
    span = 2.0 * norm_bound
    target = precision.roundoff
    for m in ORDER_GRID:
        if span / (4.0 * m + 4.0) > _MAX_TRUSTED_S:
            continue
        if chebyshev_error(m, span) <= target:
            return m
    raise StepTooLargeError(
        f"exponent norm bound {norm_bound:.6g} exceeds the order-25 capability "
        f"{norm_capability(ORDER_GRID[-1], precision):.3f} for {precision.value}; "
        "shrink the time step",
        norm_bound=norm_bound,
        capability=norm_capability(ORDER_GRID[-1], precision))


def norm_capability(m: int, precision: Precision) -> float:
    """Largest exponent norm g with chebyshev_error(m, 2g) at the precision target."""
    if m not in ORDER_GRID:
        raise ConfigError(f"order {m} not in the supported grid {ORDER_GRID}")
    target = precision.roundoff
    lo, hi = 0.0, (4.0 * m + 4.0) * _MAX_TRUSTED_S / 2.0
    # eps(m, 2g) increases with g on this bracket and exceeds the target at hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chebyshev_error(m, 2.0 * mid) <= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ChebyshevPlan:
    """Immutable description of one truncated-series evaluation.

    coeffs holds a_0..a_{m_max} in double precision; they are rounded to
    the working precision at evaluation time.  phase is the scalar
    prefactor e^{-i(alpha+beta)/2}, exactly 1 for a symmetric interval.
    """

    alpha: float
    beta: float
    m_max: int
    coeffs: np.ndarray
    phase: complex
    precision: Precision
    predicted_error: float

    @property
    def span(self) -> float:
        return self.beta - self.alpha

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "m_max": self.m_max,
            "predicted_error": self.predicted_error,
        }


def make_plan(alpha: float, beta: float, precision: Precision,
              m_max: int | None = None) -> ChebyshevPlan:
    """Build the evaluation plan for spectra inside [alpha, beta].

    With m_max given, order selection is bypassed (the predicted error is
    still recorded and may exceed the precision target); the order must
    stay on the supported odd grid and the span inside the estimate's
    region of validity.
    """
    alpha, beta = float(alpha), float(beta)
    if not alpha <= beta:
        raise ConfigError(f"spectral bounds out of order: alpha={alpha}, beta={beta}")
    span = beta - alpha
    if m_max is None:
        m_max = select_m_max(span / 2.0, precision)
    else:
        if m_max not in ORDER_GRID:
            raise ConfigError(
                f"m_max override {m_max} not an odd integer in "
                f"{ORDER_GRID[0]}..{ORDER_GRID[-1]}")
        eps = chebyshev_error(m_max, span)
        if span > 4.0 * m_max + 4.0 or eps >= 1.0:
            raise StepTooLargeError(
                f"span {span:.6g} is unusable at order {m_max} "
                f"(predicted error {eps:.3g}); shrink the time step",
                norm_bound=span / 2.0,
                capability=norm_capability(m_max, precision))
    half = span / 2.0
    coeffs = np.array([(-1j) ** k * bessel_j(k, half) for k in range(m_max + 1)],
                      dtype=np.complex128)
    phase = cmath.exp(-0.5j * (alpha + beta))
    return ChebyshevPlan(alpha=alpha, beta=beta, m_max=m_max, coeffs=coeffs,
                         phase=phase, precision=precision,
                         predicted_error=chebyshev_error(m_max, span))


class Workspace:
    """Scratch storage for expm_batch: three batches X, D0, D1 sized like G.

    Bound to one dimension and precision; capacity grows monotonically and
    is reused across calls, so back-to-back evaluations do not reallocate.
    The result of expm_batch is a view into this storage and is only valid
    until the next call that uses the same workspace.
    """

    def __init__(self, dim: int, precision: Precision):
        if dim < 1:
            raise ShapeError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.precision = precision
        self.capacity = 0
        self._x = self._d0 = self._d1 = None

    def ensure(self, count: int) -> tuple[MatrixBatch, MatrixBatch, MatrixBatch]:
        """Views of the three scratch batches with exactly ``count`` slices."""
        if self._x is None or count > self.capacity:
            self._x = MatrixBatch.zeros(self.dim, count, self.precision)
            self._d0 = MatrixBatch.zeros(self.dim, count, self.precision)
            self._d1 = MatrixBatch.zeros(self.dim, count, self.precision)
            self.capacity = count
        return (self._x.subview(0, count), self._d0.subview(0, count),
                self._d1.subview(0, count))


def _check_hermitian(g: MatrixBatch) -> None:
    gv = g.matrices()
    asym = np.abs(gv - gv.conj().transpose(0, 2, 1)).max() if g.count else 0.0
    scale = np.abs(gv).max() if g.count else 0.0
    tol = 100.0 * g.precision.roundoff * max(1.0, scale * g.dim)
    if asym > tol:
        raise HermiticityError(
            f"exponent batch asymmetry {asym:.3g} exceeds tolerance {tol:.3g}")


def expm_batch(g: MatrixBatch, plan: ChebyshevPlan, workspace: Workspace,
               backend: CpuBackend | None = None, checked: bool = False) -> MatrixBatch:
    """U[k] = exp(-i G[k]) for every slice of the batch.

    Each G[k] must be Hermitian with spectrum inside [plan.alpha,
    plan.beta]; that containment is the caller's contract (checked=True
    additionally validates Hermiticity).  Costs exactly plan.m_max + 1
    batched multiplies regardless of the batch count.  The returned batch
    aliases the workspace.
    """
    backend = backend or default_backend()
    if g.precision is not plan.precision:
        raise ShapeError(
            f"batch precision {g.precision.value} does not match plan "
            f"{plan.precision.value}")
    if workspace.dim != g.dim or workspace.precision is not g.precision:
        raise ShapeError("workspace dimension or precision does not match the batch")
    if checked:
        _check_hermitian(g)

    x, d0, d1 = workspace.ensure(g.count)
    cdt = plan.precision.complex_dtype
    span = plan.span
    center = 0.5 * (plan.alpha + plan.beta)

    xv = x.matrices()
    if span == 0.0:
        xv[:] = 0.0
    else:
        xv[:] = g.matrices()
        if center != 0.0:
            backend.diagonal_add_batched(x, -center)
        xv *= plan.precision.real_dtype.type(2.0 / span)

    a = plan.coeffs.astype(cdt)
    d0.matrices()[:] = 0.0
    d1.matrices()[:] = 0.0
    # fused Clenshaw descent: odd orders land in d1, even in d0; the final
    # step folds D0 - D2 into d0 via beta = -2
    for k in range(plan.m_max, 0, -2):
        backend.gemm_strided_batched(x, d0, 2.0, -1.0, d1)
        backend.diagonal_add_batched(d1, a[k])
        last = k == 1
        backend.gemm_strided_batched(x, d1, 2.0, -2.0 if last else -1.0, d0)
        backend.diagonal_add_batched(d0, a[0] if last else a[k - 1])
    if plan.phase != 1.0:
        d0.matrices()[:] *= cdt.type(plan.phase)
    return d0
