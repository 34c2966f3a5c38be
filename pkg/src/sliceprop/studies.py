"""Reference problems and measurement harnesses.

A rotating-frame qubit drive with a closed-form propagator anchors the
convergence studies; the harnesses here sweep step counts, fit observed
orders and time the batched pipeline.  Everything consumes the public
propagator interface only.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .chebyshev import ORDER_GRID, norm_capability
from .errors import SamplingParityError
from .hamiltonian import ControlAmplitudes, ControlSystem, Quadrature
from .linalg import Precision, one_norm
from .propagator import create

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "DrivenQubit",
    "coerce_pts",
    "midpoint_reference",
    "validate_analytic_oracle",
    "align_phase",
    "convergence_sweep",
    "fit_convergence_order",
    "bench_grid",
    "norm_capability_table",
    "format_capability",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _su2(axis, angle: float) -> np.ndarray:
    """exp(-i (angle/2) axis.sigma) for a unit-length axis."""
    nx, ny, nz = axis
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    return np.array([[c - 1j * s * nz, -1j * s * (nx - 1j * ny)],
                     [-1j * s * (nx + 1j * ny), c + 1j * s * nz]])


@dataclass(frozen=True)
class DrivenQubit:
    """Circularly driven qubit: drift (w0/2) sz plus a rotating drive.

    H(t) = (w0/2) sz + (w1/2)(cos(wrf t) sx + sin(wrf t) sy).  In the
    frame rotating at wrf the Hamiltonian is constant, which gives the
    closed form used as the convergence oracle.
    """

    w0: float = 1.0
    w1: float = 0.1
    wrf: float = 1.0
    duration: float = 6.0

    def system(self) -> ControlSystem:
        return ControlSystem(0.5 * self.w0 * PAULI_Z,
                             [0.5 * self.w1 * PAULI_X, 0.5 * self.w1 * PAULI_Y])

    def amplitudes(self, pts: int, quadrature=Quadrature.MIDPOINT) -> ControlAmplitudes:
        """Sampled (cos, sin) drive covering [0, duration].

        Midpoint sampling places the pts samples at slice centers
        (k + 1/2) dt with dt = duration/pts; the three-point rule needs
        an odd pts >= 3 on the shared-endpoint grid dt = duration/(pts-1).
        """
        quadrature = Quadrature.parse(quadrature)
        if quadrature is Quadrature.MIDPOINT:
            if pts < 0:
                raise SamplingParityError(f"sample count must be >= 0, got {pts}")
            dt = self.duration / max(pts, 1)
            t = (np.arange(pts) + 0.5) * dt
        else:
            if pts < 3 or pts % 2 == 0:
                raise SamplingParityError(
                    f"three-point quadrature needs an odd number of "
                    f"samples >= 3, got {pts}")
            dt = self.duration / (pts - 1)
            t = np.arange(pts) * dt
        values = np.column_stack([np.cos(self.wrf * t), np.sin(self.wrf * t)])
        return ControlAmplitudes(values, dt)

    def exact_propagator(self) -> np.ndarray:
        """Closed form: a frame rotation times a constant-field rotation."""
        t = self.duration
        vx, vz = self.w1, self.w0 - self.wrf
        vnorm = math.hypot(vx, vz)
        if vnorm == 0.0:
            inner = np.eye(2, dtype=complex)
        else:
            inner = _su2((vx / vnorm, 0.0, vz / vnorm), vnorm * t)
        return _su2((0.0, 0.0, 1.0), self.wrf * t) @ inner


def coerce_pts(pts: int, quadrature) -> int:
    """Nearest usable sample count at or above the request."""
    pts = int(pts)
    if Quadrature.parse(quadrature) is Quadrature.SIMPSON:
        return max(3, pts | 1)
    return max(1, pts)


def _fold_ordered(u: np.ndarray) -> np.ndarray:
    """Product u[n-1] ... u[0] of an (n, 2, 2) stack by pairwise halving."""
    while u.shape[0] > 1:
        pairs = u.shape[0] // 2
        folded = np.matmul(u[1:2 * pairs:2], u[0:2 * pairs:2])
        if u.shape[0] % 2:
            folded = np.concatenate([folded, u[-1:]])
        u = folded
    return u[0]


def midpoint_reference(problem: DrivenQubit, steps: int,
                       chunk: int = 1 << 20) -> np.ndarray:
    """Midpoint-sliced propagator from exact per-slice rotations.

    Every slice is an analytic SU(2) rotation (the field magnitude is
    constant, only the axis turns), so this reference shares no code
    with the series evaluator.  Slices are folded in chunks to keep
    memory flat for step counts in the tens of millions.
    """
    if steps < 1:
        return np.eye(2, dtype=complex)
    dt = problem.duration / steps
    vnorm = math.hypot(problem.w1, problem.w0)
    if vnorm == 0.0:
        return np.eye(2, dtype=complex)
    c = math.cos(vnorm * dt / 2.0)
    s = math.sin(vnorm * dt / 2.0)
    ax = problem.w1 / vnorm
    az = problem.w0 / vnorm
    total = np.eye(2, dtype=complex)
    for start in range(0, steps, chunk):
        t = (np.arange(start, min(start + chunk, steps)) + 0.5) * dt
        phase = problem.wrf * t
        nxy = ax * np.exp(1j * phase)  # nx + i ny
        u = np.empty((t.size, 2, 2), dtype=complex)
        u[:, 0, 0] = c - 1j * s * az
        u[:, 0, 1] = -1j * s * nxy.conj()
        u[:, 1, 0] = -1j * s * nxy
        u[:, 1, 1] = c + 1j * s * az
        total = _fold_ordered(u) @ total
    return total


_ORACLE_ERRORS: dict[tuple, float] = {}


def validate_analytic_oracle(problem: DrivenQubit | None = None,
                             steps: int = 10_000_000, tol: float = 1e-8) -> float:
    """Check the closed form against a brute-force midpoint reference.

    Returns the observed deviation (cached per problem and step count,
    so repeated calls in one process cost nothing); raises if it exceeds
    tol, since every convergence number downstream leans on the oracle.
    """
    problem = problem if problem is not None else DrivenQubit()
    key = (problem.w0, problem.w1, problem.wrf, problem.duration, int(steps))
    if key not in _ORACLE_ERRORS:
        ref = midpoint_reference(problem, int(steps))
        err = np.abs(ref - problem.exact_propagator()).max()
        _ORACLE_ERRORS[key] = float(err)
    err = _ORACLE_ERRORS[key]
    if err > tol:
        raise RuntimeError(
            f"analytic oracle validation failed: {steps}-step reference "
            f"deviates by {err:.3g} (tolerance {tol:.3g})")
    return err


def align_phase(u: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Remove the global phase of u relative to reference (det based)."""
    d = u.shape[0]
    det = np.linalg.det(u @ reference.conj().T)
    if det == 0.0:
        return u
    return u * np.exp(-1j * np.angle(det) / d)


def convergence_sweep(problem: DrivenQubit, pts_list, magnus: bool = False,
                      quadrature=None, precision="fp64",
                      phase_align: bool = False) -> list[tuple[int, float]]:
    """Error against the closed form for each step count.

    Step counts are coerced to the quadrature's grid (odd for the
    three-point rule), so the returned pts may differ from the request.
    The error metric is the largest elementwise modulus of U - U_exact.
    """
    precision = Precision.parse(precision)
    ctx = create(precision=precision)
    ctx.set_hamiltonian(problem.system(), magnus=magnus, quadrature=quadrature)
    exact = problem.exact_propagator()
    rows = []
    for pts in pts_list:
        pts = coerce_pts(pts, ctx.quadrature)
        amps = problem.amplitudes(pts, ctx.quadrature)
        u = ctx.equiprop(amps).u.astype(np.complex128)
        if phase_align:
            u = align_phase(u, exact)
        rows.append((pts, float(np.abs(u - exact).max())))
    ctx.close()
    return rows


def fit_convergence_order(pts, errors) -> tuple[float, tuple[int, int]]:
    """Observed order from the pre-floor region of a sweep.

    Points within a factor 10 of the smallest error are treated as the
    roundoff floor and excluded; the fit runs over the longest contiguous
    strictly-decreasing run of what remains (at least three points) and
    returns (order, (pts_first, pts_last)) for that window.
    """
    pts = np.asarray(pts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if pts.shape != errors.shape or pts.ndim != 1:
        raise ValueError("pts and errors must be equal-length 1-D sequences")
    keep = errors > 10.0 * errors.min()
    best_start, best_stop = 0, 0
    i = 0
    n = len(pts)
    while i < n:
        if not keep[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and keep[j + 1] and errors[j + 1] < errors[j]:
            j += 1
        if j + 1 - i > best_stop - best_start:
            best_start, best_stop = i, j + 1
        i = max(j, i + 1)
    if best_stop - best_start < 3:
        raise ValueError("no monotone convergence window of at least 3 points")
    window = slice(best_start, best_stop)
    slope = np.polyfit(np.log10(pts[window]), np.log10(errors[window]), 1)[0]
    return float(-slope), (int(pts[best_start]), int(pts[best_stop - 1]))


def _random_system(rng: np.random.Generator, dim: int) -> ControlSystem:
    def unit_hermitian():
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = 0.5 * (a + a.conj().T)
        return h / one_norm(h)
    return ControlSystem(unit_hermitian(), [unit_hermitian()])


def bench_grid(dims, steps_list, precision="fp64", repeats: int = 3,
               seed: int = 20240911) -> list[tuple[int, int, float]]:
    """Median wall time of equiprop over a (dim, pts) grid.

    One random single-control system per dimension, a fixed seed and a
    warm-up call per point keep the numbers comparable between runs; the
    step size is chosen well inside the smallest-order capability so the
    series order stays constant across the grid.
    """
    precision = Precision.parse(precision)
    rng = np.random.default_rng(seed)
    rows = []
    for dim in dims:
        system = _random_system(rng, int(dim))
        dt = 0.5 / sum(system.norms)
        ctx = create(precision=precision)
        ctx.set_hamiltonian(system)
        for pts in sorted(int(p) for p in steps_list):
            amps = ControlAmplitudes(rng.uniform(-1.0, 1.0, (pts, 1)), dt)
            ctx.equiprop(amps)  # warm-up: buffer growth happens off the clock
            times = []
            for _ in range(max(1, int(repeats))):
                t0 = time.perf_counter()
                ctx.equiprop(amps)
                times.append(time.perf_counter() - t0)
            rows.append((int(dim), pts, float(np.median(times))))
        ctx.close()
    return rows


def norm_capability_table(precision) -> list[tuple[int, float]]:
    """(order, largest usable norm bound) over the supported grid."""
    precision = Precision.parse(precision)
    return [(m, norm_capability(m, precision)) for m in ORDER_GRID]


def format_capability(value: float) -> str:
    """Print a capability bound with the table's digit convention:
    scientific with one significant digit below 5e-4, else three
    decimals."""
    return f"{value:.0e}" if value < 5e-4 else f"{value:.3f}"
