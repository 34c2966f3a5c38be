"""Interactive-session binding over the sliced-propagation context.

The library's context API maps one-to-one onto a managed Session:
construct, set_hamiltonian, equiprop as often as wanted, close.  Inputs
and outputs are plain dense numpy arrays, converted at the boundary
without copying when the layout already matches, and the binding does no
arithmetic of its own: results are bit-for-bit what the library produces
for the same inputs and precision.

Failures surface as :class:`BindingError`; its ``code`` attribute carries
the library's stable error code string (for example "state-machine" or
"step-too-large") so callers can branch without parsing messages.

Sessions are single-threaded by contract.  A per-session busy flag turns
a reentrant call into a state-machine error instead of corrupted scratch
buffers.  Dropping the last reference tears the native context down via
a finalizer; an explicit close (or a ``with`` block) is the polite route.
"""

from __future__ import annotations

import weakref

import numpy as np

import sliceprop as _lib

__all__ = ["BindingError", "Session", "equiprop", "__version__"]

__version__ = "0.1.0"

_STATE_CODE = _lib.ErrorCode.STATE_MACHINE.value


class BindingError(Exception):
    """A library failure surfaced through the binding.

    code is the machine-readable error code string of the underlying
    failure, preserved verbatim from the library.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _translate(exc: _lib.IntegratorError) -> BindingError:
    return BindingError(exc.code.value, str(exc))


class Session:
    """One propagation context with an explicit lifecycle.

    precision is "fp32" or "fp64"; m_max, when given, pins the series
    order instead of selecting it per call; checked enables the
    Hermiticity sanity pass on every exponent batch.  All three are
    handed through to the wrapped context untouched.
    """

    def __init__(self, precision="fp64", m_max: int | None = None,
                 checked: bool = False):
        try:
            ctx = _lib.create(precision=precision, m_max=m_max, checked=checked)
        except _lib.IntegratorError as exc:
            raise _translate(exc) from exc
        self._ctx = ctx
        self._busy = False
        # teardown runs at most once, whether triggered by close(), the
        # with-block exit, or garbage collection of the session
        self._finalizer = weakref.finalize(self, ctx.close)

    # -- lifecycle -----------------------------------------------------

    @property
    def closed(self) -> bool:
        return not self._finalizer.alive

    @property
    def precision(self) -> str:
        return self._ctx.precision.value

    def close(self) -> None:
        """Release the wrapped context. Safe to call repeatedly."""
        self._finalizer()

    def __enter__(self) -> "Session":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def _guard(self) -> None:
        if not self._finalizer.alive:
            raise BindingError(_STATE_CODE, "session is closed")
        if self._busy:
            raise BindingError(
                _STATE_CODE, "session is busy: calls must not reenter")

    # -- wrapped operations ---------------------------------------------

    def set_hamiltonian(self, drift, controls=(), *, magnus: bool = False,
                        quadrature=None) -> None:
        """Load (or replace) the system from dense Hermitian arrays.

        drift is the (d, d) static part, controls an iterable of (d, d)
        coupling matrices.  magnus switches to the fourth-order doubled
        step (three-point sampling implied); quadrature picks midpoint
        or simpson explicitly otherwise.
        """
        self._guard()
        self._busy = True
        try:
            system = _lib.ControlSystem(np.asarray(drift),
                                        [np.asarray(h) for h in controls])
            self._ctx.set_hamiltonian(system, magnus=magnus,
                                      quadrature=quadrature)
        except _lib.IntegratorError as exc:
            raise _translate(exc) from exc
        finally:
            self._busy = False

    def equiprop(self, coefficients, dt: float, *,
                 cumulative: bool = False) -> np.ndarray:
        """Propagator over the sampled window.

        coefficients is the (pts, N) coefficient table matching the
        loaded controls (shape (pts, 0) for a pure drift), dt the sample
        step.  Returns the (d, d) total propagator, or the
        (slices, d, d) stack of running products when cumulative.
        """
        self._guard()
        self._busy = True
        try:
            amps = _lib.ControlAmplitudes(np.asarray(coefficients), dt)
            if cumulative:
                return self._ctx.equiprop_all(amps).u_all
            return self._ctx.equiprop(amps).u
        except _lib.IntegratorError as exc:
            raise _translate(exc) from exc
        finally:
            self._busy = False


def equiprop(H0, Hs, c, dt, **mode) -> np.ndarray:
    """One-shot propagation: new session, one run, teardown.

    mode keywords: precision ("fp64"), m_max, checked, magnus,
    quadrature, cumulative; anything else is rejected.
    """
    precision = mode.pop("precision", "fp64")
    m_max = mode.pop("m_max", None)
    checked = mode.pop("checked", False)
    magnus = mode.pop("magnus", False)
    quadrature = mode.pop("quadrature", None)
    cumulative = mode.pop("cumulative", False)
    if mode:
        raise BindingError(_lib.ErrorCode.CONFIG.value,
                           f"unknown mode keywords: {sorted(mode)}")
    with Session(precision=precision, m_max=m_max, checked=checked) as session:
        session.set_hamiltonian(H0, Hs, magnus=magnus, quadrature=quadrature)
        return session.equiprop(c, dt, cumulative=cumulative)
