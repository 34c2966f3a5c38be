"""Stable error codes and the exception hierarchy shared by all modules.

Every exception raised on purpose by this library derives from
:class:`IntegratorError` and carries a machine-readable :class:`ErrorCode`,
so embedders (and the CLI) can map failures without parsing messages.
"""

from __future__ import annotations

from enum import Enum

__all__ = [
    "ErrorCode",
    "IntegratorError",
    "ShapeError",
    "HermiticityError",
    "AmplitudeBoundError",
    "SamplingParityError",
    "StepTooLargeError",
    "StateMachineError",
    "AliasingError",
    "DomainError",
    "ConfigError",
]


class ErrorCode(Enum):
    SHAPE = "shape"
    HERMITICITY = "hermiticity"
    AMPLITUDE_BOUND = "amplitude-bound"
    SAMPLING_PARITY = "sampling-parity"
    STEP_TOO_LARGE = "step-too-large"
    STATE_MACHINE = "state-machine"
    ALIASING = "aliasing"
    DOMAIN = "domain"
    CONFIG = "config"


class IntegratorError(Exception):
    """Base class; ``exc.code`` identifies the failure class."""

    code: ErrorCode

    def __init__(self, message: str):
        super().__init__(message)


class ShapeError(IntegratorError):
    """Operands disagree in dimension, count, precision or layout."""

    code = ErrorCode.SHAPE


class HermiticityError(IntegratorError):
    """A matrix required to be Hermitian is not, beyond tolerance."""

    code = ErrorCode.HERMITICITY


class AmplitudeBoundError(IntegratorError):
    """A control amplitude sample lies outside [-1, 1]."""

    code = ErrorCode.AMPLITUDE_BOUND


class SamplingParityError(IntegratorError):
    """Sample count incompatible with the requested quadrature."""

    code = ErrorCode.SAMPLING_PARITY


class StepTooLargeError(IntegratorError):
    """Slice exponent norm exceeds what one expansion can absorb.

    ``norm_bound`` is the offending bound, ``capability`` the largest norm
    the highest-order plan covers at the working precision; shrinking dt by
    ``norm_bound / capability`` makes the step admissible.
    """

    code = ErrorCode.STEP_TOO_LARGE

    def __init__(self, message: str, *, norm_bound: float | None = None,
                 capability: float | None = None):
        super().__init__(message)
        self.norm_bound = norm_bound
        self.capability = capability


class StateMachineError(IntegratorError):
    """Lifecycle misuse (e.g. propagating before a system is loaded)."""

    code = ErrorCode.STATE_MACHINE


class AliasingError(IntegratorError):
    """Kernel output buffer overlaps an input buffer."""

    code = ErrorCode.ALIASING


class DomainError(IntegratorError):
    """Scalar argument outside the supported range."""

    code = ErrorCode.DOMAIN


class ConfigError(IntegratorError):
    """Inconsistent mode or configuration request."""

    code = ErrorCode.CONFIG
