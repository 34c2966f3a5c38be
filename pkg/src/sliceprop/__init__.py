"""Batched Chebyshev propagation for piecewise-constant time-dependent Hamiltonians."""

from .chebyshev import (
    ORDER_GRID,
    ChebyshevPlan,
    Workspace,
    chebyshev_error,
    expm_batch,
    make_plan,
    norm_capability,
    select_m_max,
)
from .errors import (
    AliasingError,
    AmplitudeBoundError,
    ConfigError,
    DomainError,
    ErrorCode,
    HermiticityError,
    IntegratorError,
    SamplingParityError,
    ShapeError,
    StateMachineError,
    StepTooLargeError,
)
from .hamiltonian import (
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
from .linalg import CpuBackend, MatrixBatch, Precision, default_backend, one_norm
from .magnus import (
    EffectiveSystem,
    build_effective_system,
    build_magnus_exponent_batch,
    commutator,
    magnus_coefficients,
    magnus_spectral_bound,
)
from .propagator import (
    CumulativeResult,
    IntegratorContext,
    PropagatorResult,
    apply,
    create,
    reduce_pairwise,
)
from .studies import (
    DrivenQubit,
    align_phase,
    bench_grid,
    coerce_pts,
    convergence_sweep,
    fit_convergence_order,
    format_capability,
    norm_capability_table,
    validate_analytic_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "AliasingError",
    "AmplitudeBoundError",
    "ChebyshevPlan",
    "ConfigError",
    "ControlAmplitudes",
    "ControlSystem",
    "CpuBackend",
    "CumulativeResult",
    "DomainError",
    "DrivenQubit",
    "EffectiveSystem",
    "ErrorCode",
    "HermiticityError",
    "IntegratorContext",
    "IntegratorError",
    "MatrixBatch",
    "ORDER_GRID",
    "Precision",
    "PropagatorResult",
    "Quadrature",
    "SamplingParityError",
    "ShapeError",
    "StateMachineError",
    "StepTooLargeError",
    "Workspace",
    "align_phase",
    "apply",
    "bench_grid",
    "build_effective_system",
    "build_exponent_batch",
    "build_magnus_exponent_batch",
    "chebyshev_error",
    "coerce_pts",
    "commutator",
    "convergence_sweep",
    "create",
    "default_backend",
    "expm_batch",
    "fit_convergence_order",
    "format_capability",
    "load_manifest",
    "magnus_coefficients",
    "magnus_spectral_bound",
    "make_plan",
    "matrix_from_pairs",
    "matrix_to_pairs",
    "norm_capability",
    "norm_capability_table",
    "one_norm",
    "reduce_pairwise",
    "select_m_max",
    "spectral_bound",
    "validate_amplitudes",
    "validate_analytic_oracle",
    "__version__",
]
