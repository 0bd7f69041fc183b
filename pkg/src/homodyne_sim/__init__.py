"""Truncated-Fock-space toolkit for entanglement tests with finite local
oscillators: operator algebra, state constructors, measured-quadrature
homodyne models, moment criteria, and spin-1 condensate dynamics."""

__version__ = "0.1.0"

from .fock import (
    CutoffConvergenceError,
    DimensionLimitError,
    HilbertSpace,
    LinearOperator,
    QuantumState,
    SpaceMismatchError,
    adjoint,
    annihilation,
    compose,
    creation,
    expectation,
    identity,
    lincomb,
    make_space,
    mixed_state,
    number,
    pad_state,
    pure_state,
    quadrature,
    state_from_dict,
    state_from_json,
    state_to_dict,
    state_to_json,
    tensor_product,
    variance,
)
from .states import StateSpec, build, mandel_q, mean_photon_number, moments
from .homodyne import (
    MeasurementBudget,
    MeasuredQuadrature,
    SampleResult,
    first_order_settings,
    fluctuation_delta_m,
    hz_lhs_first_order,
    lo_intensity,
    measured_quadrature,
    reconstruct_second_order,
    sample_measurement,
    second_order_lhs,
    second_order_settings,
)
from .criteria import (
    CriterionResult,
    LOBoundReport,
    hz_original,
    lo_bounds,
    measured_first_order,
    measured_second_order,
    select_bound,
    settings_count,
)
from .spin_bec import (
    BECTrajectory,
    SpinBlock,
    angular_momentum_spectrum,
    build_block,
    evolve,
    lo_budget_check,
)
from .experiments import ExperimentConfig, run_experiment, validate_config

__all__ = [name for name in dir() if not name.startswith("_")]
