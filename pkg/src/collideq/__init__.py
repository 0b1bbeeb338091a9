"""Multi-bath quantum collision model simulator."""

from .blp import BlpResult, blp_measure, default_n_steps
from .engine import (
    EvolutionResult,
    HeatRecord,
    ModelConfig,
    StepChannel,
    embedded_step_channel,
    evolve,
    heisenberg_interaction,
    intra_bath_unitary,
    markovian_channel,
    markovian_step,
    partial_swap,
    setting2_unitary,
    steady_heat_flux,
    steady_heat_flux_from_state,
    steady_state,
)
from .errors import (
    CollideqError,
    DimensionMismatch,
    IntegrationUnstable,
    InvalidParameter,
    InvalidSubsystem,
    NonUniqueSteadyState,
    NotDiagonal,
    NotHermitian,
    NumericalPositivityError,
)
from .lindblad import LindbladSpec, dissipator, integrate, liouvillian_matrix, thermal_qubit_spec
from .metrics import (
    EffectiveTemperature,
    ThermalParams,
    effective_temperature,
    fidelity,
    fidelity_from_delta_beta,
    gibbs_qubit,
    nbar,
    negativity_2,
    negativity_bipartition,
    pair_negativities,
    trace_distance,
    tripartite_negativity,
)
from .tensor import (
    DensityMatrix,
    HermitianOp,
    QubitRegister,
    UnitaryOp,
    embed,
    eig_hermitian,
    expm_i_hermitian,
    kron,
    matrices_close,
    partial_trace,
    partial_transpose,
)
from .trajectories import (
    EnsembleStats,
    TrajectoryRecord,
    ensemble_mean_heat,
    run_trajectory,
    trajectory_seed,
)

__all__ = [
    "BlpResult",
    "CollideqError",
    "DensityMatrix",
    "DimensionMismatch",
    "EffectiveTemperature",
    "EnsembleStats",
    "EvolutionResult",
    "HeatRecord",
    "HermitianOp",
    "IntegrationUnstable",
    "InvalidParameter",
    "InvalidSubsystem",
    "LindbladSpec",
    "ModelConfig",
    "NonUniqueSteadyState",
    "NotDiagonal",
    "NotHermitian",
    "NumericalPositivityError",
    "QubitRegister",
    "StepChannel",
    "ThermalParams",
    "TrajectoryRecord",
    "UnitaryOp",
    "blp_measure",
    "default_n_steps",
    "dissipator",
    "effective_temperature",
    "embed",
    "embedded_step_channel",
    "eig_hermitian",
    "ensemble_mean_heat",
    "evolve",
    "expm_i_hermitian",
    "fidelity",
    "fidelity_from_delta_beta",
    "gibbs_qubit",
    "heisenberg_interaction",
    "integrate",
    "intra_bath_unitary",
    "kron",
    "liouvillian_matrix",
    "markovian_channel",
    "markovian_step",
    "matrices_close",
    "nbar",
    "negativity_2",
    "negativity_bipartition",
    "pair_negativities",
    "partial_swap",
    "partial_trace",
    "partial_transpose",
    "run_trajectory",
    "setting2_unitary",
    "steady_heat_flux",
    "steady_heat_flux_from_state",
    "steady_state",
    "thermal_qubit_spec",
    "trace_distance",
    "trajectory_seed",
    "tripartite_negativity",
]
