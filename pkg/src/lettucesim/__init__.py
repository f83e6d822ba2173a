"""Cooperative lettuce-growth simulation and variable-rate nitrogen control toolkit."""

from .model import (
    B_EPS,
    NOMINAL_PARAMS,
    PARAM_NAMES,
    CooperativityReport,
    EnvPoint,
    PlantParams,
    PlantState,
    carbon_consumption,
    check_cooperativity,
    growth_flux,
    jacobian_input,
    jacobian_state,
    litter_loss,
    nitrogen_consumption,
    nitrogen_uptake,
    output,
    output_matrix,
    photosynthesis,
    rhs,
    temperature_response,
)
from .integrator import EnvSchedule, PiecewiseConstantSignal, Trajectory, integrate
from .control import (
    ActuationSchedule,
    ControlPolicy,
    SaturationSpec,
    apply_policy,
    global_proportional,
    local_proportional,
    observe,
    saturate,
)
from .field import (
    DEFAULT_INITIAL_STATE,
    DEFAULT_LIGHT,
    DEFAULT_TEMPERATURE,
    DEFAULT_U_BAR,
    ConfigError,
    FieldConfig,
    FieldTrajectory,
    grid_topology,
    neighbors,
    rejection_threshold,
    sample_params,
    simulate_field,
)
from .metrics import (
    ComparisonReport,
    DoseResponseTable,
    ScenarioSummary,
    compare,
    dose_response_sweep,
    mean_output_curve,
    summarize,
)
from .fitting import (
    BiomassTimeseries,
    FitResult,
    FitSpec,
    cost,
    fit,
    generate_synthetic,
    nrmse,
    residuals,
    to_dry,
)
from .config import ScenarioConfig, load_config, parse_config, serialize_config

__version__ = "0.1.0"

__all__ = [
    "B_EPS",
    "NOMINAL_PARAMS",
    "PARAM_NAMES",
    "ActuationSchedule",
    "BiomassTimeseries",
    "ComparisonReport",
    "ConfigError",
    "ControlPolicy",
    "CooperativityReport",
    "DEFAULT_INITIAL_STATE",
    "DEFAULT_LIGHT",
    "DEFAULT_TEMPERATURE",
    "DEFAULT_U_BAR",
    "DoseResponseTable",
    "EnvPoint",
    "EnvSchedule",
    "FieldConfig",
    "FieldTrajectory",
    "FitResult",
    "FitSpec",
    "PiecewiseConstantSignal",
    "PlantParams",
    "PlantState",
    "ScenarioConfig",
    "ScenarioSummary",
    "Trajectory",
    "apply_policy",
    "carbon_consumption",
    "check_cooperativity",
    "compare",
    "cost",
    "dose_response_sweep",
    "fit",
    "generate_synthetic",
    "global_proportional",
    "grid_topology",
    "growth_flux",
    "integrate",
    "jacobian_input",
    "jacobian_state",
    "litter_loss",
    "load_config",
    "local_proportional",
    "mean_output_curve",
    "neighbors",
    "nitrogen_consumption",
    "nitrogen_uptake",
    "nrmse",
    "observe",
    "output",
    "output_matrix",
    "parse_config",
    "photosynthesis",
    "rejection_threshold",
    "residuals",
    "rhs",
    "sample_params",
    "saturate",
    "serialize_config",
    "simulate_field",
    "summarize",
    "temperature_response",
    "to_dry",
]
