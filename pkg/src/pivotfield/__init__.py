"""Soil-water simulation, observability-based sensor placement and EKF
soil moisture estimation for center-pivot irrigated fields."""

__version__ = "0.1.0"

from .ekf import FilterState, predict, run_assimilation, update
from .grid import CylindricalGrid, ParameterField, StateVector
from .hydraulics import (
    LOAM,
    SoilParameters,
    capillary_capacity,
    hydraulic_conductivity,
    water_content,
)
from .kriging import SoilSample, VariogramModel, fit_variogram, krige_field
from .metrics import MetricSeries, error_map, evaluate_run, nrmse, rmse_at
from .observability import (
    ObservabilityReport,
    SensorLayout,
    discretize_jacobian,
    modal_degree,
    rank_jacobians,
    rank_nodes,
    select_sensors,
)
from .solver import (
    BoundaryConditions,
    FieldModel,
    IrrigationSchedule,
    SinkField,
    StepFailure,
    hydrostatic_state,
    jacobian,
    rhs,
    simulate,
    step,
    total_water_volume,
)

__all__ = [
    "__version__",
    "SoilParameters",
    "LOAM",
    "water_content",
    "hydraulic_conductivity",
    "capillary_capacity",
    "CylindricalGrid",
    "ParameterField",
    "StateVector",
    "SoilSample",
    "VariogramModel",
    "fit_variogram",
    "krige_field",
    "BoundaryConditions",
    "IrrigationSchedule",
    "SinkField",
    "FieldModel",
    "StepFailure",
    "rhs",
    "jacobian",
    "step",
    "simulate",
    "hydrostatic_state",
    "total_water_volume",
    "ObservabilityReport",
    "SensorLayout",
    "discretize_jacobian",
    "modal_degree",
    "rank_nodes",
    "rank_jacobians",
    "select_sensors",
    "FilterState",
    "predict",
    "update",
    "run_assimilation",
    "MetricSeries",
    "rmse_at",
    "nrmse",
    "evaluate_run",
    "error_map",
]
