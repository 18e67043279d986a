"""Small-open-economy New Keynesian model with household credit spreads."""

__version__ = "0.1.0"

from .calibration import (
    SCENARIOS,
    SHOCK_NAMES,
    Calibration,
    CalibrationError,
    aggregate_spread_elasticity,
    load_calibration,
    scenario,
)
from .model import ModelSystem, Policy, build_system
from .simulate import PathSet, compare_rules, irf, loss, scenario_sweep, stochastic_simulate
from .solver import Solution, SolverError, solve

__all__ = [
    "SCENARIOS",
    "SHOCK_NAMES",
    "Calibration",
    "CalibrationError",
    "ModelSystem",
    "PathSet",
    "Policy",
    "Solution",
    "SolverError",
    "aggregate_spread_elasticity",
    "build_system",
    "compare_rules",
    "irf",
    "load_calibration",
    "loss",
    "scenario",
    "scenario_sweep",
    "solve",
    "stochastic_simulate",
]
