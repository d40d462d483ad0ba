"""Sensitive/resistant bacteria dynamics under antibiotic pressure, with
threshold analysis, stability regions and optimal control of mutation and
horizontal gene transfer."""
from .control import (
    ControlSolution,
    CostWeights,
    FBSConfig,
    NoConvergence,
    constant_control_oracle,
    solve_fbs,
)
from .dynamics import IntegrationError, IntegratorConfig, Trajectory, simulate_dimensional, simulate_dimensionless
from .equilibria import DegenerateCase, find_equilibria
from .model import (
    Controls,
    DimensionalParams,
    DimensionlessParams,
    ParameterError,
    Thresholds,
    compute_thresholds,
    nondimensionalize,
    params_from_thresholds,
)
from .scenarios import Scenario, resolve, run_figure
from .stability import classify, classify_all, classify_region

__version__ = "0.1.0"
