"""Cooperative multi-vehicle task allocation under battery-time limits."""

__version__ = "0.1.0"

from .clustering import ClusterAssignment, cluster_tasks, fcm, kmeans
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .cost import CostWeights, FleetPlan, Route, plan_cost
from .environment import DensityCenter, FieldSpec, TaskSpot, build_field, sample_tasks
from .ga import GaParams, pmx_crossover, run_ga
from .harness import RunResult, compare_modes, run_monte_carlo, run_scenario
from .hfc import HfcParams, run_hfc
from .kinematics import VehicleConfig

__all__ = [
    "__version__",
    "ClusterAssignment",
    "ConfigError",
    "CostWeights",
    "DensityCenter",
    "FieldSpec",
    "FleetPlan",
    "GaParams",
    "HfcParams",
    "Route",
    "RunResult",
    "ScenarioConfig",
    "TaskSpot",
    "VehicleConfig",
    "build_field",
    "cluster_tasks",
    "compare_modes",
    "fcm",
    "kmeans",
    "load_config",
    "parse_config",
    "pmx_crossover",
    "plan_cost",
    "run_ga",
    "run_hfc",
    "run_monte_carlo",
    "run_scenario",
    "sample_tasks",
]
