"""Kinodynamic conflict-based search for multi-robot motion planning."""

from kinocbs.baselines import crrt_plan, prrt_plan
from kinocbs.conflicts import Conflict, Constraint, InvalidPlanError, Plan, validate_plan, verify_plan
from kinocbs.dynamics import RobotModel, kinematic_car, merge_models, propagate, second_order_car
from kinocbs.geometry import BodySpec, ConvexPolygon, Workspace
from kinocbs.low_level import Environment, Exhausted, PlannerSettings, Solution, cstr_plan
from kinocbs.scenario import Scenario, load_scenario
from kinocbs.search import SolveConfig, SolveResult, SolveStats, solve
from kinocbs.trajectory import Segment, Trajectory

__all__ = [
    "BodySpec", "Conflict", "Constraint", "ConvexPolygon", "Environment", "Exhausted",
    "InvalidPlanError", "Plan", "PlannerSettings", "RobotModel", "Scenario", "Segment",
    "Solution", "SolveConfig", "SolveResult", "SolveStats", "Trajectory", "Workspace",
    "crrt_plan", "cstr_plan", "kinematic_car", "load_scenario", "merge_models", "prrt_plan",
    "propagate", "second_order_car", "solve", "validate_plan", "verify_plan",
]

__version__ = "0.1.0"
