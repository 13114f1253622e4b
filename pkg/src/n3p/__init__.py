"""Learned preparatory-pose parking planner with Hybrid A* baselines."""
from .geometry import Pose, VehicleSpec
from .hybrid_astar import PlannerConfig, Variant, plan
from .planner import plan_direct, plan_n3p

__version__ = "0.1.0"
__all__ = ["Pose", "VehicleSpec", "PlannerConfig", "Variant", "plan", "plan_n3p", "plan_direct"]
