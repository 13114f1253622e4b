"""Three-stage parking: predict a preparatory pose, plan to it, then connect
to the goal. Any failure along the way falls back to direct planning."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Optional

from .environment import (
    Scenario,
    abstract_environment,
    goal_pose,
    quantize,
)
from .errors import BelowMinimum, JunctionMismatch, PlanningFailure, SpotBlocked
from .geometry import (
    ObstacleCloud,
    Pose,
    VehicleSpec,
    angle_diff,
    from_spot_frame,
    points_to_spot_frame,
    to_spot_frame,
)
from .hybrid_astar import (
    PathStats,
    PlannedPath,
    PlannerConfig,
    Variant,
    build_path,
    count_direction_changes,
    path_cost,
    plan,
)
from .selector import KnnIndex, predict

JUNCTION_TOL = 1e-6


@dataclass
class StageBreakdown:
    abstraction_time: float = 0.0
    predict_time: float = 0.0
    approach_nodes: int = 0
    approach_time: float = 0.0
    parking_nodes: int = 0
    parking_time: float = 0.0
    fallback_nodes: int = 0
    fallback_time: float = 0.0

    @property
    def total_nodes(self) -> int:
        return self.approach_nodes + self.parking_nodes + self.fallback_nodes


@dataclass
class N3PResult:
    path: PlannedPath  # world frame
    stage_breakdown: StageBreakdown
    used_fallback: bool
    g_pre: Optional[Pose]  # world frame, None when prediction never happened
    fallback_reason: str = ""


def concatenate(approach: PlannedPath, parking: PlannedPath, cfg: Optional[PlannerConfig] = None) -> PlannedPath:
    cfg = cfg or PlannerConfig()
    a, b = approach.end, parking.start
    if math.hypot(a.x - b.x, a.y - b.y) > JUNCTION_TOL or abs(angle_diff(a.theta, b.theta)) > JUNCTION_TOL:
        raise JunctionMismatch(f"approach ends at {a}, parking starts at {b}")
    segments = list(approach.segments) + list(parking.segments)
    states = list(approach.states) + list(parking.states[1:])
    rs_index = None
    if parking.rs_start_index is not None:
        rs_index = len(approach.states) - 1 + parking.rs_start_index
    stats = PathStats(
        nodes_expanded=approach.stats.nodes_expanded + parking.stats.nodes_expanded,
        planning_time=approach.stats.planning_time + parking.stats.planning_time,
        total_length=float(sum(s.length for s in segments)),
        direction_changes=count_direction_changes(segments),
        cost=path_cost(segments, cfg),
    )
    return PlannedPath(approach.start, segments, states, rs_index, stats)


def plan_n3p(
    start_world: Pose,
    scenario: Scenario,
    index: KnnIndex,
    cfg: Optional[PlannerConfig] = None,
    spec: Optional[VehicleSpec] = None,
) -> N3PResult:
    cfg = cfg or PlannerConfig()
    spec = spec or VehicleSpec()
    if index.dataset.ptype is not scenario.ptype:
        raise ValueError(f"index is for {index.dataset.ptype.value}, scenario is {scenario.ptype.value}")
    t0 = time.perf_counter()
    spot = scenario.spot_pose
    to_world = lambda p: from_spot_frame(p, spot)  # noqa: E731
    start = to_spot_frame(start_world, spot)
    goal = goal_pose(scenario.ptype, spec)
    obstacles = ObstacleCloud(points_to_spot_frame(scenario.obstacles.points, spot), frame="spot")
    sb = StageBreakdown()

    if math.hypot(start.x - goal.x, start.y - goal.y) <= cfg.goal_tol_xy and abs(
        angle_diff(start.theta, goal.theta)
    ) <= cfg.goal_tol_theta:
        path = build_path(start_world, [], spec, cfg, planning_time=time.perf_counter() - t0)
        return N3PResult(path, sb, False, None)

    g_pre = None
    reason = ""
    try:
        t = time.perf_counter()
        env = abstract_environment(obstacles, scenario.ptype, spec)
        e_train = quantize(env, index.dataset.grid)
        sb.abstraction_time = time.perf_counter() - t
        t = time.perf_counter()
        g_pre = predict(index, start, e_train)
        sb.predict_time = time.perf_counter() - t
        stage_cfg = replace(cfg, node_cap=cfg.stage_node_cap)
        try:
            approach = plan(start, g_pre, obstacles, spec, stage_cfg, Variant.WITH_RS)
        except PlanningFailure as exc:
            sb.approach_nodes = exc.nodes_expanded
            raise
        sb.approach_nodes = approach.stats.nodes_expanded
        sb.approach_time = approach.stats.planning_time
        try:
            parking = plan(g_pre, goal, obstacles, spec, stage_cfg, Variant.WITH_RS)
        except PlanningFailure as exc:
            sb.parking_nodes = exc.nodes_expanded
            raise
        sb.parking_nodes = parking.stats.nodes_expanded
        sb.parking_time = parking.stats.planning_time
        merged = concatenate(approach, parking, cfg)
    except (SpotBlocked, BelowMinimum, PlanningFailure, JunctionMismatch) as exc:
        reason = f"{type(exc).__name__}: {exc}"
    else:
        merged.stats.planning_time = time.perf_counter() - t0
        merged.stats.nodes_expanded = sb.total_nodes
        return N3PResult(merged.transformed(to_world), sb, False, to_world(g_pre))

    t = time.perf_counter()
    try:
        direct = plan(start, goal, obstacles, spec, cfg, Variant.WITH_RS)
    except PlanningFailure as exc:
        exc.nodes_expanded += sb.approach_nodes + sb.parking_nodes
        raise
    sb.fallback_nodes = direct.stats.nodes_expanded
    sb.fallback_time = time.perf_counter() - t
    direct.stats.planning_time = time.perf_counter() - t0
    direct.stats.nodes_expanded = sb.total_nodes
    return N3PResult(direct.transformed(to_world), sb, True, to_world(g_pre) if g_pre else None, reason)


def plan_direct(
    scenario: Scenario,
    variant: Variant | str = Variant.WITH_RS,
    cfg: Optional[PlannerConfig] = None,
    spec: Optional[VehicleSpec] = None,
) -> PlannedPath:
    """Baseline planner call in the spot frame, with the result mapped to world."""
    cfg = cfg or PlannerConfig()
    spec = spec or VehicleSpec()
    t0 = time.perf_counter()
    spot = scenario.spot_pose
    obstacles = ObstacleCloud(points_to_spot_frame(scenario.obstacles.points, spot), frame="spot")
    path = plan(to_spot_frame(scenario.start, spot), goal_pose(scenario.ptype, spec), obstacles, spec, cfg, variant)
    path.stats.planning_time = time.perf_counter() - t0
    return path.transformed(lambda p: from_spot_frame(p, spot))


__all__ = ["N3PResult", "StageBreakdown", "concatenate", "plan_n3p", "plan_direct"]
