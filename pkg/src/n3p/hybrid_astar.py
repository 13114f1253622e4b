"""Hybrid A* search over closed-form bicycle-model primitives.

Three variants share one search loop:

* ``plain``   succeeds when a popped node lies within the goal tolerance.
* ``with_rs`` additionally tries a Reeds-Shepp shot to the exact goal and
  stops at the first collision-free one.
* ``hold``    keeps shooting until ``hold_count`` shots succeeded and returns
  the cheapest completed path.

The heuristic is an obstacle-aware grid distance from the goal cell.
"""
from __future__ import annotations

import hashlib
import heapq
import itertools
import math
import time
from collections import deque
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import BoundsTooSmall, GoalOccupied, NodeCapExceeded, SearchExhausted, StartInCollision
from .geometry import (
    DS_CHECK,
    TWO_PI,
    ObstacleCloud,
    Pose,
    VehicleSpec,
    angle_diff,
    integrate_arc,
    pose_in_collision,
    poses_in_collision,
    sample_segment,
    wrap_angle,
)
from .reeds_shepp import RSPath, rs_connect

SQRT2 = math.sqrt(2.0)


class Variant(str, Enum):
    PLAIN = "plain"
    WITH_RS = "with_rs"
    HOLD = "hold"


@dataclass(frozen=True)
class PlannerConfig:
    resolution: float = 0.25
    heading_bins: int = 72
    arc_length: float = 0.6
    n_steer: int = 5
    reverse_multiplier: float = 1.5
    gear_switch_penalty: float = 2.0
    steer_change_penalty: float = 0.5
    rs_shot_period: int = 10
    node_cap: int = 200_000
    goal_tol_xy: float = 0.25
    goal_tol_theta: float = math.radians(5.0)
    hold_count: int = 5
    # node cap for each of the two learned-pose stages before falling back
    stage_node_cap: int = 5000
    # padding added around start, goal and obstacles when no bounds are given
    bounds_margin: float = 5.0
    # explicit steering set; overrides n_steer when given
    steer_values: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        for name in ("resolution", "arc_length", "reverse_multiplier", "goal_tol_xy", "goal_tol_theta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("heading_bins", "n_steer", "rs_shot_period", "node_cap", "hold_count", "stage_node_cap"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.gear_switch_penalty < 0 or self.steer_change_penalty < 0 or self.bounds_margin < 0:
            raise ValueError("penalties and bounds_margin must be non-negative")
        if self.steer_values is not None:
            object.__setattr__(self, "steer_values", tuple(float(v) for v in self.steer_values))

    def steer_set(self, spec: VehicleSpec) -> tuple[float, ...]:
        if self.steer_values is not None:
            if any(abs(v) > spec.max_steer + 1e-12 for v in self.steer_values):
                raise ValueError("steer value exceeds max_steer")
            return self.steer_values
        if self.n_steer == 1:
            return (0.0,)
        return tuple(float(v) for v in np.linspace(-spec.max_steer, spec.max_steer, self.n_steer))

    def digest(self) -> str:
        """Short stable hash of every field, stored with offline datasets."""
        text = ";".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# -- grid and heuristic ----------------------------------------------------

@dataclass
class GridMap:
    origin: tuple[float, float]
    resolution: float
    width: int
    height: int
    occupancy: np.ndarray = field(repr=False)  # (width, height) bool

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.occupancy.shape != (self.width, self.height):
            raise ValueError("occupancy shape does not match width x height")

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(math.floor((x - self.origin[0]) / self.resolution)),
            int(math.floor((y - self.origin[1]) / self.resolution)),
        )

    def in_bounds(self, i: int, j: int) -> bool:
        return 0 <= i < self.width and 0 <= j < self.height

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + (i + 0.5) * self.resolution, self.origin[1] + (j + 0.5) * self.resolution)


def inscribed_radius(spec: VehicleSpec) -> float:
    """Radius of the largest disc around the rear axle inside the inflated footprint."""
    front = spec.body_length - spec.rear_overhang
    return min(spec.body_width / 2.0, spec.rear_overhang, front) + spec.safety_margin


def dilation_radius_cells(spec: VehicleSpec, resolution: float) -> float:
    """Cell-center distance (in cells) below which a cell is occupied.

    A cell is marked only if every rear-axle position inside it is in
    collision, so the grid never blocks a feasible pose.
    """
    return (inscribed_radius(spec) - resolution * SQRT2) / resolution


def build_grid(
    obstacles: ObstacleCloud,
    bounds: tuple[float, float, float, float],
    resolution: float,
    spec: Optional[VehicleSpec] = None,
    start: Optional[Pose] = None,
    goal: Optional[Pose] = None,
) -> GridMap:
    spec = spec or VehicleSpec()
    xmin, ymin, xmax, ymax = bounds
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("degenerate bounds")
    for name, p in (("start", start), ("goal", goal)):
        if p is not None and not (xmin <= p.x < xmax and ymin <= p.y < ymax):
            raise BoundsTooSmall(f"{name} ({p.x:.3f}, {p.y:.3f}) outside bounds {bounds}")
    width = int(math.ceil((xmax - xmin) / resolution))
    height = int(math.ceil((ymax - ymin) / resolution))
    seeds = np.zeros((width, height), dtype=bool)
    if len(obstacles):
        ij = np.floor((obstacles.points - (xmin, ymin)) / resolution).astype(int)
        ok = (ij[:, 0] >= 0) & (ij[:, 0] < width) & (ij[:, 1] >= 0) & (ij[:, 1] < height)
        seeds[ij[ok, 0], ij[ok, 1]] = True
    r = dilation_radius_cells(spec, resolution)
    if r <= 0:
        occ = np.zeros_like(seeds)
    else:
        k = int(math.ceil(r))
        di, dj = np.mgrid[-k : k + 1, -k : k + 1]
        disc = di * di + dj * dj < r * r
        occ = ndimage.binary_dilation(seeds, structure=disc) if seeds.any() else seeds.copy()
    return GridMap((float(xmin), float(ymin)), float(resolution), width, height, occ)


@dataclass
class HeuristicField:
    grid: GridMap
    goal_cell: tuple[int, int]
    cost_to_go: np.ndarray = field(repr=False)  # (width, height), inf where unreachable

    def at(self, x: float, y: float) -> float:
        i, j = self.grid.cell_of(x, y)
        if not self.grid.in_bounds(i, j):
            return math.inf
        return float(self.cost_to_go[i, j])


def compute_cost_to_go(grid: GridMap, goal: Pose) -> HeuristicField:
    gi, gj = grid.cell_of(goal.x, goal.y)
    if not grid.in_bounds(gi, gj):
        raise BoundsTooSmall("goal outside grid")
    if grid.occupancy[gi, gj]:
        raise GoalOccupied("goal cell is occupied")
    w, h = grid.width, grid.height
    free = ~grid.occupancy
    idx = np.arange(w * h).reshape(w, h)
    rows, cols, vals = [], [], []
    res = grid.resolution
    for di, dj, c in ((1, 0, res), (0, 1, res), (1, 1, res * SQRT2), (1, -1, res * SQRT2)):
        # pair cell (i, j) with (i + di, j + dj)
        si = slice(0, w - di)
        ti = slice(di, w)
        sj, tj = (slice(0, h - dj), slice(dj, h)) if dj >= 0 else (slice(-dj, h), slice(0, h + dj))
        both = free[si, sj] & free[ti, tj]
        rows.append(idx[si, sj][both])
        cols.append(idx[ti, tj][both])
        vals.append(np.full(int(both.sum()), c))
    graph = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(w * h, w * h)
    ).tocsr()
    dist = dijkstra(graph, directed=False, indices=int(idx[gi, gj]))
    cost = dist.reshape(w, h)
    cost[grid.occupancy] = np.inf
    return HeuristicField(grid, (gi, gj), cost)


def default_bounds(
    obstacles: ObstacleCloud, start: Pose, goal: Pose, margin: float
) -> tuple[float, float, float, float]:
    xs = [start.x, goal.x]
    ys = [start.y, goal.y]
    b = obstacles.bounds()
    if b is not None:
        xs += [b[0], b[2]]
        ys += [b[1], b[3]]
    return (min(xs) - margin, min(ys) - margin, max(xs) + margin, max(ys) + margin)


# -- primitives and nodes --------------------------------------------------

@dataclass(frozen=True)
class MotionPrimitive:
    steer: float
    direction: int  # +1 forward, -1 reverse
    arc_length: float


@dataclass(frozen=True)
class MotionSegment:
    """One constant-steer piece of a returned path."""

    steer: float
    gear: int
    length: float


class State(NamedTuple):
    pose: Pose
    gear: int
    steer: float


@dataclass
class SearchNode:
    pose: Pose
    g_cost: float
    gear: int
    steer: float
    parent: Optional["SearchNode"]
    key: tuple[int, int, int]


class _Primitives:
    """Primitive set with sweep samples precomputed in the local frame."""

    def __init__(self, cfg: PlannerConfig, spec: VehicleSpec):
        steers = cfg.steer_set(spec)
        self.prims = [MotionPrimitive(s, d, cfg.arc_length) for d in (1, -1) for s in steers]
        self.curv = [math.tan(p.steer) / spec.wheelbase for p in self.prims]
        self.local = np.stack(
            [sample_segment(0.0, 0.0, 0.0, k, p.direction * p.arc_length) for p, k in zip(self.prims, self.curv)]
        )
        self.n_samples = self.local.shape[1]


@lru_cache(maxsize=32)
def _primitives(cfg: PlannerConfig, spec: VehicleSpec) -> _Primitives:
    return _Primitives(cfg, spec)


def heading_bin(theta: float, n_bins: int) -> int:
    """Heading bins are centered on multiples of 2*pi/n_bins."""
    return int(round(wrap_angle(theta) / (TWO_PI / n_bins))) % n_bins


def node_key(grid: GridMap, cfg: PlannerConfig, x: float, y: float, theta: float) -> tuple[int, int, int]:
    i, j = grid.cell_of(x, y)
    return (i, j, heading_bin(theta, cfg.heading_bins))


def step_cost(cfg: PlannerConfig, length: float, gear: int, steer: float, prev_gear: int, prev_steer: float) -> float:
    c = length * (cfg.reverse_multiplier if gear < 0 else 1.0)
    if prev_gear != 0 and gear != prev_gear:
        c += cfg.gear_switch_penalty
    return c + cfg.steer_change_penalty * abs(steer - prev_steer)


def path_cost(segments: Sequence[MotionSegment], cfg: PlannerConfig, prev_gear: int = 0, prev_steer: float = 0.0,
              g0: float = 0.0) -> float:
    """Accumulated search cost, summed in the same order as the search does."""
    g = g0
    for seg in segments:
        g = g + step_cost(cfg, seg.length, seg.gear, seg.steer, prev_gear, prev_steer)
        prev_gear, prev_steer = seg.gear, seg.steer
    return g


def _sweep(x: float, y: float, th: float, local: np.ndarray) -> np.ndarray:
    c, s = math.cos(th), math.sin(th)
    lx, ly, lth = local[..., 0], local[..., 1], local[..., 2]
    return np.stack((x + c * lx - s * ly, y + s * lx + c * ly, th + lth), axis=-1)


def _children(x, y, th, prim: _Primitives, spec, obstacles, grid: GridMap):
    """(primitive index, x, y, theta) for every collision-free in-grid child."""
    sweep = _sweep(x, y, th, prim.local)
    hits = poses_in_collision(spec, sweep.reshape(-1, 3), obstacles).reshape(len(prim.prims), -1).any(axis=1)
    out = []
    for k in range(len(prim.prims)):
        if hits[k]:
            continue
        cx, cy, cth = sweep[k, -1]
        if not grid.in_bounds(*grid.cell_of(cx, cy)):
            continue
        out.append((k, float(cx), float(cy), wrap_angle(float(cth))))
    return out


def expand(
    node: SearchNode,
    cfg: PlannerConfig,
    spec: VehicleSpec,
    grid: GridMap,
    obstacles: Optional[ObstacleCloud] = None,
) -> list[SearchNode]:
    """One child per primitive whose sampled sweep is collision-free and stays on the grid."""
    obstacles = obstacles if obstacles is not None else ObstacleCloud()
    prim = _primitives(cfg, spec)
    out = []
    for k, cx, cy, cth in _children(node.pose.x, node.pose.y, node.pose.theta, prim, spec, obstacles, grid):
        p = prim.prims[k]
        g = node.g_cost + step_cost(cfg, p.arc_length, p.direction, p.steer, node.gear, node.steer)
        out.append(SearchNode(Pose(cx, cy, cth), g, p.direction, p.steer, node, node_key(grid, cfg, cx, cy, cth)))
    return out


def reachable_keys(
    start: Pose,
    obstacles: ObstacleCloud,
    spec: VehicleSpec,
    cfg: Optional[PlannerConfig] = None,
    limit: int = 100,
) -> int:
    """Distinct lattice keys reachable from ``start``, counted breadth-first up to ``limit``.

    A small count means the start is boxed in at the configured primitive
    length, whatever the goal.
    """
    cfg = cfg or PlannerConfig()
    if pose_in_collision(spec, start, obstacles):
        return 0
    n = int(math.ceil(100.0 / cfg.resolution))
    grid = GridMap((start.x - 50.0, start.y - 50.0), cfg.resolution, n, n, np.zeros((n, n), dtype=bool))
    prim = _primitives(cfg, spec)
    seen = {node_key(grid, cfg, start.x, start.y, start.theta)}
    queue = deque([start.as_tuple()])
    while queue and len(seen) < limit:
        x, y, th = queue.popleft()
        for _, cx, cy, cth in _children(x, y, th, prim, spec, obstacles, grid):
            key = node_key(grid, cfg, cx, cy, cth)
            if key not in seen:
                seen.add(key)
                queue.append((cx, cy, cth))
    return min(len(seen), limit)


# -- results ---------------------------------------------------------------

@dataclass
class PathStats:
    nodes_expanded: int
    planning_time: float
    total_length: float
    direction_changes: int
    cost: float


@dataclass
class PlannedPath:
    start: Pose
    segments: list[MotionSegment]
    states: list[State]
    rs_start_index: Optional[int]
    stats: PathStats

    @property
    def end(self) -> Pose:
        return self.states[-1].pose

    def transformed(self, fn) -> "PlannedPath":
        """Copy with every pose mapped by ``fn``; segments are frame-free."""
        states = [State(fn(s.pose), s.gear, s.steer) for s in self.states]
        return PlannedPath(fn(self.start), list(self.segments), states, self.rs_start_index, replace(self.stats))

    def poses_array(self) -> np.ndarray:
        return np.array([s.pose.as_tuple() for s in self.states], dtype=float).reshape(-1, 3)


def count_direction_changes(segments: Sequence[MotionSegment]) -> int:
    gears = [s.gear for s in segments if s.length > 0 and s.gear != 0]
    return sum(1 for a, b in zip(gears, gears[1:]) if a != b)


def build_path(
    start: Pose,
    segments: Sequence[MotionSegment],
    spec: VehicleSpec,
    cfg: PlannerConfig,
    rs_from: Optional[int] = None,
    nodes_expanded: int = 0,
    planning_time: float = 0.0,
    ds: float = DS_CHECK,
) -> PlannedPath:
    """Sample states along ``segments``; ``rs_from`` is the index of the first RS segment."""
    states = [State(start, 0, 0.0)]
    rs_index = 0 if rs_from == 0 else None
    x, y, th = start.as_tuple()
    for n, seg in enumerate(segments):
        if rs_from is not None and n == rs_from:
            rs_index = len(states) - 1
        k = math.tan(seg.steer) / spec.wheelbase
        signed = seg.gear * seg.length
        for px, py, pth in sample_segment(x, y, th, k, signed, ds):
            states.append(State(Pose(px, py, pth), seg.gear, seg.steer))
        x, y, th = integrate_arc(x, y, th, k, signed)
    if rs_from is not None and rs_from >= len(segments):
        rs_index = len(states) - 1
    segs = list(segments)
    stats = PathStats(
        nodes_expanded=nodes_expanded,
        planning_time=planning_time,
        total_length=float(sum(s.length for s in segs)),
        direction_changes=count_direction_changes(segs),
        cost=path_cost(segs, cfg),
    )
    return PlannedPath(start, segs, states, rs_index, stats)


def rs_to_segments(rs: RSPath, spec: VehicleSpec) -> list[MotionSegment]:
    steer = {"L": spec.max_steer, "R": -spec.max_steer, "S": 0.0}
    return [MotionSegment(steer[s.kind], s.direction, s.length) for s in rs.segments if s.length > 0]


# -- search ----------------------------------------------------------------

def _within_tolerance(x, y, th, goal: Pose, cfg: PlannerConfig) -> bool:
    return math.hypot(x - goal.x, y - goal.y) <= cfg.goal_tol_xy and abs(angle_diff(th, goal.theta)) <= cfg.goal_tol_theta


def plan(
    start: Pose,
    goal: Pose,
    obstacles: ObstacleCloud,
    spec: Optional[VehicleSpec] = None,
    cfg: Optional[PlannerConfig] = None,
    variant: Variant | str = Variant.WITH_RS,
    bounds: Optional[tuple[float, float, float, float]] = None,
) -> PlannedPath:
    spec = spec or VehicleSpec()
    cfg = cfg or PlannerConfig()
    variant = Variant(variant)
    t0 = time.perf_counter()

    if pose_in_collision(spec, start, obstacles):
        raise StartInCollision(f"start {start} collides")
    if pose_in_collision(spec, goal, obstacles):
        raise GoalOccupied(f"goal {goal} collides")
    if start.close_to(goal, 1e-9):
        return build_path(start, [], spec, cfg, rs_from=None, planning_time=time.perf_counter() - t0)

    use_rs = variant is not Variant.PLAIN
    want = 1 if variant is Variant.WITH_RS else cfg.hold_count
    kappa = spec.kappa_max
    # (total cost, order, node id, rs segments)
    solutions: list[tuple[float, int, int, list[MotionSegment]]] = []

    # node storage
    nx: list[float] = [start.x]
    ny: list[float] = [start.y]
    nth: list[float] = [start.theta]
    ng: list[float] = [0.0]
    ngear: list[int] = [0]
    nsteer: list[float] = [0.0]
    nparent: list[int] = [-1]
    nprim: list[int] = [-1]
    nh: list[float] = [0.0]

    def segments_to(nid: int) -> list[MotionSegment]:
        segs = []
        prims = _primitives(cfg, spec).prims
        while nparent[nid] >= 0:
            p = prims[nprim[nid]]
            segs.append(MotionSegment(p.steer, p.direction, p.arc_length))
            nid = nparent[nid]
        segs.reverse()
        return segs

    def shoot(nid: int) -> bool:
        pose = Pose(nx[nid], ny[nid], nth[nid])
        rs = rs_connect(pose, goal, kappa, spec, obstacles)
        if rs is None:
            return False
        segs = rs_to_segments(rs, spec)
        total = path_cost(segs, cfg, ngear[nid], nsteer[nid], ng[nid])
        solutions.append((total, len(solutions), nid, segs))
        return True

    def finish(nid: int, rs_segs: Optional[list[MotionSegment]], expanded: int) -> PlannedPath:
        head = segments_to(nid)
        rs_from = len(head) if rs_segs is not None else None
        return build_path(
            start, head + (rs_segs or []), spec, cfg, rs_from=rs_from,
            nodes_expanded=expanded, planning_time=time.perf_counter() - t0,
        )

    def best_solution(expanded: int) -> PlannedPath:
        total, _, nid, segs = min(solutions, key=lambda s: (s[0], s[1]))
        return finish(nid, segs, expanded)

    if use_rs and shoot(0) and len(solutions) >= want:
        return best_solution(0)

    if bounds is None:
        bounds = default_bounds(obstacles, start, goal, cfg.bounds_margin)
    grid = build_grid(obstacles, bounds, cfg.resolution, spec, start, goal)
    heur = compute_cost_to_go(grid, goal)
    prim = _primitives(cfg, spec)

    h0 = heur.at(start.x, start.y)
    if not math.isfinite(h0):
        if solutions:
            return best_solution(0)
        raise SearchExhausted("goal unreachable on the heuristic grid")
    counter = itertools.count()
    start_key = node_key(grid, cfg, start.x, start.y, start.theta)
    best_g = {start_key: 0.0}
    nkey = [start_key]
    nh[0] = h0
    heap = [(h0, 0.0, next(counter), 0)]
    best_h = h0
    expanded = 0

    while heap:
        f, g, _, nid = heapq.heappop(heap)
        if g > best_g[nkey[nid]]:
            continue  # superseded by a cheaper visit of the same key
        x, y, th = nx[nid], ny[nid], nth[nid]
        near = _within_tolerance(x, y, th, goal, cfg)
        if not use_rs:
            if near:
                return finish(nid, None, expanded)
        elif nid != 0:
            h = nh[nid]
            if near or expanded % cfg.rs_shot_period == 0 or h < best_h:
                if shoot(nid) and len(solutions) >= want:
                    return best_solution(expanded)
            best_h = min(best_h, h)
        if expanded >= cfg.node_cap:
            if solutions:
                return best_solution(expanded)
            raise NodeCapExceeded(f"node cap {cfg.node_cap} reached", expanded)
        expanded += 1
        for k, cx, cy, cth in _children(x, y, th, prim, spec, obstacles, grid):
            p = prim.prims[k]
            cg = g + step_cost(cfg, p.arc_length, p.direction, p.steer, ngear[nid], nsteer[nid])
            key = node_key(grid, cfg, cx, cy, cth)
            if cg >= best_g.get(key, math.inf):
                continue
            ch = float(heur.cost_to_go[key[0], key[1]])
            if not math.isfinite(ch):
                continue
            best_g[key] = cg
            cid = len(nx)
            nx.append(cx)
            ny.append(cy)
            nth.append(cth)
            ng.append(cg)
            ngear.append(p.direction)
            nsteer.append(p.steer)
            nparent.append(nid)
            nprim.append(k)
            nkey.append(key)
            nh.append(ch)
            heapq.heappush(heap, (cg + ch, cg, next(counter), cid))

    if solutions:
        return best_solution(expanded)
    raise SearchExhausted(f"open list exhausted after {expanded} expansions", expanded)
