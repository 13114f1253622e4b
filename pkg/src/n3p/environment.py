"""Parking-environment abstraction, quantization, synthetic training layouts
and the seeded evaluation-scenario generator.

Everything here works in the parking-spot frame unless a name says
otherwise: origin at the spot center, +x along the lane toward the dead-end
side, +y from the spot toward the lane.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from shapely.geometry import LineString, Polygon, box

from .errors import BelowMinimum, EmptyEnvironment, FormatError, SpotBlocked
from .geometry import (
    ObstacleCloud,
    Pose,
    VehicleSpec,
    footprint_at,
    from_spot_frame,
    points_from_spot_frame,
    pose_in_collision,
)
from .hybrid_astar import reachable_keys


class ParkingType(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"
    PARALLEL = "parallel"

    @property
    def is_bay(self) -> bool:
        return self is not ParkingType.PARALLEL


class Difficulty(str, Enum):
    EASY = "easy"
    COMPLEX = "complex"
    EXTREME = "extreme"


@dataclass(frozen=True)
class EnvAbstraction:
    w_lane: float
    w_spot: float
    d_deadend: float
    ptype: ParkingType

    def __post_init__(self):
        object.__setattr__(self, "ptype", ParkingType(self.ptype))
        if min(self.w_lane, self.w_spot, self.d_deadend) <= 0:
            raise ValueError("environment lengths must be positive")

    def vector(self) -> tuple[float, float, float]:
        return (self.w_lane, self.w_spot, self.d_deadend)


# -- quantization ----------------------------------------------------------

_EPS = 1e-9


@dataclass(frozen=True)
class GridAxis:
    min: float
    max: float
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.min > self.max:
            raise ValueError("min must not exceed max")

    def values(self) -> list[float]:
        n = int(math.floor((self.max - self.min) / self.step + _EPS))
        return [round(self.min + i * self.step, 9) for i in range(n + 1)]

    def floor(self, v: float, name: str = "value") -> float:
        """Largest grid value not above ``v``, clamped to the top of the axis."""
        if v < self.min - _EPS:
            raise BelowMinimum(f"{name} {v:.3f} below grid minimum {self.min}")
        i = math.floor((v - self.min) / self.step + _EPS)
        return min(round(self.min + i * self.step, 9), self.values()[-1])

    def contains(self, v: float) -> bool:
        return any(abs(v - g) < 1e-6 for g in self.values())


@dataclass(frozen=True)
class QuantizationGrid:
    w_lane: GridAxis
    w_spot: GridAxis
    d_deadend: GridAxis

    def configurations(self, ptype: ParkingType) -> list[EnvAbstraction]:
        return [
            EnvAbstraction(wl, ws, d, ptype)
            for wl in self.w_lane.values()
            for ws in self.w_spot.values()
            for d in self.d_deadend.values()
        ]

    def contains(self, e: EnvAbstraction) -> bool:
        return self.w_lane.contains(e.w_lane) and self.w_spot.contains(e.w_spot) and self.d_deadend.contains(e.d_deadend)

    def spec_string(self) -> str:
        axes = (self.w_lane, self.w_spot, self.d_deadend)
        return " ".join(f"{a.min:g}:{a.max:g}:{a.step:g}" for a in axes)

    @classmethod
    def from_spec_string(cls, text: str) -> "QuantizationGrid":
        parts = text.split()
        if len(parts) != 3:
            raise ValueError(f"expected three axes, got {text!r}")
        axes = [GridAxis(*(float(v) for v in p.split(":"))) for p in parts]
        return cls(*axes)


def default_grid(ptype: ParkingType | str) -> QuantizationGrid:
    ptype = ParkingType(ptype)
    spot = GridAxis(6.0, 8.0, 0.25) if ptype is ParkingType.PARALLEL else GridAxis(2.3, 4.3, 0.2)
    return QuantizationGrid(GridAxis(4.0, 8.0, 0.5), spot, GridAxis(4.0, 12.0, 1.0))


def quantize(e: EnvAbstraction, grid: QuantizationGrid) -> EnvAbstraction:
    """Floor each parameter onto the grid, clamping at the top of each axis."""
    return EnvAbstraction(
        grid.w_lane.floor(e.w_lane, "w_lane"),
        grid.w_spot.floor(e.w_spot, "w_spot"),
        grid.d_deadend.floor(e.d_deadend, "d_deadend"),
        e.ptype,
    )


# -- layout constants ------------------------------------------------------

@dataclass(frozen=True)
class Layout:
    bay_depth: float = 5.5
    parallel_depth: float = 2.5
    # abstraction regions
    bottom_band: float = 1.0  # points up to this far above the mouth count as bottom
    mouth_probe: float = 1.0  # depth below the mouth scanned for spot width
    x_front: float = 1.0  # half-width of the strip probing the lane in front of the spot
    lane_window: float = 6.0  # lane width is measured over x in [-lane_window, d_deadend)
    deadend_band: float = 0.5  # half-height of the strip probing for the dead end
    group_tol: float = 0.05
    local_extent: float = 12.0  # cap for unbounded measurements
    # evaluation world
    left_extent: float = 18.0
    right_extent: float = 18.0
    wall_spacing: float = 0.1

    def depth(self, ptype: ParkingType) -> float:
        return self.bay_depth if ParkingType(ptype).is_bay else self.parallel_depth

    def mouth_y(self, ptype: ParkingType) -> float:
        return self.depth(ptype) / 2.0


LAYOUT = Layout()


@dataclass(frozen=True)
class GoalSpec:
    pose: Pose
    d_spot: float  # free depth the parked vehicle keeps below y_boundary
    y_boundary: float


def goal_pose(ptype: ParkingType | str, spec: Optional[VehicleSpec] = None) -> Pose:
    """Vehicle centered in the spot; reverse parks nose-out, forward nose-in."""
    spec = spec or VehicleSpec()
    c = spec.center_offset
    ptype = ParkingType(ptype)
    if ptype is ParkingType.REVERSE:
        return Pose(0.0, -c, math.pi / 2)
    if ptype is ParkingType.FORWARD:
        return Pose(0.0, c, -math.pi / 2)
    return Pose(-c, 0.0, 0.0)


def goal_spec(ptype: ParkingType | str, spec: Optional[VehicleSpec] = None, layout: Layout = LAYOUT) -> GoalSpec:
    ptype = ParkingType(ptype)
    spec = spec or VehicleSpec()
    y_m = layout.mouth_y(ptype)
    pose = goal_pose(ptype, spec)
    top = footprint_at(spec, pose).corners[:, 1].max()
    return GoalSpec(pose, round(y_m - top, 12), y_m)


# -- abstraction -----------------------------------------------------------

def _lane_top(pts: np.ndarray, y_m: float, layout: Layout) -> float:
    top = pts[(pts[:, 1] > y_m + layout.bottom_band) & (np.abs(pts[:, 0]) <= layout.x_front)]
    return float(top[:, 1].min()) if len(top) else y_m + layout.local_extent


def access_half_width(ptype: ParkingType, spec: VehicleSpec) -> float:
    if ParkingType(ptype).is_bay:
        return spec.body_width / 2.0 + spec.safety_margin
    return spec.body_length / 2.0 + spec.safety_margin


def check_access(
    obstacles: ObstacleCloud,
    ptype: ParkingType | str,
    spec: Optional[VehicleSpec] = None,
    layout: Layout = LAYOUT,
) -> None:
    """Raise SpotBlocked when a point lies strictly inside the access rectangle.

    The rectangle spans the vehicle width (length for parallel spots) plus
    margin, from the spot back to the far side of the lane.
    """
    ptype = ParkingType(ptype)
    spec = spec or VehicleSpec()
    pts = obstacles.points
    y_m = layout.mouth_y(ptype)
    y_top = _lane_top(pts, y_m, layout) if len(pts) else y_m + layout.local_extent
    hw = access_half_width(ptype, spec)
    # 1e-6 absorbs round-off from the world-to-spot transform
    inside = (np.abs(pts[:, 0]) < hw) & (pts[:, 1] > -y_m + 1e-6) & (pts[:, 1] < y_top - 1e-6)
    if inside.any():
        p = pts[np.flatnonzero(inside)[0]]
        raise SpotBlocked(f"obstacle at ({p[0]:.2f}, {p[1]:.2f}) inside the access rectangle")


def abstract_environment(
    obstacles: ObstacleCloud,
    ptype: ParkingType | str,
    spec: Optional[VehicleSpec] = None,
    layout: Layout = LAYOUT,
) -> EnvAbstraction:
    """Summarize a spot-frame cloud by lane width, spot width and dead-end distance.

    Points are grouped into a top region (beyond the lane) and bottom-left /
    bottom-right regions (the spot row on either side of the spot).
    """
    ptype = ParkingType(ptype)
    check_access(obstacles, ptype, spec, layout)
    pts = obstacles.points
    cap = layout.local_extent
    y_m = layout.mouth_y(ptype)
    if len(pts) == 0:
        return EnvAbstraction(cap, 2 * cap, cap, ptype)
    x, y = pts[:, 0], pts[:, 1]
    bottom = y <= y_m + layout.bottom_band
    top = ~bottom

    y_top0 = _lane_top(pts, y_m, layout)
    mid = 0.5 * (y_m + y_top0)
    ahead = (np.abs(y - mid) <= layout.deadend_band) & (x > 0)
    d_deadend = min(float(x[ahead].min()), cap) if ahead.any() else cap

    window = (x >= -layout.lane_window) & (x < d_deadend - layout.group_tol)
    top_w = top & window
    lane_top = float(y[top_w].min()) if top_w.any() else y_m + cap
    bot_w = bottom & window & (y > y_m - layout.mouth_probe)
    lane_bottom = max(y_m, float(y[bot_w].max())) if bot_w.any() else y_m
    w_lane = min(lane_top - lane_bottom, cap)

    band = (y >= y_m - layout.mouth_probe) & (y <= y_m + layout.bottom_band)
    left = band & (x < 0)
    right = band & (x > 0)
    x_left = float(x[left].max()) if left.any() else -cap
    x_right = float(x[right].min()) if right.any() else cap
    w_spot = x_right - x_left
    return EnvAbstraction(w_lane, w_spot, d_deadend, ptype)


# -- synthetic abstract environments ---------------------------------------

def _wall(a: tuple[float, float], b: tuple[float, float], spacing: float) -> np.ndarray:
    """Points along a segment, both ends included."""
    n = max(1, int(math.ceil(math.hypot(b[0] - a[0], b[1] - a[1]) / spacing - 1e-9)))
    t = np.linspace(0.0, 1.0, n + 1)
    return np.column_stack((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))


def _walls(segments: Iterable[tuple[tuple[float, float], tuple[float, float]]], spacing: float) -> np.ndarray:
    segs = [_wall(a, b, spacing) for a, b in segments if a != b]
    if not segs:
        return np.empty((0, 2))
    return np.unique(np.round(np.vstack(segs), 12), axis=0)


def abstract_walls(e: EnvAbstraction, layout: Layout = LAYOUT, right_x: Optional[float] = None):
    """Wall segments realizing ``e``; ``right_x`` replaces the dead end by an open boundary."""
    y_m = layout.mouth_y(e.ptype)
    y_b = -y_m
    y_t = y_m + e.w_lane
    hs = e.w_spot / 2.0
    x_l = -layout.left_extent
    d = e.d_deadend if right_x is None else right_x
    segs = [
        ((x_l, y_m), (-hs, y_m)),  # curb left of the spot
        ((hs, y_m), (d, y_m)),  # curb right of the spot
        ((-hs, y_m), (-hs, y_b)),  # spot sides and back
        ((hs, y_m), (hs, y_b)),
        ((-hs, y_b), (hs, y_b)),
        ((x_l, y_t), (d, y_t)),  # far side of the lane
        ((x_l, y_m), (x_l, y_t)),  # left boundary
        ((d, y_m), (d, y_t)),  # dead end
    ]
    return segs


def synth_abstract_obstacles(
    e: EnvAbstraction, spec: Optional[VehicleSpec] = None, layout: Layout = LAYOUT
) -> tuple[ObstacleCloud, GoalSpec]:
    pts = _walls(abstract_walls(e, layout), layout.wall_spacing)
    return ObstacleCloud(pts, frame="spot"), goal_spec(e.ptype, spec, layout)


def sample_lane_start(
    rng: random.Random,
    obstacles: ObstacleCloud,
    w_lane: float,
    x_max: float,
    ptype: ParkingType,
    spec: VehicleSpec,
    layout: Layout = LAYOUT,
    tries: int = 1000,
    x_min: float = -15.0,
) -> Optional[Pose]:
    """Uniform start in the lane, heading within 90 degrees of +x; None if nothing fits."""
    y_m = layout.mouth_y(ptype)
    lo, hi = y_m + 0.5, y_m + w_lane - 0.5
    if hi <= lo or x_max <= x_min:
        return None
    for _ in range(tries):
        p = Pose(rng.uniform(x_min, x_max), rng.uniform(lo, hi), rng.uniform(-math.pi / 2, math.pi / 2))
        if not pose_in_collision(spec, p, obstacles):
            return p
    return None


def abstract_start_sampler(e: EnvAbstraction, obstacles: ObstacleCloud, spec: VehicleSpec, rng: random.Random,
                           layout: Layout = LAYOUT) -> Pose:
    p = sample_lane_start(rng, obstacles, e.w_lane, e.d_deadend - 3.0, e.ptype, spec, layout)
    if p is None:
        raise EmptyEnvironment(f"no collision-free start in {e}")
    return p


# -- evaluation scenarios --------------------------------------------------

SPOT_RANGES = {
    Difficulty.EASY: {"bay": (3.2, 4.2), "parallel": (7.0, 8.0)},
    Difficulty.COMPLEX: {"bay": (2.8, 3.7), "parallel": (6.5, 7.5)},
    Difficulty.EXTREME: {"bay": (2.3, 3.2), "parallel": (6.0, 7.0)},
}
DEADEND_RANGES = {
    Difficulty.EASY: (8.0, 12.0),
    Difficulty.COMPLEX: (8.0, 12.0),
    Difficulty.EXTREME: (4.0, 8.0),
}
LANE_WIDTH = 6.0
# a start must reach this many lattice keys, otherwise it is boxed in and resampled
START_ROOM_KEYS = 100


@dataclass
class Scenario:
    obstacles: ObstacleCloud  # world frame
    spot_pose: Pose
    start: Pose  # world frame
    ptype: ParkingType
    difficulty: Difficulty
    seed: int
    true_params: EnvAbstraction
    has_deadend: bool = True
    meta: dict = field(default_factory=dict)

    def goal_world(self, spec: Optional[VehicleSpec] = None) -> Pose:
        return from_spot_frame(goal_pose(self.ptype, spec), self.spot_pose)


def _vehicle_polygon(cx: float, cy: float, heading: float, length: float, width: float) -> Polygon:
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = length / 2.0, width / 2.0
    corners = [(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)]
    return Polygon([(cx + c * u - s * v, cy + s * u + c * v) for u, v in corners])


def _polygon_points(poly: Polygon, spacing: float) -> np.ndarray:
    xy = list(poly.exterior.coords)
    return np.vstack([_wall(a, b, spacing) for a, b in zip(xy, xy[1:])])


def _row_vehicle(rng: random.Random, spec: VehicleSpec, ptype: ParkingType, y_m: float, edge: float, side: int,
                 layout: Layout) -> Polygon:
    """A jittered vehicle in the spot row whose inner extreme sits exactly at x = ``edge``.

    ``side`` is -1 for the left of the spot and +1 for the right.
    """
    length = spec.body_length + rng.uniform(-0.2, 0.2)
    width = spec.body_width + rng.uniform(-0.2, 0.2)
    jitter = math.radians(rng.uniform(-3.0, 3.0))
    if ptype.is_bay:
        heading = rng.choice((math.pi / 2, -math.pi / 2)) + jitter
    else:
        heading = rng.choice((0.0, math.pi)) + jitter
    poly = _vehicle_polygon(0.0, 0.0, heading, length, width)
    x0, y0, x1, y1 = poly.bounds
    depth = layout.depth(ptype)
    # inside the row: below the mouth and above the back wall
    slack = depth - (y1 - y0) - 0.1
    top = y_m - 0.05 - rng.uniform(0.0, max(0.0, slack))
    dy = top - y1
    dx = edge - x0 if side > 0 else edge - x1
    return Polygon([(x + dx, y + dy) for x, y in poly.exterior.coords[:-1]])


def _true_params(geoms: list, ptype: ParkingType, d_true: float, layout: Layout) -> EnvAbstraction:
    """Ground-truth abstraction from exact geometry, same regions as the point version."""
    y_m = layout.mouth_y(ptype)
    cap = layout.local_extent
    big = 1e3
    band = box(-big, y_m - layout.mouth_probe, big, y_m + layout.bottom_band)
    x_left, x_right = -cap, cap
    for g in geoms:
        part = g.intersection(band)
        if part.is_empty:
            continue
        lp = part.intersection(box(-big, -big, 0.0, big))
        rp = part.intersection(box(1e-12, -big, big, big))
        if not lp.is_empty:
            x_left = max(x_left, lp.bounds[2])
        if not rp.is_empty:
            x_right = min(x_right, rp.bounds[0])
    d = min(d_true, cap)
    win = box(-layout.lane_window, y_m + layout.bottom_band + 1e-12, d - layout.group_tol - 1e-12, big)
    wbot = box(-layout.lane_window, y_m - layout.mouth_probe + 1e-12, d - layout.group_tol - 1e-12,
               y_m + layout.bottom_band)
    lane_top = y_m + cap
    lane_bottom = y_m
    for g in geoms:
        t = g.intersection(win)
        if not t.is_empty:
            lane_top = min(lane_top, t.bounds[1])
        b = g.intersection(wbot)
        if not b.is_empty:
            lane_bottom = max(lane_bottom, b.bounds[3])
    return EnvAbstraction(min(lane_top - lane_bottom, cap), x_right - x_left, d, ptype)


def _build_world(
    rng: random.Random,
    ptype: ParkingType,
    w_spot: float,
    d_wall: Optional[float],
    clutter: bool,
    spec: VehicleSpec,
    layout: Layout,
):
    """Spot-frame geometry: (list of shapely geoms, sampled points, lane vehicle count)."""
    y_m = layout.mouth_y(ptype)
    y_b = -y_m
    y_t = y_m + LANE_WIDTH
    x_l = -layout.left_extent
    x_r = d_wall if d_wall is not None else layout.right_extent
    hs = w_spot / 2.0
    geoms = []
    if not clutter:
        e = EnvAbstraction(LANE_WIDTH, w_spot, x_r, ptype)
        segs = abstract_walls(e, layout)
        geoms = [LineString([a, b]) for a, b in segs]
        return geoms, _walls(segs, layout.wall_spacing), 0

    segs = [
        ((x_l, y_b), (x_r, y_b)),  # back of the spot row
        ((x_l, y_t), (x_r, y_t)),  # far side of the lane
        ((x_l, y_b), (x_l, y_t)),
        ((x_r, y_b), (x_r, y_t)),  # dead end or local boundary
    ]
    geoms = [LineString([a, b]) for a, b in segs]
    pts = [_walls(segs, layout.wall_spacing)]
    # the two direct neighbours are always present; further ones with probability 0.8
    for side in (-1, 1):
        edge = side * hs
        first = True
        while True:
            occupied = first or rng.random() < 0.8
            poly = _row_vehicle(rng, spec, ptype, y_m, edge, side, layout)
            x0, _, x1, _ = poly.bounds
            if (side < 0 and x0 < x_l + 0.1) or (side > 0 and x1 > x_r - 0.1):
                break
            if occupied:
                geoms.append(poly)
                pts.append(_polygon_points(poly, layout.wall_spacing))
            edge = (x0 if side < 0 else x1) + side * rng.uniform(0.4, 1.0)
            first = False
    # lane vehicles sit against the far side, outside the abstraction window
    n_lane = 0
    if rng.random() < 0.5:
        length = spec.body_length + rng.uniform(-0.2, 0.2)
        width = spec.body_width + rng.uniform(-0.2, 0.2)
        cx = rng.uniform(-15.0 + length / 2, -layout.lane_window - 3.0 - length / 2)
        cy = y_t - 0.1 - width / 2
        poly = _vehicle_polygon(cx, cy, rng.choice((0.0, math.pi)) + math.radians(rng.uniform(-3, 3)), length, width)
        geoms.append(poly)
        pts.append(_polygon_points(poly, layout.wall_spacing))
        n_lane = 1
    return geoms, np.vstack(pts), n_lane


def _scenario_seed(difficulty: Difficulty, ptype: ParkingType, seed: int) -> str:
    return f"n3p:{difficulty.value}:{ptype.value}:{seed}"


def generate_scenario(
    difficulty: Difficulty | str,
    ptype: ParkingType | str,
    seed: int,
    spec: Optional[VehicleSpec] = None,
    layout: Layout = LAYOUT,
    clutter: bool = True,
    max_retries: int = 20,
) -> Scenario:
    difficulty = Difficulty(difficulty)
    ptype = ParkingType(ptype)
    spec = spec or VehicleSpec()
    rng = random.Random(_scenario_seed(difficulty, ptype, seed))
    lo, hi = SPOT_RANGES[difficulty]["bay" if ptype.is_bay else "parallel"]
    goal = goal_pose(ptype, spec)

    for attempt in range(max_retries):
        w_spot = rng.uniform(lo, hi)
        if difficulty is Difficulty.EASY and rng.random() < 0.5:
            d_wall = None
        else:
            d_wall = rng.uniform(*DEADEND_RANGES[difficulty])
        geoms, pts_spot, n_lane = _build_world(rng, ptype, w_spot, d_wall, clutter, spec, layout)
        cloud = ObstacleCloud(pts_spot, frame="spot")
        try:
            check_access(cloud, ptype, spec, layout)
        except SpotBlocked:
            continue
        if pose_in_collision(spec, goal, cloud):
            continue
        x_hi = (d_wall if d_wall is not None else layout.right_extent) - 3.0
        for _ in range(10):
            start = sample_lane_start(rng, cloud, LANE_WIDTH, x_hi, ptype, spec, layout)
            if start is None or reachable_keys(start, cloud, spec, limit=START_ROOM_KEYS) >= START_ROOM_KEYS:
                break
            start = None
        if start is None:
            continue
        d_true = d_wall if d_wall is not None else layout.right_extent
        true = _true_params(geoms, ptype, d_true, layout)
        spot_pose = Pose(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-math.pi, math.pi))
        return Scenario(
            obstacles=ObstacleCloud(points_from_spot_frame(pts_spot, spot_pose), frame="world"),
            spot_pose=spot_pose,
            start=from_spot_frame(start, spot_pose),
            ptype=ptype,
            difficulty=difficulty,
            seed=seed,
            true_params=true,
            has_deadend=d_wall is not None,
            meta={"attempt": attempt, "lane_vehicles": n_lane, "d_wall": d_wall, "w_spot_nominal": w_spot},
        )
    return _minimal_scenario(difficulty, ptype, seed, spec, layout)


def _minimal_scenario(difficulty, ptype, seed, spec, layout) -> Scenario:
    """Deterministic walls-only fallback used when random placement keeps failing."""
    lo, hi = SPOT_RANGES[difficulty]["bay" if ptype.is_bay else "parallel"]
    d = DEADEND_RANGES[difficulty][1]
    e = EnvAbstraction(LANE_WIDTH, hi, d, ptype)
    segs = abstract_walls(e, layout)
    pts = _walls(segs, layout.wall_spacing)
    start = Pose(-10.0, layout.mouth_y(ptype) + LANE_WIDTH / 2, 0.0)
    true = _true_params([LineString([a, b]) for a, b in segs], ptype, d, layout)
    spot_pose = Pose(0.0, 0.0, 0.0)
    return Scenario(ObstacleCloud(pts), spot_pose, start, ptype, difficulty, seed, true, True,
                    {"attempt": -1, "lane_vehicles": 0, "d_wall": d, "w_spot_nominal": hi})


# -- scenario text format --------------------------------------------------

SCENARIO_VERSION = "n3p-scenario v1"


def save_scenario(sc: Scenario, path: str | Path) -> None:
    r = repr
    lines = [
        SCENARIO_VERSION,
        f"type {sc.ptype.value}",
        f"difficulty {sc.difficulty.value}",
        f"seed {sc.seed}",
        f"deadend {int(sc.has_deadend)}",
        f"spot {r(sc.spot_pose.x)} {r(sc.spot_pose.y)} {r(sc.spot_pose.theta)}",
        f"start {r(sc.start.x)} {r(sc.start.y)} {r(sc.start.theta)}",
        f"true {r(sc.true_params.w_lane)} {r(sc.true_params.w_spot)} {r(sc.true_params.d_deadend)}",
        f"points {len(sc.obstacles)}",
    ]
    lines += [f"{r(float(x))} {r(float(y))}" for x, y in sc.obstacles.points]
    Path(path).write_text("\n".join(lines) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatError("empty scenario file", 1)
    if lines[0].strip() != SCENARIO_VERSION:
        raise FormatError(f"expected header {SCENARIO_VERSION!r}, found {lines[0].strip()!r}", 1)
    head = {}
    i = 1
    keys = ("type", "difficulty", "seed", "deadend", "spot", "start", "true", "points")
    for key in keys:
        if i >= len(lines):
            raise FormatError(f"missing {key!r} line", i + 1)
        parts = lines[i].split()
        if not parts or parts[0] != key:
            raise FormatError(f"expected {key!r}", i + 1)
        head[key] = (parts[1:], i + 1)
        i += 1

    def floats(key, n):
        vals, ln = head[key]
        try:
            out = [float(v) for v in vals]
        except ValueError:
            raise FormatError(f"bad number in {key!r}", ln) from None
        if len(out) != n:
            raise FormatError(f"{key!r} needs {n} values", ln)
        return out

    try:
        ptype = ParkingType(head["type"][0][0])
        difficulty = Difficulty(head["difficulty"][0][0])
        seed = int(head["seed"][0][0])
        has_deadend = bool(int(head["deadend"][0][0]))
        n = int(head["points"][0][0])
    except (ValueError, IndexError):
        raise FormatError("bad header value", i) from None
    pts = []
    for k in range(n):
        ln = i + k
        if ln >= len(lines):
            raise FormatError(f"truncated: expected {n} points, found {k}", ln + 1)
        parts = lines[ln].split()
        if len(parts) != 2:
            raise FormatError("expected 'x y'", ln + 1)
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise FormatError("bad number", ln + 1) from None
    return Scenario(
        obstacles=ObstacleCloud(np.array(pts).reshape(-1, 2), frame="world"),
        spot_pose=Pose(*floats("spot", 3)),
        start=Pose(*floats("start", 3)),
        ptype=ptype,
        difficulty=difficulty,
        seed=seed,
        true_params=EnvAbstraction(*floats("true", 3), ptype),
        has_deadend=has_deadend,
    )


def with_obstacles(sc: Scenario, obstacles: ObstacleCloud) -> Scenario:
    return replace(sc, obstacles=obstacles)
