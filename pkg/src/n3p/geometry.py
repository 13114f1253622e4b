"""SE(2) poses, parking-spot frame transforms, vehicle footprints and
point-cloud collision checks.

All poses use the rear-axle center as the vehicle reference point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

TWO_PI = 2.0 * math.pi

# arc-length step used for every path collision check
DS_CHECK = 0.1


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    return a


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle`."""
    a = np.remainder(np.asarray(a, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(a <= -math.pi, a + TWO_PI, a)


def angle_diff(a: float, b: float) -> float:
    """Wrapped difference a - b in (-pi, pi]."""
    return wrap_angle(a - b)


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"non-finite pose {self.x}, {self.y}, {self.theta}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def close_to(self, other: "Pose", tol: float = 1e-6) -> bool:
        return self.distance_to(other) <= tol and abs(angle_diff(self.theta, other.theta)) <= tol


@dataclass(frozen=True)
class VehicleSpec:
    """Rectangular bicycle-model vehicle. Defaults model a 2024 Honda Accord."""

    body_length: float = 4.97
    body_width: float = 1.86
    wheelbase: float = 2.83
    max_steer: float = math.radians(34.9)
    v_fwd_max: float = 2.0
    v_rev_max: float = 1.0
    rear_overhang: float | None = None
    safety_margin: float = 0.05

    def __post_init__(self):
        if self.rear_overhang is None:
            object.__setattr__(self, "rear_overhang", (self.body_length - self.wheelbase) / 2.0)
        if not 0 < self.wheelbase < self.body_length:
            raise ValueError("wheelbase must lie in (0, body_length)")
        if self.rear_overhang < 0 or self.rear_overhang + self.wheelbase > self.body_length + 1e-12:
            raise ValueError("rear_overhang + wheelbase must not exceed body_length")
        if not 0 < self.max_steer < math.pi / 2:
            raise ValueError("max_steer must lie in (0, pi/2)")

    @property
    def kappa_max(self) -> float:
        return math.tan(self.max_steer) / self.wheelbase

    @property
    def min_turn_radius(self) -> float:
        return self.wheelbase / math.tan(self.max_steer)

    @property
    def center_offset(self) -> float:
        """Distance from rear axle forward to the body center."""
        return self.body_length / 2.0 - self.rear_overhang


class ObstacleCloud:
    """Immutable set of 2D obstacle points expressed in ``frame``."""

    def __init__(self, points: Iterable[Sequence[float]] | np.ndarray = (), frame: str = "world"):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("obstacle points must be finite")
        pts = pts.copy()
        pts.flags.writeable = False
        self.points = pts
        self.frame = frame

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"ObstacleCloud({len(self)} points, frame={self.frame!r})"

    @cached_property
    def hash(self) -> "PointHash":
        return build_point_hash(self.points)

    @cached_property
    def tree(self) -> cKDTree | None:
        if len(self.points) == 0:
            return None
        return cKDTree(self.points)

    def transformed(self, fn, frame: str) -> "ObstacleCloud":
        return ObstacleCloud(fn(self.points), frame=frame)

    def bounds(self) -> tuple[float, float, float, float] | None:
        if len(self.points) == 0:
            return None
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


@dataclass(frozen=True)
class Footprint:
    corners: np.ndarray = field(repr=False)

    def area(self) -> float:
        x, y = self.corners[:, 0], self.corners[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


# -- frame transforms ------------------------------------------------------

def to_spot_frame(pose_world: Pose, spot_pose_world: Pose) -> Pose:
    """Express a world pose in the parking-spot frame anchored at ``spot_pose_world``."""
    c, s = math.cos(spot_pose_world.theta), math.sin(spot_pose_world.theta)
    dx = pose_world.x - spot_pose_world.x
    dy = pose_world.y - spot_pose_world.y
    return Pose(c * dx + s * dy, -s * dx + c * dy, pose_world.theta - spot_pose_world.theta)


def from_spot_frame(pose_spot: Pose, spot_pose_world: Pose) -> Pose:
    c, s = math.cos(spot_pose_world.theta), math.sin(spot_pose_world.theta)
    return Pose(
        spot_pose_world.x + c * pose_spot.x - s * pose_spot.y,
        spot_pose_world.y + s * pose_spot.x + c * pose_spot.y,
        pose_spot.theta + spot_pose_world.theta,
    )


def points_to_spot_frame(points: np.ndarray, spot_pose_world: Pose) -> np.ndarray:
    c, s = math.cos(spot_pose_world.theta), math.sin(spot_pose_world.theta)
    d = np.asarray(points, dtype=float).reshape(-1, 2) - (spot_pose_world.x, spot_pose_world.y)
    return np.column_stack((c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]))


def points_from_spot_frame(points: np.ndarray, spot_pose_world: Pose) -> np.ndarray:
    c, s = math.cos(spot_pose_world.theta), math.sin(spot_pose_world.theta)
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    return np.column_stack(
        (spot_pose_world.x + c * p[:, 0] - s * p[:, 1], spot_pose_world.y + s * p[:, 0] + c * p[:, 1])
    )


# -- kinematics ------------------------------------------------------------

def integrate_arc(x: float, y: float, theta: float, curvature: float, s: float) -> tuple[float, float, float]:
    """Closed-form bicycle-model motion over signed arc length ``s`` at constant curvature.

    Negative ``s`` drives in reverse. ``curvature`` is tan(steer) / wheelbase.
    """
    if curvature == 0.0:
        return x + s * math.cos(theta), y + s * math.sin(theta), theta
    th = theta + curvature * s
    return (
        x + (math.sin(th) - math.sin(theta)) / curvature,
        y - (math.cos(th) - math.cos(theta)) / curvature,
        th,
    )


def integrate_arc_samples(x: float, y: float, theta: float, curvature: float, s: np.ndarray) -> np.ndarray:
    """Vectorized :func:`integrate_arc` for an array of signed arc lengths; returns (n, 3)."""
    s = np.asarray(s, dtype=float)
    if curvature == 0.0:
        return np.column_stack((x + s * math.cos(theta), y + s * math.sin(theta), np.full_like(s, theta)))
    th = theta + curvature * s
    return np.column_stack(
        (
            x + (np.sin(th) - math.sin(theta)) / curvature,
            y - (np.cos(th) - math.cos(theta)) / curvature,
            th,
        )
    )


# -- footprint and collision -----------------------------------------------

def footprint_at(spec: VehicleSpec, pose: Pose, inflate: float = 0.0) -> Footprint:
    if inflate < 0:
        raise ValueError("inflate must be non-negative")
    back = -spec.rear_overhang - inflate
    front = spec.body_length - spec.rear_overhang + inflate
    half = spec.body_width / 2.0 + inflate
    local = np.array([[back, -half], [front, -half], [front, half], [back, half]])
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    rot = np.array([[c, -s], [s, c]])
    return Footprint(local @ rot.T + (pose.x, pose.y))


HASH_CELL = 0.5  # spatial-hash cell size in meters


@dataclass(frozen=True)
class PointHash:
    """Points bucketed on a uniform grid, stored contiguously per cell."""

    points: np.ndarray  # (n, 2) sorted by cell
    cell_start: np.ndarray  # (nx * ny + 1,)
    origin: tuple[float, float]
    cell: float
    nx: int
    ny: int


def build_point_hash(points: np.ndarray, cell: float = HASH_CELL) -> PointHash:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ox, oy = pts.min(axis=0) - cell
    nx = int((pts[:, 0].max() - ox) // cell) + 2
    ny = int((pts[:, 1].max() - oy) // cell) + 2
    ij = ((pts[:, 0] - ox) // cell).astype(np.int64) * ny + ((pts[:, 1] - oy) // cell).astype(np.int64)
    order = np.argsort(ij, kind="stable")
    counts = np.bincount(ij, minlength=nx * ny)
    start = np.zeros(nx * ny + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return PointHash(np.ascontiguousarray(pts[order]), start, (float(ox), float(oy)), cell, nx, ny)


@njit(cache=True)
def _rect_hits(poses, pts, cell_start, ox, oy, cell, nx, ny, back, front, half_w):
    n = poses.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        x = poses[i, 0]
        y = poses[i, 1]
        c = math.cos(poses[i, 2])
        s = math.sin(poses[i, 2])
        # axis-aligned bounds of the rectangle, clipped to the hash grid
        xs0 = x + c * back
        xs1 = x + c * front
        ys0 = y + s * back
        ys1 = y + s * front
        ex = abs(s) * half_w
        ey = abs(c) * half_w
        i0 = int(math.floor((min(xs0, xs1) - ex - ox) / cell))
        i1 = int(math.floor((max(xs0, xs1) + ex - ox) / cell))
        j0 = int(math.floor((min(ys0, ys1) - ey - oy) / cell))
        j1 = int(math.floor((max(ys0, ys1) + ey - oy) / cell))
        if i1 < 0 or j1 < 0 or i0 >= nx or j0 >= ny:
            continue
        i0 = max(i0, 0)
        j0 = max(j0, 0)
        i1 = min(i1, nx - 1)
        j1 = min(j1, ny - 1)
        hit = False
        for ci in range(i0, i1 + 1):
            base = ci * ny
            for k in range(cell_start[base + j0], cell_start[base + j1 + 1]):
                dx = pts[k, 0] - x
                dy = pts[k, 1] - y
                u = dx * c + dy * s
                if u <= back or u >= front:
                    continue
                v = -dx * s + dy * c
                if -half_w < v < half_w:
                    hit = True
                    break
            if hit:
                break
        out[i] = hit
    return out


def poses_in_collision(spec: VehicleSpec, poses: np.ndarray, obstacles: ObstacleCloud) -> np.ndarray:
    """Per-pose collision flags for an (n, 3) array of poses.

    A pose collides when some obstacle point lies strictly inside the footprint
    inflated by ``spec.safety_margin``.
    """
    poses = np.ascontiguousarray(np.asarray(poses, dtype=float).reshape(-1, 3))
    if len(obstacles) == 0 or len(poses) == 0:
        return np.zeros(len(poses), dtype=bool)
    h = obstacles.hash
    m = spec.safety_margin
    return _rect_hits(
        poses, h.points, h.cell_start, h.origin[0], h.origin[1], h.cell, h.nx, h.ny,
        -spec.rear_overhang - m, spec.body_length - spec.rear_overhang + m, spec.body_width / 2.0 + m,
    )


def pose_in_collision(spec: VehicleSpec, pose: Pose, obstacles: ObstacleCloud) -> bool:
    return bool(poses_in_collision(spec, np.array([pose.as_tuple()]), obstacles)[0])


def path_collision_free(spec: VehicleSpec, poses: Sequence[Pose] | np.ndarray, obstacles: ObstacleCloud) -> bool:
    """True iff no sampled pose collides. Poses are expected at ``DS_CHECK`` spacing."""
    if isinstance(poses, np.ndarray):
        arr = poses
    else:
        arr = np.array([p.as_tuple() for p in poses], dtype=float).reshape(-1, 3)
    return not bool(poses_in_collision(spec, arr, obstacles).any())


def sample_segment(x: float, y: float, theta: float, curvature: float, signed_length: float,
                   ds: float = DS_CHECK) -> np.ndarray:
    """Poses every ``ds`` along one constant-curvature segment, start excluded, end included."""
    length = abs(signed_length)
    if length == 0.0:
        return np.empty((0, 3))
    n = max(1, math.ceil(length / ds - 1e-9))
    s = np.arange(1, n + 1) * ds
    s[-1] = length
    s = s[s <= length]
    sign = 1.0 if signed_length > 0 else -1.0
    return integrate_arc_samples(x, y, theta, curvature, sign * s)
