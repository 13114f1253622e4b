import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from n3p.geometry import (
    ObstacleCloud,
    Pose,
    VehicleSpec,
    angle_diff,
    footprint_at,
    from_spot_frame,
    path_collision_free,
    points_from_spot_frame,
    points_to_spot_frame,
    pose_in_collision,
    poses_in_collision,
    sample_segment,
    to_spot_frame,
    wrap_angle,
)

SPEC = VehicleSpec()
coord = st.floats(-100, 100, allow_nan=False)
angle = st.floats(-10, 10, allow_nan=False)
poses = st.builds(Pose, coord, coord, angle)


def test_pose_theta_wrapped_into_half_open_interval():
    assert Pose(0, 0, math.pi).theta == pytest.approx(math.pi)
    assert Pose(0, 0, -math.pi).theta == pytest.approx(math.pi)
    assert Pose(0, 0, 3 * math.pi).theta == pytest.approx(math.pi)
    assert -math.pi < wrap_angle(-7.0) <= math.pi


def test_pose_rejects_non_finite():
    with pytest.raises(ValueError):
        Pose(float("nan"), 0, 0)


def test_vehicle_spec_defaults_and_validation():
    assert SPEC.rear_overhang == pytest.approx(1.07)
    assert SPEC.min_turn_radius == pytest.approx(2.83 / math.tan(math.radians(34.9)))
    with pytest.raises(ValueError):
        VehicleSpec(wheelbase=5.0)
    with pytest.raises(ValueError):
        VehicleSpec(rear_overhang=2.5)


def test_spot_frame_identity_and_origin():
    p = to_spot_frame(Pose(3, 2, 0), Pose(0, 0, 0))
    assert p.as_tuple() == pytest.approx((3, 2, 0))
    p = to_spot_frame(Pose(1, 0, math.pi / 2), Pose(1, 0, math.pi / 2))
    assert p.as_tuple() == pytest.approx((0, 0, 0), abs=1e-12)


def test_spot_frame_matches_explicit_rotation():
    rng = np.random.default_rng(0)
    for _ in range(200):
        sx, sy, sth = rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-math.pi, math.pi)
        px, py, pth = rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-math.pi, math.pi)
        c, s = math.cos(sth), math.sin(sth)
        ex = c * (px - sx) + s * (py - sy)
        ey = -s * (px - sx) + c * (py - sy)
        got = to_spot_frame(Pose(px, py, pth), Pose(sx, sy, sth))
        assert got.x == pytest.approx(ex, abs=1e-12)
        assert got.y == pytest.approx(ey, abs=1e-12)
        assert abs(angle_diff(got.theta, pth - sth)) < 1e-12


def test_frame_round_trip_10k():
    rng = np.random.default_rng(1)
    worst_xy = worst_th = 0.0
    for _ in range(10_000):
        spot = Pose(*rng.uniform(-100, 100, 2), rng.uniform(-math.pi, math.pi))
        p = Pose(*rng.uniform(-100, 100, 2), rng.uniform(-math.pi, math.pi))
        q = from_spot_frame(to_spot_frame(p, spot), spot)
        worst_xy = max(worst_xy, math.hypot(q.x - p.x, q.y - p.y))
        worst_th = max(worst_th, abs(angle_diff(q.theta, p.theta)))
    assert worst_xy < 1e-12
    assert worst_th < 1e-12


def test_points_round_trip():
    rng = np.random.default_rng(2)
    pts = rng.uniform(-20, 20, (50, 2))
    spot = Pose(3, -4, 1.2)
    back = points_from_spot_frame(points_to_spot_frame(pts, spot), spot)
    assert np.abs(back - pts).max() < 1e-12


def test_footprint_axis_aligned():
    fp = footprint_at(SPEC, Pose(0, 0, 0))
    assert fp.corners[:, 0].min() == pytest.approx(-1.07)
    assert fp.corners[:, 0].max() == pytest.approx(3.90)
    assert fp.corners[:, 1].min() == pytest.approx(-0.93)
    assert fp.corners[:, 1].max() == pytest.approx(0.93)


def test_footprint_rotated_quarter_turn():
    fp = footprint_at(SPEC, Pose(0, 0, math.pi / 2))
    assert fp.corners[:, 1].min() == pytest.approx(-1.07)
    assert fp.corners[:, 1].max() == pytest.approx(3.90)
    assert fp.corners[:, 0].min() == pytest.approx(-0.93)
    assert fp.corners[:, 0].max() == pytest.approx(0.93)


def test_footprint_inflation_extends_every_side():
    fp = footprint_at(SPEC, Pose(0, 0, 0), inflate=0.1)
    assert fp.corners[:, 0].min() == pytest.approx(-1.17)
    assert fp.corners[:, 0].max() == pytest.approx(4.00)
    assert fp.corners[:, 1].max() == pytest.approx(1.03)


@given(poses, st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_footprint_area_invariant(pose, inflate):
    fp = footprint_at(SPEC, pose, inflate)
    expect = (SPEC.body_length + 2 * inflate) * (SPEC.body_width + 2 * inflate)
    assert fp.area() == pytest.approx(expect, rel=1e-9)


def test_collision_empty_center_and_edge():
    pose = Pose(0, 0, 0)
    assert not pose_in_collision(SPEC, pose, ObstacleCloud())
    center = (SPEC.center_offset, 0.0)
    assert pose_in_collision(SPEC, pose, ObstacleCloud([center]))
    m = SPEC.safety_margin
    edge = (1.0, SPEC.body_width / 2 + m)  # on the inflated side line
    assert not pose_in_collision(SPEC, pose, ObstacleCloud([edge]))
    assert pose_in_collision(SPEC, pose, ObstacleCloud([(1.0, SPEC.body_width / 2 + m - 1e-6)]))


def _brute(spec, pose, pts):
    m = spec.safety_margin
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    for x, y in pts:
        u = c * (x - pose.x) + s * (y - pose.y)
        v = -s * (x - pose.x) + c * (y - pose.y)
        if -spec.rear_overhang - m < u < spec.body_length - spec.rear_overhang + m and abs(v) < spec.body_width / 2 + m:
            return True
    return False


def test_collision_matches_brute_force():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-8, 8, (400, 2))
    cloud = ObstacleCloud(pts)
    arr = np.column_stack([rng.uniform(-6, 6, 300), rng.uniform(-6, 6, 300), rng.uniform(-math.pi, math.pi, 300)])
    got = poses_in_collision(SPEC, arr, cloud)
    want = [_brute(SPEC, Pose(*p), pts) for p in arr]
    assert list(got) == want


@given(poses, st.floats(-math.pi, math.pi), coord, coord)
@settings(max_examples=100, deadline=None)
def test_collision_rigid_invariance(pose, rot, tx, ty):
    rng = np.random.default_rng(abs(hash((pose.x, rot))) % 2**32)
    pts = np.array([pose.x, pose.y]) + rng.uniform(-5, 5, (60, 2))
    c, s = math.cos(rot), math.sin(rot)
    R = np.array([[c, -s], [s, c]])
    moved_pts = pts @ R.T + (tx, ty)
    mx, my = R @ (pose.x, pose.y) + (tx, ty)
    moved = Pose(mx, my, pose.theta + rot)
    a = pose_in_collision(SPEC, pose, ObstacleCloud(pts))
    b = pose_in_collision(SPEC, moved, ObstacleCloud(moved_pts))
    # points within 1e-7 of an edge may flip under rounding; skip those
    m = SPEC.safety_margin
    cth, sth = math.cos(pose.theta), math.sin(pose.theta)
    u = cth * (pts[:, 0] - pose.x) + sth * (pts[:, 1] - pose.y)
    v = -sth * (pts[:, 0] - pose.x) + cth * (pts[:, 1] - pose.y)
    near = np.minimum.reduce([
        np.abs(u + SPEC.rear_overhang + m), np.abs(u - SPEC.body_length + SPEC.rear_overhang - m),
        np.abs(np.abs(v) - SPEC.body_width / 2 - m),
    ])
    if near.min() > 1e-7:
        assert a == b


def test_path_collision_free_wall_clearance():
    # drive along x past a wall on the left side
    poses = sample_segment(0.0, 0.0, 0.0, 0.0, 10.0, 0.1)
    half = SPEC.body_width / 2 + SPEC.safety_margin
    wall = [(x, half + 0.01) for x in np.arange(-2, 15, 0.1)]
    assert path_collision_free(SPEC, poses, ObstacleCloud(wall))
    wall_in = [(x, half - 0.01) for x in np.arange(-2, 15, 0.1)]
    assert not path_collision_free(SPEC, poses, ObstacleCloud(wall_in))
    assert path_collision_free(SPEC, poses, ObstacleCloud())


def test_sample_segment_excludes_start_includes_end():
    pts = sample_segment(0.0, 0.0, 0.0, 0.0, 1.0, 0.5)
    assert pts[:, 0] == pytest.approx([0.5, 1.0])
    rev = sample_segment(0.0, 0.0, 0.0, 0.0, -1.0, 0.5)
    assert rev[-1, 0] == pytest.approx(-1.0)
