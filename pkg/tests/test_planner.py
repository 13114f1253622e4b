import math
from dataclasses import replace

import numpy as np
import pytest

from n3p.cli import packaged_dataset
from n3p.environment import (
    Difficulty, EnvAbstraction, ParkingType, Scenario, generate_scenario, goal_pose, synth_abstract_obstacles,
)
from n3p.errors import JunctionMismatch
from n3p.geometry import ObstacleCloud, Pose, VehicleSpec, path_collision_free, points_to_spot_frame, to_spot_frame
from n3p.hybrid_astar import MotionSegment, PlannerConfig, Variant, build_path, plan
from n3p.planner import concatenate, plan_direct, plan_n3p
from n3p.selector import Sample, build_index, load_dataset

from oracles import rk4_replay

SPEC = VehicleSpec()
CFG = PlannerConfig()


@pytest.fixture(scope="module")
def reverse_index():
    return build_index(load_dataset(packaged_dataset(ParkingType.REVERSE)))


def _synth_scenario(sample: Sample, ptype=ParkingType.REVERSE):
    e = EnvAbstraction(*sample.env, ptype)
    cloud, _ = synth_abstract_obstacles(e)
    return Scenario(cloud, Pose(0, 0, 0), sample.x0, ptype, Difficulty.COMPLEX, 0, e)


def _replays(path, start):
    if not path.segments:
        return True
    out = rk4_replay(start.as_tuple(), [(s.steer, s.gear, s.length) for s in path.segments], SPEC.wheelbase)
    end = out[-1]
    return math.hypot(end[0] - path.end.x, end[1] - path.end.y) < 1e-6


def test_start_at_goal_is_trivial(reverse_index):
    sc = generate_scenario("complex", "reverse", 0)
    res = plan_n3p(sc.goal_world(), sc, reverse_index)
    assert res.path.stats.total_length == 0
    assert res.path.stats.nodes_expanded == 0
    assert res.g_pre is None and not res.used_fallback


def test_start_on_training_sample(reverse_index):
    d = reverse_index.dataset
    for k in range(0, len(d.samples), 50):
        s = d.samples[k]
        sc = _synth_scenario(s)
        res = plan_n3p(s.x0, sc, reverse_index)
        assert res.g_pre == s.rs_start
        # the parking stage alone is a single RS shot
        park = plan(s.rs_start, goal_pose("reverse"), sc.obstacles, SPEC, CFG, Variant.WITH_RS)
        assert park.stats.nodes_expanded <= 1 and park.rs_start_index == 0
        if s.env[2] >= 8:  # tight dead ends may exhaust the approach stage cap
            assert not res.used_fallback
            assert res.stage_breakdown.parking_nodes <= 1
        assert path_collision_free(SPEC, res.path.poses_array(), sc.obstacles)


def test_index_type_must_match(reverse_index):
    sc = generate_scenario("complex", "parallel", 0)
    with pytest.raises(ValueError):
        plan_n3p(sc.start, sc, reverse_index)


@pytest.mark.parametrize("seed", range(8))
def test_complex_reverse_end_to_end(reverse_index, seed):
    sc = generate_scenario("complex", "reverse", seed)
    res = plan_n3p(sc.start, sc, reverse_index)
    p = res.path
    assert p.start.close_to(sc.start, 1e-9)
    assert p.end.close_to(sc.goal_world(), 1e-6)
    assert _replays(p, sc.start)
    assert path_collision_free(SPEC, p.poses_array(), sc.obstacles)
    sb = res.stage_breakdown
    assert p.stats.nodes_expanded == sb.total_nodes
    if not res.used_fallback:
        junction = [st.pose for st in p.states if st.pose.close_to(res.g_pre, 1e-6)]
        assert junction
        assert sb.fallback_nodes == 0


def test_corrupted_index_falls_back(reverse_index):
    # every stored preparatory pose moved into the spot's back wall
    wall = Pose(0.0, -3.0, math.pi / 2)
    bad = replace(reverse_index, targets=[wall] * len(reverse_index.targets))
    for seed in range(4):
        sc = generate_scenario("complex", "reverse", seed)
        res = plan_n3p(sc.start, sc, bad)
        assert res.used_fallback
        assert "GoalOccupied" in res.fallback_reason or "StartInCollision" in res.fallback_reason
        direct = plan_direct(sc, Variant.WITH_RS)
        assert res.path.segments == direct.segments
        assert path_collision_free(SPEC, res.path.poses_array(), sc.obstacles)


def test_plan_direct_returns_world_path():
    sc = generate_scenario("easy", "forward", 2)
    p = plan_direct(sc, Variant.WITH_RS)
    assert p.start.close_to(sc.start, 1e-9)
    assert p.end.close_to(sc.goal_world(), 1e-6)
    local = points_to_spot_frame(sc.obstacles.points, sc.spot_pose)
    poses = np.array([to_spot_frame(st.pose, sc.spot_pose).as_tuple() for st in p.states])
    assert path_collision_free(SPEC, poses, ObstacleCloud(local))


def _path(start, segs):
    return build_path(start, [MotionSegment(*s) for s in segs], SPEC, CFG)


def test_concatenate_empty_second():
    a = _path(Pose(0, 0, 0), [(0.0, 1, 2.0), (0.2, 1, 1.0)])
    merged = concatenate(a, _path(a.end, []))
    assert merged.segments == a.segments
    assert np.allclose(merged.poses_array(), a.poses_array())


def test_concatenate_counts_gear_flip_once():
    a = _path(Pose(0, 0, 0), [(0.0, 1, 2.0), (0.0, -1, 1.0), (0.0, 1, 1.0)])
    b = _path(a.end, [(0.3, -1, 1.5), (0.0, 1, 1.0)])
    merged = concatenate(a, b)
    assert merged.stats.direction_changes == a.stats.direction_changes + b.stats.direction_changes + 1
    assert len(merged.states) == len(a.states) + len(b.states) - 1
    assert merged.stats.total_length == pytest.approx(6.5)


def test_concatenate_mismatch():
    a = _path(Pose(0, 0, 0), [(0.0, 1, 2.0)])
    b = _path(Pose(2.0, 0.01, 0), [(0.0, 1, 1.0)])
    with pytest.raises(JunctionMismatch):
        concatenate(a, b)
