"""Initialization levels, skill start states, and the placement guide."""

import math

import numpy as np
import pytest
from scipy import stats

from kitbench import world as W
from kitbench.catalog import load_furniture
from kitbench.geometry import Pose, geodesic_angle, yaw_of
from kitbench.sampler import (
    InitConfig,
    SamplingError,
    init_guide,
    sample_initial_poses,
    skill_start_state,
)

GRAPH = load_furniture("one_leg")


class TestLow:
    def test_small_jitter_around_base(self):
        cfg = InitConfig(level="low")
        for seed in range(50):
            poses = sample_initial_poses(GRAPH, cfg, seed)
            for pid, pose in poses.items():
                base = GRAPH.base_poses[pid]
                assert abs(pose.position[0] - base.position[0]) <= 0.010
                assert abs(pose.position[1] - base.position[1]) <= 0.010
                assert geodesic_angle(
                    pose.orientation, base.orientation
                ) <= math.radians(10.0) + 1e-9

    def test_always_valid_for_reset(self):
        cfg = InitConfig(level="low")
        for seed in range(30):
            W.reset_world(GRAPH, sample_initial_poses(GRAPH, cfg, seed), seed)

    def test_deterministic(self):
        cfg = InitConfig(level="low")
        assert sample_initial_poses(GRAPH, cfg, 9) == sample_initial_poses(
            GRAPH, cfg, 9
        )


class TestMedium:
    def test_bounds_hold_everywhere(self):
        cfg = InitConfig(level="medium")
        for seed in range(1000):
            poses = sample_initial_poses(GRAPH, cfg, seed)
            for pid, pose in poses.items():
                base = GRAPH.base_poses[pid]
                assert abs(pose.position[0] - base.position[0]) <= 0.05
                assert abs(pose.position[1] - base.position[1]) <= 0.05
                dyaw = yaw_of(pose.orientation) - yaw_of(base.orientation)
                dyaw = (dyaw + math.pi) % (2 * math.pi) - math.pi
                assert abs(dyaw) <= math.pi / 4 + 1e-9

    def test_marginals_uniform(self):
        cfg = InitConfig(level="medium")
        dxs, dys, dyaws = [], [], []
        for seed in range(10_000):
            poses = sample_initial_poses(GRAPH, cfg, seed)
            pose = poses["tabletop"]
            base = GRAPH.base_poses["tabletop"]
            dxs.append(pose.position[0] - base.position[0])
            dys.append(pose.position[1] - base.position[1])
            dyaw = yaw_of(pose.orientation) - yaw_of(base.orientation)
            dyaws.append((dyaw + math.pi) % (2 * math.pi) - math.pi)
        for data, lo, hi in (
            (dxs, -0.05, 0.05),
            (dys, -0.05, 0.05),
            (dyaws, -math.pi / 4, math.pi / 4),
        ):
            p = stats.kstest(data, "uniform", args=(lo, hi - lo)).pvalue
            assert p > 0.01

    def test_always_valid_for_reset(self):
        # the base layout guarantees medium noise cannot collide
        cfg = InitConfig(level="medium")
        for furniture in ("one_leg", "lamp", "chair", "desk"):
            g = load_furniture(furniture)
            for seed in range(200):
                W.reset_world(g, sample_initial_poses(g, cfg, seed), seed)


class TestHigh:
    def test_eval_mode_cycles_three_configs(self):
        cfg = InitConfig(level="high")
        a = sample_initial_poses(GRAPH, cfg, 0, eval_mode=True)
        b = sample_initial_poses(GRAPH, cfg, 1, eval_mode=True)
        c = sample_initial_poses(GRAPH, cfg, 2, eval_mode=True)
        d = sample_initial_poses(GRAPH, cfg, 3, eval_mode=True)
        assert a == dict(GRAPH.high_eval_configs[0])
        assert b == dict(GRAPH.high_eval_configs[1])
        assert c == dict(GRAPH.high_eval_configs[2])
        assert d == a
        assert a != b and b != c and a != c

    def test_random_samples_valid(self):
        cfg = InitConfig(level="high")
        for furniture in ("one_leg", "chair"):
            g = load_furniture(furniture)
            for seed in range(300):
                poses = sample_initial_poses(g, cfg, seed)
                ws = W.DEFAULT_WORKSPACE
                parts = list(g.parts)
                for p in parts:
                    x, y, _ = poses[p.id].position
                    assert ws.circle_in_bounds(x, y, p.footprint)
                    assert not ws.circle_hits_wall(x, y, p.footprint)
                for i, a in enumerate(parts):
                    for b in parts[i + 1:]:
                        ax, ay, _ = poses[a.id].position
                        bx, by, _ = poses[b.id].position
                        assert (
                            math.hypot(ax - bx, ay - by)
                            >= a.footprint + b.footprint
                        )

    def test_deterministic(self):
        cfg = InitConfig(level="high")
        assert sample_initial_poses(GRAPH, cfg, 4) == sample_initial_poses(
            GRAPH, cfg, 4
        )

    def test_crowded_workspace_fails_cleanly(self):
        cfg = InitConfig(level="high")
        tiny = W.Workspace(x_min=-0.12, x_max=0.12, y_min=-0.12, y_max=0.12,
                           walls=())
        g = load_furniture("chair")
        with pytest.raises(SamplingError, match="too crowded"):
            sample_initial_poses(g, cfg, 0, workspace=tiny)


class TestSkillStart:
    def test_skill_one_is_base_layout(self):
        ref = skill_start_state(GRAPH, 1, "low", 0)
        for pid, pose in ref.part_poses.items():
            base = GRAPH.base_poses[pid]
            assert pose.position == base.position
        assert ref.held_part is None

    def test_low_jitter_bounds(self):
        for seed in range(500):
            s = skill_start_state(GRAPH, 3, "low", seed)
            for a, b in zip(s.ee_pose.position, _reference_ee(3).position):
                assert abs(a - b) <= 0.005 + 1e-12
            assert geodesic_angle(
                s.ee_pose.orientation, _reference_ee(3).orientation
            ) <= math.radians(5.0) + 1e-9

    def test_medium_jitter_bounds(self):
        for seed in range(500):
            s = skill_start_state(GRAPH, 3, "medium", seed)
            for a, b in zip(s.ee_pose.position, _reference_ee(3).position):
                assert abs(a - b) <= 0.05 + 1e-12
            assert geodesic_angle(
                s.ee_pose.orientation, _reference_ee(3).orientation
            ) <= math.radians(15.0) + 1e-9

    def test_skill_four_holds_leg(self):
        s = skill_start_state(GRAPH, 4, "low", 0)
        assert s.held_part == "leg"
        # tabletop should already sit at the corner
        x, y, _ = s.part_poses["tabletop"].position
        cx, cy = GRAPH.corner_target
        assert math.hypot(x - cx, y - cy) < 0.01

    def test_skill_five_starts_inserted(self):
        from kitbench.geometry import compose_poses

        s = skill_start_state(GRAPH, 5, "low", 0)
        seat = compose_poses(
            s.part_poses["tabletop"], GRAPH.pairs[0].gt_relative
        )
        assert s.part_poses["leg"].position == pytest.approx(
            seat.position, abs=1e-12
        )
        assert s.held_part == "leg"

    def test_unknown_skill_rejected(self):
        with pytest.raises(ValueError, match="skill"):
            skill_start_state(GRAPH, 6, "low", 0)


def _reference_ee(skill_index):
    from kitbench.sampler import _reference_state

    return _reference_state(GRAPH, skill_index).ee_pose


class TestGuide:
    def test_exact_match(self):
        target = dict(GRAPH.base_poses)
        report = init_guide(target, target)
        assert report.all_matched
        assert all(e.translation_delta == 0 for e in report.entries)

    def test_one_part_off(self):
        target = dict(GRAPH.base_poses)
        current = dict(target)
        p = target["leg"]
        current["leg"] = Pose(
            (p.position[0] + 0.03, p.position[1], p.position[2]), p.orientation
        )
        report = init_guide(current, target)
        assert not report.all_matched
        entry = next(e for e in report.entries if e.part_id == "leg")
        assert entry.translation_delta == pytest.approx(0.03)
        assert not entry.matched

    def test_rotation_within_tolerance(self):
        from kitbench.geometry import quat_multiply, rot_z

        target = dict(GRAPH.base_poses)
        current = dict(target)
        p = target["leg"]
        current["leg"] = Pose(
            p.position, quat_multiply(rot_z(math.radians(9)), p.orientation)
        )
        report = init_guide(current, target)
        entry = next(e for e in report.entries if e.part_id == "leg")
        assert entry.matched
        assert entry.rotation_delta == pytest.approx(math.radians(9), abs=1e-9)
