"""Action pipeline: clipping, interpolation, dead-zone, closed-loop tracking."""

import math

import numpy as np
import pytest

from kitbench import world as W
from kitbench.catalog import load_furniture
from kitbench.controller import (
    Action,
    ControllerConfig,
    control_substep,
    gripper_command,
    process_action,
    run_action,
)
from kitbench.geometry import Pose, geodesic_angle, rot_z

CFG = ControllerConfig()
GRAPH = load_furniture("one_leg")


def fresh_world(seed=0):
    return W.reset_world(GRAPH, dict(GRAPH.base_poses), seed)


class TestConfig:
    def test_defaults(self):
        assert CFG.n_subgoals == 33
        assert CFG.steps_per_action == 99
        assert CFG.delta_position_clip == 0.10
        assert CFG.gripper_threshold == 0.019

    def test_frequency_invariant_enforced(self):
        with pytest.raises(ValueError, match="torque_frequency"):
            ControllerConfig(torque_frequency=200.0)

    def test_gain_validation(self):
        with pytest.raises(ValueError, match="gains"):
            ControllerConfig(kp=(0.0,) * 6)


class TestProcessAction:
    def test_position_clip(self):
        goal, _, _ = process_action(Pose(), Action((0.5, 0.0, 0.0)), CFG)
        assert goal.position == pytest.approx((0.10, 0.0, 0.0), abs=1e-15)

    def test_clip_is_euclidean_norm(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a = Action(tuple(rng.uniform(-1, 1, 3)))
            goal, _, _ = process_action(Pose(), a, CFG)
            assert math.hypot(*goal.position) <= CFG.delta_position_clip + 1e-12

    def test_subgoal_count_and_endpoints(self):
        start = Pose((0.02, -0.01, 0.1), rot_z(0.3))
        goal, subs, _ = process_action(
            start, Action((0.04, 0.02, -0.03), rot_z(0.2)), CFG
        )
        assert len(subs) == 33
        assert subs[0].position != start.position
        assert subs[-1] == goal
        gaps = []
        prev = start.position
        for s in subs:
            gaps.append(math.dist(prev, s.position))
            prev = s.position
        assert max(gaps) - min(gaps) < 1e-12

    def test_rotation_clipped_to_30_degrees(self):
        _, subs, _ = process_action(Pose(), Action((0, 0, 0), rot_z(1.5)), CFG)
        ang = geodesic_angle(subs[-1].orientation, (1.0, 0.0, 0.0, 0.0))
        assert ang == pytest.approx(math.pi / 6, abs=1e-9)

    def test_gripper_dead_zone(self):
        assert gripper_command(0.019, CFG) == "hold"
        assert gripper_command(-0.019, CFG) == "hold"
        assert gripper_command(0.0191, CFG) == "close"
        assert gripper_command(0.02, CFG) == "close"
        assert gripper_command(-0.02, CFG) == "open"
        assert gripper_command(0.0, CFG) == "hold"

    def test_nonfinite_action_rejected(self):
        with pytest.raises(ValueError, match="invalid action"):
            process_action(Pose(), Action((float("nan"), 0, 0)), CFG)

    def test_zero_orientation_rejected(self):
        with pytest.raises(ValueError, match="invalid action"):
            process_action(Pose(), Action((0, 0, 0), (0.0, 0.0, 0.0, 0.0)), CFG)

    def test_out_of_range_components_clamped(self):
        goal, _, _ = process_action(Pose(), Action((4.0, 0.0, 0.0)), CFG)
        assert goal.position[0] == pytest.approx(0.10)


class TestControlSubstep:
    def test_zero_at_equilibrium(self):
        state = fresh_world()
        force = control_substep(state.ee.pose, state.ee, CFG)
        assert force == (0.0,) * 6

    def test_decoupled_pd(self):
        state = fresh_world()
        sub = Pose(
            (W.EE_HOME.position[0] + 0.01, W.EE_HOME.position[1],
             W.EE_HOME.position[2]),
            W.EE_HOME.orientation,
        )
        force = control_substep(sub, state.ee, CFG)
        assert force[0] == pytest.approx(CFG.kp[0] * 0.01)
        assert force[1:] == (0.0,) * 5

    def test_settles_within_100_steps(self):
        # 5 cm goal, force recomputed every torque_repeat steps
        state = fresh_world()
        goal = Pose(
            (W.EE_HOME.position[0] + 0.05, W.EE_HOME.position[1],
             W.EE_HOME.position[2]),
            W.EE_HOME.orientation,
        )
        errors = []
        force = None
        for step in range(100):
            if step % CFG.torque_repeat == 0:
                force = control_substep(goal, state.ee, CFG)
            state = W.step_world(
                state, force, "hold", CFG.dt, plant_damping=CFG.joint_damping
            )
            errors.append(math.dist(state.ee.pose.position, goal.position))
        assert errors[-1] < 1e-3
        settled_from = next(
            i for i in range(len(errors)) if all(e < 1e-3 for e in errors[i:])
        )
        assert settled_from <= 100


class TestRunAction:
    def test_zero_action_99_ticks_no_motion(self):
        state = run_action(fresh_world(), Action(), CFG, GRAPH)
        assert state.tick == 99
        assert math.dist(state.ee.pose.position, W.EE_HOME.position) < 1e-4

    def test_5cm_action_lands_within_2mm(self):
        state = run_action(fresh_world(), Action((0.05, 0, 0)), CFG, GRAPH)
        target = W.EE_HOME.position[0] + 0.05
        assert abs(state.ee.pose.position[0] - target) < 2e-3

    def test_max_actions_respect_clip(self):
        state = fresh_world()
        for _ in range(3):
            before = state.ee.pose.position
            state = run_action(state, Action((1.0, 0.0, 0.0)), CFG, GRAPH)
            moved = math.dist(state.ee.pose.position, before)
            assert moved <= CFG.delta_position_clip + 1e-9

    def test_monotone_approach(self):
        # distance to goal shrinks over a cycle for in-clip goals
        rng = np.random.default_rng(5)
        for _ in range(10):
            state = fresh_world()
            delta = tuple(rng.uniform(-0.07, 0.07, 3))
            goal = tuple(
                h + d for h, d in zip(W.EE_HOME.position, delta)
            )
            d0 = math.dist(state.ee.pose.position, goal)
            state = run_action(state, Action(delta), CFG, GRAPH)
            assert math.dist(state.ee.pose.position, goal) < d0
