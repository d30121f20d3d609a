"""World mechanics: reset rules, grasping, insertion, screwing, clamping."""

import math
from dataclasses import replace

import pytest

from kitbench import world as W
from kitbench.catalog import load_furniture
from kitbench.controller import Action, ControllerConfig, run_action
from kitbench.geometry import (
    Pose,
    compose_poses,
    geodesic_angle,
    pose_distance,
    quat_from_axis_angle,
    relative_pose,
    rot_z,
)

CFG = ControllerConfig()
GRAPH = load_furniture("one_leg")


def fresh_world(graph=GRAPH, seed=0):
    return W.reset_world(graph, dict(graph.base_poses), seed)


def drive(state, ee_pose, cmd="close", graph=GRAPH):
    """Teleport the EE one mechanics step (kinematics-only test helper)."""
    ee = replace(
        state.ee,
        pose=ee_pose,
        gripper_command=cmd,
        prev_orientation=state.ee.pose.orientation,
        gripper_width=state.ee.gripper_width,
    )
    return W.resolve_mechanics(replace(state, ee=ee, tick=state.tick + 1), graph)


def grasp_part(state, part_id, graph=GRAPH):
    spec = graph.part(part_id)
    grasp_world = compose_poses(state.parts[part_id].pose, spec.grasp_frames[0])
    state = drive(state, grasp_world, "close", graph)
    assert state.ee.held_part == part_id
    return state


def hole_world(state, pair_idx=0, graph=GRAPH):
    pair = graph.pairs[pair_idx]
    return compose_poses(state.parts[pair.base].pose, pair.base_frame)


class TestReset:
    def test_valid_base_poses(self):
        state = fresh_world()
        assert state.tick == 0
        assert not state.assembled_pairs
        assert all(p.status == W.FREE for p in state.parts.values())
        assert state.ee.pose == W.EE_HOME

    def test_identical_poses_rejected(self):
        poses = dict(GRAPH.base_poses)
        poses["leg"] = poses["tabletop"]
        with pytest.raises(W.InvalidConfiguration, match="overlaps"):
            W.reset_world(GRAPH, poses, 0)

    def test_out_of_bounds_rejected(self):
        poses = dict(GRAPH.base_poses)
        poses["leg"] = Pose((0.9, 0.0, 0.0575))
        with pytest.raises(W.InvalidConfiguration, match="bounds"):
            W.reset_world(GRAPH, poses, 0)

    def test_obstacle_overlap_rejected(self):
        poses = dict(GRAPH.base_poses)
        poses["leg"] = Pose((-0.37, 0.15, 0.0575))
        with pytest.raises(W.InvalidConfiguration, match="obstacle"):
            W.reset_world(GRAPH, poses, 0)

    def test_error_names_offending_part(self):
        poses = dict(GRAPH.base_poses)
        poses["leg"] = Pose((0.9, 0.0, 0.0575))
        with pytest.raises(W.InvalidConfiguration, match="leg"):
            W.reset_world(GRAPH, poses, 0)

    def test_premated_pair_starts_inserted(self):
        poses = dict(GRAPH.base_poses)
        seat = compose_poses(poses["tabletop"], GRAPH.pairs[0].gt_relative)
        poses["leg"] = seat
        state = W.reset_world(GRAPH, poses, 0)
        assert state.parts["leg"].status == W.INSERTED


class TestStepWorld:
    def test_zero_force_hold_keeps_pose(self):
        state = fresh_world()
        for _ in range(10):
            state = W.step_world(state, (0.0,) * 6, "hold", CFG.dt)
        assert state.ee.pose == W.EE_HOME
        assert state.tick == 10

    def test_constant_force_matches_closed_form(self):
        from .test_fastpath import closed_form_displacement

        state = fresh_world()
        k = 150
        for _ in range(k):
            state = W.step_world(
                state, (3.0, 0, 0, 0, 0, 0), "hold", CFG.dt,
                plant_damping=CFG.joint_damping,
            )
        expect = closed_form_displacement(0.0, 3.0, 1.0, CFG.joint_damping,
                                          CFG.dt, k)
        assert state.ee.pose.position[0] - W.EE_HOME.position[0] == pytest.approx(
            expect, abs=1e-6
        )

    def test_nonfinite_force_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            W.step_world(fresh_world(), (float("nan"),) * 6, "hold", CFG.dt)


class TestGrasping:
    def test_close_within_radius_attaches(self):
        state = grasp_part(fresh_world(), "leg")
        assert state.parts["leg"].status == W.GRASPED
        assert state.ee.grasp_yaw_budget == pytest.approx(math.pi / 2)

    def test_close_out_of_reach_does_nothing(self):
        state = fresh_world()
        away = Pose((0.0, 0.0, 0.25))
        state = drive(state, away, "close")
        assert state.ee.held_part is None

    def test_aperture_must_exceed_part_width(self):
        state = fresh_world()
        narrow = replace(state, ee=replace(state.ee, gripper_width=0.01))
        spec = GRAPH.part("leg")
        grasp_world = compose_poses(
            narrow.parts["leg"].pose, spec.grasp_frames[0]
        )
        narrow = drive(narrow, grasp_world, "close")
        assert narrow.ee.held_part is None

    def test_held_part_follows_rigidly(self):
        state = grasp_part(fresh_world(), "leg")
        offset0 = relative_pose(state.ee.pose, state.parts["leg"].pose)
        pose = state.ee.pose
        for i in range(40):
            pose = Pose(
                (pose.position[0] - 0.004, pose.position[1] + 0.002,
                 pose.position[2] + 0.003),
                compose_poses(Pose(orientation=rot_z(0.01)), pose).orientation,
            )
            state = drive(state, pose, "close")
            offset = relative_pose(state.ee.pose, state.parts["leg"].pose)
            d, ang = pose_distance(offset, offset0)
            assert d < 1e-9 and ang < 1e-9

    def test_release_settles_flat(self):
        state = grasp_part(fresh_world(), "leg")
        lifted = Pose(
            (0.1, -0.1, 0.18),
            quat_from_axis_angle((1.0, 0.0, 0.0), 0.3),
        )
        state = drive(state, lifted, "close")
        state = drive(state, lifted, "open")
        assert state.ee.held_part is None
        leg = state.parts["leg"]
        assert leg.status == W.FREE
        assert leg.pose.position[2] == pytest.approx(GRAPH.part("leg").rest_z)
        # tilt stripped, only yaw kept
        up = geodesic_angle(leg.pose.orientation, rot_z(0.0))
        from kitbench.geometry import yaw_of

        assert abs(yaw_of(leg.pose.orientation)) >= 0.0
        tilt = W._axis_tilt(Pose(orientation=leg.pose.orientation))
        assert tilt < 1e-9


def descend_into_hole(state, extra_list, tilt=None, graph=GRAPH):
    """Carry the held leg over the hole and lower it stepwise."""
    pair = graph.pairs[pair_idx] if (pair_idx := 0) is None else graph.pairs[0]
    seat = compose_poses(state.parts[pair.base].pose, pair.gt_relative)
    grasp = graph.part("leg").grasp_frames[0]
    for extra in extra_list:
        target = Pose(
            (seat.position[0], seat.position[1], seat.position[2] + extra),
            seat.orientation if tilt is None else tilt,
        )
        ee_pose = compose_poses(target, grasp)
        state = drive(state, ee_pose, "close", graph)
    return state


class TestInsertion:
    def test_descent_within_tolerance_inserts(self):
        state = grasp_part(fresh_world(), "leg")
        state = descend_into_hole(state, [0.030, 0.020, 0.012, 0.006])
        leg = state.parts["leg"]
        assert leg.status == W.INSERTED
        # the unscrewed part rides a thread standoff above its seat
        seat = compose_poses(
            state.parts["tabletop"].pose, GRAPH.pairs[0].gt_relative
        )
        standoff = (
            seat.position[0],
            seat.position[1],
            seat.position[2] + W.SCREW_THREAD_DEPTH,
        )
        assert leg.pose.position == pytest.approx(standoff, abs=1e-12)

    def test_no_insert_without_approach(self):
        # within tolerance but with no inward motion: stays grasped
        state = grasp_part(fresh_world(), "leg")
        state = descend_into_hole(state, [0.006])
        assert state.parts["leg"].status == W.INSERTED  # approach from afar
        state = grasp_part(fresh_world(), "leg")
        pair = GRAPH.pairs[0]
        seat = compose_poses(state.parts[pair.base].pose, pair.gt_relative)
        target = Pose(
            (seat.position[0], seat.position[1], seat.position[2] + 0.006),
            seat.orientation,
        )
        ee_pose = compose_poses(target, GRAPH.part("leg").grasp_frames[0])
        held = replace(
            state.ee, pose=ee_pose, prev_orientation=ee_pose.orientation
        )
        leg = replace(state.parts["leg"], pose=target)
        state = replace(
            state,
            ee=held,
            parts={**state.parts, "leg": leg},
            approach={},  # no motion history: cannot have approached
        )
        state = drive(state, ee_pose, "close")  # first frame: warm-up
        assert state.parts["leg"].status == W.GRASPED
        state = drive(state, ee_pose, "close")  # stationary: no approach
        assert state.parts["leg"].status == W.GRASPED

    def test_20_deg_tilt_rejected(self):
        state = grasp_part(fresh_world(), "leg")
        tilted = quat_from_axis_angle((1.0, 0.0, 0.0), math.radians(20))
        state = descend_into_hole(state, [0.030, 0.020, 0.012, 0.005],
                                  tilt=tilted)
        assert state.parts["leg"].status == W.GRASPED

    def test_10_deg_tilt_accepted_and_straightened(self):
        state = grasp_part(fresh_world(), "leg")
        tilted = quat_from_axis_angle((1.0, 0.0, 0.0), math.radians(10))
        state = descend_into_hole(state, [0.030, 0.020, 0.012, 0.005],
                                  tilt=tilted)
        leg = state.parts["leg"]
        assert leg.status == W.INSERTED
        assert W._axis_tilt(Pose(orientation=leg.pose.orientation)) < 1e-9

    def test_screw_angle_survives_pullout(self):
        state = grasp_part(fresh_world(), "leg")
        state = descend_into_hole(state, [0.030, 0.020, 0.012, 0.006])
        state = screw_segment(state, math.pi / 3)
        angle0 = state.parts["leg"].screw_angle
        assert angle0 > 0
        # drag the leg out sideways: seat unlocks, progress is retained
        ee = state.ee.pose
        for i in range(12):
            ee = Pose((ee.position[0] + 0.004, ee.position[1], ee.position[2]),
                      ee.orientation)
            state = drive(state, ee, "close")
        assert state.parts["leg"].status == W.GRASPED
        assert state.parts["leg"].screw_angle == angle0


def screw_segment(state, total_angle, steps=12, graph=GRAPH):
    """Rotate the wrist by total_angle about z in place, incrementally."""
    per = total_angle / steps
    for _ in range(steps):
        new_pose = Pose(
            state.ee.pose.position,
            compose_poses(
                Pose(orientation=rot_z(per)), state.ee.pose
            ).orientation,
        )
        state = drive(state, new_pose, "close", graph)
    return state


def regrasp(state, graph=GRAPH):
    state = drive(state, state.ee.pose, "open", graph)
    back = Pose(state.ee.pose.position, rot_z(0.0))
    state = drive(state, back, "open", graph)
    state = drive(state, back, "close", graph)
    assert state.ee.held_part == "leg"
    return state


class TestScrewing:
    def setup_inserted(self):
        state = grasp_part(fresh_world(), "leg")
        return descend_into_hole(state, [0.030, 0.020, 0.012, 0.006])

    def test_accrual_capped_at_budget(self):
        state = self.setup_inserted()
        state = screw_segment(state, math.radians(120))
        leg = state.parts["leg"]
        assert leg.screw_angle == pytest.approx(math.pi / 2)
        assert state.ee.grasp_yaw_budget == pytest.approx(0.0, abs=1e-12)

    def test_backward_rotation_does_not_accrue(self):
        state = self.setup_inserted()
        state = screw_segment(state, -math.radians(45))
        assert state.parts["leg"].screw_angle == 0.0

    def test_regrasp_resets_budget(self):
        state = self.setup_inserted()
        state = screw_segment(state, math.radians(120))
        state = regrasp(state)
        assert state.ee.grasp_yaw_budget == pytest.approx(math.pi / 2)

    def test_six_quarter_turns_assemble(self):
        state = self.setup_inserted()
        for segment in range(6):
            state = screw_segment(state, math.radians(96))
            if segment < 5:
                assert state.parts["leg"].status == W.INSERTED
                state = regrasp(state)
        leg = state.parts["leg"]
        assert leg.status == W.ASSEMBLED
        assert 0 in state.assembled_pairs
        seat = compose_poses(
            state.parts["tabletop"].pose, GRAPH.pairs[0].gt_relative
        )
        d, ang = pose_distance(leg.pose, seat)
        assert d < 1e-12 and ang < 1e-9

    def test_five_segments_insufficient(self):
        state = self.setup_inserted()
        for _ in range(5):
            state = screw_segment(state, math.radians(96))
            state = regrasp(state)
        assert state.parts["leg"].status == W.INSERTED
        assert state.parts["leg"].screw_angle == pytest.approx(
            5 * math.pi / 2, abs=1e-9
        )

    def test_screw_angle_monotone(self):
        state = self.setup_inserted()
        prev = 0.0
        for _ in range(3):
            state = screw_segment(state, math.radians(50))
            state = screw_segment(state, -math.radians(20))
            angle = state.parts["leg"].screw_angle
            assert angle >= prev
            prev = angle
            state = regrasp(state)


class TestWallsAndPushing:
    def test_free_part_clamped_at_wall_face(self):
        # push the leg into the back wall with the EE body (stopping before
        # the gripper reaches the straddle zone over the part)
        state = fresh_world()
        poses = dict(GRAPH.base_poses)
        poses["leg"] = Pose((-0.26, 0.16, 0.0575))
        state = W.reset_world(GRAPH, poses, 0)
        y = 0.12
        for _ in range(19):
            y += 0.004
            state = drive(state, Pose((-0.26, y, 0.03)), "hold")
        leg = state.parts["leg"]
        wall_y = W.DEFAULT_WORKSPACE.walls[0][2]
        assert leg.pose.position[1] == pytest.approx(
            wall_y - GRAPH.part("leg").footprint, abs=1e-9
        )

    def test_push_slides_along_wall(self):
        state = fresh_world()
        poses = dict(GRAPH.base_poses)
        poses["leg"] = Pose((-0.20, 0.218, 0.0575))
        state = W.reset_world(GRAPH, poses, 0)
        # diagonal push: the wall zeroes the violating (y) component
        x, y = -0.16, 0.19
        for _ in range(40):
            x -= 0.004
            y += 0.002
            state = drive(state, Pose((x, y, 0.03)), "hold")
        leg = state.parts["leg"]
        assert leg.pose.position[1] <= 0.24 - GRAPH.part("leg").footprint + 1e-9
        assert leg.pose.position[0] < -0.20  # still slid along x

    def test_high_ee_does_not_push(self):
        state = fresh_world()
        leg0 = state.parts["leg"].pose
        above = Pose((leg0.position[0], leg0.position[1], 0.15))
        state = drive(state, above, "hold")
        assert state.parts["leg"].pose == leg0


class TestDeterminism:
    def test_bit_identical_rollout(self):
        actions = [
            Action((0.03, -0.02, -0.05), rot_z(0.2), 0.5),
            Action((-0.05, 0.04, -0.02), rot_z(-0.1), -0.5),
            Action((0.08, 0.0, 0.01), (1.0, 0.0, 0.0, 0.0), 0.0),
        ]

        def rollout():
            st = fresh_world(seed=7)
            out = []
            for a in actions:
                st = run_action(st, a, CFG, GRAPH)
                out.append(st)
            return out

        first, second = rollout(), rollout()
        for a, b in zip(first, second):
            assert a == b

    def test_run_action_equals_manual_loop(self):
        from kitbench.controller import control_substep, process_action

        action = Action((0.04, -0.03, -0.06), rot_z(0.15), 0.8)
        fast = run_action(fresh_world(), action, CFG, GRAPH)

        state = fresh_world()
        _, subgoals, gcmd = process_action(state.ee.pose, action, CFG)
        for sub in subgoals:
            force = control_substep(sub, state.ee, CFG)
            for _ in range(CFG.torque_repeat):
                state = W.step_world(
                    state, force, gcmd, CFG.dt,
                    plant_mass=CFG.plant_mass,
                    plant_inertia=CFG.plant_inertia,
                    plant_damping=CFG.joint_damping,
                )
                state = W.resolve_mechanics(state, GRAPH)
        assert state == fast

    def test_assembled_pairs_monotone_under_fuzz(self):
        import numpy as np

        rng = np.random.default_rng(3)
        state = fresh_world(seed=3)
        seen = set()
        for _ in range(30):
            a = Action(
                tuple(rng.uniform(-1, 1, 3)),
                tuple(rng.normal(size=4)),
                float(rng.uniform(-1, 1)),
            )
            state = run_action(state, a, CFG, GRAPH)
            assert seen <= set(state.assembled_pairs)
            seen = set(state.assembled_pairs)
