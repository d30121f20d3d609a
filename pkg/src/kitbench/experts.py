"""Scripted waypoint experts for validation and synthetic demonstrations.

An expert compiles the furniture's phase list into a primitive sequence
(approach, grasp, lift, transport, align, insert-push, quarter-screw,
regrasp, release) and emits one delta-pose action per step.  Experts read
the ground-truth world state through the environment; they exist to certify
the environment, not to be a learning baseline.  Every action component
stays within [-1, 1] and the position delta within the controller clip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .catalog import AssemblyGraph, MatingPair
from .controller import Action
from .geometry import (
    Pose,
    compose_poses,
    inverse_pose,
    quat_rotate,
    relative_pose,
    rot_z,
    yaw_of,
)
from .world import ASSEMBLED, INSERTED, WorldState

STEP = 0.06  # m per action toward a waypoint
FINE_STEP = 0.006  # m per action during insertion pushes
TURN = math.radians(30.0)  # wrist rotation per action (controller clip)
POS_TOL = 0.004  # waypoint tolerance
HOVER = 0.06  # m above a grasp frame before descending
TRANSPORT_Z = 0.26  # EE height while carrying parts
RETREAT_Z = 0.18

ZERO = Action()


def _toward(current, target, step):
    dx = target[0] - current[0]
    dy = target[1] - current[1]
    dz = target[2] - current[2]
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d <= step:
        return (dx, dy, dz), d
    s = step / d
    return (dx * s, dy * s, dz * s), d


def _yaw_action(current_quat, target_yaw):
    """Delta orientation rotating the wrist toward a world-frame yaw."""
    diff = target_yaw - yaw_of(current_quat)
    diff = (diff + math.pi) % (2 * math.pi) - math.pi
    turn = max(-TURN, min(TURN, diff))
    return rot_z(turn), abs(diff)


class Primitive:
    def act(self, world: WorldState) -> Action | None:
        raise NotImplementedError


@dataclass
class MoveTo(Primitive):
    """Drive the EE to a (possibly live) target position and yaw."""

    target: object  # callable world -> (x, y, z) or a fixed tuple
    yaw: object = None  # callable world -> yaw, a float, or None to hold
    gripper: float = 0.0
    step: float = STEP
    tol: float = POS_TOL

    def act(self, world):
        goal = self.target(world) if callable(self.target) else self.target
        delta, dist = _toward(world.ee.pose.position, goal, self.step)
        if self.yaw is None:
            dq, yaw_err = (1.0, 0.0, 0.0, 0.0), 0.0
        else:
            target_yaw = self.yaw(world) if callable(self.yaw) else self.yaw
            dq, yaw_err = _yaw_action(world.ee.pose.orientation, target_yaw)
        if dist <= self.tol and yaw_err <= math.radians(3.0):
            return None
        return Action(delta, dq, self.gripper)


@dataclass
class Grip(Primitive):
    """Hold position and open/close the gripper for a fixed action count."""

    command: float  # +1 close, -1 open
    actions: int = 2
    _left: int = field(default=None, init=False)

    def act(self, world):
        if self._left is None:
            self._left = self.actions
        if self._left == 0:
            return None
        self._left -= 1
        return Action((0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0), self.command)


@dataclass
class WristTurn(Primitive):
    """Rotate the wrist in place by a commanded total angle."""

    total: float  # signed radians; emitted in TURN-sized increments
    gripper: float = 1.0
    _remaining: float = field(default=None, init=False)

    def act(self, world):
        if self._remaining is None:
            self._remaining = self.total
        if self._remaining == 0.0:
            return None
        turn = max(-TURN, min(TURN, self._remaining))
        self._remaining -= turn
        return Action((0.0, 0.0, 0.0), rot_z(turn), self.gripper)


@dataclass
class PushUntil(Primitive):
    """Creep toward a live target until a world predicate fires."""

    target: object  # callable world -> (x, y, z)
    predicate: object  # callable world -> bool
    step: float = FINE_STEP
    gripper: float = 1.0
    max_actions: int = 80
    _used: int = field(default=0, init=False)

    def act(self, world):
        if self.predicate(world) or self._used >= self.max_actions:
            return None
        self._used += 1
        goal = self.target(world)
        delta, _ = _toward(world.ee.pose.position, goal, self.step)
        return Action(delta, (1.0, 0.0, 0.0, 0.0), self.gripper)


class ScriptedExpert:
    """Deterministic expert policy for one furniture model."""

    def __init__(self, graph: AssemblyGraph):
        self.graph = graph
        self._env = None
        self._plan: list[Primitive] = []

    # evaluate_policy calls bind() at episode start
    def bind(self, env) -> None:
        self._env = env
        self._plan = self._compile()

    def __call__(self, obs) -> Action:
        world = self._env.world
        while self._plan:
            action = self._plan[0].act(world)
            if action is not None:
                return action
            self._plan.pop(0)
        return ZERO

    # -- plan construction ---------------------------------------------------

    def _compile(self) -> list[Primitive]:
        plan: list[Primitive] = []
        approached: set[int] = set()
        for phase in self.graph.phases:
            if phase.kind == "grasped":
                plan += self._grasp(phase.part)
            elif phase.kind == "placed":
                plan += self._place(phase.part, phase.xy)
            elif phase.kind == "oriented":
                plan += self._orient(phase.part, phase.yaw)
            elif phase.kind == "inserted":
                plan += self._insert(phase.pair)
                approached.add(phase.pair)
            elif phase.kind == "assembled":
                if phase.pair not in approached:
                    # insert-mechanic pairs assemble on contact and have no
                    # separate inserted phase; approach them here
                    plan += self._insert(phase.pair)
                    approached.add(phase.pair)
                plan += self._screw_home(phase.pair)
        return plan

    def _grasp_point(self, part_id):
        spec = self.graph.part(part_id)

        def point(world):
            return compose_poses(
                world.parts[part_id].pose, spec.grasp_frames[0]
            ).position

        return point

    def _grasp(self, part_id) -> list[Primitive]:
        point = self._grasp_point(part_id)

        def above(world):
            x, y, z = point(world)
            return (x, y, z + HOVER)

        return [
            MoveTo(above),
            MoveTo(point, step=0.02, tol=0.002),
            Grip(+1.0),
        ]

    def _place(self, part_id, xy) -> list[Primitive]:
        spec = self.graph.part(part_id)

        def ee_for_part_target(world, part_target):
            offset = relative_pose(
                world.ee.pose, world.parts[part_id].pose
            )
            return compose_poses(part_target(world), inverse_pose(offset))

        def part_goal(world):
            p = world.parts[part_id].pose
            return Pose((xy[0], xy[1], spec.rest_z), p.orientation)

        def carry(world):
            e = ee_for_part_target(world, part_goal).position
            return (e[0], e[1], TRANSPORT_Z)

        def lower(world):
            return ee_for_part_target(world, part_goal).position

        def lift(world):
            e = world.ee.pose.position
            return (e[0], e[1], TRANSPORT_Z)

        return [
            MoveTo(lift, gripper=1.0),
            MoveTo(carry, gripper=1.0),
            MoveTo(lower, gripper=1.0, step=0.03, tol=0.002),
            Grip(-1.0),
            MoveTo(lambda w: _above(w.ee.pose.position, RETREAT_Z)),
        ]

    def _orient(self, part_id, yaw) -> list[Primitive]:
        spec = self.graph.part(part_id)
        grip_z = spec.rest_z + spec.grasp_frames[0].position[2]
        lift_z = grip_z + 0.03

        def at_z(z):
            def target(world):
                e = world.ee.pose.position
                return (e[0], e[1], z)

            return target

        def wrist_to(world):
            # rotate the held part so its yaw lands on the target
            part_yaw = yaw_of(world.parts[part_id].pose.orientation)
            ee_yaw = yaw_of(world.ee.pose.orientation)
            return ee_yaw + _wrap(yaw - part_yaw)

        return [
            *self._grasp(part_id),
            MoveTo(at_z(lift_z), gripper=1.0, step=0.02),
            MoveTo(at_z(lift_z), yaw=wrist_to, gripper=1.0),
            MoveTo(at_z(grip_z), gripper=1.0, step=0.02, tol=0.002),
            Grip(-1.0),
            MoveTo(lambda w: _above(w.ee.pose.position, RETREAT_Z)),
        ]

    # seat pose of the attached part for a pair, from live world state
    def _seat(self, pair: MatingPair):
        def seat(world):
            return compose_poses(
                world.parts[pair.base].pose, pair.gt_relative
            )

        return seat

    def _axis(self, pair: MatingPair):
        def axis(world):
            frame = compose_poses(world.parts[pair.base].pose, pair.base_frame)
            return quat_rotate(frame.orientation, (0.0, 0.0, 1.0))

        return axis

    def _ee_for_attached_target(self, pair: MatingPair):
        """EE position that puts the held part at a given offset from seat."""
        seat = self._seat(pair)
        axis = self._axis(pair)

        def at_offset(world, along):
            target = seat(world)
            a = axis(world)
            part_target = (
                target.position[0] + a[0] * along,
                target.position[1] + a[1] * along,
                target.position[2] + a[2] * along,
            )
            offset = relative_pose(
                world.ee.pose, world.parts[pair.attached].pose
            )
            inv = inverse_pose(offset)
            shift = quat_rotate(world.parts[pair.attached].pose.orientation,
                                inv.position)
            return (
                part_target[0] + shift[0],
                part_target[1] + shift[1],
                part_target[2] + shift[2],
            )

        return at_offset

    def _insert(self, pair_idx: int) -> list[Primitive]:
        pair = self.graph.pairs[pair_idx]
        at_offset = self._ee_for_attached_target(pair)
        approach = 0.025 if pair.mechanic != "slide" else pair.corridor - 0.004

        def carry(world):
            e = at_offset(world, approach)
            return (e[0], e[1], TRANSPORT_Z)

        def entrance(world):
            return at_offset(world, approach)

        def seated(world):
            return at_offset(world, 0.0)

        def engaged(world):
            return world.parts[pair.attached].status in (INSERTED, ASSEMBLED)

        return [
            MoveTo(lambda w: _above(w.ee.pose.position, TRANSPORT_Z),
                   gripper=1.0),
            MoveTo(carry, gripper=1.0),
            MoveTo(entrance, gripper=1.0, step=0.02, tol=0.002),
            PushUntil(seated, engaged),
        ]

    def _screw_home(self, pair_idx: int) -> list[Primitive]:
        pair = self.graph.pairs[pair_idx]
        plan: list[Primitive] = []
        if pair.mechanic == "screw":
            # six capped quarter turns with five regrasps in between
            for segment in range(6):
                plan.append(WristTurn(math.radians(120.0)))
                if segment < 5:
                    plan += [
                        Grip(-1.0),
                        WristTurn(-math.radians(120.0), gripper=-1.0),
                        Grip(+1.0),
                    ]
        elif pair.mechanic == "slide":
            at_offset = self._ee_for_attached_target(pair)

            def seated(world):
                return at_offset(world, 0.0)

            def done(world):
                return world.parts[pair.attached].status == ASSEMBLED

            plan.append(PushUntil(seated, done))
        # insert pairs assemble at insertion; nothing extra to do
        plan += [
            Grip(-1.0),
            MoveTo(lambda w: _above(w.ee.pose.position, RETREAT_Z)),
        ]
        return plan


def _above(position, z):
    return (position[0], position[1], z)


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


class NullPolicy:
    """Emits zero actions; useful for termination tests."""

    def __call__(self, obs) -> Action:
        return ZERO


class RandomPolicy:
    """Uniform random actions within bounds (environment fuzzing)."""

    def __init__(self, seed: int = 0):
        import numpy as np

        self._rng = np.random.default_rng(seed)

    def __call__(self, obs) -> Action:
        r = self._rng
        return Action(
            tuple(r.uniform(-1, 1, 3)),
            tuple(r.uniform(-1, 1, 4)),
            float(r.uniform(-1, 1)),
        )


def make_expert(furniture_or_graph) -> ScriptedExpert:
    if isinstance(furniture_or_graph, AssemblyGraph):
        return ScriptedExpert(furniture_or_graph)
    from .catalog import load_furniture

    return ScriptedExpert(load_furniture(furniture_or_graph))
