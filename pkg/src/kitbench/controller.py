"""Delta-pose action pipeline.

A policy commands a delta pose + gripper scalar at the action rate (10 Hz).
The delta is clipped, the resulting goal is split into equally spaced
subgoals (33 at the default rates), and each subgoal gets one task-space PD
force that is held for `torque_repeat` low-level plant steps, so one action
advances the world by 99 low-level steps.

The gripper scalar is a dead-zoned three-way command: hold inside
[-threshold, +threshold], close above, open below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _fastpath
from .geometry import (
    Pose,
    quat_multiply,
    quat_normalize,
    quat_from_rotvec,
    quat_to_rotvec,
    slerp,
)
from .world import (
    DEFAULT_WORKSPACE,
    WorldState,
    Workspace,
    apply_plant_result,
    resolve_mechanics,
)
from .catalog import AssemblyGraph


@dataclass(frozen=True, slots=True)
class ControllerConfig:
    action_frequency: float = 10.0  # Hz, policy commands
    torque_frequency: float = 1000.0 / 3.0  # Hz, force updates
    lowlevel_frequency: float = 1000.0  # Hz, plant integration
    torque_repeat: int = 3  # plant steps per force update
    delta_position_clip: float = 0.10  # m, Euclidean norm of the delta
    delta_rotation_clip: float = math.pi / 6  # rad per action, geodesic
    gripper_threshold: float = 0.019  # dead-zone half width
    # PD gains (x, y, z, rx, ry, rz); tuned so a 5 cm goal settles to 1 mm
    # within 100 low-level steps and a full action cycle ends within 2 mm
    kp: tuple[float, ...] = (5e4, 5e4, 5e4, 500.0, 500.0, 500.0)
    kd: tuple[float, ...] = (200.0, 200.0, 200.0, 2.0, 2.0, 2.0)
    joint_damping: float = 2.0  # plant velocity damping, 1/s
    force_limit: float = 2000.0  # N, clamp on the PD force norm
    torque_limit: float = 200.0  # N*m, clamp on the PD torque norm
    plant_mass: float = 1.0  # kg, virtual
    plant_inertia: float = 0.01  # kg*m^2, isotropic virtual

    def __post_init__(self):
        if abs(self.lowlevel_frequency - self.torque_frequency * self.torque_repeat) > 1e-6:
            raise ValueError(
                "lowlevel_frequency must equal torque_frequency * torque_repeat"
            )
        if len(self.kp) != 6 or len(self.kd) != 6:
            raise ValueError("kp and kd must have 6 entries")
        if any(g <= 0 for g in self.kp) or any(g < 0 for g in self.kd):
            raise ValueError("gains must be positive")

    @property
    def n_subgoals(self) -> int:
        return round(
            self.lowlevel_frequency / self.action_frequency / self.torque_repeat
        )

    @property
    def dt(self) -> float:
        return 1.0 / self.lowlevel_frequency

    @property
    def steps_per_action(self) -> int:
        return self.n_subgoals * self.torque_repeat


@dataclass(frozen=True, slots=True)
class Action:
    """8-D command: delta position (m), delta orientation, gripper scalar."""

    delta_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    delta_orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    gripper: float = 0.0

    @staticmethod
    def from_list(v) -> "Action":
        if len(v) != 8:
            raise ValueError(f"action needs 8 numbers, got {len(v)}")
        return Action((v[0], v[1], v[2]), (v[3], v[4], v[5], v[6]), v[7])

    def to_list(self) -> list[float]:
        return [*self.delta_position, *self.delta_orientation, self.gripper]


def _validate_action(action: Action) -> Action:
    comps = action.to_list()
    if not all(math.isfinite(c) for c in comps):
        raise ValueError("invalid action: non-finite component")
    if all(abs(c) < 1e-12 for c in action.delta_orientation):
        raise ValueError("invalid action: zero orientation quaternion")
    clipped = [min(1.0, max(-1.0, c)) for c in comps]
    return Action.from_list(clipped)


def gripper_command(gripper: float, cfg: ControllerConfig) -> str:
    """Dead-zoned gripper command; the boundary itself holds."""
    if gripper > cfg.gripper_threshold:
        return "close"
    if gripper < -cfg.gripper_threshold:
        return "open"
    return "hold"


def process_action(
    current_ee: Pose, action: Action, cfg: ControllerConfig
) -> tuple[Pose, list[Pose], str]:
    """Clip the delta, build the goal, and interpolate subgoals.

    Position deltas are clipped by Euclidean norm, rotation deltas by
    geodesic angle.  Subgoal positions divide the distance equally; subgoal
    orientations follow a spherical interpolation.  The last subgoal is the
    goal itself.
    """
    action = _validate_action(action)
    dx, dy, dz = action.delta_position
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    if norm > cfg.delta_position_clip:
        s = cfg.delta_position_clip / norm
        dx, dy, dz = dx * s, dy * s, dz * s

    dq = quat_normalize(action.delta_orientation)
    rv = quat_to_rotvec(dq)
    angle = math.sqrt(rv[0] ** 2 + rv[1] ** 2 + rv[2] ** 2)
    if angle > cfg.delta_rotation_clip:
        s = cfg.delta_rotation_clip / angle
        dq = quat_from_rotvec((rv[0] * s, rv[1] * s, rv[2] * s))

    p0 = current_ee.position
    q0 = current_ee.orientation
    goal = Pose(
        (p0[0] + dx, p0[1] + dy, p0[2] + dz),
        quat_normalize(quat_multiply(dq, q0)),
    )
    n = cfg.n_subgoals
    subgoals = []
    for i in range(1, n):
        t = i / n
        subgoals.append(
            Pose(
                (p0[0] + t * dx, p0[1] + t * dy, p0[2] + t * dz),
                slerp(q0, goal.orientation, t),
            )
        )
    subgoals.append(goal)
    return goal, subgoals, gripper_command(action.gripper, cfg)


def control_substep(subgoal: Pose, ee_state, cfg: ControllerConfig):
    """PD force toward a subgoal; held for torque_repeat low-level steps."""
    return _fastpath.pd_force(
        subgoal.position,
        subgoal.orientation,
        ee_state.pose.position,
        ee_state.pose.orientation,
        ee_state.linear_velocity,
        ee_state.angular_velocity,
        cfg.kp,
        cfg.kd,
        cfg.force_limit,
        cfg.torque_limit,
    )


def run_action(
    state: WorldState,
    action: Action,
    cfg: ControllerConfig,
    graph: AssemblyGraph,
    workspace: Workspace = DEFAULT_WORKSPACE,
) -> WorldState:
    """Execute one full action cycle (33 subgoals x 3 plant steps).

    Equivalent to looping control_substep/step_world/resolve_mechanics by
    hand; the kernel integrates each subgoal's plant steps in one call.
    """
    _, subgoals, gcmd = process_action(state.ee.pose, action, cfg)
    dt = cfg.dt
    for sub in subgoals:
        ee = state.ee
        plant_states, _force = _fastpath.subgoal_cycle(
            ee.pose.position,
            ee.pose.orientation,
            ee.linear_velocity,
            ee.angular_velocity,
            sub.position,
            sub.orientation,
            cfg.kp,
            cfg.kd,
            cfg.plant_mass,
            cfg.plant_inertia,
            cfg.joint_damping,
            dt,
            cfg.torque_repeat,
            cfg.force_limit,
            cfg.torque_limit,
        )
        for plant_state in plant_states:
            state = apply_plant_result(state, plant_state, gcmd, dt)
            state = resolve_mechanics(state, graph, workspace)
    return state
