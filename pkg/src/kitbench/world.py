"""Abstracted rigid-pose world: tabletop, corner obstacle, part mechanics.

The end-effector is a damped double-integrator rigid body in task space
(virtual mass/inertia); there is no joint-space robot model.  Parts are
footprint circles with named frames.  Mechanics are resolved once per
low-level step, after plant integration:

  - grasping attaches the nearest part whose grasp frame is within reach
    and whose graspable width fits the current aperture; attachment is rigid
  - insertion locks a held part to its mate once the frames align within
    tolerance and the approach is inward; screw pairs then need 540 degrees
    of wrist rotation, accrued at most +-90 degrees per grasp
  - slide pairs (drawer rails, cabinet poles) require alignment held over an
    approach corridor instead of locking at first contact
  - released parts settle flat onto the table; free parts can be pushed by
    the end-effector body and are clamped by the obstacle walls and table
    bounds, so they can be pinned against the corner
  - assembled parts follow their partner rigidly (and only once count
    toward the world's assembled set, which never shrinks)

All operations are pure: they return new states and never mutate inputs.
Identical (graph, poses, seed, force sequence) produce bit-identical state
sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import _fastpath
from .catalog import AssemblyGraph, MatingPair
from .geometry import (
    Pose,
    compose_poses,
    quat_from_axis_angle,
    quat_multiply,
    quat_conjugate,
    quat_rotate,
    relative_pose,
    rot_z,
    twist_angle,
    yaw_of,
)

# part status values
FREE = "free"
GRASPED = "grasped"
INSERTED = "inserted"
ASSEMBLED = "assembled"

# grasping
GRASP_RADIUS = 0.020  # m, grip point to grasp frame
GRIPPER_MAX_WIDTH = 0.08  # m
GRIPPER_SPEED = 0.40  # m/s aperture slew
YAW_BUDGET = math.pi / 2  # wrist rotation available per grasp
PULL_OUT_DISTANCE = 0.025  # m, grip departure that unlocks a seated part

# insertion tolerance (simulator constant, distinct from the reward
# thresholds; locking a pair guarantees the reward predicate is satisfiable)
INSERT_POS_TOL = 0.010  # m, per axis in the base frame
INSERT_AXIS_TOL = math.radians(15.0)
SCREW_EPS = 1e-9  # completion slack on the 540-degree total
# an inserted screw part rides this far above its seat until the full
# 540 degrees thread it home with a final snap; the standoff is several
# noise sigmas above the 7 mm reward threshold, so estimates cannot make a
# half-screwed pair look assembled
SCREW_THREAD_DEPTH = 0.025  # m

# end-effector body, for non-prehensile pushes of free parts
EE_BODY_RADIUS = 0.020  # m
PUSH_HEIGHT = 0.06  # m, EE center height below which it pushes parts

EE_HOME = Pose((0.22, -0.14, 0.20))


@dataclass(frozen=True, slots=True)
class Workspace:
    """Table rectangle plus an L-shaped corner obstacle (two wall rects)."""

    x_min: float = -0.40
    x_max: float = 0.40
    y_min: float = -0.30
    y_max: float = 0.30
    # axis-aligned wall rectangles (x0, x1, y0, y1), inside the table bounds
    walls: tuple[tuple[float, float, float, float], ...] = (
        (-0.40, -0.16, 0.24, 0.30),  # back segment
        (-0.40, -0.34, 0.02, 0.30),  # left segment
    )

    def __post_init__(self):
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError("degenerate table bounds")
        for x0, x1, y0, y1 in self.walls:
            if not (
                self.x_min <= x0 < x1 <= self.x_max
                and self.y_min <= y0 < y1 <= self.y_max
            ):
                raise ValueError("obstacle walls must lie within the table")

    def circle_in_bounds(self, x: float, y: float, r: float) -> bool:
        return (
            self.x_min + r <= x <= self.x_max - r
            and self.y_min + r <= y <= self.y_max - r
        )

    def circle_hits_wall(self, x: float, y: float, r: float) -> bool:
        for x0, x1, y0, y1 in self.walls:
            cx = min(max(x, x0), x1)
            cy = min(max(y, y0), y1)
            if (x - cx) ** 2 + (y - cy) ** 2 < r * r:
                return True
        return False

    def clamp_circle(self, x: float, y: float, r: float) -> tuple[float, float]:
        """Project a footprint circle out of walls and into table bounds."""
        x = min(max(x, self.x_min + r), self.x_max - r)
        y = min(max(y, self.y_min + r), self.y_max - r)
        for _ in range(2):  # two passes stabilize the wall corner
            for x0, x1, y0, y1 in self.walls:
                cx = min(max(x, x0), x1)
                cy = min(max(y, y0), y1)
                dx = x - cx
                dy = y - cy
                d2 = dx * dx + dy * dy
                if d2 >= r * r:
                    continue
                if d2 > 1e-18:
                    d = math.sqrt(d2)
                    x = cx + dx / d * r
                    y = cy + dy / d * r
                else:
                    # center inside the wall: exit through the nearest face
                    exits = (
                        (x - x0 + r, -1.0, 0.0),
                        (x1 - x + r, 1.0, 0.0),
                        (y - y0 + r, 0.0, -1.0),
                        (y1 - y + r, 0.0, 1.0),
                    )
                    depth, nx, ny = min(exits)
                    x += nx * depth
                    y += ny * depth
        return x, y


DEFAULT_WORKSPACE = Workspace()


@dataclass(frozen=True, slots=True)
class PartState:
    pose: Pose
    status: str = FREE
    screw_angle: float = 0.0  # accrued on the attached part of its pair
    lock_rel: Pose | None = None  # pose in the partner frame while seated


@dataclass(frozen=True, slots=True)
class EEState:
    pose: Pose = EE_HOME
    linear_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    angular_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gripper_width: float = GRIPPER_MAX_WIDTH
    gripper_command: str = "hold"  # open | close | hold, last commanded
    held_part: str | None = None
    grasp_offset: Pose | None = None  # held pose in the EE frame
    grasp_frame_index: int = 0  # which grasp frame the gripper matched
    grasp_yaw_budget: float = 0.0  # wrist rotation remaining this grasp
    held_width: float = 0.0  # aperture floor while holding a part
    prev_orientation: tuple[float, float, float, float] = EE_HOME.orientation


@dataclass(frozen=True, slots=True)
class WorldState:
    tick: int
    parts: dict[str, PartState]
    ee: EEState
    assembled_pairs: frozenset[int]
    rng_seed: int
    approach: dict[int, float] = field(default_factory=dict)

    def part_pose(self, part_id: str) -> Pose:
        return self.parts[part_id].pose


class InvalidConfiguration(ValueError):
    """Initial part poses violate bounds, obstacle, or overlap rules."""


def _frames_mated(rel: Pose) -> bool:
    """Mate frames coincide within the insertion tolerance box."""
    if any(abs(c) >= INSERT_POS_TOL for c in rel.position):
        return False
    return _axis_tilt(rel) < INSERT_AXIS_TOL


def _axis_tilt(rel: Pose) -> float:
    """Angle between the two mate frames' z axes."""
    w, x, y, z = rel.orientation
    m22 = 1.0 - 2.0 * (x * x + y * y)
    return math.acos(min(1.0, max(-1.0, m22)))


def _pair_rel(state_parts: dict[str, PartState], pair: MatingPair) -> Pose:
    base_world = compose_poses(state_parts[pair.base].pose, pair.base_frame)
    att_world = compose_poses(
        state_parts[pair.attached].pose, pair.attached_frame
    )
    return relative_pose(base_world, att_world)


def reset_world(
    graph: AssemblyGraph,
    part_poses: dict[str, Pose],
    seed: int,
    workspace: Workspace = DEFAULT_WORKSPACE,
) -> WorldState:
    """Fresh world with parts free, gripper open, EE at the home pose.

    Poses must be inside the table, clear of the obstacle walls, and
    pairwise non-overlapping by footprint; a pair already mated within the
    insertion tolerance is exempt from the overlap rule and starts in the
    inserted state (used by skill start states).
    """
    if set(part_poses) != {p.id for p in graph.parts}:
        raise InvalidConfiguration(
            f"part poses {sorted(part_poses)} do not match furniture parts"
        )
    parts = {p.id: PartState(pose=part_poses[p.id]) for p in graph.parts}

    mated: set[tuple[str, str]] = set()
    for idx, pair in enumerate(graph.pairs):
        rel = _pair_rel(parts, pair)
        if _frames_mated(rel):
            mated.add((pair.base, pair.attached))
            mated.add((pair.attached, pair.base))
            parts[pair.attached] = replace(
                parts[pair.attached],
                status=INSERTED,
                lock_rel=relative_pose(
                    parts[pair.base].pose, parts[pair.attached].pose
                ),
            )

    offenders = []
    for spec in graph.parts:
        x, y, _ = parts[spec.id].pose.position
        if not workspace.circle_in_bounds(x, y, spec.footprint):
            offenders.append(f"{spec.id} out of table bounds")
        elif workspace.circle_hits_wall(x, y, spec.footprint):
            offenders.append(f"{spec.id} intersects the obstacle")
    for i, a in enumerate(graph.parts):
        for b in graph.parts[i + 1 :]:
            if (a.id, b.id) in mated:
                continue
            ax, ay, _ = parts[a.id].pose.position
            bx, by, _ = parts[b.id].pose.position
            if math.hypot(ax - bx, ay - by) < a.footprint + b.footprint:
                offenders.append(f"{a.id} overlaps {b.id}")
    if offenders:
        raise InvalidConfiguration(
            "invalid initial configuration: " + "; ".join(offenders)
        )

    return WorldState(
        tick=0,
        parts=parts,
        ee=EEState(),
        assembled_pairs=frozenset(),
        rng_seed=seed,
    )


def step_world(
    state: WorldState,
    force: tuple[float, float, float, float, float, float],
    gripper_target: str,
    dt: float,
    plant_mass: float = 1.0,
    plant_inertia: float = 0.01,
    plant_damping: float = 2.0,
) -> WorldState:
    """One low-level step: integrate the EE plant and slew the gripper.

    Mechanics (grasping, insertion, screwing, pushing) are applied by
    resolve_mechanics, which callers invoke once after every step.
    """
    if not all(math.isfinite(f) for f in force):
        raise ValueError("non-finite force")
    ee = state.ee
    pos, quat, linvel, angvel = _fastpath.plant_step(
        ee.pose.position,
        ee.pose.orientation,
        ee.linear_velocity,
        ee.angular_velocity,
        force,
        plant_mass,
        plant_inertia,
        plant_damping,
        dt,
    )
    width = _slew_width(state, gripper_target, dt)
    new_ee = replace(
        ee,
        pose=Pose(pos, quat),
        linear_velocity=linvel,
        angular_velocity=angvel,
        gripper_width=width,
        gripper_command=gripper_target,
        prev_orientation=ee.pose.orientation,
    )
    return replace(state, tick=state.tick + 1, ee=new_ee)


def apply_plant_result(
    state: WorldState,
    plant_state,
    gripper_target: str,
    dt: float,
) -> WorldState:
    """step_world for a plant state precomputed by the kernel cycle."""
    pos, quat, linvel, angvel = plant_state
    ee = state.ee
    width = _slew_width(state, gripper_target, dt)
    new_ee = replace(
        ee,
        pose=Pose(pos, quat),
        linear_velocity=linvel,
        angular_velocity=angvel,
        gripper_width=width,
        gripper_command=gripper_target,
        prev_orientation=ee.pose.orientation,
    )
    return replace(state, tick=state.tick + 1, ee=new_ee)


def _slew_width(state: WorldState, target: str, dt: float) -> float:
    ee = state.ee
    if target == "open":
        return min(ee.gripper_width + GRIPPER_SPEED * dt, GRIPPER_MAX_WIDTH)
    if target == "close":
        # the aperture cannot close through a held part
        return max(ee.gripper_width - GRIPPER_SPEED * dt, ee.held_width)
    return ee.gripper_width


def resolve_mechanics(
    state: WorldState,
    graph: AssemblyGraph,
    workspace: Workspace = DEFAULT_WORKSPACE,
) -> WorldState:
    """Apply grasp/insert/screw/push/settle rules after a plant step."""
    parts = dict(state.parts)
    ee = state.ee
    assembled = state.assembled_pairs
    approach = dict(state.approach)

    # -- gripper events ----------------------------------------------------
    if ee.gripper_command == "open" and ee.held_part is not None:
        ps = parts[ee.held_part]
        if ps.status == GRASPED:
            parts[ee.held_part] = _settle(ps, graph, ee.held_part, workspace)
        ee = replace(
            ee,
            held_part=None,
            grasp_offset=None,
            grasp_yaw_budget=0.0,
            held_width=0.0,
        )
        approach.clear()
    elif ee.gripper_command == "close" and ee.held_part is None:
        match = _find_graspable(parts, graph, ee)
        if match is not None:
            part_id, frame_idx = match
            ps = parts[part_id]
            offset = relative_pose(ee.pose, ps.pose)
            ee = replace(
                ee,
                held_part=part_id,
                grasp_offset=offset,
                grasp_frame_index=frame_idx,
                grasp_yaw_budget=YAW_BUDGET,
                held_width=graph.part(part_id).graspable_width,
            )
            if ps.status == FREE:
                parts[part_id] = replace(ps, status=GRASPED)

    # -- held-part kinematics ----------------------------------------------
    if ee.held_part is not None:
        held_id = ee.held_part
        ps = parts[held_id]
        if ps.status == GRASPED or (
            ps.status == INSERTED and _pair_for_attached(graph, held_id).mechanic == "slide"
        ):
            parts[held_id] = replace(
                ps, pose=compose_poses(ee.pose, ee.grasp_offset)
            )
        elif ps.status in (INSERTED, ASSEMBLED):
            ee, parts, assembled = _seated_held(
                state, ee, parts, assembled, graph, held_id
            )

    # -- insertion checks ---------------------------------------------------
    if ee.held_part is not None:
        held_id = ee.held_part
        if parts[held_id].status == GRASPED or (
            parts[held_id].status == INSERTED
        ):
            parts, assembled, approach = _insertion_step(
                parts, assembled, approach, graph, held_id
            )

    # -- EE pushes free parts -----------------------------------------------
    if ee.pose.position[2] < PUSH_HEIGHT:
        # a part being mated with the held part is approached through its
        # opening, not bulldozed by the gripper body
        mate_targets = set()
        if ee.held_part is not None:
            for pair in graph.pairs:
                if pair.attached == ee.held_part:
                    mate_targets.add(pair.base)
        for spec in graph.parts:
            ps = parts[spec.id]
            if ps.status != FREE or spec.id in mate_targets:
                continue
            px, py, pz = ps.pose.position
            ex, ey, _ = ee.pose.position
            straddling = False
            for frame in spec.grasp_frames:
                gx, gy, _ = compose_poses(ps.pose, frame).position
                if math.hypot(gx - ex, gy - ey) < GRASP_RADIUS:
                    # open fingers around the grip feature, not a shove
                    straddling = True
                    break
            if straddling:
                continue
            dx = px - ex
            dy = py - ey
            dist = math.hypot(dx, dy)
            gap = EE_BODY_RADIUS + spec.footprint
            if dist >= gap:
                continue
            if dist > 1e-12:
                nx, ny = dx / dist, dy / dist
            else:
                nx, ny = 1.0, 0.0
            nx_pos = px + nx * (gap - dist)
            ny_pos = py + ny * (gap - dist)
            cx, cy = workspace.clamp_circle(nx_pos, ny_pos, spec.footprint)
            parts[spec.id] = replace(ps, pose=Pose((cx, cy, pz), ps.pose.orientation))

    # -- weld: seated parts follow their partner -----------------------------
    for pair in graph.pairs:
        child = parts[pair.attached]
        if child.lock_rel is None or child.status not in (INSERTED, ASSEMBLED):
            continue
        if pair.attached == ee.held_part and child.status == INSERTED and pair.mechanic == "slide":
            continue
        parts[pair.attached] = replace(
            child, pose=compose_poses(parts[pair.base].pose, child.lock_rel)
        )

    return replace(
        state, parts=parts, ee=ee, assembled_pairs=assembled, approach=approach
    )


def _pair_for_attached(graph: AssemblyGraph, part_id: str) -> MatingPair:
    for pair in graph.pairs:
        if pair.attached == part_id:
            return pair
    raise KeyError(f"{part_id} is not the attached part of any pair")


def _find_graspable(parts, graph: AssemblyGraph, ee: EEState):
    """Nearest part with a grasp frame in reach that fits the aperture."""
    best = None
    ex, ey, ez = ee.pose.position
    for spec in graph.parts:
        if spec.graspable_width >= ee.gripper_width:
            continue
        pose = parts[spec.id].pose
        for k, frame in enumerate(spec.grasp_frames):
            gx, gy, gz = compose_poses(pose, frame).position
            d = math.sqrt((gx - ex) ** 2 + (gy - ey) ** 2 + (gz - ez) ** 2)
            if d < GRASP_RADIUS and (best is None or d < best[0]):
                best = (d, spec.id, k)
    if best is None:
        return None
    return best[1], best[2]


def _settle(ps: PartState, graph: AssemblyGraph, part_id: str,
            workspace: Workspace) -> PartState:
    """Released free part: keep x, y, yaw; rest flat at support height."""
    spec = graph.part(part_id)
    x, y, _ = ps.pose.position
    x, y = workspace.clamp_circle(x, y, spec.footprint)
    return replace(
        ps,
        status=FREE,
        pose=Pose((x, y, spec.rest_z), rot_z(yaw_of(ps.pose.orientation))),
        lock_rel=None,
    )


def _seated_held(state, ee: EEState, parts, assembled, graph, held_id):
    """Held part that is seated in its mate: screw accrual and pull-out."""
    ps = parts[held_id]
    spec = graph.part(held_id)
    anchor = compose_poses(ps.pose, spec.grasp_frames[ee.grasp_frame_index])
    ax, ay, az = anchor.position
    ex, ey, ez = ee.pose.position
    departure = math.sqrt((ax - ex) ** 2 + (ay - ey) ** 2 + (az - ez) ** 2)
    if departure > PULL_OUT_DISTANCE:
        # the grip drags the part out of its seat; it is rigid from here on
        parts[held_id] = replace(ps, status=GRASPED, lock_rel=None)
        ee = replace(ee, grasp_offset=relative_pose(ee.pose, ps.pose))
        return ee, parts, assembled

    if ps.status == INSERTED:
        pair_idx, pair = next(
            (i, p) for i, p in enumerate(graph.pairs) if p.attached == held_id
        )
        if pair.mechanic == "screw":
            base_world = compose_poses(parts[pair.base].pose, pair.base_frame)
            axis = quat_rotate(base_world.orientation, (0.0, 0.0, 1.0))
            step_rot = quat_multiply(
                ee.pose.orientation, quat_conjugate(ee.prev_orientation)
            )
            delta = twist_angle(step_rot, axis)
            gain = min(max(delta, 0.0), ee.grasp_yaw_budget)
            if gain > 0.0:
                new_angle = ps.screw_angle + gain
                ee = replace(ee, grasp_yaw_budget=ee.grasp_yaw_budget - gain)
                if new_angle >= pair.screw_total - SCREW_EPS:
                    seat = compose_poses(parts[pair.base].pose, pair.gt_relative)
                    parts[held_id] = replace(
                        ps,
                        screw_angle=new_angle,
                        status=ASSEMBLED,
                        pose=seat,
                        lock_rel=pair.gt_relative,
                    )
                    assembled = assembled | {pair_idx}
                else:
                    thread = _thread_pose(
                        parts[pair.base].pose, pair, ps.pose.orientation,
                        new_angle, axis,
                    )
                    parts[held_id] = replace(
                        ps,
                        screw_angle=new_angle,
                        pose=thread,
                        lock_rel=relative_pose(parts[pair.base].pose, thread),
                    )
    return ee, parts, assembled


def _thread_pose(base_pose: Pose, pair: MatingPair, orientation, angle: float,
                 axis) -> Pose:
    seat = compose_poses(base_pose, pair.gt_relative)
    lift = SCREW_THREAD_DEPTH
    return Pose(
        (
            seat.position[0] + axis[0] * lift,
            seat.position[1] + axis[1] * lift,
            seat.position[2] + axis[2] * lift,
        ),
        orientation,
    )


def _insertion_step(parts, assembled, approach, graph: AssemblyGraph, held_id):
    """Check every pair in which the held part can seat into its partner."""
    for idx, pair in enumerate(graph.pairs):
        if pair.attached != held_id:
            continue
        ps = parts[held_id]
        rel = _pair_rel(parts, pair)
        dist = math.sqrt(sum(c * c for c in rel.position))
        prev = approach.get(idx)
        approach[idx] = dist

        if pair.mechanic == "slide":
            parts, assembled = _slide_step(
                parts, assembled, graph, idx, pair, rel
            )
            continue
        if ps.status != GRASPED:
            continue
        moved_toward = prev is not None and dist < prev
        if moved_toward and _frames_mated(rel):
            parts, assembled = _lock_pair(parts, assembled, graph, idx, pair)
    return parts, assembled, approach


def _slide_step(parts, assembled, graph, idx, pair, rel: Pose):
    """Corridor engagement for slide pairs: alignment held over the travel."""
    ps = parts[pair.attached]
    lateral_ok = (
        abs(rel.position[0]) < INSERT_POS_TOL
        and abs(rel.position[1]) < INSERT_POS_TOL
        and _axis_tilt(rel) < INSERT_AXIS_TOL
    )
    along = rel.position[2]
    if ps.status == GRASPED:
        if lateral_ok and 0.0 < along <= pair.corridor:
            parts[pair.attached] = replace(ps, status=INSERTED)
    elif ps.status == INSERTED:
        if abs(along) < INSERT_POS_TOL and lateral_ok:
            parts, assembled = _lock_pair(parts, assembled, graph, idx, pair)
        elif not (lateral_ok and 0.0 < along <= pair.corridor):
            parts[pair.attached] = replace(ps, status=GRASPED)
    return parts, assembled


def _lock_pair(parts, assembled, graph, idx: int, pair: MatingPair):
    """Seat the attached part: exact mate position, tilt removed, yaw kept."""
    ps = parts[pair.attached]
    seat = compose_poses(parts[pair.base].pose, pair.gt_relative)
    done = pair.mechanic != "screw" or ps.screw_angle >= pair.screw_total - SCREW_EPS
    if done:
        parts[pair.attached] = replace(
            ps, status=ASSEMBLED, pose=seat, lock_rel=pair.gt_relative
        )
        assembled = assembled | {idx}
    else:
        base_world = compose_poses(parts[pair.base].pose, pair.base_frame)
        axis = quat_rotate(base_world.orientation, (0.0, 0.0, 1.0))
        diff = quat_multiply(
            ps.pose.orientation, quat_conjugate(seat.orientation)
        )
        twist = twist_angle(diff, axis)
        oriented = quat_multiply(
            quat_from_axis_angle(axis, twist), seat.orientation
        )
        locked = _thread_pose(
            parts[pair.base].pose, pair, oriented, ps.screw_angle, axis
        )
        parts[pair.attached] = replace(
            ps,
            status=INSERTED,
            pose=locked,
            lock_rel=relative_pose(parts[pair.base].pose, locked),
        )
    return parts, assembled
