"""Initial-state generation for the three randomness levels.

low     base layout plus small placement error (truncated Gaussian)
medium  base layout plus uniform noise in [-5 cm, 5 cm] per axis and
        [-45, 45] degrees about the vertical axis
high    parts scattered uniformly over the free workspace; in eval mode the
        three fixed catalog configurations are cycled by seed instead

Skill start states reconstruct the world just before a given phase begins
(reference state derived from the phase list) and jitter the end-effector
pose, +-0.5 cm / +-5 deg at low and +-5 cm / +-15 deg at medium randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .catalog import AssemblyGraph
from .geometry import (
    Pose,
    compose_poses,
    geodesic_angle,
    quat_multiply,
    quat_normalize,
    rot_z,
)
from .world import DEFAULT_WORKSPACE, EE_HOME, Workspace

LEVELS = ("low", "medium", "high")

MAX_SAMPLE_ATTEMPTS = 10_000


@dataclass(frozen=True, slots=True)
class InitConfig:
    level: str = "low"
    low_translation_sigma: float = 0.005  # m, truncated at 2 sigma
    low_rotation_sigma: float = math.radians(5.0)  # rad, truncated at 2 sigma
    medium_translation_bound: float = 0.05  # m, uniform per axis
    medium_rotation_bound: float = math.pi / 4  # rad, uniform about vertical
    guide_translation_tol: float = 0.010  # m
    guide_rotation_tol: float = math.radians(10.0)

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level!r}")
        for b in (
            self.low_translation_sigma,
            self.low_rotation_sigma,
            self.medium_translation_bound,
            self.medium_rotation_bound,
            self.guide_translation_tol,
            self.guide_rotation_tol,
        ):
            if b <= 0:
                raise ValueError("bounds must be positive")


class SamplingError(RuntimeError):
    pass


def _truncated_normal(rng, sigma: float) -> float:
    # redraw beyond 2 sigma rather than clipping, keeping the shape intact
    while True:
        v = rng.normal(0.0, sigma)
        if abs(v) <= 2.0 * sigma:
            return v


def sample_initial_poses(
    graph: AssemblyGraph,
    cfg: InitConfig,
    seed: int,
    eval_mode: bool = False,
    workspace: Workspace = DEFAULT_WORKSPACE,
) -> dict[str, Pose]:
    """Initial part poses for one episode; deterministic given the seed."""
    rng = np.random.default_rng(seed)
    if cfg.level == "low":
        out = {}
        for pid, base in graph.base_poses.items():
            dx = _truncated_normal(rng, cfg.low_translation_sigma)
            dy = _truncated_normal(rng, cfg.low_translation_sigma)
            dyaw = _truncated_normal(rng, cfg.low_rotation_sigma)
            out[pid] = Pose(
                (base.position[0] + dx, base.position[1] + dy, base.position[2]),
                quat_normalize(quat_multiply(rot_z(dyaw), base.orientation)),
            )
        return out
    if cfg.level == "medium":
        out = {}
        b, rb = cfg.medium_translation_bound, cfg.medium_rotation_bound
        for pid, base in graph.base_poses.items():
            dx = rng.uniform(-b, b)
            dy = rng.uniform(-b, b)
            dyaw = rng.uniform(-rb, rb)
            out[pid] = Pose(
                (base.position[0] + dx, base.position[1] + dy, base.position[2]),
                quat_normalize(quat_multiply(rot_z(dyaw), base.orientation)),
            )
        return out
    if eval_mode:
        cfg_idx = seed % len(graph.high_eval_configs)
        return dict(graph.high_eval_configs[cfg_idx])
    return _sample_high(graph, rng, workspace)


def _sample_high(graph, rng, workspace: Workspace) -> dict[str, Pose]:
    out: dict[str, Pose] = {}
    placed: list[tuple[float, float, float]] = []
    attempts = 0
    for part in graph.parts:
        r = part.footprint
        while True:
            attempts += 1
            if attempts > MAX_SAMPLE_ATTEMPTS:
                raise SamplingError("workspace too crowded")
            x = rng.uniform(workspace.x_min + r, workspace.x_max - r)
            y = rng.uniform(workspace.y_min + r, workspace.y_max - r)
            if workspace.circle_hits_wall(x, y, r):
                continue
            if any(
                math.hypot(x - ox, y - oy) < r + orr
                for ox, oy, orr in placed
            ):
                continue
            break
        placed.append((x, y, r))
        yaw = rng.uniform(-math.pi, math.pi)
        rest = graph.base_poses[part.id].position[2]
        out[part.id] = Pose((x, y, rest), rot_z(yaw))
    return out


@dataclass(frozen=True, slots=True)
class SkillStartState:
    part_poses: dict[str, Pose]
    ee_pose: Pose
    held_part: str | None
    grasp_frame_index: int = 0


def _reference_state(graph: AssemblyGraph, skill_index: int) -> SkillStartState:
    """World implied by completing phases 1..skill_index-1 of the plan."""
    poses = dict(graph.base_poses)
    held: str | None = None
    ee_pose = EE_HOME
    for phase in graph.phases[: skill_index - 1]:
        if phase.kind == "grasped":
            pose = poses[phase.part]
            frame = graph.part(phase.part).grasp_frames[0]
            ee_pose = compose_poses(pose, frame)
            held = phase.part
        elif phase.kind == "placed":
            poses[phase.part] = Pose(
                (phase.xy[0], phase.xy[1], poses[phase.part].position[2]),
                rot_z(0.0),
            )
            held = None
            ee_pose = Pose((phase.xy[0], phase.xy[1], 0.15))
        elif phase.kind == "oriented":
            p = poses[phase.part]
            poses[phase.part] = Pose(p.position, rot_z(phase.yaw))
            held = None
        elif phase.kind in ("inserted", "assembled"):
            pair = graph.pairs[phase.pair]
            seat = compose_poses(poses[pair.base], pair.gt_relative)
            poses[pair.attached] = seat
            if phase.kind == "inserted":
                held = pair.attached
                frame = graph.part(pair.attached).grasp_frames[0]
                ee_pose = compose_poses(seat, frame)
            else:
                held = None
    if held is not None:
        frame = graph.part(held).grasp_frames[0]
        ee_pose = compose_poses(poses[held], frame)
    return SkillStartState(poses, ee_pose, held)


def skill_start_state(
    graph: AssemblyGraph,
    skill_index: int,
    level: str,
    seed: int,
    workspace: Workspace = DEFAULT_WORKSPACE,
) -> SkillStartState:
    """Reference start state for one of the first five skills, jittered.

    The end-effector pose is jittered +-0.5 cm / +-5 deg (low) or
    +-5 cm / +-15 deg (medium); medium also perturbs every free part within
    the medium bounds, rejecting placements that collide.
    """
    if not 1 <= skill_index <= min(5, len(graph.phases)):
        raise ValueError(f"unknown skill index {skill_index}")
    if level not in ("low", "medium"):
        raise ValueError("skill evaluation uses low or medium randomness")
    ref = _reference_state(graph, skill_index)
    rng = np.random.default_rng(seed)

    poses = dict(ref.part_poses)
    if level == "medium":
        bound, rbound = 0.05, math.pi / 4
        seated = _seated_parts(graph, poses)
        for part in graph.parts:
            pid = part.id
            if pid == ref.held_part or pid in seated:
                continue
            base = poses[pid]
            for _ in range(1000):
                dx = rng.uniform(-bound, bound)
                dy = rng.uniform(-bound, bound)
                dyaw = rng.uniform(-rbound, rbound)
                x = base.position[0] + dx
                y = base.position[1] + dy
                if not workspace.circle_in_bounds(x, y, part.footprint):
                    continue
                if workspace.circle_hits_wall(x, y, part.footprint):
                    continue
                if _collides(graph, poses, pid, x, y):
                    continue
                poses[pid] = Pose(
                    (x, y, base.position[2]),
                    quat_normalize(
                        quat_multiply(rot_z(dyaw), base.orientation)
                    ),
                )
                break

    if level == "low":
        dt_bound, rot_bound = 0.005, math.radians(5.0)
    else:
        dt_bound, rot_bound = 0.05, math.radians(15.0)
    dx = rng.uniform(-dt_bound, dt_bound)
    dy = rng.uniform(-dt_bound, dt_bound)
    dz = rng.uniform(-dt_bound, dt_bound)
    dyaw = rng.uniform(-rot_bound, rot_bound)
    ee = ref.ee_pose
    jittered = Pose(
        (ee.position[0] + dx, ee.position[1] + dy,
         max(0.01, ee.position[2] + dz)),
        quat_normalize(quat_multiply(rot_z(dyaw), ee.orientation)),
    )
    return SkillStartState(poses, jittered, ref.held_part)


def _seated_parts(graph: AssemblyGraph, poses) -> set[str]:
    seated = set()
    for pair in graph.pairs:
        seat = compose_poses(poses[pair.base], pair.gt_relative)
        cur = poses[pair.attached]
        d = math.dist(seat.position, cur.position)
        if d < 1e-6:
            seated.add(pair.attached)
            seated.add(pair.base)  # the structure stays put as a whole
    return seated


def _collides(graph, poses, pid, x, y) -> bool:
    me = graph.part(pid)
    for other in graph.parts:
        if other.id == pid:
            continue
        ox, oy, _ = poses[other.id].position
        if math.hypot(x - ox, y - oy) < me.footprint + other.footprint:
            return True
    return False


@dataclass(frozen=True, slots=True)
class GuideEntry:
    part_id: str
    translation_delta: float
    rotation_delta: float
    matched: bool


@dataclass(frozen=True, slots=True)
class GuideReport:
    entries: tuple[GuideEntry, ...]

    @property
    def all_matched(self) -> bool:
        return all(e.matched for e in self.entries)


def init_guide(
    current: dict[str, Pose],
    target: dict[str, Pose],
    cfg: InitConfig | None = None,
) -> GuideReport:
    """Per-part placement deltas against a sampled target configuration."""
    cfg = cfg or InitConfig()
    if set(current) != set(target):
        raise ValueError("estimates must cover every part")
    entries = []
    for pid in target:
        dt = math.dist(current[pid].position, target[pid].position)
        dr = geodesic_angle(current[pid].orientation, target[pid].orientation)
        entries.append(
            GuideEntry(
                pid,
                dt,
                dr,
                dt <= cfg.guide_translation_tol
                and dr <= cfg.guide_rotation_tol,
            )
        )
    return GuideReport(tuple(entries))
