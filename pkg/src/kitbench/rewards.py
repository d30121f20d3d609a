"""Assembly success predicate, once-per-pair sparse reward, phase tracking.

A pair counts as assembled when the relative pose between its parts matches
the ground-truth relative pose: the cosine similarity of every column of
the two rotation matrices exceeds the threshold (default 0.96, strictly)
and the position difference stays below the per-axis threshold (default
7 mm, strictly).  Each pair is rewarded once per episode; disassembling and
reassembling earns nothing.

Phases are the fine-grained progress metric: the count of leading
consecutively satisfied phase predicates, which never decreases within an
episode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .catalog import AssemblyGraph, PhaseSpec
from .geometry import Pose, quat_to_matrix, relative_pose, yaw_of
from .world import ASSEMBLED, INSERTED, WorldState


@dataclass(frozen=True, slots=True)
class RewardConfig:
    column_cosine_threshold: float = 0.96
    per_axis_distance_threshold: float = 0.007  # m
    persistence: int = 1  # consecutive frames the predicate must hold

    def __post_init__(self):
        if not 0.0 < self.column_cosine_threshold <= 1.0:
            raise ValueError("cosine threshold must lie in (0, 1]")
        if self.per_axis_distance_threshold <= 0:
            raise ValueError("distance threshold must be positive")
        if self.persistence < 1:
            raise ValueError("persistence must be at least 1")


def is_assembled(rel: Pose, gt: Pose, cfg: RewardConfig | None = None) -> bool:
    """True when rel matches gt within the rotation/translation thresholds."""
    cfg = cfg or RewardConfig()
    for a, b in zip(rel.position, gt.position):
        if abs(a - b) >= cfg.per_axis_distance_threshold:
            return False
    mr = quat_to_matrix(rel.orientation)
    mg = quat_to_matrix(gt.orientation)
    for col in range(3):
        cos = (
            mr[0][col] * mg[0][col]
            + mr[1][col] * mg[1][col]
            + mr[2][col] * mg[2][col]
        )
        if cos <= cfg.column_cosine_threshold:
            return False
    return True


def step_reward(
    assembled_before: frozenset[int],
    part_poses: dict[str, Pose | None],
    graph: AssemblyGraph,
    cfg: RewardConfig | None = None,
) -> tuple[int, frozenset[int]]:
    """Count pairs newly satisfying the predicate this frame.

    Pairs with an unobserved side are skipped and keep their prior status;
    the returned set only ever grows, so episode totals cannot exceed N-1.
    """
    cfg = cfg or RewardConfig()
    newly = []
    for idx, pair in enumerate(graph.pairs):
        if idx in assembled_before:
            continue
        base = part_poses.get(pair.base)
        attached = part_poses.get(pair.attached)
        if base is None or attached is None:
            continue
        rel = relative_pose(base, attached)
        if is_assembled(rel, pair.gt_relative, cfg):
            newly.append(idx)
    return len(newly), assembled_before | frozenset(newly)


class RewardTracker:
    """Episode-scoped reward memory with optional frame persistence."""

    def __init__(self, graph: AssemblyGraph, cfg: RewardConfig | None = None):
        self.graph = graph
        self.cfg = cfg or RewardConfig()
        self.assembled: frozenset[int] = frozenset()
        self._streaks: dict[int, int] = {}

    @property
    def total(self) -> int:
        return len(self.assembled)

    def update(self, part_poses: dict[str, Pose | None]) -> int:
        if self.cfg.persistence == 1:
            reward, self.assembled = step_reward(
                self.assembled, part_poses, self.graph, self.cfg
            )
            return reward
        reward = 0
        for idx, pair in enumerate(self.graph.pairs):
            if idx in self.assembled:
                continue
            base = part_poses.get(pair.base)
            attached = part_poses.get(pair.attached)
            if base is None or attached is None:
                continue  # unobserved: streak neither grows nor resets
            rel = relative_pose(base, attached)
            if is_assembled(rel, pair.gt_relative, self.cfg):
                streak = self._streaks.get(idx, 0) + 1
                if streak >= self.cfg.persistence:
                    reward += 1
                    self.assembled = self.assembled | {idx}
                    self._streaks.pop(idx, None)
                else:
                    self._streaks[idx] = streak
            else:
                self._streaks.pop(idx, None)
        return reward


@dataclass(frozen=True, slots=True)
class PhaseState:
    completed: int = 0
    satisfied: tuple[bool, ...] = ()

    @staticmethod
    def fresh(graph: AssemblyGraph) -> "PhaseState":
        return PhaseState(0, (False,) * len(graph.phases))


def phase_satisfied(phase: PhaseSpec, world: WorldState,
                    graph: AssemblyGraph) -> bool:
    if phase.kind == "grasped":
        return world.ee.held_part == phase.part
    if phase.kind == "placed":
        if world.ee.held_part == phase.part:
            return False
        x, y, _ = world.parts[phase.part].pose.position
        return math.hypot(x - phase.xy[0], y - phase.xy[1]) <= phase.tol
    if phase.kind == "oriented":
        if world.ee.held_part == phase.part:
            return False
        yaw = yaw_of(world.parts[phase.part].pose.orientation)
        diff = (yaw - phase.yaw + math.pi) % (2 * math.pi) - math.pi
        return abs(diff) <= phase.tol
    if phase.kind == "inserted":
        pair = graph.pairs[phase.pair]
        return world.parts[pair.attached].status in (INSERTED, ASSEMBLED)
    if phase.kind == "assembled":
        return phase.pair in world.assembled_pairs
    raise ValueError(f"unknown phase kind {phase.kind!r}")


def update_phase(
    state: PhaseState, world: WorldState, graph: AssemblyGraph
) -> PhaseState:
    """Advance while the next phase predicate holds; never regress."""
    completed = state.completed
    flags = list(state.satisfied) or [False] * len(graph.phases)
    while completed < len(graph.phases) and phase_satisfied(
        graph.phases[completed], world, graph
    ):
        flags[completed] = True
        completed += 1
    return PhaseState(completed, tuple(flags))
