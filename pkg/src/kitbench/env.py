"""Benchmark environment: reset/step at the action rate, metrics, evaluation.

One environment step runs a full controller cycle (99 low-level plant steps
at the defaults), then perception, reward from the fused estimates, phase
tracking from the true world, and termination checks.  Episodes end on task
completion, a 5-second motion stall, an unsafe end-effector excursion, or
the per-skill/total step budgets.

The returned reward comes from the estimated part poses, exactly like the
reward channel of the real pipeline; info carries a ground-truth reward for
analysis, and the two agree whenever perception noise is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .catalog import AssemblyGraph, load_furniture
from .config import RunConfig, TerminationConfig
from .controller import Action, run_action
from .geometry import Pose, geodesic_angle
from .imaging import render_topdown
from .perception import PerceptionPipeline
from .rewards import PhaseState, RewardTracker, update_phase
from .sampler import sample_initial_poses, skill_start_state
from .world import (
    DEFAULT_WORKSPACE,
    WorldState,
    resolve_mechanics,
    reset_world,
)

PERCEPTION_WARMUP_FRAMES = 5

TERMINATION_CAUSES = (
    "no_motion",
    "unsafe",
    "max_skill",
    "max_total",
    "policy_error",
)


@dataclass(frozen=True, slots=True)
class Observation:
    ee_position: tuple[float, float, float]
    ee_orientation: tuple[float, float, float, float]
    ee_linear_velocity: tuple[float, float, float]
    ee_angular_velocity: tuple[float, float, float]
    gripper_width: float
    part_poses: dict[str, tuple[Pose, bool]] | None = None  # optional channel
    image: np.ndarray | None = None  # optional channel

    def proprio_vector(self) -> list[float]:
        return [
            *self.ee_position,
            *self.ee_orientation,
            *self.ee_linear_velocity,
            *self.ee_angular_velocity,
            self.gripper_width,
        ]


def check_termination(
    ee_track: list[Pose],
    skill_steps: int,
    total_steps: int,
    cfg: TerminationConfig,
    action_frequency: float = 10.0,
) -> str | None:
    """First triggered cause among no_motion, unsafe, max_skill, max_total."""
    window = round(cfg.no_motion_seconds * action_frequency)
    if len(ee_track) > window:
        tail = ee_track[-(window + 1):]
        latest = tail[-1]
        if all(
            math.dist(p.position, latest.position) < cfg.motion_epsilon
            and geodesic_angle(p.orientation, latest.orientation)
            < cfg.motion_rotation_epsilon
            for p in tail
        ):
            return "no_motion"
    x, y, z = ee_track[-1].position
    x0, x1, y0, y1, z0, z1 = cfg.unsafe_bounds
    if not (x0 <= x <= x1 and y0 <= y <= y1 and z0 <= z <= z1):
        return "unsafe"
    if skill_steps > cfg.max_steps_per_skill:
        return "max_skill"
    if total_steps >= cfg.max_steps_total:
        return "max_total"
    return None


class Environment:
    """Single furniture-assembly environment instance (single-threaded)."""

    def __init__(self, config: RunConfig | None = None, **overrides):
        if config is None:
            config = RunConfig(**overrides)
        elif overrides:
            config = replace(config, **overrides)
        self.config = config
        self.graph: AssemblyGraph = load_furniture(config.furniture)
        self.workspace = DEFAULT_WORKSPACE
        self.world: WorldState | None = None
        self.perception = PerceptionPipeline(
            self.graph, config.noise, config.fusion
        )
        self._done = True
        self._cause: str | None = None

    # -- episode control -----------------------------------------------------

    def reset(self, seed: int) -> Observation:
        poses = sample_initial_poses(
            self.graph,
            replace(self.config.init, level=self.config.level),
            seed,
            eval_mode=self.config.eval_mode,
            workspace=self.workspace,
        )
        self.world = reset_world(self.graph, poses, seed, self.workspace)
        return self._start_episode(seed, poses)

    def reset_to_skill(self, skill_index: int, seed: int) -> Observation:
        """Start just before the given skill (single-skill evaluation)."""
        start = skill_start_state(
            self.graph, skill_index, self.config.level, seed, self.workspace
        )
        self.world = reset_world(
            self.graph, start.part_poses, seed, self.workspace
        )
        ee = replace(
            self.world.ee,
            pose=start.ee_pose,
            prev_orientation=start.ee_pose.orientation,
        )
        self.world = replace(self.world, ee=ee)
        if start.held_part is not None:
            grip = replace(self.world.ee, gripper_command="close")
            self.world = resolve_mechanics(
                replace(self.world, ee=grip), self.graph, self.workspace
            )
            if self.world.ee.held_part != start.held_part:
                # jitter moved the gripper off the stored grasp; re-seat it
                spec = self.graph.part(start.held_part)
                from .geometry import compose_poses

                anchor = compose_poses(
                    self.world.parts[start.held_part].pose,
                    spec.grasp_frames[start.grasp_frame_index],
                )
                near = replace(
                    self.world.ee, pose=anchor, gripper_command="close",
                    prev_orientation=anchor.orientation,
                )
                self.world = resolve_mechanics(
                    replace(self.world, ee=near), self.graph, self.workspace
                )
                ee2 = replace(
                    self.world.ee, pose=start.ee_pose,
                    prev_orientation=start.ee_pose.orientation,
                )
                self.world = resolve_mechanics(
                    replace(self.world, ee=ee2), self.graph, self.workspace
                )
        return self._start_episode(seed, start.part_poses)

    def _start_episode(self, seed: int, true_poses) -> Observation:
        sequences = np.random.SeedSequence(seed).spawn(1)
        self._rng = np.random.default_rng(sequences[0])
        self.perception.reset(
            {pid: self.world.parts[pid].pose for pid in true_poses}
        )
        for i in range(PERCEPTION_WARMUP_FRAMES):
            self.perception.observe(self.world, -PERCEPTION_WARMUP_FRAMES + i,
                                    self._rng)
        self.reward_tracker = RewardTracker(self.graph, self.config.reward)
        self.gt_tracker = RewardTracker(self.graph, self.config.reward)
        self.phase_state = PhaseState.fresh(self.graph)
        self._ee_track = [self.world.ee.pose]
        self._steps = 0
        self._skill_steps = 0
        self._done = False
        self._cause = None
        return self._observation()

    @property
    def done(self) -> bool:
        return self._done

    @property
    def termination_cause(self) -> str | None:
        return self._cause

    def step(self, action: Action) -> tuple[Observation, int, bool, dict]:
        if self._done:
            raise RuntimeError("episode finished")
        self.world = run_action(
            self.world, action, self.config.controller, self.graph,
            self.workspace,
        )
        self._steps += 1

        estimates = self.perception.observe(self.world, self._steps, self._rng)
        observed = {
            pid: (e.pose if e.observed else None)
            for pid, e in estimates.items()
        }
        reward = self.reward_tracker.update(observed)
        gt_reward = self.gt_tracker.update(
            {pid: self.world.parts[pid].pose for pid in self.world.parts}
        )

        prev_completed = self.phase_state.completed
        self.phase_state = update_phase(self.phase_state, self.world, self.graph)
        if self.phase_state.completed > prev_completed:
            self._skill_steps = 1  # the boundary action opens the next skill
        else:
            self._skill_steps += 1

        self._ee_track.append(self.world.ee.pose)
        success = self.reward_tracker.total >= self.graph.max_reward
        cause = None
        if success:
            self._done = True
        else:
            cause = check_termination(
                self._ee_track,
                self._skill_steps,
                self._steps,
                self.config.termination,
                self.config.controller.action_frequency,
            )
            if cause is not None:
                self._done = True
                self._cause = cause

        info = {
            "phase_completed": self.phase_state.completed,
            "assembled_pairs": sorted(self.world.assembled_pairs),
            "ground_truth_reward": gt_reward,
            "reward_total": self.reward_tracker.total,
            "success": success,
        }
        if self._done and cause is not None:
            info["termination_cause"] = cause
        return self._observation(), reward, self._done, info

    # -- observation assembly -------------------------------------------------

    def _observation(self) -> Observation:
        ee = self.world.ee
        part_poses = None
        if "part_poses" in self.config.observation_channels:
            part_poses = {
                pid: (e.pose, e.observed)
                for pid, e in self.perception.estimates.items()
            }
        image = None
        if "image" in self.config.observation_channels:
            from .imaging import preprocess_image

            raw = render_topdown(self.world, self.graph, self.workspace)
            image = preprocess_image(raw, "front")
        return Observation(
            ee_position=ee.pose.position,
            ee_orientation=ee.pose.orientation,
            ee_linear_velocity=ee.linear_velocity,
            ee_angular_velocity=ee.angular_velocity,
            gripper_width=ee.gripper_width,
            part_poses=part_poses,
            image=image,
        )


@dataclass(slots=True)
class EpisodeResult:
    seed: int
    success: bool
    reward_total: int
    phases_completed: int
    length: int
    cause: str | None


@dataclass(slots=True)
class EvalMetrics:
    episodes: list[EpisodeResult] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        if not self.episodes:
            return 0.0
        return sum(e.success for e in self.episodes) / len(self.episodes)

    @property
    def mean_phases(self) -> float:
        if not self.episodes:
            return 0.0
        return sum(e.phases_completed for e in self.episodes) / len(self.episodes)

    @property
    def min_phases(self) -> int:
        return min((e.phases_completed for e in self.episodes), default=0)

    @property
    def max_phases(self) -> int:
        return max((e.phases_completed for e in self.episodes), default=0)

    @property
    def mean_length(self) -> float:
        if not self.episodes:
            return 0.0
        return sum(e.length for e in self.episodes) / len(self.episodes)

    def summary(self) -> dict:
        return {
            "episodes": len(self.episodes),
            "success_rate": self.success_rate,
            "mean_phases": self.mean_phases,
            "min_phases": self.min_phases,
            "max_phases": self.max_phases,
            "mean_length": self.mean_length,
        }


def run_episode(env: Environment, policy, seed: int,
                max_steps: int | None = None) -> tuple[EpisodeResult, list]:
    """Roll one episode; a raising policy fails it with cause policy_error."""
    obs = env.reset(seed)
    if hasattr(policy, "bind"):
        policy.bind(env)
    steps = []
    cause = None
    limit = max_steps or env.config.termination.max_steps_total + 1
    try:
        while not env.done and len(steps) < limit:
            action = policy(obs)
            obs, reward, done, info = env.step(action)
            steps.append((action, reward, info))
        cause = env.termination_cause
    except Exception:
        cause = "policy_error"
    result = EpisodeResult(
        seed=seed,
        success=env.reward_tracker.total >= env.graph.max_reward,
        reward_total=env.reward_tracker.total,
        phases_completed=env.phase_state.completed,
        length=len(steps),
        cause=cause,
    )
    return result, steps


def evaluate_policy(
    policy_factory,
    furniture: str,
    level: str,
    n_episodes: int,
    seeds=None,
    config: RunConfig | None = None,
    record_dir=None,
) -> EvalMetrics:
    """Run a policy for n episodes and aggregate the benchmark metrics.

    policy_factory is either a policy (callable Observation -> Action) used
    for every episode, or a zero-argument callable marked with
    `.is_factory = True` producing a fresh policy per episode.  With
    record_dir set, every episode is persisted as an episode file.
    """
    if seeds is None:
        seeds = list(range(n_episodes))
    if len(seeds) < n_episodes:
        raise ValueError("need at least one seed per episode")
    base = config or RunConfig()
    cfg = replace(base, furniture=furniture, level=level)
    metrics = EvalMetrics()
    for seed in list(seeds)[:n_episodes]:
        env = Environment(cfg)
        policy = (
            policy_factory()
            if getattr(policy_factory, "is_factory", False)
            else policy_factory
        )
        if record_dir is not None:
            from pathlib import Path

            from .episodes import record_rollout, write_episode

            header, steps = record_rollout(env, policy, seed,
                                           operator="policy")
            out = Path(record_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_episode(
                header, steps, out / f"{furniture}_{level}_seed{seed}.jsonl"
            )
            result = EpisodeResult(
                seed=seed,
                success=header.success,
                reward_total=env.reward_tracker.total,
                phases_completed=env.phase_state.completed,
                length=len(steps),
                cause=env.termination_cause
                if header.error_note is None
                else "policy_error",
            )
        else:
            result, _ = run_episode(env, policy, seed)
        metrics.episodes.append(result)
    return metrics
