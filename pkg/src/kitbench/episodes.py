"""Demonstration episode files: recording, loading, replay, statistics.

An episode file is one JSON header line followed by newline-delimited JSON
step records.  All reals use Python's shortest round-trip decimal encoding,
so write -> read -> re-serialize is byte-identical and an in-process replay
of a recording diverges by exactly zero.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controller import Action
from .env import Environment, Observation
from .geometry import pose_from_list, pose_to_list

EPISODE_FORMAT_VERSION = 1

OPERATORS = ("scripted", "teleop", "policy")


class EpisodeError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class EpisodeHeader:
    furniture_id: str
    randomness_level: str
    seed: int
    control_frequency_hz: float
    success: bool
    operator: str = "scripted"
    error_note: str | None = None
    format_version: int = EPISODE_FORMAT_VERSION

    def __post_init__(self):
        if self.format_version != EPISODE_FORMAT_VERSION:
            raise EpisodeError(
                f"unsupported episode format_version {self.format_version!r}"
            )
        if self.control_frequency_hz <= 0:
            raise EpisodeError("control frequency must be positive")
        if self.operator not in OPERATORS:
            raise EpisodeError(f"unknown operator {self.operator!r}")


@dataclass(frozen=True, slots=True)
class StepRecord:
    tick: int
    action: tuple[float, ...]  # 8 numbers
    reward: int
    phase: int
    observation: dict

    def __post_init__(self):
        if len(self.action) != 8:
            raise EpisodeError("action must have 8 numbers")
        if self.reward < 0:
            raise EpisodeError("reward must be non-negative")


def observation_to_dict(obs: Observation) -> dict:
    doc = {
        "ee_position": list(obs.ee_position),
        "ee_orientation": list(obs.ee_orientation),
        "ee_linear_velocity": list(obs.ee_linear_velocity),
        "ee_angular_velocity": list(obs.ee_angular_velocity),
        "gripper_width": obs.gripper_width,
    }
    if obs.part_poses is not None:
        doc["part_poses"] = {
            pid: {"pose": pose_to_list(pose), "observed": observed}
            for pid, (pose, observed) in obs.part_poses.items()
        }
    if obs.image is not None:
        doc["image"] = {
            "shape": list(obs.image.shape),
            "data": base64.b64encode(obs.image.tobytes()).decode("ascii"),
        }
    return doc


def observation_from_dict(doc: dict) -> Observation:
    part_poses = None
    if "part_poses" in doc:
        part_poses = {
            pid: (pose_from_list(entry["pose"]), bool(entry["observed"]))
            for pid, entry in doc["part_poses"].items()
        }
    image = None
    if "image" in doc:
        raw = base64.b64decode(doc["image"]["data"])
        image = np.frombuffer(raw, dtype=np.uint8).reshape(
            doc["image"]["shape"]
        )
    return Observation(
        ee_position=tuple(doc["ee_position"]),
        ee_orientation=tuple(doc["ee_orientation"]),
        ee_linear_velocity=tuple(doc["ee_linear_velocity"]),
        ee_angular_velocity=tuple(doc["ee_angular_velocity"]),
        gripper_width=doc["gripper_width"],
        part_poses=part_poses,
        image=image,
    )


def _validate_steps(steps: list[StepRecord]) -> None:
    if not steps:
        raise EpisodeError("episode has no steps")
    prev_tick, prev_phase = -1, 0
    for i, s in enumerate(steps):
        if s.tick <= prev_tick:
            raise EpisodeError(f"step {i}: tick {s.tick} not increasing")
        if s.phase < prev_phase:
            raise EpisodeError(
                f"step {i}: phase {s.phase} decreased from {prev_phase}"
            )
        prev_tick, prev_phase = s.tick, s.phase


def _dump(doc: dict) -> str:
    return json.dumps(doc, separators=(",", ":"))


def write_episode(header: EpisodeHeader, steps: list[StepRecord],
                  path: str | Path) -> Path:
    """Write header + steps as one JSON line each; refuses invalid data."""
    _validate_steps(steps)
    path = Path(path)
    lines = [
        _dump(
            {
                "format_version": header.format_version,
                "furniture_id": header.furniture_id,
                "randomness_level": header.randomness_level,
                "seed": header.seed,
                "control_frequency_hz": header.control_frequency_hz,
                "success": header.success,
                "operator": header.operator,
                "error_note": header.error_note,
            }
        )
    ]
    for s in steps:
        lines.append(
            _dump(
                {
                    "tick": s.tick,
                    "action": list(s.action),
                    "reward": s.reward,
                    "phase": s.phase,
                    "observation": s.observation,
                }
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_episode(path: str | Path) -> tuple[EpisodeHeader, list[StepRecord]]:
    """Parse and validate an episode file.

    Malformed lines report their line number; a truncated or corrupt tail
    names the last valid record.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise EpisodeError(f"{path}: empty file")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise EpisodeError(f"{path}: line 1: {e.msg}") from e
    known = {
        "format_version", "furniture_id", "randomness_level", "seed",
        "control_frequency_hz", "success", "operator", "error_note",
    }
    unknown = set(head) - known
    if unknown:
        raise EpisodeError(f"{path}: unknown header keys {sorted(unknown)}")
    header = EpisodeHeader(
        furniture_id=head["furniture_id"],
        randomness_level=head["randomness_level"],
        seed=head["seed"],
        control_frequency_hz=head["control_frequency_hz"],
        success=head["success"],
        operator=head.get("operator", "scripted"),
        error_note=head.get("error_note"),
        format_version=head.get("format_version", -1),
    )
    steps: list[StepRecord] = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            step = StepRecord(
                tick=doc["tick"],
                action=tuple(doc["action"]),
                reward=doc["reward"],
                phase=doc["phase"],
                observation=doc["observation"],
            )
        except (json.JSONDecodeError, KeyError, TypeError, EpisodeError) as e:
            last = f"last valid record tick {steps[-1].tick}" if steps else (
                "no valid records"
            )
            raise EpisodeError(f"{path}: line {n}: bad record ({last})") from e
        steps.append(step)
    _validate_steps(steps)
    return header, steps


def reserialize(header: EpisodeHeader, steps: list[StepRecord],
                path: str | Path) -> Path:
    """write_episode alias used to check byte-stable round trips."""
    return write_episode(header, steps, path)


@dataclass(slots=True)
class ReplayReport:
    max_deviation: float
    first_divergent_tick: int | None
    steps_compared: int

    @property
    def identical(self) -> bool:
        return self.first_divergent_tick is None


def _observation_deviation(a: dict, b: dict) -> float:
    worst = 0.0
    for key in ("ee_position", "ee_orientation", "ee_linear_velocity",
                "ee_angular_velocity"):
        for x, y in zip(a[key], b[key]):
            worst = max(worst, abs(x - y))
    worst = max(worst, abs(a["gripper_width"] - b["gripper_width"]))
    if "part_poses" in a and "part_poses" in b:
        for pid, entry in a["part_poses"].items():
            other = b["part_poses"].get(pid)
            if other is None:
                return math.inf
            for x, y in zip(entry["pose"], other["pose"]):
                worst = max(worst, abs(x - y))
            if entry["observed"] != other["observed"]:
                return math.inf
    if ("image" in a) != ("image" in b):
        return math.inf
    if "image" in a and a["image"]["data"] != b["image"]["data"]:
        return math.inf
    return worst


def replay_episode(env: Environment, header: EpisodeHeader,
                   steps: list[StepRecord]) -> ReplayReport:
    """Re-run recorded actions from the recorded seed and compare outputs."""
    if env.config.furniture != header.furniture_id:
        raise EpisodeError(
            f"environment furniture {env.config.furniture!r} does not match "
            f"episode {header.furniture_id!r}"
        )
    if env.config.level != header.randomness_level:
        raise EpisodeError(
            f"environment level {env.config.level!r} does not match episode "
            f"{header.randomness_level!r}"
        )
    env.reset(header.seed)
    max_dev = 0.0
    first_divergent = None
    compared = 0
    for record in steps:
        if env.done:
            break
        obs, reward, done, info = env.step(Action.from_list(record.action))
        dev = _observation_deviation(
            record.observation, observation_to_dict(obs)
        )
        if reward != record.reward or info["phase_completed"] != record.phase:
            dev = math.inf
        max_dev = max(max_dev, dev)
        if dev > 0.0 and first_divergent is None:
            first_divergent = record.tick
        compared += 1
    return ReplayReport(max_dev, first_divergent, compared)


def record_rollout(env: Environment, policy, seed: int,
                   operator: str = "scripted",
                   max_steps: int | None = None) -> tuple[EpisodeHeader, list[StepRecord]]:
    """Roll one episode and capture it as header + step records."""
    obs = env.reset(seed)
    if hasattr(policy, "bind"):
        policy.bind(env)
    steps: list[StepRecord] = []
    note = None
    limit = max_steps or env.config.termination.max_steps_total + 1
    try:
        while not env.done and len(steps) < limit:
            action = policy(obs)
            obs, reward, done, info = env.step(action)
            steps.append(
                StepRecord(
                    tick=env.world.tick,
                    action=tuple(action.to_list()),
                    reward=reward,
                    phase=info["phase_completed"],
                    observation=observation_to_dict(obs),
                )
            )
    except Exception as e:  # noqa: BLE001 - recorded as a failed episode
        note = f"policy error: {e}"
    header = EpisodeHeader(
        furniture_id=env.config.furniture,
        randomness_level=env.config.level,
        seed=seed,
        control_frequency_hz=env.config.controller.action_frequency,
        success=env.reward_tracker.total >= env.graph.max_reward,
        operator=operator,
        error_note=note,
    )
    return header, steps


def compute_stats(
    episodes, control_frequency_hz: float
) -> dict[tuple[str, str], dict]:
    """Per (furniture, level) demonstration statistics.

    episodes: iterable of (header, steps) pairs or file paths.
    total_hours = sum(steps) / frequency / 3600.
    """
    groups: dict[tuple[str, str], list[int]] = {}
    for item in episodes:
        if isinstance(item, (str, Path)):
            header, steps = read_episode(item)
        else:
            header, steps = item
        key = (header.furniture_id, header.randomness_level)
        groups.setdefault(key, []).append(len(steps))
    out = {}
    for key in sorted(groups):
        lengths = groups[key]
        out[key] = {
            "count": len(lengths),
            "avg_length": sum(lengths) / len(lengths),
            "total_hours": sum(lengths) / control_frequency_hz / 3600.0,
        }
    return out
