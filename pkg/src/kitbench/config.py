"""Run configuration: one JSON document aggregating every component config.

Unknown keys are rejected on load so typos fail fast; dump->load reproduces
behavior exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import BUILTIN_FURNITURE
from .controller import ControllerConfig
from .perception import FusionConfig, NoiseModel
from .rewards import RewardConfig
from .sampler import InitConfig

RUN_CONFIG_VERSION = 1

OBSERVATION_CHANNELS = ("proprio", "part_poses", "image")


@dataclass(frozen=True, slots=True)
class TerminationConfig:
    no_motion_seconds: float = 5.0
    motion_epsilon: float = 1e-3  # m over the no-motion window
    motion_rotation_epsilon: float = 0.02  # rad; wrist turns count as motion
    max_steps_per_skill: int = 350
    max_steps_total: int = 3000
    # EE workspace box: (x0, x1, y0, y1, z0, z1)
    unsafe_bounds: tuple[float, ...] = (-0.45, 0.45, -0.35, 0.35, -0.005, 0.50)

    def __post_init__(self):
        if (
            self.no_motion_seconds <= 0
            or self.motion_epsilon <= 0
            or self.max_steps_per_skill <= 0
            or self.max_steps_total <= 0
        ):
            raise ValueError("termination limits must be positive")


@dataclass(frozen=True, slots=True)
class RunConfig:
    format_version: int = RUN_CONFIG_VERSION
    furniture: str = "one_leg"
    level: str = "low"
    eval_mode: bool = False  # high level: cycle the three fixed setups
    seeds: tuple[int, ...] = (0,)
    observation_channels: tuple[str, ...] = ("proprio",)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    termination: TerminationConfig = field(default_factory=TerminationConfig)
    init: InitConfig = field(default_factory=InitConfig)

    def __post_init__(self):
        if self.format_version != RUN_CONFIG_VERSION:
            raise ValueError(
                f"unsupported run-config version {self.format_version!r}"
            )
        for ch in self.observation_channels:
            if ch not in OBSERVATION_CHANNELS:
                raise ValueError(f"unknown observation channel {ch!r}")
        if "proprio" not in self.observation_channels:
            raise ValueError("the proprio channel is mandatory")


_SECTIONS = {
    "controller": ControllerConfig,
    "noise": NoiseModel,
    "fusion": FusionConfig,
    "reward": RewardConfig,
    "termination": TerminationConfig,
    "init": InitConfig,
}


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _build(cls, data: dict, ctx: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"{ctx}: unknown keys {sorted(unknown)}")
    return cls(**{k: _tupled(v) for k, v in data.items()})


def run_config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ValueError("run config must be a JSON object")
    top = {k: v for k, v in doc.items() if k not in _SECTIONS}
    kwargs = {k: _tupled(v) for k, v in top.items()}
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(kwargs) - names
    if unknown:
        raise ValueError(f"run config: unknown keys {sorted(unknown)}")
    for section, cls in _SECTIONS.items():
        if section in doc:
            kwargs[section] = _build(cls, doc[section], section)
    cfg = RunConfig(**kwargs)
    if cfg.furniture not in BUILTIN_FURNITURE and not Path(cfg.furniture).exists():
        raise ValueError(f"furniture not found: {cfg.furniture!r}")
    return cfg


def run_config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for f in dataclasses.fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            out[f.name] = dataclasses.asdict(value)
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def load_run_config(path: str | Path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(
            f"{path}: parse error at line {e.lineno}: {e.msg}"
        ) from e
    return run_config_from_dict(doc)


def save_run_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(run_config_to_dict(cfg), indent=1) + "\n", encoding="utf-8"
    )
