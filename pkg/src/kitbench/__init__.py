"""Desk-scale furniture-assembly benchmark."""

from .catalog import AssemblyGraph, BUILTIN_FURNITURE, load_furniture
from .config import RunConfig, TerminationConfig, load_run_config, save_run_config
from .controller import Action, ControllerConfig, process_action, run_action
from .env import Environment, Observation, evaluate_policy, run_episode
from .episodes import (
    EpisodeHeader,
    StepRecord,
    compute_stats,
    read_episode,
    record_rollout,
    replay_episode,
    write_episode,
)
from .experts import NullPolicy, RandomPolicy, ScriptedExpert, make_expert
from .geometry import Pose, compose_poses, geodesic_angle, relative_pose
from .perception import FusionConfig, NoiseModel, PerceptionPipeline
from .rewards import PhaseState, RewardConfig, is_assembled, step_reward, update_phase
from .sampler import InitConfig, init_guide, sample_initial_poses, skill_start_state
from .world import WorldState, Workspace, reset_world, resolve_mechanics, step_world

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AssemblyGraph",
    "BUILTIN_FURNITURE",
    "ControllerConfig",
    "Environment",
    "EpisodeHeader",
    "FusionConfig",
    "InitConfig",
    "NoiseModel",
    "NullPolicy",
    "Observation",
    "PerceptionPipeline",
    "PhaseState",
    "Pose",
    "RandomPolicy",
    "RewardConfig",
    "RunConfig",
    "ScriptedExpert",
    "StepRecord",
    "TerminationConfig",
    "WorldState",
    "Workspace",
    "compose_poses",
    "compute_stats",
    "evaluate_policy",
    "geodesic_angle",
    "init_guide",
    "is_assembled",
    "load_furniture",
    "load_run_config",
    "make_expert",
    "process_action",
    "read_episode",
    "record_rollout",
    "relative_pose",
    "replay_episode",
    "reset_world",
    "resolve_mechanics",
    "run_action",
    "run_episode",
    "sample_initial_poses",
    "save_run_config",
    "skill_start_state",
    "step_reward",
    "step_world",
    "update_phase",
    "write_episode",
    "__version__",
]
