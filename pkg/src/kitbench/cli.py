"""Operator command line: eval, collect, replay, stats, init-sample, serve-teleop.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  All subcommands
are deterministic given --seed; --format json emits machine-readable output
for eval and stats.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .catalog import BUILTIN_FURNITURE, CatalogError, load_furniture
from .config import RunConfig, load_run_config, save_run_config
from .env import Environment, EvalMetrics, run_episode
from .episodes import (
    EpisodeError,
    compute_stats,
    read_episode,
    record_rollout,
    replay_episode,
    write_episode,
)
from .experts import NullPolicy, RandomPolicy, make_expert
from .geometry import pose_to_list
from .sampler import sample_initial_poses

POLICIES = ("scripted", "null", "random")


class UsageError(Exception):
    pass


def _policy(name: str, furniture: str, seed: int = 0):
    if name == "scripted":
        return make_expert(furniture)
    if name == "null":
        return NullPolicy()
    if name == "random":
        return RandomPolicy(seed)
    raise UsageError(f"unknown policy {name!r}")


def _base_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_run_config(args.config)
    else:
        cfg = RunConfig()
    updates = {}
    if getattr(args, "furniture", None):
        updates["furniture"] = args.furniture
    if getattr(args, "level", None):
        updates["level"] = {"med": "medium"}.get(args.level, args.level)
    if getattr(args, "eval_mode", False):
        updates["eval_mode"] = True
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    if cfg.furniture not in BUILTIN_FURNITURE and not Path(cfg.furniture).is_file():
        raise UsageError(f"furniture not found: {cfg.furniture!r}")
    return cfg


def _eval_worker(payload):
    from .config import run_config_from_dict

    cfg_doc, seed, policy_name = payload
    cfg = run_config_from_dict(cfg_doc)
    env = Environment(cfg)
    policy = _policy(policy_name, cfg.furniture, seed)
    result, _ = run_episode(env, policy, seed)
    return dataclasses.asdict(result)


def cmd_eval(args) -> int:
    cfg = _base_config(args)
    seeds = list(range(args.seed, args.seed + args.episodes))
    metrics = EvalMetrics()
    if args.out:
        from .env import evaluate_policy

        metrics = evaluate_policy(
            _policy(args.policy, cfg.furniture, args.seed),
            cfg.furniture,
            cfg.level,
            args.episodes,
            seeds=seeds,
            config=cfg,
            record_dir=args.out,
        )
    elif args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        from .config import run_config_to_dict
        from .env import EpisodeResult

        payloads = [
            (run_config_to_dict(cfg), seed, args.policy) for seed in seeds
        ]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for doc in pool.map(_eval_worker, payloads):
                metrics.episodes.append(EpisodeResult(**doc))
    else:
        for seed in seeds:
            env = Environment(cfg)
            policy = _policy(args.policy, cfg.furniture, seed)
            result, _ = run_episode(env, policy, seed)
            metrics.episodes.append(result)
    summary = metrics.summary()
    if args.format == "json":
        print(json.dumps(summary))
    else:
        print(
            f"{cfg.furniture} [{cfg.level}] {args.policy}: "
            f"success_rate {summary['success_rate']:.2f}  phases "
            f"{summary['mean_phases']:.2f} "
            f"(min {summary['min_phases']}, max {summary['max_phases']})  "
            f"mean length {summary['mean_length']:.1f}"
        )
    return 0


def cmd_collect(args) -> int:
    cfg = _base_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for seed in range(args.seed, args.seed + args.episodes):
        env = Environment(cfg)
        policy = _policy(args.policy, cfg.furniture, seed)
        header, steps = record_rollout(
            env, policy, seed,
            operator="scripted" if args.policy == "scripted" else "policy",
        )
        path = out / f"{cfg.furniture}_{cfg.level}_seed{seed}.jsonl"
        write_episode(header, steps, path)
        written.append((path, header.success, len(steps)))
    for path, success, n in written:
        print(f"wrote {path} success={success} steps={n}")
    return 0


def cmd_replay(args) -> int:
    header, steps = read_episode(args.episode)
    cfg = _base_config(args)
    cfg = dataclasses.replace(
        cfg, furniture=header.furniture_id, level=header.randomness_level
    )
    env = Environment(cfg)
    report = replay_episode(env, header, steps)
    doc = {
        "steps_compared": report.steps_compared,
        "max_deviation": report.max_deviation,
        "first_divergent_tick": report.first_divergent_tick,
        "identical": report.identical,
    }
    if args.format == "json":
        print(json.dumps(doc))
    else:
        print(
            f"replayed {report.steps_compared} steps: max deviation "
            f"{report.max_deviation:g}"
            + (
                ""
                if report.identical
                else f", first divergence at tick {report.first_divergent_tick}"
            )
        )
    return 0


def cmd_stats(args) -> int:
    paths: list[Path] = []
    for target in args.data:
        p = Path(target)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.jsonl")))
        elif p.is_file():
            paths.append(p)
        else:
            raise UsageError(f"no such file or directory: {target}")
    stats = compute_stats(paths, args.frequency)
    if args.format == "json":
        doc = {
            f"{furniture}/{level}": row
            for (furniture, level), row in stats.items()
        }
        print(json.dumps(doc))
    else:
        print(f"{'furniture':14s} {'level':8s} {'demos':>6s} "
              f"{'avg len':>8s} {'total hrs':>10s}")
        for (furniture, level), row in stats.items():
            print(
                f"{furniture:14s} {level:8s} {row['count']:6d} "
                f"{row['avg_length']:8.1f} {row['total_hours']:10.3f}"
            )
    return 0


def cmd_init_sample(args) -> int:
    cfg = _base_config(args)
    graph = load_furniture(cfg.furniture)
    poses = sample_initial_poses(
        graph,
        dataclasses.replace(cfg.init, level=cfg.level),
        args.seed,
        eval_mode=cfg.eval_mode,
    )
    doc = {pid: pose_to_list(pose) for pid, pose in poses.items()}
    print(json.dumps(doc, indent=1))
    return 0


def cmd_serve_teleop(args) -> int:
    from .teleop import TeleopServer

    cfg = _base_config(args)
    cfg = dataclasses.replace(
        cfg, observation_channels=("proprio", "part_poses")
    )
    env = Environment(cfg)
    server = TeleopServer(env, out_dir=args.out, first_seed=args.seed)
    print(f"teleop bridge on ws://127.0.0.1:{args.port}/teleop")
    server.serve(args.port, ui_dir=args.ui_dir, hz=args.hz)
    return 0


def cmd_dump_config(args) -> int:
    cfg = _base_config(args)
    save_run_config(cfg, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kitbench",
        description="Desk-scale furniture-assembly benchmark tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, episodes=False):
        p.add_argument("--furniture", help="built-in id or catalog file")
        p.add_argument("--level", choices=["low", "med", "medium", "high"])
        p.add_argument("--eval-mode", action="store_true",
                       help="high level: cycle the three fixed setups")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="run-config JSON path")
        if episodes:
            p.add_argument("--episodes", type=int, default=10)

    p = sub.add_parser("eval", help="run a policy and print metrics")
    common(p, episodes=True)
    p.add_argument("--policy", choices=POLICIES, default="scripted")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="also record every episode into this dir")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("collect", help="record scripted demonstrations")
    common(p, episodes=True)
    p.add_argument("--policy", choices=POLICIES, default="scripted")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("replay", help="re-run a recorded episode")
    p.add_argument("episode", help="episode .jsonl path")
    p.add_argument("--config", help="run-config JSON path")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("stats", help="demonstration statistics")
    p.add_argument("data", nargs="+", help="episode files or directories")
    p.add_argument("--frequency", type=float, default=10.0,
                   help="control frequency used for total hours")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("init-sample", help="print sampled initial poses")
    common(p)
    p.set_defaults(func=cmd_init_sample)

    p = sub.add_parser("serve-teleop", help="run the teleoperation bridge")
    common(p)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--ui-dir", help="static UI directory to serve")
    p.add_argument("--out", default="demos", help="recording directory")
    p.add_argument("--hz", type=float, default=10.0)
    p.set_defaults(func=cmd_serve_teleop)

    p = sub.add_parser("dump-config", help="write the effective run config")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except (UsageError, CatalogError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (EpisodeError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
