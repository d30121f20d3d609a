"""Websocket bridge for human demonstration collection.

The simulation loop owns the cadence: every tick it consumes the most
recent pending command (last write wins, so a laggy client cannot queue
stale motion), converts it to an action, steps the environment, and
broadcasts a snapshot.  Network handling never blocks the loop; client
timing cannot change simulation results given the recorded command
sequence.

Wire protocol (line-delimited JSON over the /teleop websocket):
  server -> client  {"type": "snapshot", ...}
  client -> server  {"type": "command", "delta_position": [x, y, z],
                     "wrist_yaw_delta": r, "gripper": -1|0|1,
                     "control": "none"|"reset"|"start_record"|"stop_record"}
Malformed messages get {"type": "error", ...} and the connection stays up.
"""

from __future__ import annotations

import asyncio
import json
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .controller import Action
from .env import Environment
from .episodes import (
    EpisodeHeader,
    StepRecord,
    observation_to_dict,
    write_episode,
)
from .geometry import pose_to_list, rot_z

PROTOCOL_VERSION = 1

CONTROLS = ("none", "reset", "start_record", "stop_record")


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Command:
    delta_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    wrist_yaw_delta: float = 0.0
    gripper: int = 0  # -1 open, 0 keep, +1 close
    control: str = "none"

    def to_action(self) -> Action:
        return Action(
            self.delta_position,
            rot_z(self.wrist_yaw_delta),
            float(self.gripper),
        )


def decode_command(doc: dict) -> Command:
    """Validate a client message and build a Command."""
    if not isinstance(doc, dict) or doc.get("type") != "command":
        raise ProtocolError("expected a command message")
    pos = doc.get("delta_position", [0.0, 0.0, 0.0])
    if len(pos) != 3 or not all(
        isinstance(c, (int, float)) and math.isfinite(c) and abs(c) <= 1.0
        for c in pos
    ):
        raise ProtocolError("delta_position must be 3 finite numbers in [-1, 1]")
    yaw = doc.get("wrist_yaw_delta", 0.0)
    if not isinstance(yaw, (int, float)) or not math.isfinite(yaw) or abs(yaw) > math.pi:
        raise ProtocolError("wrist_yaw_delta must lie in [-pi, pi]")
    gripper = doc.get("gripper", 0)
    if gripper not in (-1, 0, 1):
        raise ProtocolError("gripper must be -1, 0, or +1")
    control = doc.get("control", "none")
    if control not in CONTROLS:
        raise ProtocolError(f"unknown control {control!r}")
    return Command(tuple(float(c) for c in pos), float(yaw), int(gripper),
                   control)


def encode_command(cmd: Command) -> dict:
    return {
        "type": "command",
        "delta_position": list(cmd.delta_position),
        "wrist_yaw_delta": cmd.wrist_yaw_delta,
        "gripper": cmd.gripper,
        "control": cmd.control,
    }


def encode_snapshot(env: Environment, recording: bool, seed: int) -> dict:
    world = env.world
    return {
        "type": "snapshot",
        "version": PROTOCOL_VERSION,
        "furniture": env.config.furniture,
        "seed": seed,
        "tick": world.tick,
        "ee": {
            "pose": pose_to_list(world.ee.pose),
            "gripper_width": world.ee.gripper_width,
            "held_part": world.ee.held_part,
        },
        "parts": {
            pid: {"pose": pose_to_list(ps.pose), "status": ps.status}
            for pid, ps in world.parts.items()
        },
        "phase": env.phase_state.completed,
        "phase_total": len(env.graph.phases),
        "reward_total": env.reward_tracker.total,
        "max_reward": env.graph.max_reward,
        "recording": recording,
        "done": env.done,
        "cause": env.termination_cause,
        "workspace": {
            "bounds": [
                env.workspace.x_min, env.workspace.x_max,
                env.workspace.y_min, env.workspace.y_max,
            ],
            "walls": [list(w) for w in env.workspace.walls],
            "footprints": {p.id: p.footprint for p in env.graph.parts},
        },
    }


class TeleopServer:
    """One environment, one simulation loop, any number of viewers."""

    def __init__(self, env: Environment, out_dir: str | Path | None = None,
                 first_seed: int = 0):
        self.env = env
        self.out_dir = Path(out_dir) if out_dir else None
        self._lock = threading.Lock()
        self._pending: Command | None = None
        self._seed = first_seed
        self._recording: list[StepRecord] | None = None
        self._record_seed = first_seed
        self._written: list[Path] = []
        self._clients: list[asyncio.Queue] = []
        self._loop: asyncio.AbstractEventLoop | None = None
        self._obs = env.reset(first_seed)
        self.app = self._build_app()

    # -- command intake (any thread) ------------------------------------------

    def submit_command(self, cmd: Command) -> None:
        with self._lock:
            self._pending = cmd

    def _take_command(self) -> Command | None:
        with self._lock:
            cmd, self._pending = self._pending, None
        return cmd

    # -- simulation loop -------------------------------------------------------

    def step_once(self) -> dict:
        """Consume the latest command, advance one step, return a snapshot.

        Reset-like controls consume their tick: the published snapshot shows
        the fresh episode (tick 0) and stepping resumes next tick.
        """
        cmd = self._take_command()
        if cmd is not None and cmd.control != "none":
            self._handle_control(cmd.control)
            if cmd.control in ("reset", "start_record"):
                snap = encode_snapshot(
                    self.env, self._recording is not None, self._seed
                )
                self._broadcast(snap)
                return snap
        if not self.env.done:
            action = cmd.to_action() if cmd is not None else Action()
            obs, reward, done, info = self.env.step(action)
            self._obs = obs
            if self._recording is not None:
                self._recording.append(
                    StepRecord(
                        tick=self.env.world.tick,
                        action=tuple(action.to_list()),
                        reward=reward,
                        phase=info["phase_completed"],
                        observation=observation_to_dict(obs),
                    )
                )
        snap = encode_snapshot(self.env, self._recording is not None,
                               self._seed)
        self._broadcast(snap)
        return snap

    def _handle_control(self, control: str) -> None:
        if control == "reset":
            self._seed += 1
            self._recording = None  # a partial recording cannot replay
            self._obs = self.env.reset(self._seed)
        elif control == "start_record":
            # recordings replay from the episode start, so begin a fresh one
            self._seed += 1
            self._record_seed = self._seed
            self._obs = self.env.reset(self._seed)
            self._recording = []
        elif control == "stop_record":
            if self._recording:
                header = EpisodeHeader(
                    furniture_id=self.env.config.furniture,
                    randomness_level=self.env.config.level,
                    seed=self._record_seed,
                    control_frequency_hz=self.env.config.controller.action_frequency,
                    success=self.env.reward_tracker.total
                    >= self.env.graph.max_reward,
                    operator="teleop",
                )
                path = self._episode_path()
                write_episode(header, self._recording, path)
                self._written.append(path)
            self._recording = None

    def _episode_path(self) -> Path:
        base = self.out_dir or Path(".")
        base.mkdir(parents=True, exist_ok=True)
        return base / (
            f"teleop_{self.env.config.furniture}_{self.env.config.level}"
            f"_seed{self._record_seed}.jsonl"
        )

    @property
    def written_episodes(self) -> list[Path]:
        return list(self._written)

    # -- broadcasting ------------------------------------------------------------

    def _broadcast(self, snap: dict) -> None:
        loop = self._loop
        if loop is None or not self._clients:
            return
        loop.call_soon_threadsafe(self._push_to_queues, snap)

    def _push_to_queues(self, snap: dict) -> None:
        for queue in list(self._clients):
            if queue.full():
                try:
                    queue.get_nowait()  # drop the stalest frame
                except asyncio.QueueEmpty:
                    pass
            queue.put_nowait(snap)

    # -- app ----------------------------------------------------------------------

    def _build_app(self) -> FastAPI:
        from contextlib import asynccontextmanager

        server = self

        @asynccontextmanager
        async def lifespan(app):
            server._loop = asyncio.get_running_loop()
            hz = getattr(app.state, "step_hz", 10.0)
            task = None
            if hz > 0:
                task = asyncio.create_task(server._run_loop(hz))
            yield
            if task is not None:
                task.cancel()

        app = FastAPI(lifespan=lifespan)
        app.state.step_hz = 10.0

        @app.websocket("/teleop")
        async def teleop(ws: WebSocket):
            await ws.accept()
            queue: asyncio.Queue = asyncio.Queue(maxsize=4)
            server._clients.append(queue)
            await ws.send_text(json.dumps(
                encode_snapshot(server.env, server._recording is not None,
                                server._seed)
            ))
            sender = asyncio.create_task(_send_loop(ws, queue))
            try:
                while True:
                    text = await ws.receive_text()
                    try:
                        server.submit_command(decode_command(json.loads(text)))
                    except (ProtocolError, json.JSONDecodeError) as e:
                        await ws.send_text(json.dumps(
                            {"type": "error", "message": str(e)}
                        ))
            except WebSocketDisconnect:
                pass
            finally:
                sender.cancel()
                if queue in server._clients:
                    server._clients.remove(queue)

        return app

    async def _run_loop(self, hz: float) -> None:
        period = 1.0 / hz
        while True:
            started = time.monotonic()
            await asyncio.to_thread(self.step_once)
            elapsed = time.monotonic() - started
            await asyncio.sleep(max(0.0, period - elapsed))

    def serve(self, port: int, ui_dir: str | Path | None = None,
              hz: float = 10.0) -> None:
        """Run the bridge (blocking) with uvicorn."""
        import uvicorn

        if ui_dir is not None:
            from fastapi.staticfiles import StaticFiles

            self.app.mount(
                "/", StaticFiles(directory=str(ui_dir), html=True), name="ui"
            )
        self.app.state.step_hz = hz
        uvicorn.run(self.app, host="127.0.0.1", port=port, log_level="warning")


async def _send_loop(ws: WebSocket, queue: asyncio.Queue) -> None:
    while True:
        snap = await queue.get()
        await ws.send_text(json.dumps(snap))
