"""Furniture catalog: assembly graphs, mating frames, marker layouts, phases.

Nine built-in furniture models ship as JSON documents under catalog_data/.
Each graph is immutable after load and safe to share across environments.

Conventions:
  - A mating pair joins a `base` part and an `attached` part through one
    frame on each; the pair is seated when the two frames coincide in the
    world, so the ground-truth relative pose (base -> attached) is
    base_frame * attached_frame^-1.
  - The +z axis of the base frame is the approach/screw axis.
  - Phase descriptors are declarative predicates over the world state,
    evaluated in order by the phase tracker.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .geometry import Pose, compose_poses, inverse_pose, pose_from_list

CATALOG_FORMAT_VERSION = 1

BUILTIN_FURNITURE = (
    "one_leg",
    "lamp",
    "square_table",
    "desk",
    "drawer",
    "cabinet",
    "round_table",
    "stool",
    "chair",
)

# parts / phases for every built-in model; validated on load
EXPECTED_COUNTS = {
    "one_leg": (2, 5),
    "lamp": (3, 7),
    "square_table": (5, 16),
    "desk": (5, 16),
    "drawer": (3, 8),
    "cabinet": (4, 11),
    "round_table": (3, 8),
    "stool": (4, 11),
    "chair": (6, 17),
}

MECHANICS = ("insert", "screw", "slide")

# full screwing travel: 540 degrees
SCREW_TOTAL_ANGLE = 3.0 * math.pi
# slide pairs require alignment held over this approach corridor (m)
SLIDE_CORRIDOR = 0.030

PHASE_KINDS = ("grasped", "placed", "oriented", "inserted", "assembled")


class CatalogError(ValueError):
    """Malformed or inconsistent catalog document."""


@dataclass(frozen=True, slots=True)
class MarkerSpec:
    marker_id: int
    pose: Pose  # marker frame in the part frame


@dataclass(frozen=True, slots=True)
class PartSpec:
    id: str
    footprint: float  # 2D bounding radius, m
    rest_z: float  # origin height when resting on the table, m
    graspable_width: float  # m; must fit inside the gripper aperture
    grasp_frames: tuple[Pose, ...]
    markers: tuple[MarkerSpec, ...]


@dataclass(frozen=True, slots=True)
class MatingPair:
    base: str
    attached: str
    mechanic: str  # insert | screw | slide
    base_frame: Pose
    attached_frame: Pose
    gt_relative: Pose = field(init=False)
    screw_total: float = field(init=False)
    corridor: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "gt_relative",
            compose_poses(self.base_frame, inverse_pose(self.attached_frame)),
        )
        object.__setattr__(
            self,
            "screw_total",
            SCREW_TOTAL_ANGLE if self.mechanic == "screw" else 0.0,
        )
        object.__setattr__(
            self, "corridor", SLIDE_CORRIDOR if self.mechanic == "slide" else 0.0
        )


@dataclass(frozen=True, slots=True)
class PhaseSpec:
    kind: str
    part: str | None = None
    pair: int | None = None
    xy: tuple[float, float] | None = None
    tol: float = 0.0
    yaw: float = 0.0

    def describe(self) -> str:
        if self.kind == "grasped":
            return f"grasp {self.part}"
        if self.kind == "placed":
            return f"place {self.part} at ({self.xy[0]:+.2f}, {self.xy[1]:+.2f})"
        if self.kind == "oriented":
            return f"orient {self.part} to {math.degrees(self.yaw):.0f} deg"
        if self.kind == "inserted":
            return f"insert pair {self.pair}"
        return f"assemble pair {self.pair}"


@dataclass(frozen=True, slots=True)
class AssemblyGraph:
    furniture_id: str
    parts: tuple[PartSpec, ...]
    pairs: tuple[MatingPair, ...]
    phases: tuple[PhaseSpec, ...]
    base_poses: dict[str, Pose]
    corner_target: tuple[float, float]
    high_eval_configs: tuple[dict[str, Pose], ...]

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    @property
    def max_reward(self) -> int:
        return self.n_parts - 1

    def part(self, part_id: str) -> PartSpec:
        for p in self.parts:
            if p.id == part_id:
                return p
        raise KeyError(f"no part {part_id!r} in {self.furniture_id}")

    def part_index(self, part_id: str) -> int:
        for i, p in enumerate(self.parts):
            if p.id == part_id:
                return i
        raise KeyError(f"no part {part_id!r} in {self.furniture_id}")

    def marker_owner(self, marker_id: int) -> tuple[PartSpec, MarkerSpec]:
        for p in self.parts:
            for m in p.markers:
                if m.marker_id == marker_id:
                    return p, m
        raise KeyError(f"no marker {marker_id} in {self.furniture_id}")

    def pairs_with(self, part_id: str) -> list[tuple[int, MatingPair]]:
        return [
            (i, pr)
            for i, pr in enumerate(self.pairs)
            if part_id in (pr.base, pr.attached)
        ]


def _req(doc: dict, key: str, ctx: str):
    if key not in doc:
        raise CatalogError(f"{ctx}: missing field {key!r}")
    return doc[key]


def _parse_pose(v, ctx: str) -> Pose:
    try:
        return pose_from_list(v)
    except (TypeError, ValueError) as e:
        raise CatalogError(f"{ctx}: bad pose: {e}") from e


def _parse_part(doc: dict) -> PartSpec:
    pid = _req(doc, "id", "part")
    ctx = f"part {pid!r}"
    footprint = float(_req(doc, "footprint", ctx))
    if footprint <= 0:
        raise CatalogError(f"{ctx}: footprint must be positive")
    grasp_frames = tuple(
        _parse_pose(g, f"{ctx} grasp frame") for g in _req(doc, "grasp_frames", ctx)
    )
    if not grasp_frames:
        raise CatalogError(f"{ctx}: needs at least one grasp frame")
    markers = tuple(
        MarkerSpec(int(m["id"]), _parse_pose(m["pose"], f"{ctx} marker"))
        for m in _req(doc, "markers", ctx)
    )
    return PartSpec(
        id=pid,
        footprint=footprint,
        rest_z=float(_req(doc, "rest_z", ctx)),
        graspable_width=float(_req(doc, "graspable_width", ctx)),
        grasp_frames=grasp_frames,
        markers=markers,
    )


def _parse_phase(doc: dict, n_pairs: int, part_ids: set[str]) -> PhaseSpec:
    kind = _req(doc, "kind", "phase")
    if kind not in PHASE_KINDS:
        raise CatalogError(f"unknown phase kind {kind!r}")
    if kind in ("grasped", "placed", "oriented"):
        part = _req(doc, "part", f"phase {kind}")
        if part not in part_ids:
            raise CatalogError(f"phase {kind}: unknown part {part!r}")
        if kind == "placed":
            xy = tuple(float(c) for c in _req(doc, "xy", "phase placed"))
            return PhaseSpec(kind, part=part, xy=xy, tol=float(doc.get("tol", 0.04)))
        if kind == "oriented":
            return PhaseSpec(
                kind,
                part=part,
                yaw=float(_req(doc, "yaw", "phase oriented")),
                tol=float(doc.get("tol", math.radians(15))),
            )
        return PhaseSpec(kind, part=part)
    pair = int(_req(doc, "pair", f"phase {kind}"))
    if not 0 <= pair < n_pairs:
        raise CatalogError(f"phase {kind}: pair index {pair} out of range")
    return PhaseSpec(kind, pair=pair)


def _validate_graph(g: AssemblyGraph) -> None:
    ids = [p.id for p in g.parts]
    if len(set(ids)) != len(ids):
        raise CatalogError(f"{g.furniture_id}: duplicate part ids")
    marker_ids = [m.marker_id for p in g.parts for m in p.markers]
    if len(set(marker_ids)) != len(marker_ids):
        raise CatalogError(f"{g.furniture_id}: marker ids must be unique")
    if len(g.pairs) != g.n_parts - 1:
        raise CatalogError(
            f"{g.furniture_id}: {len(g.pairs)} pairs for {g.n_parts} parts"
            " (need N-1)"
        )
    adjacency: dict[str, set[str]] = {i: set() for i in ids}
    for pr in g.pairs:
        if pr.base == pr.attached:
            raise CatalogError(f"{g.furniture_id}: pair joins a part to itself")
        if pr.base not in adjacency or pr.attached not in adjacency:
            raise CatalogError(f"{g.furniture_id}: pair references unknown part")
        if pr.mechanic not in MECHANICS:
            raise CatalogError(f"{g.furniture_id}: unknown mechanic {pr.mechanic!r}")
        adjacency[pr.base].add(pr.attached)
        adjacency[pr.attached].add(pr.base)
    seen, stack = set(), [ids[0]]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adjacency[node] - seen)
    if seen != set(ids):
        raise CatalogError(f"{g.furniture_id}: pair graph is not connected")
    for pid in ids:
        if pid not in g.base_poses:
            raise CatalogError(f"{g.furniture_id}: no base pose for {pid!r}")
    for cfg in g.high_eval_configs:
        if set(cfg) != set(ids):
            raise CatalogError(f"{g.furniture_id}: eval config part set mismatch")
    expected = EXPECTED_COUNTS.get(g.furniture_id)
    if expected is not None:
        n_parts, n_phases = expected
        if g.n_parts != n_parts:
            raise CatalogError(
                f"{g.furniture_id}: expected {n_parts} parts, got {g.n_parts}"
            )
        if len(g.phases) != n_phases:
            raise CatalogError(
                f"{g.furniture_id}: expected {n_phases} phases, got {len(g.phases)}"
            )


def _graph_from_doc(doc: dict) -> AssemblyGraph:
    version = doc.get("format_version")
    if version != CATALOG_FORMAT_VERSION:
        raise CatalogError(f"unsupported catalog format_version {version!r}")
    furniture_id = _req(doc, "furniture_id", "catalog")
    parts = tuple(_parse_part(p) for p in _req(doc, "parts", furniture_id))
    part_ids = {p.id for p in parts}
    pairs = tuple(
        MatingPair(
            base=_req(p, "base", "pair"),
            attached=_req(p, "attached", "pair"),
            mechanic=_req(p, "mechanic", "pair"),
            base_frame=_parse_pose(_req(p, "base_frame", "pair"), "pair base frame"),
            attached_frame=_parse_pose(
                _req(p, "attached_frame", "pair"), "pair attached frame"
            ),
        )
        for p in _req(doc, "pairs", furniture_id)
    )
    phases = tuple(
        _parse_phase(p, len(pairs), part_ids)
        for p in _req(doc, "phases", furniture_id)
    )
    base_poses = {
        k: _parse_pose(v, f"base pose {k}")
        for k, v in _req(doc, "base_poses", furniture_id).items()
    }
    corner = tuple(float(c) for c in _req(doc, "corner_target", furniture_id))
    eval_configs = tuple(
        {k: _parse_pose(v, f"eval config {k}") for k, v in cfg.items()}
        for cfg in _req(doc, "high_eval_configs", furniture_id)
    )
    graph = AssemblyGraph(
        furniture_id=furniture_id,
        parts=parts,
        pairs=pairs,
        phases=phases,
        base_poses=base_poses,
        corner_target=corner,
        high_eval_configs=eval_configs,
    )
    _validate_graph(graph)
    return graph


def load_furniture(furniture_id: str) -> AssemblyGraph:
    """Load a built-in furniture model or a catalog JSON by path.

    Raises CatalogError("furniture not found") for unknown ids, and a parse
    error carrying line information for malformed documents.
    """
    if furniture_id in BUILTIN_FURNITURE:
        ref = resources.files("kitbench").joinpath(
            f"catalog_data/{furniture_id}.json"
        )
        text = ref.read_text(encoding="utf-8")
        source = f"catalog_data/{furniture_id}.json"
    else:
        path = Path(furniture_id)
        if not path.is_file():
            raise CatalogError(f"furniture not found: {furniture_id!r}")
        text = path.read_text(encoding="utf-8")
        source = str(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CatalogError(
            f"{source}: parse error at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e
    return _graph_from_doc(doc)
