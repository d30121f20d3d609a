"""Simulated fiducial detection and multi-camera pose fusion.

Two virtual cameras (front, rear) decode marker poses from the true world
state, corrupted by Gaussian translation noise, axis-angle rotation noise,
dropout, and occasional 180-degree axis flips.  Estimation then mirrors the
real pipeline: per-camera outlier filtering against the last five accepted
detections, per-part canonicalization over multiple markers, and cross-
camera averaging.  Marker offsets in the catalog define the canonical part
frame (center of mass, orientation of the lowest-id marker), so every
detection maps to the same part pose.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .catalog import AssemblyGraph, PartSpec
from .geometry import (
    Pose,
    average_quaternions,
    compose_poses,
    geodesic_angle,
    inverse_pose,
    quat_from_rotvec,
    quat_multiply,
    quat_normalize,
)

CAMERAS = ("front", "rear")


@dataclass(frozen=True, slots=True)
class NoiseModel:
    translation_sigma: float = 0.005  # m, per axis
    rotation_sigma: float = 0.03  # rad, axis-angle per axis
    dropout_probability: float = 0.1
    flip_probability: float = 0.02  # 180-deg flip about a random marker axis

    def __post_init__(self):
        for p in (self.dropout_probability, self.flip_probability):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.translation_sigma < 0 or self.rotation_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")

    @staticmethod
    def noiseless() -> "NoiseModel":
        return NoiseModel(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class FusionConfig:
    history_size: int = 5  # accepted detections kept per (camera, marker)
    outlier_translation: float = 0.030  # m vs the history median
    outlier_rotation: float = math.radians(20.0)
    stale_limit: int = 10  # frames before a part is flagged unobserved
    reject_reset: int = 5  # consecutive rejections that restart a history


@dataclass(frozen=True, slots=True)
class MarkerDetection:
    camera_id: str
    marker_id: int
    pose: Pose  # decoded marker pose in the world frame
    tick: int


@dataclass(slots=True)
class Estimate:
    pose: Pose
    observed: bool  # fresh within the staleness cap
    age: int  # frames since the last successful fusion


def simulate_detections(
    world,
    graph: AssemblyGraph,
    camera_id: str,
    noise: NoiseModel,
    rng: np.random.Generator,
    tick: int = 0,
) -> list[MarkerDetection]:
    """Noisy per-camera detections of every marker in the furniture.

    Draw order per marker is fixed (dropout, translation, rotation, flip)
    so results are a pure function of the rng stream and the world state.
    """
    out = []
    for part in graph.parts:
        pose = world.parts[part.id].pose
        for marker in part.markers:
            if rng.random() < noise.dropout_probability:
                continue
            mw = compose_poses(pose, marker.pose)
            tn = rng.normal(0.0, noise.translation_sigma, 3)
            rn = rng.normal(0.0, noise.rotation_sigma, 3)
            q = quat_multiply(quat_from_rotvec(rn), mw.orientation)
            if rng.random() < noise.flip_probability:
                axis = int(rng.integers(0, 3))
                flip = [0.0, 0.0, 0.0, 0.0]
                flip[1 + axis] = 1.0
                q = quat_multiply(q, tuple(flip))  # about the marker's axis
            out.append(
                MarkerDetection(
                    camera_id=camera_id,
                    marker_id=marker.marker_id,
                    pose=Pose(
                        (
                            mw.position[0] + tn[0],
                            mw.position[1] + tn[1],
                            mw.position[2] + tn[2],
                        ),
                        quat_normalize(q),
                    ),
                    tick=tick,
                )
            )
    return out


class DetectionHistory:
    """Ring buffers of the last accepted detections per (camera, marker)."""

    def __init__(self, cfg: FusionConfig | None = None):
        self.cfg = cfg or FusionConfig()
        self._buffers: dict[tuple[str, int], deque[Pose]] = {}
        self._rejects: dict[tuple[str, int], int] = {}

    def buffer(self, camera_id: str, marker_id: int) -> deque:
        key = (camera_id, marker_id)
        if key not in self._buffers:
            self._buffers[key] = deque(maxlen=self.cfg.history_size)
        return self._buffers[key]

    def record_accept(self, det: MarkerDetection) -> None:
        self.buffer(det.camera_id, det.marker_id).append(det.pose)
        self._rejects[(det.camera_id, det.marker_id)] = 0

    def record_reject(self, det: MarkerDetection) -> None:
        key = (det.camera_id, det.marker_id)
        n = self._rejects.get(key, 0) + 1
        if n >= self.cfg.reject_reset:
            # persistent disagreement means the marker truly moved:
            # restart the buffer instead of rejecting forever
            self.buffer(*key).clear()
            self._rejects[key] = 0
        else:
            self._rejects[key] = n


def filter_outlier(
    candidate: MarkerDetection,
    history: DetectionHistory,
    cfg: FusionConfig | None = None,
) -> bool:
    """Accept unless the candidate disagrees with the history median.

    Warm-up rule: fewer than history_size accepted entries accept anything.
    The rotation reference is the medoid (minimal total geodesic distance),
    which tolerates a previously accepted bad sample.
    """
    cfg = cfg or history.cfg
    entries = list(history.buffer(candidate.camera_id, candidate.marker_id))
    if len(entries) < cfg.history_size:
        return True
    med = [
        float(np.median([e.position[i] for e in entries])) for i in range(3)
    ]
    dx = candidate.pose.position[0] - med[0]
    dy = candidate.pose.position[1] - med[1]
    dz = candidate.pose.position[2] - med[2]
    if math.sqrt(dx * dx + dy * dy + dz * dz) > cfg.outlier_translation:
        return False
    best_q, best_total = None, math.inf
    for e in entries:
        total = sum(
            geodesic_angle(e.orientation, o.orientation) for o in entries
        )
        if total < best_total:
            best_total, best_q = total, e.orientation
    return geodesic_angle(candidate.pose.orientation, best_q) <= cfg.outlier_rotation


def part_pose_from_markers(
    detections: list[MarkerDetection], part: PartSpec
) -> Pose | None:
    """Canonical part pose from one camera's detections of one part.

    Each detection is mapped through its catalog offset, positions are
    averaged arithmetically and orientations with the sign-aligned mean.
    """
    offsets = {m.marker_id: m.pose for m in part.markers}
    candidates = []
    for det in detections:
        off = offsets.get(det.marker_id)
        if off is None:
            continue
        candidates.append(compose_poses(det.pose, inverse_pose(off)))
    if not candidates:
        return None
    n = len(candidates)
    px = sum(c.position[0] for c in candidates) / n
    py = sum(c.position[1] for c in candidates) / n
    pz = sum(c.position[2] for c in candidates) / n
    q = average_quaternions([c.orientation for c in candidates])
    return Pose((px, py, pz), q)


def fuse_estimates(front: Pose | None, rear: Pose | None) -> Pose | None:
    """Cross-camera average; one camera alone passes through."""
    if front is None:
        return rear
    if rear is None:
        return front
    return Pose(
        (
            0.5 * (front.position[0] + rear.position[0]),
            0.5 * (front.position[1] + rear.position[1]),
            0.5 * (front.position[2] + rear.position[2]),
        ),
        average_quaternions([front.orientation, rear.orientation]),
    )


class PerceptionPipeline:
    """Per-environment detection, filtering, and fusion state."""

    def __init__(self, graph: AssemblyGraph, noise: NoiseModel,
                 fusion: FusionConfig | None = None):
        self.graph = graph
        self.noise = noise
        self.fusion = fusion or FusionConfig()
        self.history = DetectionHistory(self.fusion)
        self._estimates: dict[str, Estimate] = {}

    def reset(self, initial_poses: dict[str, Pose]) -> None:
        """Seed last-known poses; the init procedure knows where parts start."""
        self.history = DetectionHistory(self.fusion)
        self._estimates = {
            pid: Estimate(pose=pose, observed=True, age=0)
            for pid, pose in initial_poses.items()
        }

    def observe(self, world, tick: int,
                rng: np.random.Generator) -> dict[str, Estimate]:
        """Run one perception frame and update per-part estimates."""
        per_camera: dict[str, list[MarkerDetection]] = {}
        for camera in CAMERAS:
            dets = simulate_detections(
                world, self.graph, camera, self.noise, rng, tick
            )
            # all detections of a frame meet the same history snapshot
            decisions = [
                (det, filter_outlier(det, self.history)) for det in dets
            ]
            accepted = []
            for det, ok in decisions:
                if ok:
                    accepted.append(det)
                else:
                    self.history.record_reject(det)
            for det in accepted:
                self.history.record_accept(det)
            per_camera[camera] = accepted

        for part in self.graph.parts:
            views = []
            for camera in CAMERAS:
                views.append(
                    part_pose_from_markers(per_camera[camera], part)
                )
            fused = fuse_estimates(*views)
            prev = self._estimates.get(part.id)
            if fused is not None:
                self._estimates[part.id] = Estimate(fused, True, 0)
            elif prev is not None:
                age = prev.age + 1
                self._estimates[part.id] = Estimate(
                    prev.pose, age <= self.fusion.stale_limit, age
                )
        return dict(self._estimates)

    @property
    def estimates(self) -> dict[str, Estimate]:
        return dict(self._estimates)
