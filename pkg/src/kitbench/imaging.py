"""Camera-image preprocessing and the optional top-down renderer.

Front images are downsampled so the smaller edge is 256 (1280x720 becomes
455x256) and then center-cropped to 224x224; wrist images are resized to
224x224 directly for the wider view.  Both use area-averaging interpolation.
The renderer rasterizes an orthographic top-down view of the workspace so
the preprocessing path can be exercised end to end; photorealism is not a
goal.
"""

from __future__ import annotations

import cv2
import numpy as np

from .catalog import AssemblyGraph
from .world import DEFAULT_WORKSPACE, WorldState, Workspace

CROP = 224
FRONT_SMALL_EDGE = 256

STATUS_COLORS = {
    "free": (90, 90, 90),
    "grasped": (40, 120, 220),
    "inserted": (40, 180, 180),
    "assembled": (60, 170, 60),
}


def preprocess_image(image: np.ndarray, role: str) -> np.ndarray:
    """Resize a raw camera frame to the 224x224 policy input.

    role "front": smaller edge to 256 preserving aspect, then center crop.
    role "wrist": direct resize (identity when already 224x224).
    """
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected HxWx3 image, got {image.shape}")
    h, w = image.shape[:2]
    if h < CROP or w < CROP:
        raise ValueError(f"image {w}x{h} smaller than {CROP}x{CROP}")
    if role == "wrist":
        if (h, w) == (CROP, CROP):
            return image
        return cv2.resize(image, (CROP, CROP), interpolation=cv2.INTER_AREA)
    if role != "front":
        raise ValueError(f"unknown camera role {role!r}")
    if h <= w:
        nh = FRONT_SMALL_EDGE
        nw = round(w * FRONT_SMALL_EDGE / h)
    else:
        nw = FRONT_SMALL_EDGE
        nh = round(h * FRONT_SMALL_EDGE / w)
    small = cv2.resize(image, (nw, nh), interpolation=cv2.INTER_AREA)
    y0 = (nh - CROP) // 2
    x0 = (nw - CROP) // 2
    return small[y0 : y0 + CROP, x0 : x0 + CROP]


def render_topdown(
    state: WorldState,
    graph: AssemblyGraph,
    workspace: Workspace = DEFAULT_WORKSPACE,
    width: int = 1280,
    height: int = 720,
) -> np.ndarray:
    """Orthographic top-down view: table, walls, part footprints, EE marker."""
    img = np.full((height, width, 3), 30, np.uint8)
    span_x = workspace.x_max - workspace.x_min
    span_y = workspace.y_max - workspace.y_min
    scale = min(width * 0.9 / span_x, height * 0.9 / span_y)

    def to_px(x: float, y: float) -> tuple[int, int]:
        u = (x - workspace.x_min - span_x / 2) * scale + width / 2
        v = height / 2 - (y - workspace.y_min - span_y / 2) * scale
        return int(round(u)), int(round(v))

    cv2.rectangle(
        img, to_px(workspace.x_min, workspace.y_max),
        to_px(workspace.x_max, workspace.y_min), (60, 60, 60), -1
    )
    for x0, x1, y0, y1 in workspace.walls:
        cv2.rectangle(img, to_px(x0, y1), to_px(x1, y0), (120, 100, 80), -1)
    for part in graph.parts:
        ps = state.parts[part.id]
        x, y, _ = ps.pose.position
        center = to_px(x, y)
        radius = max(2, int(round(part.footprint * scale)))
        cv2.circle(img, center, radius, STATUS_COLORS[ps.status], -1)
        cv2.putText(
            img, part.id, (center[0] - radius, center[1]),
            cv2.FONT_HERSHEY_SIMPLEX, 0.45, (230, 230, 230), 1, cv2.LINE_AA
        )
    ex, ey, _ = state.ee.pose.position
    e = to_px(ex, ey)
    cv2.drawMarker(img, e, (0, 220, 255), cv2.MARKER_CROSS, 18, 2)
    aperture = max(2, int(round(state.ee.gripper_width * scale / 2)))
    cv2.circle(img, e, aperture, (0, 220, 255), 1)
    return img
