"""Generate and validate the built-in furniture catalog JSON documents.

Run from the repository root:  python tools/build_catalog.py

Layouts are authored here as Python data, checked against the workspace
rules (table bounds, obstacle clearance, pairwise spacing that stays
overlap-free under the +-5 cm medium initialization noise, seat
reachability with the base part at the corner target), and written to
src/kitbench/catalog_data/.  The three high-randomness evaluation
configurations are rejection-sampled with fixed seeds so the files are
reproducible.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from kitbench.world import DEFAULT_WORKSPACE  # noqa: E402

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "kitbench" / "catalog_data"

IDQ = [1.0, 0.0, 0.0, 0.0]
QY90 = [math.cos(math.pi / 4), 0.0, math.sin(math.pi / 4), 0.0]  # z -> +x

# medium init noise is uniform +-5 cm per axis; worst-case mutual approach
MED_DIAG = 2 * 0.05 * math.sqrt(2)
PAIR_MARGIN = MED_DIAG + 0.005
BOUND_MARGIN = 0.05 + 0.005
OBST_MARGIN = 0.05 * math.sqrt(2) + 0.005


def pose(x, y, z, q=IDQ):
    return [x, y, z, *q]


def part(pid, footprint, rest_z, graspable_width, grasp_frames, markers):
    return {
        "id": pid,
        "footprint": footprint,
        "rest_z": rest_z,
        "graspable_width": graspable_width,
        "grasp_frames": grasp_frames,
        "markers": [{"id": mid, "pose": mp} for mid, mp in markers],
    }


def grasped(p):
    return {"kind": "grasped", "part": p}


def placed(p, xy, tol=0.045):
    return {"kind": "placed", "part": p, "xy": list(xy), "tol": tol}


def oriented(p, yaw, tol=math.radians(15)):
    return {"kind": "oriented", "part": p, "yaw": yaw, "tol": tol}


def inserted(k):
    return {"kind": "inserted", "pair": k}


def assembled(k):
    return {"kind": "assembled", "pair": k}


def leg_cycle(leg_id, pair_idx):
    return [grasped(leg_id), inserted(pair_idx), assembled(pair_idx)]


def board_markers(first_id, half, z):
    """Four top-face markers near the corners; odd ones rotated 90 deg."""
    qz90 = [math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)]
    spots = [(half, half), (-half, half), (-half, -half), (half, -half)]
    return [
        (first_id + i, pose(sx, sy, z, qz90 if i % 2 else IDQ))
        for i, (sx, sy) in enumerate(spots)
    ]


def shaft_markers(first_id, offset, z):
    qz90 = [math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)]
    return [
        (first_id, pose(offset, 0.0, z)),
        (first_id + 1, pose(-offset, 0.0, z, qz90)),
    ]


def four_leg_table(furniture_id, top_id, top_fp, top_rest, top_grasp_w,
                   hole_half, hole_z, leg_fp, leg_rest, leg_grasp_w,
                   leg_grasp_z, top_xy, leg_xys, corner):
    """square_table and desk share this structure (5 parts, 16 phases)."""
    holes = [
        (hole_half, hole_half),
        (-hole_half, hole_half),
        (-hole_half, -hole_half),
        (hole_half, -hole_half),
    ]
    parts = [
        part(top_id, top_fp, top_rest, top_grasp_w,
             [pose(0, 0, top_rest + 0.001)],
             board_markers(0, top_fp * 0.62, hole_z + 0.001)),
    ]
    pairs = []
    for k in range(4):
        leg_id = f"leg{k + 1}"
        parts.append(
            part(leg_id, leg_fp, leg_rest, leg_grasp_w,
                 [pose(0, 0, leg_grasp_z)],
                 shaft_markers(4 + 2 * k, leg_fp * 0.9, leg_grasp_z * 0.6))
        )
        pairs.append({
            "base": top_id,
            "attached": leg_id,
            "mechanic": "screw",
            "base_frame": pose(holes[k][0], holes[k][1], hole_z),
            "attached_frame": pose(0, 0, -leg_rest),
        })
    phases = [grasped(top_id), placed(top_id, corner)]
    phases += leg_cycle("leg1", 0)
    phases += leg_cycle("leg2", 1)
    phases.append(oriented(top_id, math.pi / 2))
    phases += leg_cycle("leg3", 2)
    phases.append(oriented(top_id, math.pi))
    phases += leg_cycle("leg4", 3)
    base_poses = {top_id: pose(top_xy[0], top_xy[1], top_rest)}
    for k, (lx, ly) in enumerate(leg_xys):
        base_poses[f"leg{k + 1}"] = pose(lx, ly, leg_rest)
    return {
        "format_version": 1,
        "furniture_id": furniture_id,
        "parts": parts,
        "pairs": pairs,
        "phases": phases,
        "base_poses": base_poses,
        "corner_target": list(corner),
    }


def one_leg():
    parts = [
        part("tabletop", 0.085, 0.010, 0.020, [pose(0, 0, 0.011)],
             board_markers(0, 0.055, 0.021)),
        part("leg", 0.020, 0.0575, 0.035, [pose(0, 0, 0.030)],
             shaft_markers(4, 0.018, 0.020)),
    ]
    pairs = [{
        "base": "tabletop",
        "attached": "leg",
        "mechanic": "screw",
        "base_frame": pose(0.055, 0.055, 0.020),
        "attached_frame": pose(0, 0, -0.0575),
    }]
    phases = [
        grasped("tabletop"),
        placed("tabletop", (-0.24, 0.14)),
        grasped("leg"),
        inserted(0),
        assembled(0),
    ]
    return {
        "format_version": 1,
        "furniture_id": "one_leg",
        "parts": parts,
        "pairs": pairs,
        "phases": phases,
        "base_poses": {
            "tabletop": pose(0.10, 0.02, 0.010),
            "leg": pose(0.28, -0.16, 0.0575),
        },
        "corner_target": [-0.24, 0.14],
    }


def lamp():
    parts = [
        part("base", 0.065, 0.020, 0.020, [pose(0, 0, 0.022)],
             shaft_markers(0, 0.050, 0.030)),
        part("bulb", 0.030, 0.035, 0.055, [pose(0, 0, 0.015)],
             shaft_markers(2, 0.025, 0.010)),
        part("hood", 0.070, 0.025, 0.030, [pose(0, 0, 0.020)],
             shaft_markers(4, 0.055, 0.020)),
    ]
    pairs = [
        {
            "base": "base",
            "attached": "bulb",
            "mechanic": "screw",
            "base_frame": pose(0, 0, 0.040),
            "attached_frame": pose(0, 0, -0.035),
        },
        {
            "base": "bulb",
            "attached": "hood",
            "mechanic": "insert",
            "base_frame": pose(0, 0, 0.035),
            "attached_frame": pose(0, 0, -0.025),
        },
    ]
    phases = [
        grasped("base"),
        placed("base", (-0.24, 0.14)),
        grasped("bulb"),
        inserted(0),
        assembled(0),
        grasped("hood"),
        assembled(1),
    ]
    return {
        "format_version": 1,
        "furniture_id": "lamp",
        "parts": parts,
        "pairs": pairs,
        "phases": phases,
        "base_poses": {
            "base": pose(0.08, 0.04, 0.020),
            "bulb": pose(0.24, -0.18, 0.035),
            "hood": pose(-0.14, -0.17, 0.025),
        },
        "corner_target": [-0.24, 0.14],
    }


def drawer():
    parts = [
        part("body", 0.090, 0.045, 0.025, [pose(0, 0, 0.046)],
             board_markers(0, 0.060, 0.091)),
        part("box1", 0.045, 0.015, 0.030, [pose(0, 0, 0.012)],
             shaft_markers(4, 0.030, 0.016)),
        part("box2", 0.045, 0.015, 0.030, [pose(0, 0, 0.012)],
             shaft_markers(6, 0.030, 0.016)),
    ]
    pairs = [
        {
            "base": "body",
            "attached": "box1",
            "mechanic": "slide",
            "base_frame": pose(0, 0, -0.015, QY90),
            "attached_frame": pose(0, 0, 0, QY90),
        },
        {
            "base": "body",
            "attached": "box2",
            "mechanic": "slide",
            "base_frame": pose(0, 0, 0.025, QY90),
            "attached_frame": pose(0, 0, 0, QY90),
        },
    ]
    phases = [
        grasped("body"),
        placed("body", (-0.22, 0.12)),
        grasped("box1"),
        inserted(0),
        assembled(0),
        grasped("box2"),
        inserted(1),
        assembled(1),
    ]
    return {
        "format_version": 1,
        "furniture_id": "drawer",
        "parts": parts,
        "pairs": pairs,
        "phases": phases,
        "base_poses": {
            "body": pose(0.10, 0.06, 0.045),
            "box1": pose(0.30, -0.14, 0.015),
            "box2": pose(-0.04, -0.20, 0.015),
        },
        "corner_target": [-0.22, 0.12],
    }


def cabinet():
    parts = [
        part("body", 0.085, 0.050, 0.025, [pose(0, 0, 0.051)],
             board_markers(0, 0.055, 0.101)),
        part("door1", 0.040, 0.030, 0.018, [pose(0, 0, 0.025)],
             shaft_markers(4, 0.032, 0.020)),
        part("door2", 0.040, 0.030, 0.018, [pose(0, 0, 0.025)],
             shaft_markers(6, 0.032, 0.020)),
        part("top", 0.075, 0.008, 0.016, [pose(0, 0, 0.009)],
             shaft_markers(8, 0.058, 0.009)),
    ]
    pairs = [
        {
            "base": "body",
            "attached": "door1",
            "mechanic": "slide",
            "base_frame": pose(-0.060, 0, 0.050),
            "attached_frame": pose(0, 0, -0.030),
        },
        {
            "base": "body",
            "attached": "door2",
            "mechanic": "slide",
            "base_frame": pose(0.060, 0, 0.050),
            "attached_frame": pose(0, 0, -0.030),
        },
        {
            "base": "body",
            "attached": "top",
            "mechanic": "screw",
            "base_frame": pose(0, 0, 0.100),
            "attached_frame": pose(0, 0, -0.008),
        },
    ]
    phases = [
        grasped("body"),
        placed("body", (-0.22, 0.12)),
        grasped("door1"),
        inserted(0),
        assembled(0),
        grasped("door2"),
        inserted(1),
        assembled(1),
        grasped("top"),
        inserted(2),
        assembled(2),
    ]
    return {
        "format_version": 1,
        "furniture_id": "cabinet",
        "parts": parts,
        "pairs": pairs,
        "phases": phases,
        "base_poses": {
            "body": pose(0.06, 0.07, 0.050),
            "door1": pose(0.30, -0.14, 0.030),
            "door2": pose(0.02, -0.20, 0.030),
            "top": pose(-0.23, -0.11, 0.008),
        },
        "corner_target": [-0.22, 0.12],
    }


def square_table():
    return four_leg_table(
        "square_table", "tabletop", 0.085, 0.010, 0.020, 0.055, 0.020,
        0.020, 0.0575, 0.035, 0.030, (0.06, 0.03),
        [(0.31, -0.02), (0.24, -0.20), (0.02, -0.22), (-0.20, -0.14)],
        (-0.24, 0.14),
    )


def desk():
    return four_leg_table(
        "desk", "top", 0.095, 0.012, 0.024, 0.060, 0.024,
        0.025, 0.085, 0.040, 0.045, (0.05, 0.05),
        [(0.31, -0.03), (0.23, -0.21), (0.00, -0.215), (-0.21, -0.13)],
        (-0.23, 0.13),
    )


def round_table():
    parts = [
        part("top", 0.090, 0.010, 0.020, [pose(0, 0, 0.011)],
             board_markers(0, 0.058, 0.021)),
        part("pole", 0.022, 0.080, 0.036, [pose(0, 0, 0.040)],
             shaft_markers(4, 0.020, 0.030)),
        part("cross_base", 0.070, 0.015, 0.030, [pose(0, 0, 0.016)],
             shaft_markers(6, 0.055, 0.016)),
    ]
    pairs = [
        {
            "base": "top",
            "attached": "pole",
            "mechanic": "screw",
            "base_frame": pose(0, 0, 0.020),
            "attached_frame": pose(0, 0, -0.080),
        },
        {
            "base": "pole",
            "attached": "cross_base",
            "mechanic": "screw",
            "base_frame": pose(0, 0, 0.080),
            "attached_frame": pose(0, 0, -0.015),
        },
    ]
    phases = [
        grasped("top"),
        placed("top", (-0.23, 0.13)),
        grasped("pole"),
        inserted(0),
        assembled(0),
        grasped("cross_base"),
        inserted(1),
        assembled(1),
    ]
    return {
        "format_version": 1,
        "furniture_id": "round_table",
        "parts": parts,
        "pairs": pairs,
        "phases": phases,
        "base_poses": {
            "top": pose(0.08, 0.05, 0.010),
            "pole": pose(0.29, -0.15, 0.080),
            "cross_base": pose(-0.14, -0.17, 0.015),
        },
        "corner_target": [-0.23, 0.13],
    }


def stool():
    hole_r = 0.050
    angles = [math.pi / 2, math.pi / 2 + 2 * math.pi / 3,
              math.pi / 2 + 4 * math.pi / 3]
    parts = [
        part("seat", 0.080, 0.012, 0.024, [pose(0, 0, 0.013)],
             board_markers(0, 0.052, 0.025)),
    ]
    pairs = []
    for k, ang in enumerate(angles):
        leg_id = f"leg{k + 1}"
        parts.append(
            part(leg_id, 0.020, 0.070, 0.034, [pose(0, 0, 0.035)],
                 shaft_markers(4 + 2 * k, 0.018, 0.022))
        )
        pairs.append({
            "base": "seat",
            "attached": leg_id,
            "mechanic": "screw",
            "base_frame": pose(hole_r * math.cos(ang), hole_r * math.sin(ang),
                               0.024),
            "attached_frame": pose(0, 0, -0.070),
        })
    phases = [grasped("seat"), placed("seat", (-0.24, 0.14))]
    for k in range(3):
        phases += leg_cycle(f"leg{k + 1}", k)
    return {
        "format_version": 1,
        "furniture_id": "stool",
        "parts": parts,
        "pairs": pairs,
        "phases": phases,
        "base_poses": {
            "seat": pose(0.06, 0.05, 0.012),
            "leg1": pose(0.30, -0.10, 0.070),
            "leg2": pose(0.10, -0.22, 0.070),
            "leg3": pose(-0.14, -0.18, 0.070),
        },
        "corner_target": [-0.24, 0.14],
    }


def chair():
    parts = [
        part("seat", 0.075, 0.012, 0.024, [pose(0, 0, 0.013)],
             board_markers(0, 0.048, 0.025)),
        part("back", 0.050, 0.010, 0.020, [pose(0, 0, 0.011)],
             shaft_markers(4, 0.040, 0.011)),
        part("leg1", 0.018, 0.060, 0.030, [pose(0, 0, 0.030)],
             shaft_markers(6, 0.016, 0.020)),
        part("leg2", 0.018, 0.060, 0.030, [pose(0, 0, 0.030)],
             shaft_markers(8, 0.016, 0.020)),
        part("nut1", 0.015, 0.008, 0.025, [pose(0, 0, 0.009)],
             shaft_markers(10, 0.012, 0.008)),
        part("nut2", 0.015, 0.008, 0.025, [pose(0, 0, 0.009)],
             shaft_markers(12, 0.012, 0.008)),
    ]
    pairs = [
        {
            "base": "seat",
            "attached": "back",
            "mechanic": "screw",
            "base_frame": pose(0, 0.050, 0.024),
            "attached_frame": pose(0, 0, -0.010),
        },
        {
            "base": "seat",
            "attached": "leg1",
            "mechanic": "screw",
            "base_frame": pose(0.040, -0.030, 0.024),
            "attached_frame": pose(0, 0, -0.060),
        },
        {
            "base": "seat",
            "attached": "leg2",
            "mechanic": "screw",
            "base_frame": pose(-0.040, -0.030, 0.024),
            "attached_frame": pose(0, 0, -0.060),
        },
        {
            "base": "leg1",
            "attached": "nut1",
            "mechanic": "screw",
            "base_frame": pose(0, 0, 0.060),
            "attached_frame": pose(0, 0, -0.008),
        },
        {
            "base": "leg2",
            "attached": "nut2",
            "mechanic": "screw",
            "base_frame": pose(0, 0, 0.060),
            "attached_frame": pose(0, 0, -0.008),
        },
    ]
    phases = [grasped("seat"), placed("seat", (-0.24, 0.12))]
    phases += [grasped("back"), inserted(0), assembled(0)]
    phases += leg_cycle("leg1", 1)
    phases += leg_cycle("leg2", 2)
    phases += [grasped("nut1"), inserted(3), assembled(3)]
    phases += [grasped("nut2"), inserted(4), assembled(4)]
    return {
        "format_version": 1,
        "furniture_id": "chair",
        "parts": parts,
        "pairs": pairs,
        "phases": phases,
        "base_poses": {
            "seat": pose(0.00, 0.08, 0.012),
            "back": pose(0.29, 0.07, 0.010),
            "leg1": pose(0.30, -0.17, 0.060),
            "leg2": pose(0.05, -0.20, 0.060),
            "nut1": pose(-0.14, -0.21, 0.008),
            "nut2": pose(-0.26, -0.05, 0.008),
        },
        "corner_target": [-0.24, 0.12],
    }


# ---------------------------------------------------------------------------
# validation and high-randomness eval configurations


def obstacle_distance(ws, x, y):
    best = math.inf
    for x0, x1, y0, y1 in ws.walls:
        cx = min(max(x, x0), x1)
        cy = min(max(y, y0), y1)
        best = min(best, math.hypot(x - cx, y - cy))
    return best


def validate_layout(doc):
    ws = DEFAULT_WORKSPACE
    errors = []
    fps = {p["id"]: p["footprint"] for p in doc["parts"]}
    xy = {pid: (v[0], v[1]) for pid, v in doc["base_poses"].items()}
    ids = list(fps)
    for pid in ids:
        x, y = xy[pid]
        r = fps[pid]
        if not (ws.x_min + r + BOUND_MARGIN <= x <= ws.x_max - r - BOUND_MARGIN):
            errors.append(f"{pid}: x={x} too close to table edge")
        if not (ws.y_min + r + BOUND_MARGIN <= y <= ws.y_max - r - BOUND_MARGIN):
            errors.append(f"{pid}: y={y} too close to table edge")
        if obstacle_distance(ws, x, y) < r + OBST_MARGIN:
            errors.append(f"{pid}: too close to the obstacle")
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            d = math.hypot(xy[a][0] - xy[b][0], xy[a][1] - xy[b][1])
            need = fps[a] + fps[b] + PAIR_MARGIN
            if d < need:
                errors.append(
                    f"{a}-{b}: spacing {d:.4f} < {need:.4f} (medium-unsafe)"
                )
    # corner target must fit the base part (first phase's placed part)
    placed_phases = [p for p in doc["phases"] if p["kind"] == "placed"]
    corner = doc["corner_target"]
    for ph in placed_phases:
        r = fps[ph["part"]]
        cx, cy = ph["xy"]
        if not ws.circle_in_bounds(cx, cy, r) or ws.circle_hits_wall(cx, cy, r + 0.002):
            errors.append(f"corner target {ph['xy']} does not fit {ph['part']}")
    # every seat must be reachable with the base part at the corner target
    for k, pr in enumerate(doc["pairs"]):
        bx, by = (corner if pr["base"] == placed_phases[0]["part"]
                  else xy[pr["base"]])
        fx, fy = pr["base_frame"][0], pr["base_frame"][1]
        sx, sy = bx + fx, by + fy
        r = fps[pr["attached"]]
        if not ws.circle_in_bounds(sx, sy, r):
            errors.append(f"pair {k}: seat ({sx:.3f},{sy:.3f}) out of bounds")
        if ws.circle_hits_wall(sx, sy, r):
            errors.append(f"pair {k}: seat ({sx:.3f},{sy:.3f}) inside a wall")
    return errors


def sample_eval_configs(doc, n=3):
    ws = DEFAULT_WORKSPACE
    rng = np.random.default_rng(abs(hash(doc["furniture_id"])) % 2**32)
    rng = np.random.default_rng(
        int.from_bytes(doc["furniture_id"].encode(), "little") % 2**32
    )
    fps = [(p["id"], p["footprint"]) for p in doc["parts"]]
    rest = {p["id"]: p["rest_z"] for p in doc["parts"]}
    configs = []
    while len(configs) < n:
        placed_parts = []
        ok = True
        for pid, r in fps:
            for _ in range(10_000):
                x = rng.uniform(ws.x_min + r + 0.002, ws.x_max - r - 0.002)
                y = rng.uniform(ws.y_min + r + 0.002, ws.y_max - r - 0.002)
                if ws.circle_hits_wall(x, y, r + 0.002):
                    continue
                if any(
                    math.hypot(x - ox, y - oy) < r + orr + 0.01
                    for ox, oy, orr in placed_parts
                ):
                    continue
                yaw = rng.uniform(-math.pi, math.pi)
                placed_parts.append((x, y, r))
                break
            else:
                ok = False
                break
        if not ok:
            continue
        cfg = {}
        for (pid, r), (x, y, _) in zip(fps, placed_parts):
            yaw = rng.uniform(-math.pi, math.pi)
            cfg[pid] = pose(x, y, rest[pid],
                            [math.cos(yaw / 2), 0.0, 0.0, math.sin(yaw / 2)])
        configs.append(cfg)
    return configs


def main():
    builders = [one_leg, lamp, square_table, desk, drawer, cabinet,
                round_table, stool, chair]
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    failures = 0
    for build in builders:
        doc = build()
        errors = validate_layout(doc)
        if errors:
            failures += 1
            print(f"FAIL {doc['furniture_id']}:")
            for e in errors:
                print(f"  - {e}")
            continue
        doc["high_eval_configs"] = sample_eval_configs(doc)
        out = OUT_DIR / f"{doc['furniture_id']}.json"
        out.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        print(f"ok   {doc['furniture_id']} -> {out.name}")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
