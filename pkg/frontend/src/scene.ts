// Snapshot -> drawable scene: a pure description the canvas layer renders.
// Top-down orthographic view; the render reflects the latest snapshot only
// and never extrapolates poses.

import { Snapshot } from "./protocol.js";

export interface SceneRect {
    kind: "rect";
    x0: number;
    y0: number;
    x1: number;
    y1: number;
    color: string;
    label?: string;
}

export interface SceneCircle {
    kind: "circle";
    x: number;
    y: number;
    radius: number;
    color: string;
    label?: string;
    yaw?: number;
    attached?: boolean;
}

export interface SceneMarker {
    kind: "ee";
    x: number;
    y: number;
    aperture: number;
    holding: boolean;
}

export interface SceneHud {
    kind: "hud";
    lines: string[];
    recording: boolean;
    done: boolean;
    cause: string | null;
}

export type SceneNode = SceneRect | SceneCircle | SceneMarker | SceneHud;

export const STATUS_COLORS: Record<string, string> = {
    free: "#8a8a8a",
    grasped: "#e8842c",
    inserted: "#2cc3c3",
    assembled: "#4caf50",
};

export const TABLE_COLOR = "#3c3c3c";
export const WALL_COLOR = "#7a6450";

function yawOf(pose: number[]): number {
    const [, , , qw, qx, qy, qz] = pose;
    const a = 2 * Math.atan2(qz, qw);
    if (a > Math.PI) return a - 2 * Math.PI;
    if (a <= -Math.PI) return a + 2 * Math.PI;
    return a;
}

export function renderSnapshot(snap: Snapshot): SceneNode[] {
    const ws = snap.workspace;
    const nodes: SceneNode[] = [
        {
            kind: "rect",
            x0: ws.bounds[0],
            y0: ws.bounds[2],
            x1: ws.bounds[1],
            y1: ws.bounds[3],
            color: TABLE_COLOR,
        },
    ];
    for (const [x0, x1, y0, y1] of ws.walls) {
        nodes.push({ kind: "rect", x0, y0: y0, x1, y1, color: WALL_COLOR });
    }
    for (const [partId, part] of Object.entries(snap.parts)) {
        nodes.push({
            kind: "circle",
            x: part.pose[0],
            y: part.pose[1],
            radius: ws.footprints[partId] ?? 0.02,
            color: STATUS_COLORS[part.status] ?? STATUS_COLORS.free,
            label: partId,
            yaw: yawOf(part.pose),
            attached: snap.ee.held_part === partId,
        });
    }
    nodes.push({
        kind: "ee",
        x: snap.ee.pose[0],
        y: snap.ee.pose[1],
        aperture: snap.ee.gripper_width,
        holding: snap.ee.held_part !== null,
    });
    nodes.push({
        kind: "hud",
        lines: [
            `${snap.furniture}  seed ${snap.seed}  tick ${snap.tick}`,
            `phase ${snap.phase}/${snap.phase_total}`,
            `reward ${snap.reward_total}/${snap.max_reward}`,
        ],
        recording: snap.recording,
        done: snap.done,
        cause: snap.cause,
    });
    return nodes;
}
