// Wire types for the /teleop websocket: snapshots in, commands out.
// Mirrors the server's line-delimited JSON schema (protocol version 1).

export type ControlVerb = "none" | "reset" | "start_record" | "stop_record";

export interface Command {
    delta_position: [number, number, number];
    wrist_yaw_delta: number;
    gripper: -1 | 0 | 1;
    control: ControlVerb;
}

export interface PartSnapshot {
    pose: number[]; // x y z qw qx qy qz
    status: "free" | "grasped" | "inserted" | "assembled";
}

export interface WorkspaceInfo {
    bounds: [number, number, number, number]; // x0 x1 y0 y1
    walls: [number, number, number, number][];
    footprints: Record<string, number>;
}

export interface Snapshot {
    type: "snapshot";
    version: number;
    furniture: string;
    seed: number;
    tick: number;
    ee: { pose: number[]; gripper_width: number; held_part: string | null };
    parts: Record<string, PartSnapshot>;
    phase: number;
    phase_total: number;
    reward_total: number;
    max_reward: number;
    recording: boolean;
    done: boolean;
    cause: string | null;
    workspace: WorkspaceInfo;
}

export const ZERO_COMMAND: Command = {
    delta_position: [0, 0, 0],
    wrist_yaw_delta: 0,
    gripper: 0,
    control: "none",
};

export function encodeCommand(cmd: Command): string {
    return JSON.stringify({ type: "command", ...cmd });
}

function isFiniteNumber(v: unknown): v is number {
    return typeof v === "number" && Number.isFinite(v);
}

export function decodeCommand(text: string): Command {
    const doc = JSON.parse(text);
    if (doc?.type !== "command") throw new Error("expected a command message");
    const pos = doc.delta_position ?? [0, 0, 0];
    if (
        !Array.isArray(pos) ||
        pos.length !== 3 ||
        !pos.every((c) => isFiniteNumber(c) && Math.abs(c) <= 1)
    ) {
        throw new Error("delta_position must be 3 finite numbers in [-1, 1]");
    }
    const yaw = doc.wrist_yaw_delta ?? 0;
    if (!isFiniteNumber(yaw) || Math.abs(yaw) > Math.PI) {
        throw new Error("wrist_yaw_delta must lie in [-pi, pi]");
    }
    const gripper = doc.gripper ?? 0;
    if (![-1, 0, 1].includes(gripper)) {
        throw new Error("gripper must be -1, 0, or +1");
    }
    const control = doc.control ?? "none";
    if (!["none", "reset", "start_record", "stop_record"].includes(control)) {
        throw new Error(`unknown control ${control}`);
    }
    return {
        delta_position: [pos[0], pos[1], pos[2]],
        wrist_yaw_delta: yaw,
        gripper,
        control,
    };
}

export function decodeSnapshot(text: string): Snapshot | null {
    const doc = JSON.parse(text);
    if (doc?.type !== "snapshot") return null;
    return doc as Snapshot;
}

// The controller clips position deltas to 0.10 m and rotations to 30 deg;
// commands within these bounds are applied verbatim by the server.
export function withinControllerBounds(cmd: Command): boolean {
    const norm = Math.hypot(...cmd.delta_position);
    return norm <= 0.1 + 1e-12 && Math.abs(cmd.wrist_yaw_delta) <= Math.PI / 6 + 1e-12;
}
