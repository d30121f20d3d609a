import { describe, expect, it } from "vitest";

import { Snapshot } from "../src/protocol.js";
import {
    STATUS_COLORS,
    SceneCircle,
    SceneHud,
    renderSnapshot,
} from "../src/scene.js";

function snapshot(overrides: Partial<Snapshot> = {}): Snapshot {
    return {
        type: "snapshot",
        version: 1,
        furniture: "one_leg",
        seed: 0,
        tick: 99,
        ee: {
            pose: [0.22, -0.14, 0.2, 1, 0, 0, 0],
            gripper_width: 0.08,
            held_part: null,
        },
        parts: {
            tabletop: { pose: [0.1, 0.02, 0.01, 1, 0, 0, 0], status: "free" },
            leg: { pose: [0.28, -0.16, 0.0575, 1, 0, 0, 0], status: "free" },
        },
        phase: 3,
        phase_total: 5,
        reward_total: 0,
        max_reward: 1,
        recording: false,
        done: false,
        cause: null,
        workspace: {
            bounds: [-0.4, 0.4, -0.3, 0.3],
            walls: [
                [-0.4, -0.16, 0.24, 0.3],
                [-0.4, -0.34, 0.02, 0.3],
            ],
            footprints: { tabletop: 0.085, leg: 0.02 },
        },
        ...overrides,
    };
}

function circles(snap: Snapshot): SceneCircle[] {
    return renderSnapshot(snap).filter(
        (n): n is SceneCircle => n.kind === "circle",
    );
}

function hud(snap: Snapshot): SceneHud {
    const node = renderSnapshot(snap).find((n) => n.kind === "hud");
    if (!node || node.kind !== "hud") throw new Error("no hud");
    return node;
}

describe("renderSnapshot", () => {
    it("draws the table, both walls, parts, EE, and HUD", () => {
        const nodes = renderSnapshot(snapshot());
        const kinds = nodes.map((n) => n.kind);
        expect(kinds.filter((k) => k === "rect")).toHaveLength(3);
        expect(kinds.filter((k) => k === "circle")).toHaveLength(2);
        expect(kinds).toContain("ee");
        expect(kinds).toContain("hud");
    });

    it("shows phase progress in the HUD", () => {
        expect(hud(snapshot()).lines).toContain("phase 3/5");
    });

    it("colors parts by status and sizes them by footprint", () => {
        const snap = snapshot();
        snap.parts.leg.status = "assembled";
        const byId = Object.fromEntries(circles(snap).map((c) => [c.label, c]));
        expect(byId.leg.color).toBe(STATUS_COLORS.assembled);
        expect(byId.tabletop.color).toBe(STATUS_COLORS.free);
        expect(byId.tabletop.radius).toBeCloseTo(0.085, 10);
    });

    it("marks the held part as attached to the EE", () => {
        const snap = snapshot();
        snap.ee.held_part = "leg";
        snap.parts.leg.status = "grasped";
        const byId = Object.fromEntries(circles(snap).map((c) => [c.label, c]));
        expect(byId.leg.attached).toBe(true);
        expect(byId.tabletop.attached).toBe(false);
        const ee = renderSnapshot(snap).find((n) => n.kind === "ee");
        expect(ee && ee.kind === "ee" && ee.holding).toBe(true);
    });

    it("surfaces the recording flag and termination cause", () => {
        const rec = hud(snapshot({ recording: true }));
        expect(rec.recording).toBe(true);
        const over = hud(snapshot({ done: true, cause: "no_motion" }));
        expect(over.done).toBe(true);
        expect(over.cause).toBe("no_motion");
    });

    it("renders parts exactly where the snapshot places them", () => {
        const snap = snapshot();
        snap.parts.leg.pose = [0.11, -0.07, 0.0575, 1, 0, 0, 0];
        const byId = Object.fromEntries(circles(snap).map((c) => [c.label, c]));
        expect(byId.leg.x).toBeCloseTo(0.11, 12);
        expect(byId.leg.y).toBeCloseTo(-0.07, 12);
    });
});
