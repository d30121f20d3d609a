// Keyboard state -> one Command per client tick (10 Hz, matching the
// action rate).  Motion keys are level-triggered; gripper/reset/record are
// edge-triggered toggles.  Wrist-yaw keys never move the position.

import { Command, ZERO_COMMAND } from "./protocol.js";

export const PLANAR_STEP = 0.03; // m per tick
export const VERTICAL_STEP = 0.02; // m per tick
export const YAW_STEP = 0.15; // rad per tick

export class KeyboardState {
    held = new Set<string>();
    gripperClosed = false;
    private pendingControl: Command["control"] | "toggle_record" = "none";

    keyDown(code: string): void {
        if (this.held.has(code)) return; // ignore auto-repeat
        this.held.add(code);
        if (code === "Space") this.gripperClosed = !this.gripperClosed;
        if (code === "KeyR") this.pendingControl = "reset";
        if (code === "KeyT") this.pendingControl = "toggle_record";
    }

    keyUp(code: string): void {
        this.held.delete(code);
    }

    clear(): void {
        this.held.clear();
    }

    /** Consume the pending control verb, resolving the record toggle. */
    takeControl(recording: boolean): Command["control"] {
        const pending = this.pendingControl;
        this.pendingControl = "none";
        if (pending === "toggle_record") {
            return recording ? "stop_record" : "start_record";
        }
        return pending;
    }
}

const PLANAR: Record<string, [number, number]> = {
    KeyW: [0, 1],
    ArrowUp: [0, 1],
    KeyS: [0, -1],
    ArrowDown: [0, -1],
    KeyA: [-1, 0],
    ArrowLeft: [-1, 0],
    KeyD: [1, 0],
    ArrowRight: [1, 0],
};

export function keyToCommand(state: KeyboardState, recording: boolean): Command {
    let dx = 0;
    let dy = 0;
    let dz = 0;
    let yaw = 0;
    for (const code of state.held) {
        const planar = PLANAR[code];
        if (planar) {
            dx += planar[0];
            dy += planar[1];
        }
        if (code === "KeyQ") dz += 1;
        if (code === "KeyE") dz -= 1;
        if (code === "KeyZ") yaw -= 1;
        if (code === "KeyX") yaw += 1;
    }
    const planarNorm = Math.hypot(dx, dy);
    if (planarNorm > 1) {
        dx /= planarNorm;
        dy /= planarNorm;
    }
    const command: Command = {
        ...ZERO_COMMAND,
        delta_position: [dx * PLANAR_STEP, dy * PLANAR_STEP, dz * VERTICAL_STEP],
        wrist_yaw_delta: yaw * YAW_STEP,
        gripper: state.gripperClosed ? 1 : -1,
        control: state.takeControl(recording),
    };
    if (yaw !== 0) {
        // the keyboard rotates the wrist without moving the gripper
        command.delta_position = [0, 0, 0];
    }
    return command;
}
