// Websocket client and canvas renderer.  The websocket callback only
// updates the view state; rendering and command emission run on fixed
// timers (10 Hz command tick matching the action rate).

import { KeyboardState, keyToCommand } from "./input.js";
import {
    Command,
    Snapshot,
    decodeSnapshot,
    encodeCommand,
    withinControllerBounds,
} from "./protocol.js";
import { SceneNode, renderSnapshot } from "./scene.js";

export interface ViewState {
    snapshot: Snapshot | null;
    connected: boolean;
    lastError: string | null;
}

export class TeleopClient {
    readonly view: ViewState = {
        snapshot: null,
        connected: false,
        lastError: null,
    };
    readonly keys = new KeyboardState();
    private socket: WebSocket | null = null;

    constructor(private readonly url: string) {}

    connect(): void {
        const socket = new WebSocket(this.url);
        this.socket = socket;
        socket.onopen = () => {
            this.view.connected = true;
        };
        socket.onmessage = (event) => {
            const doc = JSON.parse(event.data as string);
            if (doc.type === "error") {
                this.view.lastError = doc.message;
                return;
            }
            const snap = decodeSnapshot(event.data as string);
            if (snap) this.view.snapshot = snap;
        };
        socket.onclose = () => {
            this.view.connected = false;
            this.keys.clear();
            setTimeout(() => this.connect(), 1000);
        };
        socket.onerror = () => socket.close();
    }

    /** Build this tick's command from the held keys; null while offline. */
    tickCommand(): Command | null {
        if (!this.view.connected || this.socket?.readyState !== WebSocket.OPEN) {
            return null;
        }
        const command = keyToCommand(
            this.keys, this.view.snapshot?.recording ?? false
        );
        if (!withinControllerBounds(command)) return null; // never oversend
        this.socket.send(encodeCommand(command));
        return command;
    }
}

const CANVAS_MARGIN = 0.92;

export function drawScene(
    ctx: CanvasRenderingContext2D,
    nodes: SceneNode[],
    width: number,
    height: number,
    connected: boolean,
): void {
    ctx.fillStyle = "#1c1c1f";
    ctx.fillRect(0, 0, width, height);
    const table = nodes.find((n) => n.kind === "rect");
    if (!table || table.kind !== "rect") return;
    const spanX = table.x1 - table.x0;
    const spanY = table.y1 - table.y0;
    const scale = Math.min(
        (width * CANVAS_MARGIN) / spanX,
        (height * CANVAS_MARGIN) / spanY,
    );
    const cx = (table.x0 + table.x1) / 2;
    const cy = (table.y0 + table.y1) / 2;
    const toPx = (x: number, y: number): [number, number] => [
        width / 2 + (x - cx) * scale,
        height / 2 - (y - cy) * scale,
    ];

    for (const node of nodes) {
        if (node.kind === "rect") {
            const [x0, y1] = toPx(node.x0, node.y0);
            const [x1, y0] = toPx(node.x1, node.y1);
            ctx.fillStyle = node.color;
            ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
        } else if (node.kind === "circle") {
            const [x, y] = toPx(node.x, node.y);
            const r = node.radius * scale;
            ctx.fillStyle = node.color;
            ctx.beginPath();
            ctx.arc(x, y, r, 0, 2 * Math.PI);
            ctx.fill();
            if (node.yaw !== undefined) {
                ctx.strokeStyle = "#202020";
                ctx.beginPath();
                ctx.moveTo(x, y);
                ctx.lineTo(
                    x + r * Math.cos(node.yaw),
                    y - r * Math.sin(node.yaw),
                );
                ctx.stroke();
            }
            if (node.attached) {
                ctx.strokeStyle = "#ffd54a";
                ctx.beginPath();
                ctx.arc(x, y, r + 2, 0, 2 * Math.PI);
                ctx.stroke();
            }
            ctx.fillStyle = "#e8e8e8";
            ctx.font = "12px sans-serif";
            ctx.fillText(node.label ?? "", x - r, y - r - 4);
        } else if (node.kind === "ee") {
            const [x, y] = toPx(node.x, node.y);
            ctx.strokeStyle = node.holding ? "#ffd54a" : "#35c4ff";
            ctx.lineWidth = 2;
            ctx.beginPath();
            ctx.moveTo(x - 10, y);
            ctx.lineTo(x + 10, y);
            ctx.moveTo(x, y - 10);
            ctx.lineTo(x, y + 10);
            ctx.stroke();
            ctx.beginPath();
            ctx.arc(x, y, (node.aperture / 2) * scale, 0, 2 * Math.PI);
            ctx.stroke();
            ctx.lineWidth = 1;
        } else if (node.kind === "hud") {
            ctx.fillStyle = "#f0f0f0";
            ctx.font = "14px monospace";
            node.lines.forEach((line, i) =>
                ctx.fillText(line, 12, 20 + 18 * i),
            );
            if (node.recording) {
                ctx.fillStyle = "#ff4444";
                ctx.beginPath();
                ctx.arc(width - 24, 22, 7, 0, 2 * Math.PI);
                ctx.fill();
                ctx.fillText("REC", width - 64, 27);
            }
            if (node.done) {
                ctx.fillStyle = "#ffd54a";
                ctx.fillText(
                    node.cause ? `episode over: ${node.cause}` : "task complete",
                    12, 20 + 18 * node.lines.length,
                );
            }
        }
    }
    if (!connected) {
        ctx.fillStyle = "rgba(0, 0, 0, 0.6)";
        ctx.fillRect(0, 0, width, height);
        ctx.fillStyle = "#ff6666";
        ctx.font = "24px sans-serif";
        ctx.fillText("disconnected", width / 2 - 70, height / 2);
    }
}

export function startUi(canvas: HTMLCanvasElement, url: string): TeleopClient {
    const client = new TeleopClient(url);
    client.connect();
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");

    window.addEventListener("keydown", (e) => {
        if (client.view.connected) {
            client.keys.keyDown(e.code);
            e.preventDefault();
        }
    });
    window.addEventListener("keyup", (e) => client.keys.keyUp(e.code));

    setInterval(() => client.tickCommand(), 100); // one command per tick
    const repaint = () => {
        const snap = client.view.snapshot;
        if (snap) {
            drawScene(
                ctx, renderSnapshot(snap), canvas.width, canvas.height,
                client.view.connected,
            );
        }
        requestAnimationFrame(repaint);
    };
    requestAnimationFrame(repaint);
    return client;
}
