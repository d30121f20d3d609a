import { startUi } from "./client.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const scheme = location.protocol === "https:" ? "wss" : "ws";
startUi(canvas, `${scheme}://${location.host}/teleop`);
