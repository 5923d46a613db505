// DOM wiring: connect form, video canvas, drive pad, toggles, mode
// selector, color picker, disarm form, snapshot gallery and recording.

import { AuxCommand, DriveCommand, decodeMessage, hello } from "./protocol.js";
import { encodePnm, encodeSrseq, toRgba } from "./capture.js";
import {
  ConsoleState,
  Gesture,
  connectionLost,
  driveEnabled,
  handleGesture,
  handleIncoming,
  initialState,
} from "./state.js";

let state: ConsoleState = initialState();
let socket: WebSocket | null = null;
let rxBuffer = new Uint8Array(0);

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

function send(bytes: Uint8Array): void {
  if (socket && socket.readyState === WebSocket.OPEN) socket.send(bytes);
}

function gesture(g: Gesture): void {
  const result = handleGesture(state, g);
  state = result.state;
  for (const bytes of result.outgoing) send(bytes);
  render();
}

function ingest(chunk: Uint8Array): void {
  const merged = new Uint8Array(rxBuffer.length + chunk.length);
  merged.set(rxBuffer, 0);
  merged.set(chunk, rxBuffer.length);
  rxBuffer = merged;
  for (;;) {
    let decoded;
    try {
      decoded = decodeMessage(rxBuffer);
    } catch (err) {
      console.error("protocol error", err);
      socket?.close();
      return;
    }
    if (decoded === null) break;
    rxBuffer = rxBuffer.slice(decoded.consumed);
    state = handleIncoming(state, decoded.msg);
  }
  render();
}

function connect(): void {
  const host = $<HTMLInputElement>("host").value.trim();
  const port = $<HTMLInputElement>("port").value.trim();
  const secret = $<HTMLInputElement>("secret").value;
  if (!host || !port) return;
  socket?.close();
  rxBuffer = new Uint8Array(0);
  state = { ...initialState(), connection: "connecting" };
  render();
  socket = new WebSocket(`ws://${host}:${port}/ws`);
  socket.binaryType = "arraybuffer";
  socket.onopen = () => send(hello(secret));
  socket.onmessage = (event: MessageEvent) => ingest(new Uint8Array(event.data as ArrayBuffer));
  socket.onerror = () => {
    state = connectionLost(state, "network");
    render();
  };
  socket.onclose = () => {
    if (state.connection === "ready" || state.connection === "connecting") {
      state = connectionLost(state, "");
    }
    render();
  };
}

function download(name: string, bytes: Uint8Array, type = "application/octet-stream"): void {
  const url = URL.createObjectURL(new Blob([bytes.buffer as ArrayBuffer], { type }));
  const a = document.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

function render(): void {
  $("status").textContent =
    state.connection + (state.errorReason ? ` (${state.errorReason})` : "");
  $("banner").style.display = state.alarmBanner ? "block" : "none";
  const driveOk = driveEnabled(state);
  document.querySelectorAll<HTMLButtonElement>("[data-drive]").forEach((b) => {
    b.disabled = !driveOk;
  });
  document
    .querySelectorAll<HTMLButtonElement>("[data-aux], #snapshot, #set-color, [data-mode]")
    .forEach((b) => {
      b.disabled = state.connection !== "ready";
    });
  document.querySelectorAll<HTMLButtonElement>("[data-mode]").forEach((b) => {
    b.classList.toggle("active", Number(b.dataset.mode) === state.activeMode);
  });
  $("frame-stats").textContent =
    `frames ${state.framesReceived}, errors ${state.frameErrors}` +
    (state.recording ? `, recording ${state.recorded.length}` : "");
  if (state.lastFrame) {
    const canvas = $<HTMLCanvasElement>("video");
    if (canvas.width !== state.lastFrame.width) canvas.width = state.lastFrame.width;
    if (canvas.height !== state.lastFrame.height) canvas.height = state.lastFrame.height;
    const ctx = canvas.getContext("2d")!;
    ctx.putImageData(
      new ImageData(toRgba(state.lastFrame), state.lastFrame.width, state.lastFrame.height),
      0,
      0,
    );
  }
  const gallery = $("gallery");
  while (gallery.children.length < state.snapshots.length) {
    const index = gallery.children.length;
    const frame = state.snapshots[index];
    const link = document.createElement("a");
    link.textContent = `snapshot ${index + 1} (${frame.width}x${frame.height})`;
    link.href = "#";
    link.onclick = (e) => {
      e.preventDefault();
      download(`snapshot-${index + 1}.${frame.format === 0 ? "pgm" : "ppm"}`, encodePnm(frame));
    };
    const item = document.createElement("li");
    item.appendChild(link);
    gallery.appendChild(item);
  }
}

function wire(): void {
  $("connect").onclick = connect;
  document.querySelectorAll<HTMLButtonElement>("[data-drive]").forEach((b) => {
    b.onclick = () =>
      gesture({ kind: "drive", command: Number(b.dataset.drive) as 1 | 2 | 3 | 4 | 5 | 6 | 7 });
  });
  $<HTMLInputElement>("lights").onchange = (e) =>
    gesture({
      kind: "aux",
      command: (e.target as HTMLInputElement).checked ? AuxCommand.LightsOn : AuxCommand.LightsOff,
    });
  $<HTMLInputElement>("night-vision").onchange = (e) =>
    gesture({
      kind: "aux",
      command: (e.target as HTMLInputElement).checked
        ? AuxCommand.NightVisionOn
        : AuxCommand.NightVisionOff,
    });
  $("camera-start").onclick = () => gesture({ kind: "aux", command: AuxCommand.CameraStart });
  $("camera-stop").onclick = () => gesture({ kind: "aux", command: AuxCommand.CameraStop });
  $("snapshot").onclick = () => gesture({ kind: "snapshot" });
  document.querySelectorAll<HTMLButtonElement>("[data-mode]").forEach((b) => {
    b.onclick = () => gesture({ kind: "mode", mode: Number(b.dataset.mode) as 0 | 1 | 2 | 3 });
  });
  $("set-color").onclick = () => {
    const hex = $<HTMLInputElement>("color").value; // "#rrggbb"
    const tol = Number($<HTMLInputElement>("tolerance").value) || 60;
    gesture({
      kind: "color",
      r: parseInt(hex.slice(1, 3), 16),
      g: parseInt(hex.slice(3, 5), 16),
      b: parseInt(hex.slice(5, 7), 16),
      tol: Math.max(0, Math.min(255, tol)),
    });
  };
  $("disarm-form").onsubmit = (e) => {
    e.preventDefault();
    gesture({ kind: "disarm", password: $<HTMLInputElement>("password").value });
    $<HTMLInputElement>("password").value = "";
  };
  $("record-start").onclick = () => gesture({ kind: "record-start" });
  $("record-stop").onclick = () => {
    const frames = state.recorded;
    gesture({ kind: "record-stop" });
    if (frames.length > 0) download("capture.srseq", encodeSrseq(frames));
  };
  window.addEventListener("keydown", (e) => {
    const map: Record<string, number> = {
      ArrowUp: DriveCommand.Forward,
      ArrowDown: DriveCommand.Backward,
      ArrowLeft: DriveCommand.Left,
      ArrowRight: DriveCommand.Right,
      " ": DriveCommand.Stop,
    };
    const cmd = map[e.key];
    if (cmd !== undefined && !(e.target instanceof HTMLInputElement)) {
      e.preventDefault();
      gesture({ kind: "drive", command: cmd as 1 | 2 | 3 | 4 | 5 | 6 | 7 });
    }
  });
  render();
}

wire();
