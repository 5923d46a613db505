// Console state and the gesture/ingress reducers. Pure module: the DOM
// layer feeds gestures in and ships the returned bytes out, so every
// invariant (one gesture -> at most one message, banner rules, control
// gating) is testable without a browser.

import {
  AuxCommandValue,
  DriveCommandValue,
  FramePayload,
  Message,
  Mode,
  ModeValue,
  MsgType,
  aux,
  decodeText,
  disarm,
  drive,
  modeSet,
  parseFramePayload,
  setColorRef,
  snapshotReq,
} from "./protocol.js";

export type Connection = "disconnected" | "connecting" | "ready" | "errored";

export interface ConsoleState {
  connection: Connection;
  errorReason: string | null;
  activeMode: ModeValue;
  alarmBanner: boolean;
  lastFrame: FramePayload | null;
  overlayNote: string | null;
  snapshots: FramePayload[];
  frameErrors: number;
  framesReceived: number;
  recording: boolean;
  recorded: FramePayload[];
  lastDisarmOk: boolean | null;
}

export function initialState(): ConsoleState {
  return {
    connection: "disconnected",
    errorReason: null,
    activeMode: Mode.PcControl,
    alarmBanner: false,
    lastFrame: null,
    overlayNote: null,
    snapshots: [],
    frameErrors: 0,
    framesReceived: 0,
    recording: false,
    recorded: [],
    lastDisarmOk: null,
  };
}

export type Gesture =
  | { kind: "drive"; command: DriveCommandValue }
  | { kind: "aux"; command: AuxCommandValue }
  | { kind: "snapshot" }
  | { kind: "mode"; mode: ModeValue }
  | { kind: "color"; r: number; g: number; b: number; tol: number }
  | { kind: "disarm"; password: string }
  | { kind: "record-start" }
  | { kind: "record-stop" };

/** Drive pad is live only when connected and in a manually driven mode. */
export function driveEnabled(state: ConsoleState): boolean {
  return (
    state.connection === "ready" &&
    (state.activeMode === Mode.PcControl || state.activeMode === Mode.InternetControl)
  );
}

export interface GestureResult {
  state: ConsoleState;
  outgoing: Uint8Array[]; // never more than one element
}

export function handleGesture(state: ConsoleState, gesture: Gesture): GestureResult {
  if (gesture.kind === "record-start") {
    return { state: { ...state, recording: true, recorded: [] }, outgoing: [] };
  }
  if (gesture.kind === "record-stop") {
    return { state: { ...state, recording: false }, outgoing: [] };
  }
  if (state.connection !== "ready") {
    return { state, outgoing: [] };
  }
  switch (gesture.kind) {
    case "drive":
      if (!driveEnabled(state)) return { state, outgoing: [] };
      return { state, outgoing: [drive(gesture.command)] };
    case "aux":
      return { state, outgoing: [aux(gesture.command)] };
    case "snapshot":
      return { state, outgoing: [snapshotReq()] };
    case "mode":
      return { state, outgoing: [modeSet(gesture.mode)] };
    case "color":
      return { state, outgoing: [setColorRef(gesture.r, gesture.g, gesture.b, gesture.tol)] };
    case "disarm":
      return { state, outgoing: [disarm(gesture.password)] };
  }
}

export function handleIncoming(state: ConsoleState, msg: Message): ConsoleState {
  switch (msg.type) {
    case MsgType.HELLO_OK:
      return { ...state, connection: "ready", errorReason: null };
    case MsgType.HELLO_ERR:
      return { ...state, connection: "errored", errorReason: decodeText(msg.payload) || "auth" };
    case MsgType.MODE_OK:
      return msg.payload.length === 1
        ? { ...state, activeMode: msg.payload[0] as ModeValue }
        : state;
    case MsgType.FRAME: {
      const frame = parseFramePayload(msg.payload);
      if (frame === null) return { ...state, frameErrors: state.frameErrors + 1 };
      const recorded = state.recording ? [...state.recorded, frame] : state.recorded;
      return {
        ...state,
        lastFrame: frame,
        framesReceived: state.framesReceived + 1,
        recorded,
      };
    }
    case MsgType.SNAPSHOT: {
      const frame = parseFramePayload(msg.payload);
      if (frame === null) return { ...state, frameErrors: state.frameErrors + 1 };
      return { ...state, snapshots: [...state.snapshots, frame] };
    }
    case MsgType.ALARM_EVENT:
      return { ...state, alarmBanner: true };
    case MsgType.DISARM_RESULT: {
      const ok = msg.payload.length === 1 && msg.payload[0] === 1;
      return { ...state, lastDisarmOk: ok, alarmBanner: ok ? false : state.alarmBanner };
    }
    default:
      return state;
  }
}

export function connectionLost(state: ConsoleState, reason: string): ConsoleState {
  if (state.connection === "errored") return state; // keep the first reason
  return { ...state, connection: reason ? "errored" : "disconnected", errorReason: reason || null };
}
