import { describe, expect, it } from "vitest";

import {
  AuxCommand,
  DriveCommand,
  Mode,
  MsgType,
  decodeMessage,
  encodeMessage,
} from "../src/protocol.js";
import {
  ConsoleState,
  Gesture,
  driveEnabled,
  handleGesture,
  handleIncoming,
  initialState,
} from "../src/state.js";
import { encodePnm, encodeSrseq } from "../src/capture.js";

const hex = (bytes: Uint8Array) =>
  Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");

function ready(): ConsoleState {
  return handleIncoming(initialState(), { type: MsgType.HELLO_OK, payload: new Uint8Array(0) });
}

function framePayload(w: number, h: number, format: number, pixels: number[]): Uint8Array {
  const out = new Uint8Array(13 + pixels.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, w, false);
  view.setUint32(4, h, false);
  out[8] = format;
  view.setUint32(9, 0, false);
  out.set(pixels, 13);
  return out;
}

describe("gesture -> message", () => {
  const gestures: Array<[Gesture, number]> = [
    [{ kind: "drive", command: DriveCommand.Forward }, MsgType.DRIVE],
    [{ kind: "aux", command: AuxCommand.LightsOn }, MsgType.AUX],
    [{ kind: "snapshot" }, MsgType.SNAPSHOT_REQ],
    [{ kind: "mode", mode: Mode.Tracing }, MsgType.MODE_SET],
    [{ kind: "color", r: 255, g: 0, b: 0, tol: 60 }, MsgType.SET_COLOR_REF],
    [{ kind: "disarm", password: "x" }, MsgType.DISARM],
  ];

  it("one gesture emits exactly one message when ready", () => {
    const log: number[] = [];
    let state = ready();
    for (const [gesture, expectedType] of gestures) {
      const result = handleGesture(state, gesture);
      state = result.state;
      expect(result.outgoing.length).toBe(1);
      const decoded = decodeMessage(result.outgoing[0])!;
      log.push(decoded.msg.type);
      expect(decoded.msg.type).toBe(expectedType);
    }
    expect(log.length).toBe(gestures.length); // event log: one entry per gesture
  });

  it("gestures while not ready are inert", () => {
    for (const [gesture] of gestures) {
      expect(handleGesture(initialState(), gesture).outgoing).toEqual([]);
    }
  });

  it("drive is blocked in tracing and motion-detection modes", () => {
    let state = ready();
    for (const mode of [Mode.Tracing, Mode.MotionDetection] as const) {
      state = handleIncoming(state, { type: MsgType.MODE_OK, payload: Uint8Array.of(mode) });
      expect(driveEnabled(state)).toBe(false);
      const result = handleGesture(state, { kind: "drive", command: DriveCommand.Forward });
      expect(result.outgoing).toEqual([]);
    }
    state = handleIncoming(state, { type: MsgType.MODE_OK, payload: Uint8Array.of(Mode.PcControl) });
    expect(driveEnabled(state)).toBe(true);
    expect(handleGesture(state, { kind: "drive", command: DriveCommand.Forward }).outgoing.length).toBe(1);
  });

  it("record gestures are local and silent", () => {
    let state = ready();
    const started = handleGesture(state, { kind: "record-start" });
    expect(started.outgoing).toEqual([]);
    expect(started.state.recording).toBe(true);
    const stopped = handleGesture(started.state, { kind: "record-stop" });
    expect(stopped.outgoing).toEqual([]);
    expect(stopped.state.recording).toBe(false);
  });

  it("drive bytes match the wire format", () => {
    const result = handleGesture(ready(), { kind: "drive", command: DriveCommand.Forward });
    expect(hex(result.outgoing[0])).toBe("000000010401");
  });
});

describe("incoming messages", () => {
  it("HELLO_OK readies, HELLO_ERR errors with reason", () => {
    expect(ready().connection).toBe("ready");
    const errored = handleIncoming(initialState(), {
      type: MsgType.HELLO_ERR,
      payload: new TextEncoder().encode("busy"),
    });
    expect(errored.connection).toBe("errored");
    expect(errored.errorReason).toBe("busy");
  });

  it("MODE_OK updates the active mode", () => {
    const state = handleIncoming(ready(), {
      type: MsgType.MODE_OK,
      payload: Uint8Array.of(Mode.MotionDetection),
    });
    expect(state.activeMode).toBe(Mode.MotionDetection);
  });

  it("frames update the display and malformed ones count errors", () => {
    let state = ready();
    state = handleIncoming(state, {
      type: MsgType.FRAME,
      payload: framePayload(1, 1, 1, [9, 9, 9]),
    });
    expect(state.framesReceived).toBe(1);
    expect(state.lastFrame!.width).toBe(1);
    state = handleIncoming(state, { type: MsgType.FRAME, payload: new Uint8Array(4) });
    expect(state.frameErrors).toBe(1);
    expect(state.framesReceived).toBe(1);
  });

  it("snapshots land in the gallery", () => {
    let state = ready();
    state = handleIncoming(state, {
      type: MsgType.SNAPSHOT,
      payload: framePayload(1, 1, 0, [7]),
    });
    expect(state.snapshots.length).toBe(1);
  });

  it("banner raises on ALARM_EVENT and clears only on DISARM_RESULT ok", () => {
    let state = ready();
    state = handleIncoming(state, { type: MsgType.ALARM_EVENT, payload: new Uint8Array(0) });
    expect(state.alarmBanner).toBe(true);
    state = handleIncoming(state, { type: MsgType.DISARM_RESULT, payload: Uint8Array.of(0) });
    expect(state.alarmBanner).toBe(true); // failed disarm keeps the banner
    state = handleIncoming(state, { type: MsgType.FRAME, payload: framePayload(1, 1, 0, [1]) });
    expect(state.alarmBanner).toBe(true); // unrelated traffic keeps it too
    state = handleIncoming(state, { type: MsgType.DISARM_RESULT, payload: Uint8Array.of(1) });
    expect(state.alarmBanner).toBe(false);
  });

  it("recording captures incoming frames until stopped", () => {
    let state = ready();
    state = handleGesture(state, { kind: "record-start" }).state;
    for (const value of [1, 2, 3]) {
      state = handleIncoming(state, {
        type: MsgType.FRAME,
        payload: framePayload(1, 1, 0, [value]),
      });
    }
    state = handleGesture(state, { kind: "record-stop" }).state;
    state = handleIncoming(state, { type: MsgType.FRAME, payload: framePayload(1, 1, 0, [4]) });
    expect(state.recorded.length).toBe(3);
  });
});

describe("capture encoders", () => {
  it("PNM bytes match the canonical writer", () => {
    const pnm = encodePnm({ width: 2, height: 1, format: 0, seq: 0, pixels: Uint8Array.of(7, 9) });
    expect(hex(pnm)).toBe(hex(new Uint8Array([...new TextEncoder().encode("P5\n2 1\n255\n"), 7, 9])));
  });

  it("SRSEQ1 bytes match the control centre's container", () => {
    // frozen from the service-side writer: two 2x2 GRAY8 frames,
    // timestamps 0/100, seqs 0/1
    const expected =
      "535253455131" + // magic
      "0200000002000000" + // width, height (LE)
      "00" + // GRAY8
      "02000000" + // frame count
      "00000000000000000000000000000000" + "01020304" + // ts 0, seq 0, pixels
      "64000000000000000100000000000000" + "05060708"; // ts 100, seq 1, pixels
    const blob = encodeSrseq(
      [
        { width: 2, height: 2, format: 0, seq: 0, pixels: Uint8Array.of(1, 2, 3, 4) },
        { width: 2, height: 2, format: 0, seq: 1, pixels: Uint8Array.of(5, 6, 7, 8) },
      ],
      100,
    );
    expect(hex(blob)).toBe(expected);
  });
});
