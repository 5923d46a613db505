import { describe, expect, it } from "vitest";

import {
  AuxCommand,
  DriveCommand,
  Mode,
  MsgType,
  aux,
  decodeMessage,
  disarm,
  drive,
  encodeMessage,
  hello,
  modeSet,
  parseFramePayload,
  pingMsg,
  setColorRef,
  snapshotReq,
} from "../src/protocol.js";

const hex = (bytes: Uint8Array) =>
  Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");

// Byte-for-byte identical to the control centre's encoder output.
describe("golden vectors", () => {
  it("DRIVE(Forward)", () => {
    expect(hex(drive(DriveCommand.Forward))).toBe("000000010401");
  });
  it("AUX(LightsOn)", () => {
    expect(hex(aux(AuxCommand.LightsOn))).toBe("000000010510");
  });
  it("MODE_SET(Tracing)", () => {
    expect(hex(modeSet(Mode.Tracing))).toBe("000000010602");
  });
  it('DISARM("x")', () => {
    expect(hex(disarm("x"))).toBe("000000010d78");
  });
  it("extras: HELLO, PING, SNAPSHOT_REQ, SET_COLOR_REF", () => {
    expect(hex(hello("abc"))).toBe("0000000301616263");
    expect(hex(pingMsg())).toBe("000000000e");
    expect(hex(snapshotReq())).toBe("0000000009");
    expect(hex(setColorRef(255, 0, 0, 60))).toBe("000000040bff00003c");
  });
});

describe("codec", () => {
  it("round-trips every message type", () => {
    const samples: Uint8Array[] = [
      hello("secret"),
      encodeMessage(MsgType.HELLO_OK),
      encodeMessage(MsgType.HELLO_ERR, new TextEncoder().encode("busy")),
      drive(DriveCommand.Stop),
      aux(AuxCommand.CameraStop),
      modeSet(Mode.MotionDetection),
      encodeMessage(MsgType.MODE_OK, Uint8Array.of(2)),
      encodeMessage(MsgType.FRAME, buildFramePayload(2, 1, 1, 7, [9, 8, 7, 6, 5, 4])),
      snapshotReq(),
      encodeMessage(MsgType.SNAPSHOT, buildFramePayload(1, 1, 0, 3, [200])),
      setColorRef(1, 2, 3, 4),
      encodeMessage(MsgType.ALARM_EVENT),
      disarm("pw"),
      pingMsg(),
      encodeMessage(MsgType.PONG),
      encodeMessage(MsgType.DISARM_RESULT, Uint8Array.of(1)),
      encodeMessage(MsgType.BYE),
    ];
    expect(samples.length).toBe(17);
    for (const encoded of samples) {
      const decoded = decodeMessage(encoded);
      expect(decoded).not.toBeNull();
      expect(decoded!.consumed).toBe(encoded.length);
      expect(hex(encodeMessage(decoded!.msg.type, decoded!.msg.payload))).toBe(hex(encoded));
    }
  });

  it("asks for more bytes on a short buffer", () => {
    const encoded = drive(DriveCommand.Left);
    for (let cut = 0; cut < encoded.length; cut++) {
      expect(decodeMessage(encoded.slice(0, cut))).toBeNull();
    }
  });

  it("decodes byte-at-a-time identically to whole-buffer", () => {
    const messages = [hello("s"), drive(DriveCommand.Forward), pingMsg(), disarm("x")];
    const stream = concat(messages);
    const fed: number[] = [];
    let buf = new Uint8Array(0);
    for (const byte of stream) {
      buf = concat([buf, Uint8Array.of(byte)]);
      for (;;) {
        const decoded = decodeMessage(buf);
        if (decoded === null) break;
        fed.push(decoded.msg.type);
        buf = buf.slice(decoded.consumed);
      }
    }
    expect(fed).toEqual([MsgType.HELLO, MsgType.DRIVE, MsgType.PING, MsgType.DISARM]);
    expect(buf.length).toBe(0);
  });

  it("rejects an oversized declared length", () => {
    const bad = Uint8Array.of(0x02, 0x00, 0x00, 0x00, 0x0e); // 32 MiB
    expect(() => decodeMessage(bad)).toThrow();
  });

  it("rejects unknown tags", () => {
    expect(() => decodeMessage(Uint8Array.of(0, 0, 0, 0, 0x7f))).toThrow();
  });
});

function buildFramePayload(
  w: number,
  h: number,
  format: number,
  seq: number,
  pixels: number[],
): Uint8Array {
  const out = new Uint8Array(13 + pixels.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, w, false);
  view.setUint32(4, h, false);
  out[8] = format;
  view.setUint32(9, seq, false);
  out.set(pixels, 13);
  return out;
}

function concat(parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let pos = 0;
  for (const p of parts) {
    out.set(p, pos);
    pos += p.length;
  }
  return out;
}

describe("frame payload", () => {
  it("parses header and pixels", () => {
    const frame = parseFramePayload(buildFramePayload(2, 1, 1, 42, [1, 2, 3, 4, 5, 6]));
    expect(frame).not.toBeNull();
    expect(frame!.width).toBe(2);
    expect(frame!.height).toBe(1);
    expect(frame!.format).toBe(1);
    expect(frame!.seq).toBe(42);
    expect(Array.from(frame!.pixels)).toEqual([1, 2, 3, 4, 5, 6]);
  });

  it("returns null on truncation or bad format", () => {
    expect(parseFramePayload(new Uint8Array(5))).toBeNull();
    expect(parseFramePayload(buildFramePayload(2, 2, 0, 0, [1, 2, 3]))).toBeNull();
    expect(parseFramePayload(buildFramePayload(1, 1, 9, 0, [1]))).toBeNull();
  });
});
