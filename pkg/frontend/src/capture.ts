// Local capture: snapshot downloads as PNM, video recording as an
// SRSEQ1 container built from the received FRAME payloads.

import { FramePayload, PixelFormat } from "./protocol.js";

const textEncoder = new TextEncoder();

export function encodePnm(frame: FramePayload): Uint8Array {
  const magic = frame.format === PixelFormat.Gray8 ? "P5" : "P6";
  const header = textEncoder.encode(`${magic}\n${frame.width} ${frame.height}\n255\n`);
  const out = new Uint8Array(header.length + frame.pixels.length);
  out.set(header, 0);
  out.set(frame.pixels, header.length);
  return out;
}

// SRSEQ1, little endian: magic, u32 w, u32 h, u8 fmt, u32 count,
// then per frame u64 timestamp_ms, u64 seq, pixels.
export function encodeSrseq(allFrames: FramePayload[], periodMs = 100): Uint8Array {
  if (allFrames.length === 0) throw new Error("nothing recorded");
  const first = allFrames[0];
  // a mid-recording mode switch may change the stream shape; keep the
  // prefix-compatible frames so the container stays well formed
  const frames = allFrames.filter(
    (f) => f.width === first.width && f.height === first.height && f.format === first.format,
  );
  const frameBytes = frames.reduce((n, f) => n + 16 + f.pixels.length, 0);
  const out = new Uint8Array(19 + frameBytes);
  const view = new DataView(out.buffer);
  out.set(textEncoder.encode("SRSEQ1"), 0);
  view.setUint32(6, first.width, true);
  view.setUint32(10, first.height, true);
  out[14] = first.format;
  view.setUint32(15, frames.length, true);
  let pos = 19;
  frames.forEach((frame, i) => {
    view.setBigUint64(pos, BigInt(i * periodMs), true);
    view.setBigUint64(pos + 8, BigInt(i), true);
    out.set(frame.pixels, pos + 16);
    pos += 16 + frame.pixels.length;
  });
  return out;
}

/** Expand a frame to RGBA for a canvas ImageData buffer. */
export function toRgba(frame: FramePayload): Uint8ClampedArray<ArrayBuffer> {
  const n = frame.width * frame.height;
  const out = new Uint8ClampedArray(n * 4);
  if (frame.format === PixelFormat.Gray8) {
    for (let i = 0; i < n; i++) {
      const v = frame.pixels[i];
      out[i * 4] = v;
      out[i * 4 + 1] = v;
      out[i * 4 + 2] = v;
      out[i * 4 + 3] = 255;
    }
  } else {
    for (let i = 0; i < n; i++) {
      out[i * 4] = frame.pixels[i * 3];
      out[i * 4 + 1] = frame.pixels[i * 3 + 1];
      out[i * 4 + 2] = frame.pixels[i * 3 + 2];
      out[i * 4 + 3] = 255;
    }
  }
  return out;
}
