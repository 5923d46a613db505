// Wire protocol shared with the control centre.
// Framing: u32 big-endian payload length, u8 type tag, payload.

export const MsgType = {
  HELLO: 0x01,
  HELLO_OK: 0x02,
  HELLO_ERR: 0x03,
  DRIVE: 0x04,
  AUX: 0x05,
  MODE_SET: 0x06,
  MODE_OK: 0x07,
  FRAME: 0x08,
  SNAPSHOT_REQ: 0x09,
  SNAPSHOT: 0x0a,
  SET_COLOR_REF: 0x0b,
  ALARM_EVENT: 0x0c,
  DISARM: 0x0d,
  PING: 0x0e,
  PONG: 0x0f,
  DISARM_RESULT: 0x10,
  BYE: 0x11,
} as const;

export type MsgTypeValue = (typeof MsgType)[keyof typeof MsgType];

export const DriveCommand = {
  Forward: 0x01,
  Backward: 0x02,
  Left: 0x03,
  Right: 0x04,
  ForwardLeft: 0x05,
  ForwardRight: 0x06,
  Stop: 0x07,
} as const;

export type DriveCommandValue = (typeof DriveCommand)[keyof typeof DriveCommand];

export const AuxCommand = {
  LightsOn: 0x10,
  LightsOff: 0x11,
  NightVisionOn: 0x12,
  NightVisionOff: 0x13,
  CameraStart: 0x14,
  CameraStop: 0x15,
} as const;

export type AuxCommandValue = (typeof AuxCommand)[keyof typeof AuxCommand];

export const Mode = {
  PcControl: 0,
  InternetControl: 1,
  Tracing: 2,
  MotionDetection: 3,
} as const;

export type ModeValue = (typeof Mode)[keyof typeof Mode];

export const MAX_PAYLOAD = 16 * 1024 * 1024;

export interface Message {
  type: MsgTypeValue;
  payload: Uint8Array;
}

const EMPTY = new Uint8Array(0);
const textEncoder = new TextEncoder();
const textDecoder = new TextDecoder();

const KNOWN_TAGS = new Set<number>(Object.values(MsgType));

export function encodeMessage(type: MsgTypeValue, payload: Uint8Array = EMPTY): Uint8Array {
  if (payload.length > MAX_PAYLOAD) {
    throw new Error(`payload of ${payload.length} bytes exceeds the 16 MiB limit`);
  }
  const out = new Uint8Array(5 + payload.length);
  new DataView(out.buffer).setUint32(0, payload.length, false);
  out[4] = type;
  out.set(payload, 5);
  return out;
}

/** Decode one message from the head of buf; null means "need more bytes". */
export function decodeMessage(buf: Uint8Array): { msg: Message; consumed: number } | null {
  if (buf.length < 4) return null;
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const length = view.getUint32(0, false);
  if (length > MAX_PAYLOAD) throw new Error(`declared payload of ${length} bytes is too large`);
  if (buf.length < 5 + length) return null;
  const tag = buf[4];
  if (!KNOWN_TAGS.has(tag)) throw new Error(`unknown message tag 0x${tag.toString(16)}`);
  return {
    msg: { type: tag as MsgTypeValue, payload: buf.slice(5, 5 + length) },
    consumed: 5 + length,
  };
}

export const hello = (secret: string) => encodeMessage(MsgType.HELLO, textEncoder.encode(secret));
export const drive = (cmd: DriveCommandValue) => encodeMessage(MsgType.DRIVE, Uint8Array.of(cmd));
export const aux = (cmd: AuxCommandValue) => encodeMessage(MsgType.AUX, Uint8Array.of(cmd));
export const modeSet = (mode: ModeValue) => encodeMessage(MsgType.MODE_SET, Uint8Array.of(mode));
export const snapshotReq = () => encodeMessage(MsgType.SNAPSHOT_REQ);
export const setColorRef = (r: number, g: number, b: number, tol: number) =>
  encodeMessage(MsgType.SET_COLOR_REF, Uint8Array.of(r, g, b, tol));
export const disarm = (password: string) =>
  encodeMessage(MsgType.DISARM, textEncoder.encode(password));
export const pingMsg = () => encodeMessage(MsgType.PING);
export const byeMsg = () => encodeMessage(MsgType.BYE);

export function decodeText(payload: Uint8Array): string {
  return textDecoder.decode(payload);
}

export const PixelFormat = { Gray8: 0, Rgb24: 1 } as const;

export interface FramePayload {
  width: number;
  height: number;
  format: number;
  seq: number;
  pixels: Uint8Array;
}

/** FRAME/SNAPSHOT payload: u32 w, u32 h, u8 fmt, u32 seq (big endian), pixels. */
export function parseFramePayload(payload: Uint8Array): FramePayload | null {
  if (payload.length < 13) return null;
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const width = view.getUint32(0, false);
  const height = view.getUint32(4, false);
  const format = payload[8];
  const seq = view.getUint32(9, false);
  const bpp = format === PixelFormat.Gray8 ? 1 : format === PixelFormat.Rgb24 ? 3 : -1;
  if (bpp < 0 || payload.length !== 13 + width * height * bpp) return null;
  return { width, height, format, seq, pixels: payload.slice(13) };
}
