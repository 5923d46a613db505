"""Client/control-centre wire protocol and session state machine.

Framing: u32 big-endian payload length, u8 type tag, payload bytes.

    tag   type           payload
    0x01  HELLO          UTF-8 shared secret
    0x02  HELLO_OK       empty
    0x03  HELLO_ERR      UTF-8 reason ("auth", "busy")
    0x04  DRIVE          1 byte, drive command (same table as the serial link)
    0x05  AUX            1 byte, aux command
    0x06  MODE_SET       1 byte, mode 0..3
    0x07  MODE_OK        1 byte, the mode now active
    0x08  FRAME          u32 w, u32 h, u8 fmt, u32 seq (big endian), pixels
    0x09  SNAPSHOT_REQ   empty
    0x0A  SNAPSHOT       same layout as FRAME
    0x0B  SET_COLOR_REF  bytes R, G, B, tolerance
    0x0C  ALARM_EVENT    empty
    0x0D  DISARM         UTF-8 password
    0x0E  PING           empty
    0x0F  PONG           empty
    0x10  DISARM_RESULT  1 byte, 1 ok / 0 fail
    0x11  BYE            empty

Payloads larger than 16 MiB are rejected. Decoding is incremental so a
byte stream can be fed in arbitrary chunks.
"""

from __future__ import annotations

import hmac
import struct
from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from typing import Union

from .imaging import Frame, PixelFormat
from .rover import AuxCommand, Command, DriveCommand

MAX_PAYLOAD = 16 * 1024 * 1024
_HEADER = struct.Struct(">IB")
_FRAME_HEADER = struct.Struct(">IIBI")

DEFAULT_PORT = 8640


class ProtocolError(ValueError):
    """Unrecoverable wire-level problem; the session must close."""


class ModeLocked(RuntimeError):
    """Mode change refused; carries the reason."""


class Mode(IntEnum):
    PC_CONTROL = 0
    INTERNET_CONTROL = 1
    TRACING = 2
    MOTION_DETECTION = 3


class MsgType(IntEnum):
    HELLO = 0x01
    HELLO_OK = 0x02
    HELLO_ERR = 0x03
    DRIVE = 0x04
    AUX = 0x05
    MODE_SET = 0x06
    MODE_OK = 0x07
    FRAME = 0x08
    SNAPSHOT_REQ = 0x09
    SNAPSHOT = 0x0A
    SET_COLOR_REF = 0x0B
    ALARM_EVENT = 0x0C
    DISARM = 0x0D
    PING = 0x0E
    PONG = 0x0F
    DISARM_RESULT = 0x10
    BYE = 0x11


_EMPTY_TYPES = frozenset(
    {
        MsgType.HELLO_OK,
        MsgType.SNAPSHOT_REQ,
        MsgType.ALARM_EVENT,
        MsgType.PING,
        MsgType.PONG,
        MsgType.BYE,
    }
)
_TEXT_TYPES = frozenset({MsgType.HELLO, MsgType.HELLO_ERR, MsgType.DISARM})


@dataclass(frozen=True)
class ControlMessage:
    type: MsgType
    payload: bytes = b""


def _validate_payload(msg_type: MsgType, payload: bytes) -> None:
    n = len(payload)
    if n > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {n} bytes exceeds the 16 MiB limit")
    if msg_type in _EMPTY_TYPES:
        if n != 0:
            raise ProtocolError(f"{msg_type.name} payload must be empty, got {n} bytes")
    elif msg_type in _TEXT_TYPES:
        try:
            payload.decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError(f"{msg_type.name} payload is not valid UTF-8") from None
    elif msg_type is MsgType.DRIVE:
        if n != 1 or payload[0] not in DriveCommand._value2member_map_:
            raise ProtocolError(f"bad DRIVE payload {payload!r}")
    elif msg_type is MsgType.AUX:
        if n != 1 or payload[0] not in AuxCommand._value2member_map_:
            raise ProtocolError(f"bad AUX payload {payload!r}")
    elif msg_type in (MsgType.MODE_SET, MsgType.MODE_OK):
        if n != 1 or payload[0] not in Mode._value2member_map_:
            raise ProtocolError(f"bad {msg_type.name} payload {payload!r}")
    elif msg_type in (MsgType.FRAME, MsgType.SNAPSHOT):
        if n < _FRAME_HEADER.size:
            raise ProtocolError(f"{msg_type.name} payload shorter than its header")
        w, h, fmt, _seq = _FRAME_HEADER.unpack_from(payload, 0)
        if fmt not in PixelFormat._value2member_map_:
            raise ProtocolError(f"unknown pixel format byte {fmt}")
        expected = _FRAME_HEADER.size + w * h * PixelFormat(fmt).bytes_per_pixel
        if n != expected:
            raise ProtocolError(
                f"{msg_type.name} payload is {n} bytes, header implies {expected}"
            )
    elif msg_type is MsgType.SET_COLOR_REF:
        if n != 4:
            raise ProtocolError(f"SET_COLOR_REF payload must be 4 bytes, got {n}")
    elif msg_type is MsgType.DISARM_RESULT:
        if n != 1 or payload[0] not in (0, 1):
            raise ProtocolError(f"bad DISARM_RESULT payload {payload!r}")


def encode_message(msg: ControlMessage) -> bytes:
    _validate_payload(msg.type, msg.payload)
    return _HEADER.pack(len(msg.payload), int(msg.type)) + msg.payload


def decode_message(buf: bytes) -> tuple[ControlMessage, int] | None:
    """Decode one message from the head of buf.

    Returns (message, bytes consumed), or None when more bytes are needed.
    Raises ProtocolError on anything malformed.
    """
    if len(buf) < 4:
        return None
    (length,) = struct.unpack_from(">I", buf, 0)
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared payload of {length} bytes exceeds the 16 MiB limit")
    if len(buf) < _HEADER.size + length:
        return None
    tag = buf[4]
    if tag not in MsgType._value2member_map_:
        raise ProtocolError(f"unknown message tag 0x{tag:02X}")
    msg_type = MsgType(tag)
    payload = bytes(buf[_HEADER.size : _HEADER.size + length])
    _validate_payload(msg_type, payload)
    return ControlMessage(msg_type, payload), _HEADER.size + length


# --- Message constructors / accessors ---------------------------------------


def hello(secret: str) -> ControlMessage:
    return ControlMessage(MsgType.HELLO, secret.encode("utf-8"))


def hello_ok() -> ControlMessage:
    return ControlMessage(MsgType.HELLO_OK)


def hello_err(reason: str) -> ControlMessage:
    return ControlMessage(MsgType.HELLO_ERR, reason.encode("utf-8"))


def drive(cmd: DriveCommand) -> ControlMessage:
    return ControlMessage(MsgType.DRIVE, bytes((int(cmd),)))


def aux(cmd: AuxCommand) -> ControlMessage:
    return ControlMessage(MsgType.AUX, bytes((int(cmd),)))


def mode_set(mode: Mode) -> ControlMessage:
    return ControlMessage(MsgType.MODE_SET, bytes((int(mode),)))


def mode_ok(mode: Mode) -> ControlMessage:
    return ControlMessage(MsgType.MODE_OK, bytes((int(mode),)))


def frame_message(frame: Frame, msg_type: MsgType = MsgType.FRAME) -> ControlMessage:
    header = _FRAME_HEADER.pack(
        frame.width, frame.height, int(frame.format), frame.seq & 0xFFFFFFFF
    )
    return ControlMessage(msg_type, header + frame.data)


def snapshot_message(frame: Frame) -> ControlMessage:
    return frame_message(frame, MsgType.SNAPSHOT)


def parse_frame_payload(payload: bytes) -> Frame:
    w, h, fmt, seq = _FRAME_HEADER.unpack_from(payload, 0)
    return Frame(w, h, PixelFormat(fmt), payload[_FRAME_HEADER.size :], seq=seq)


def set_color_ref(r: int, g: int, b: int, tolerance: int) -> ControlMessage:
    return ControlMessage(MsgType.SET_COLOR_REF, bytes((r, g, b, tolerance)))


def alarm_event() -> ControlMessage:
    return ControlMessage(MsgType.ALARM_EVENT)


def disarm_message(password: str) -> ControlMessage:
    return ControlMessage(MsgType.DISARM, password.encode("utf-8"))


def disarm_result(ok: bool) -> ControlMessage:
    return ControlMessage(MsgType.DISARM_RESULT, b"\x01" if ok else b"\x00")


def ping() -> ControlMessage:
    return ControlMessage(MsgType.PING)


def pong() -> ControlMessage:
    return ControlMessage(MsgType.PONG)


def bye() -> ControlMessage:
    return ControlMessage(MsgType.BYE)


# --- Session state machine ---------------------------------------------------


class SessionPhase(Enum):
    AWAIT_HELLO = "await_hello"
    READY = "ready"
    CLOSED = "closed"


@dataclass(frozen=True)
class SessionState:
    phase: SessionPhase = SessionPhase.AWAIT_HELLO
    authenticated: bool = False
    negotiated_mode: Mode = Mode.PC_CONTROL
    close_reason: str | None = None


@dataclass(frozen=True)
class RoverAction:
    command: Command


@dataclass(frozen=True)
class ModeChangeAction:
    mode: Mode


@dataclass(frozen=True)
class SnapshotAction:
    pass


@dataclass(frozen=True)
class SetColorAction:
    rgb: tuple[int, int, int]
    tolerance: int


@dataclass(frozen=True)
class DisarmAction:
    password: str


Action = Union[RoverAction, ModeChangeAction, SnapshotAction, SetColorAction, DisarmAction]

# Messages only the server may produce; a client sending one is broken.
_SERVER_ONLY = frozenset(
    {
        MsgType.HELLO_OK,
        MsgType.HELLO_ERR,
        MsgType.MODE_OK,
        MsgType.FRAME,
        MsgType.SNAPSHOT,
        MsgType.ALARM_EVENT,
        MsgType.DISARM_RESULT,
        MsgType.PONG,
    }
)


def session_step(
    state: SessionState, incoming: ControlMessage, shared_secret: str
) -> tuple[SessionState, list[ControlMessage], list[Action]]:
    """Advance the server-side session machine by one incoming message.

    Returns the new state, messages to send back, and actions for the
    service to dispatch. No action is ever emitted before a successful
    HELLO; anything out of phase closes the session.
    """
    if state.phase is SessionPhase.CLOSED:
        return state, [], []

    if state.phase is SessionPhase.AWAIT_HELLO:
        if incoming.type is MsgType.HELLO:
            if hmac.compare_digest(incoming.payload, shared_secret.encode("utf-8")):
                return (
                    replace(state, phase=SessionPhase.READY, authenticated=True),
                    [hello_ok()],
                    [],
                )
            return (
                replace(
                    state,
                    phase=SessionPhase.CLOSED,
                    close_reason="auth",
                ),
                [hello_err("auth")],
                [],
            )
        return (
            replace(state, phase=SessionPhase.CLOSED, close_reason="protocol"),
            [],
            [],
        )

    # READY
    t = incoming.type
    if t in _SERVER_ONLY or t is MsgType.HELLO:
        return (
            replace(state, phase=SessionPhase.CLOSED, close_reason="protocol"),
            [],
            [],
        )
    if t is MsgType.DRIVE:
        return state, [], [RoverAction(DriveCommand(incoming.payload[0]))]
    if t is MsgType.AUX:
        return state, [], [RoverAction(AuxCommand(incoming.payload[0]))]
    if t is MsgType.MODE_SET:
        mode = Mode(incoming.payload[0])
        return (
            replace(state, negotiated_mode=mode),
            [mode_ok(mode)],
            [ModeChangeAction(mode)],
        )
    if t is MsgType.SNAPSHOT_REQ:
        return state, [], [SnapshotAction()]
    if t is MsgType.SET_COLOR_REF:
        r, g, b, tol = incoming.payload
        return state, [], [SetColorAction((r, g, b), tol)]
    if t is MsgType.DISARM:
        return state, [], [DisarmAction(incoming.payload.decode("utf-8"))]
    if t is MsgType.PING:
        return state, [pong()], []
    if t is MsgType.BYE:
        return replace(state, phase=SessionPhase.CLOSED, close_reason="bye"), [], []
    raise AssertionError(f"unhandled message type {t!r}")


# --- Mode switching -----------------------------------------------------------

_DRIVE_CAPABLE = frozenset({Mode.PC_CONTROL, Mode.INTERNET_CONTROL, Mode.TRACING})


def mode_transition(
    current: Mode, requested: Mode, alarm_latched: bool = False
) -> tuple[Mode, list[Action]]:
    """Switch the exclusive operating mode.

    Leaving any mode that can be driving the platform emits a Stop
    teardown. Leaving the monitoring mode while its alarm is latched is
    refused until a successful disarm.
    """
    if requested is current:
        return current, []
    if current is Mode.MOTION_DETECTION and alarm_latched:
        raise ModeLocked("alarm is latched; disarm before leaving monitoring mode")
    teardown: list[Action] = []
    if current in _DRIVE_CAPABLE:
        teardown.append(RoverAction(DriveCommand.STOP))
    return requested, teardown
