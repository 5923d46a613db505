"""Simulated mobile platform.

Drive/aux command set, in-place kinematics, a stale-command watchdog, and
the 4-byte serial packet codec used on the command link:

    [0xA5 sync] [command byte] [argument byte, 0x00] [XOR checksum]

The checksum is the XOR of the first three bytes, so any single corrupted
byte is detectable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Union

SPEED_M_S = 0.5
TURN_RATE_RAD_S = 1.0
SYNC_BYTE = 0xA5
DEFAULT_WATCHDOG_TIMEOUT_MS = 2000

_TWO_PI = 2.0 * math.pi


class DriveCommand(IntEnum):
    """Seven-way drive pad. Values double as wire command bytes."""

    FORWARD = 0x01
    BACKWARD = 0x02
    LEFT = 0x03
    RIGHT = 0x04
    FORWARD_LEFT = 0x05
    FORWARD_RIGHT = 0x06
    STOP = 0x07


class AuxCommand(IntEnum):
    """Lights, night vision and camera switches. Values are wire bytes."""

    LIGHTS_ON = 0x10
    LIGHTS_OFF = 0x11
    NIGHT_VISION_ON = 0x12
    NIGHT_VISION_OFF = 0x13
    CAMERA_START = 0x14
    CAMERA_STOP = 0x15


Command = Union[DriveCommand, AuxCommand]

_COMMANDS_BY_BYTE: dict[int, Command] = {
    **{int(c): c for c in DriveCommand},
    **{int(c): c for c in AuxCommand},
}


class PacketError(ValueError):
    """Malformed serial packet."""


class SyncError(PacketError):
    """First byte is not the sync marker."""


class ChecksumError(PacketError):
    """XOR checksum does not match."""


class UnknownCommandError(PacketError):
    """Syntactically valid packet carrying an unassigned command byte."""


def encode_packet(cmd: Command) -> bytes:
    """Encode a command as a 4-byte packet: sync, command, argument, checksum."""
    b = int(cmd)
    return bytes((SYNC_BYTE, b, 0x00, SYNC_BYTE ^ b))


def decode_packet(data: bytes) -> Command:
    """Decode a 4-byte packet, rejecting any corruption.

    Raises SyncError, ChecksumError, UnknownCommandError or PacketError.
    """
    if len(data) != 4:
        raise PacketError(f"packet must be exactly 4 bytes, got {len(data)}")
    sync, cmd, arg, check = data[0], data[1], data[2], data[3]
    if sync != SYNC_BYTE:
        raise SyncError(f"bad sync byte 0x{sync:02X}")
    if check != (sync ^ cmd ^ arg):
        raise ChecksumError(f"checksum 0x{check:02X} does not match payload")
    if arg != 0x00:
        raise PacketError(f"reserved argument byte must be 0x00, got 0x{arg:02X}")
    try:
        return _COMMANDS_BY_BYTE[cmd]
    except KeyError:
        raise UnknownCommandError(f"unassigned command byte 0x{cmd:02X}") from None


def normalize_heading(heading: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    h = math.fmod(heading, _TWO_PI)
    if h <= -math.pi:
        h += _TWO_PI
    elif h > math.pi:
        h -= _TWO_PI
    return h


@dataclass(frozen=True)
class RoverState:
    """Platform pose, toggle flags and latched drive command.

    The state only changes by replacement; commands latch until replaced
    and translation/rotation happen in step(), not at command time.
    """

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    lights: bool = False
    night_vision: bool = False
    camera_on: bool = True
    active_drive: DriveCommand = DriveCommand.STOP
    last_command_ms: int = 0


def apply_command(state: RoverState, cmd: Command, now_ms: int) -> RoverState:
    """Latch a drive command or flip a toggle. Pose is never touched here."""
    if isinstance(cmd, DriveCommand):
        return replace(state, active_drive=cmd, last_command_ms=now_ms)
    if cmd is AuxCommand.LIGHTS_ON:
        return replace(state, lights=True)
    if cmd is AuxCommand.LIGHTS_OFF:
        return replace(state, lights=False)
    if cmd is AuxCommand.NIGHT_VISION_ON:
        return replace(state, night_vision=True)
    if cmd is AuxCommand.NIGHT_VISION_OFF:
        return replace(state, night_vision=False)
    if cmd is AuxCommand.CAMERA_START:
        return replace(state, camera_on=True)
    if cmd is AuxCommand.CAMERA_STOP:
        return replace(state, camera_on=False)
    raise TypeError(f"not a rover command: {cmd!r}")


def step(state: RoverState, dt: float) -> RoverState:
    """Advance the pose by dt seconds under the latched drive command.

    Forward/backward translate at 0.5 m/s along the heading, left/right
    rotate in place at 1.0 rad/s (left is counter-clockwise), and the
    diagonal commands translate while rotating at half rate.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    cmd = state.active_drive
    if cmd is DriveCommand.STOP:
        return state
    dist = SPEED_M_S * dt
    turn = TURN_RATE_RAD_S * dt
    x, y, heading = state.x, state.y, state.heading
    if cmd is DriveCommand.FORWARD:
        x += dist * math.cos(heading)
        y += dist * math.sin(heading)
    elif cmd is DriveCommand.BACKWARD:
        x -= dist * math.cos(heading)
        y -= dist * math.sin(heading)
    elif cmd is DriveCommand.LEFT:
        heading += turn
    elif cmd is DriveCommand.RIGHT:
        heading -= turn
    elif cmd is DriveCommand.FORWARD_LEFT:
        x += dist * math.cos(heading)
        y += dist * math.sin(heading)
        heading += turn / 2.0
    elif cmd is DriveCommand.FORWARD_RIGHT:
        x += dist * math.cos(heading)
        y += dist * math.sin(heading)
        heading -= turn / 2.0
    return replace(state, x=x, y=y, heading=normalize_heading(heading))


def watchdog(
    state: RoverState, now_ms: int, timeout_ms: int = DEFAULT_WATCHDOG_TIMEOUT_MS
) -> RoverState:
    """Force Stop when the latched drive command has gone stale.

    Covers command loss on a laggy link: without fresh input the platform
    must not keep driving.
    """
    if state.active_drive is DriveCommand.STOP:
        return state
    if now_ms - state.last_command_ms > timeout_ms:
        return replace(state, active_drive=DriveCommand.STOP)
    return state
