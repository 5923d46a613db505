"""Frames, image file I/O and synthetic scene generation.

Everything downstream (detector, tracker, protocol, service) moves Frame
values around. Only two pixel layouts exist:

  GRAY8  - one byte per pixel, row major
  RGB24  - three bytes per pixel (R, G, B), row major

File formats are deliberately minimal:

  PNM    - binary P5 (GRAY8) / P6 (RGB24), maxval 255. The canonical
           writer emits "P5\\n<w> <h>\\n255\\n" followed by the body, so
           write(read(x)) == x for canonical files.
  SRSEQ1 - raw frame-sequence container, little endian:
           magic "SRSEQ1", u32 width, u32 height, u8 format
           (0=GRAY8, 1=RGB24), u32 frame count, then per frame
           u64 timestamp_ms, u64 seq, payload bytes.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Sequence

import numpy as np

from .rover import RoverState, normalize_heading

FOV_DEG = 60.0
FOCAL_PX = 140.0
LIGHTS_RANGE_M = 2.0
LIGHTS_BOOST = 40
NIGHT_VISION_GAIN_NUM = 3  # gain 1.5 as an exact integer ratio
NIGHT_VISION_GAIN_DEN = 2

SRSEQ_MAGIC = b"SRSEQ1"


class PixelFormat(IntEnum):
    """Values double as the SRSEQ1 format byte."""

    GRAY8 = 0
    RGB24 = 1

    @property
    def bytes_per_pixel(self) -> int:
        return 1 if self is PixelFormat.GRAY8 else 3


class FormatError(ValueError):
    """Operation applied to a frame of the wrong pixel format."""


class ParameterError(ValueError):
    """Generator parameters describe an impossible sequence."""


class PnmError(ValueError):
    """Unparseable PNM data. `offset` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class SequenceError(ValueError):
    """Unparseable SRSEQ1 data or inconsistent frame list."""


@dataclass(frozen=True)
class Frame:
    """One image plus stream bookkeeping (timestamp, sequence number)."""

    width: int
    height: int
    format: PixelFormat
    data: bytes
    timestamp_ms: int = 0
    seq: int = 0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad frame dimensions {self.width}x{self.height}")
        expected = self.width * self.height * self.format.bytes_per_pixel
        if len(self.data) != expected:
            raise ValueError(
                f"frame data is {len(self.data)} bytes, expected {expected}"
            )
        if self.timestamp_ms < 0 or self.seq < 0:
            raise ValueError("timestamp_ms and seq must be non-negative")

    def to_array(self) -> np.ndarray:
        """View the pixels as (h, w) or (h, w, 3) uint8. Read-only."""
        arr = np.frombuffer(self.data, dtype=np.uint8)
        if self.format is PixelFormat.GRAY8:
            return arr.reshape(self.height, self.width)
        return arr.reshape(self.height, self.width, 3)

    @classmethod
    def from_array(
        cls, arr: np.ndarray, timestamp_ms: int = 0, seq: int = 0
    ) -> "Frame":
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        if arr.ndim == 2:
            fmt = PixelFormat.GRAY8
        elif arr.ndim == 3 and arr.shape[2] == 3:
            fmt = PixelFormat.RGB24
        else:
            raise ValueError(f"cannot make a frame from array of shape {arr.shape}")
        h, w = arr.shape[0], arr.shape[1]
        return cls(w, h, fmt, arr.tobytes(), timestamp_ms, seq)


@dataclass(frozen=True)
class SceneObject:
    """A colored ball sitting on the ground plane."""

    x: float
    y: float
    radius: float
    color: tuple[int, int, int]

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("object coordinates must be finite")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"object radius must be positive, got {self.radius}")
        if len(self.color) != 3 or any(not 0 <= c <= 255 for c in self.color):
            raise ValueError(f"bad color {self.color}")


@dataclass(frozen=True)
class Scene:
    """Flat 2D world observed by the rover camera."""

    background_gray: int = 128
    objects: tuple[SceneObject, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.background_gray <= 255:
            raise ValueError(f"bad background gray {self.background_gray}")
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class FrameSequence:
    """Ordered frames with uniform dimensions/format and increasing seq."""

    frames: tuple[Frame, ...]

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            return
        first = frames[0]
        prev_seq = -1
        for f in frames:
            if (f.width, f.height, f.format) != (first.width, first.height, first.format):
                raise SequenceError("sequence frames must share dimensions and format")
            if f.seq <= prev_seq:
                raise SequenceError("sequence seq values must strictly increase")
            prev_seq = f.seq

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i: int) -> Frame:
        return self.frames[i]


def to_gray(frame: Frame) -> Frame:
    """Convert RGB24 to GRAY8 with integer BT.601-style weights.

    luma = (77*R + 150*G + 29*B) >> 8, which is exact, monotone in every
    channel, and identical across platforms.
    """
    if frame.format is not PixelFormat.RGB24:
        raise FormatError(f"to_gray needs RGB24 input, got {frame.format.name}")
    rgb = frame.to_array().astype(np.uint32)
    luma = (77 * rgb[:, :, 0] + 150 * rgb[:, :, 1] + 29 * rgb[:, :, 2]) >> 8
    return Frame(
        frame.width,
        frame.height,
        PixelFormat.GRAY8,
        luma.astype(np.uint8).tobytes(),
        frame.timestamp_ms,
        frame.seq,
    )


def gray_to_rgb(frame: Frame) -> Frame:
    """Expand GRAY8 to RGB24 by channel replication."""
    if frame.format is not PixelFormat.GRAY8:
        raise FormatError(f"gray_to_rgb needs GRAY8 input, got {frame.format.name}")
    g = frame.to_array()
    rgb = np.repeat(g[:, :, None], 3, axis=2)
    return Frame(
        frame.width,
        frame.height,
        PixelFormat.RGB24,
        rgb.tobytes(),
        frame.timestamp_ms,
        frame.seq,
    )


# --- PNM ------------------------------------------------------------------

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _pnm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data):
        c = data[pos : pos + 1]
        if c in (b" ", b"\t", b"\r", b"\n", b"\x0b", b"\x0c"):
            pos += 1
        elif c == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\r", b"\n"):
                pos += 1
        else:
            break
    if pos >= len(data):
        raise PnmError("unexpected end of header", pos)
    start = pos
    while pos < len(data) and data[pos : pos + 1] not in (
        b" ", b"\t", b"\r", b"\n", b"\x0b", b"\x0c",
    ):
        pos += 1
    return data[start:pos], pos


def _pnm_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, end = _pnm_token(data, pos)
    if not tok.isdigit():
        raise PnmError(f"{what} is not a number: {tok!r}", end - len(tok))
    return int(tok), end


def read_pnm(data: bytes) -> Frame:
    """Parse a binary P5/P6 file with maxval 255."""
    magic, pos = _pnm_token(data, 0)
    if magic == b"P5":
        fmt = PixelFormat.GRAY8
    elif magic == b"P6":
        fmt = PixelFormat.RGB24
    else:
        raise PnmError(f"unsupported magic {magic!r}", 0)
    width, pos = _pnm_int(data, pos, "width")
    height, pos = _pnm_int(data, pos, "height")
    if width < 1 or height < 1:
        raise PnmError(f"bad dimensions {width}x{height}", pos)
    maxval, pos = _pnm_int(data, pos, "maxval")
    if maxval != 255:
        raise PnmError(f"maxval must be 255, got {maxval}", pos - len(str(maxval)))
    if pos >= len(data) or data[pos : pos + 1] not in (
        b" ", b"\t", b"\r", b"\n", b"\x0b", b"\x0c",
    ):
        raise PnmError("expected single whitespace after maxval", pos)
    pos += 1
    body_len = width * height * fmt.bytes_per_pixel
    body = data[pos : pos + body_len]
    if len(body) < body_len:
        raise PnmError(
            f"truncated body, need {body_len} bytes, have {len(body)}", len(data)
        )
    if pos + body_len != len(data):
        raise PnmError("trailing bytes after pixel data", pos + body_len)
    return Frame(width, height, fmt, body)


def write_pnm(frame: Frame) -> bytes:
    """Serialize as canonical binary P5/P6 with maxval 255."""
    magic = b"P5" if frame.format is PixelFormat.GRAY8 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, frame.width, frame.height)
    return header + frame.data


# --- SRSEQ1 ---------------------------------------------------------------

_SRSEQ_HEADER = struct.Struct("<6sIIBI")
_SRSEQ_FRAME = struct.Struct("<QQ")


def write_srseq(seq: FrameSequence) -> bytes:
    """Serialize a frame sequence into the SRSEQ1 container."""
    if len(seq) == 0:
        raise SequenceError("refusing to write an empty sequence")
    first = seq[0]
    parts = [
        _SRSEQ_HEADER.pack(
            SRSEQ_MAGIC, first.width, first.height, int(first.format), len(seq)
        )
    ]
    for f in seq:
        parts.append(_SRSEQ_FRAME.pack(f.timestamp_ms, f.seq))
        parts.append(f.data)
    return b"".join(parts)


def read_srseq(data: bytes) -> FrameSequence:
    """Parse an SRSEQ1 container; errors name the offending frame index."""
    if len(data) < _SRSEQ_HEADER.size:
        raise SequenceError("container shorter than its header")
    magic, width, height, fmt_byte, count = _SRSEQ_HEADER.unpack_from(data, 0)
    if magic != SRSEQ_MAGIC:
        raise SequenceError(f"bad magic {magic!r}")
    try:
        fmt = PixelFormat(fmt_byte)
    except ValueError:
        raise SequenceError(f"unknown pixel format byte {fmt_byte}") from None
    frame_len = width * height * fmt.bytes_per_pixel
    pos = _SRSEQ_HEADER.size
    frames = []
    for i in range(count):
        if pos + _SRSEQ_FRAME.size + frame_len > len(data):
            raise SequenceError(f"truncated container at frame {i}")
        timestamp_ms, fseq = _SRSEQ_FRAME.unpack_from(data, pos)
        pos += _SRSEQ_FRAME.size
        try:
            frames.append(
                Frame(width, height, fmt, data[pos : pos + frame_len], timestamp_ms, fseq)
            )
        except ValueError as e:
            raise SequenceError(f"bad frame {i}: {e}") from None
        pos += frame_len
    if pos != len(data):
        raise SequenceError("trailing bytes after last frame")
    return FrameSequence(tuple(frames))


# --- Rendering ------------------------------------------------------------


def render_scene(
    scene: Scene,
    pose: RoverState,
    width: int,
    height: int,
    lights: bool = False,
    night_vision: bool = False,
    timestamp_ms: int = 0,
    seq: int = 0,
) -> Frame:
    """Render the camera view from the rover pose.

    A flat world with a 60 degree horizontal field of view: an object at
    distance d and screen bearing beta (positive to the right of the
    heading) lands at column w/2 * (1 + beta/30deg) on the middle row,
    with pixel radius clamp(round(140 * radius / d), 1, h/2). Nearer
    objects are painted last. Lights add +40 to objects closer than 2 m;
    night vision replaces the image with its luma boosted by 1.5x.
    """
    if width < 8 or height < 8:
        raise ValueError(f"render needs at least 8x8, got {width}x{height}")
    img = np.full((height, width, 3), scene.background_gray, dtype=np.uint8)
    half_fov = math.radians(FOV_DEG / 2.0)
    visible = []
    for obj in scene.objects:
        dx = obj.x - pose.x
        dy = obj.y - pose.y
        dist = math.hypot(dx, dy)
        if dist < 1e-9:
            continue
        # Screen bearing: positive when the object sits right of the
        # heading, i.e. the negated CCW angular offset.
        beta = -normalize_heading(math.atan2(dy, dx) - pose.heading)
        if abs(beta) > half_fov:
            continue
        cx = (width / 2.0) * (1.0 + beta / half_fov)
        cy = height / 2.0
        radius = max(1, min(round(FOCAL_PX * obj.radius / dist), height // 2))
        color = obj.color
        if lights and dist < LIGHTS_RANGE_M:
            color = tuple(min(255, c + LIGHTS_BOOST) for c in color)
        visible.append((dist, cx, cy, radius, color))
    visible.sort(key=lambda v: -v[0])
    if visible:
        ys = np.arange(height, dtype=np.float64)[:, None]
        xs = np.arange(width, dtype=np.float64)[None, :]
        for _, cx, cy, radius, color in visible:
            mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= float(radius) ** 2
            img[mask] = color
    if night_vision:
        luma = (
            77 * img[:, :, 0].astype(np.uint32)
            + 150 * img[:, :, 1].astype(np.uint32)
            + 29 * img[:, :, 2].astype(np.uint32)
        ) >> 8
        boosted = np.minimum(
            luma * NIGHT_VISION_GAIN_NUM // NIGHT_VISION_GAIN_DEN, 255
        ).astype(np.uint8)
        img = np.repeat(boosted[:, :, None], 3, axis=2)
    return Frame(width, height, PixelFormat.RGB24, img.tobytes(), timestamp_ms, seq)


# --- Synthetic test sequences ----------------------------------------------


def synth_motion_sequence(
    width: int,
    height: int,
    square_side: int,
    start: tuple[int, int],
    velocity: tuple[int, int],
    n_frames: int,
    fg: int = 200,
    bg: int = 30,
    timestamp_step_ms: int = 100,
) -> FrameSequence:
    """Generate GRAY8 frames of a square gliding over a uniform background.

    Frame t paints the square at start + t*velocity. The true motion region
    between frames t-1 and t is the symmetric difference of the two square
    footprints, which tests can reconstruct exactly.
    """
    if square_side < 1:
        raise ParameterError(f"square side must be >= 1, got {square_side}")
    if n_frames < 1:
        raise ParameterError(f"need at least one frame, got {n_frames}")
    if not (0 <= fg <= 255 and 0 <= bg <= 255):
        raise ParameterError(f"fg/bg must be 0..255, got {fg}/{bg}")
    x0, y0 = start
    dx, dy = velocity
    for t in range(n_frames):
        x, y = x0 + t * dx, y0 + t * dy
        if x < 0 or y < 0 or x + square_side > width or y + square_side > height:
            raise ParameterError(
                f"square leaves the {width}x{height} frame at t={t} (x={x}, y={y})"
            )
    frames = []
    for t in range(n_frames):
        x, y = x0 + t * dx, y0 + t * dy
        img = np.full((height, width), bg, dtype=np.uint8)
        img[y : y + square_side, x : x + square_side] = fg
        frames.append(
            Frame(
                width,
                height,
                PixelFormat.GRAY8,
                img.tobytes(),
                timestamp_ms=t * timestamp_step_ms,
                seq=t,
            )
        )
    return FrameSequence(tuple(frames))


def restamp(frame: Frame, timestamp_ms: int, seq: int) -> Frame:
    """Copy a frame with fresh stream bookkeeping."""
    return replace(frame, timestamp_ms=timestamp_ms, seq=seq)


def add_noise(seq: FrameSequence, amplitude: int, rng_seed: int) -> FrameSequence:
    """Add per-pixel integer noise uniform in [-amplitude, +amplitude].

    Deterministic for a given seed; results are clamped to [0, 255].
    """
    if amplitude < 0:
        raise ParameterError(f"noise amplitude must be >= 0, got {amplitude}")
    if amplitude == 0:
        return seq
    rng = np.random.default_rng(rng_seed)
    frames = []
    for f in seq:
        arr = f.to_array().astype(np.int16)
        noise = rng.integers(-amplitude, amplitude + 1, size=arr.shape, dtype=np.int16)
        noisy = np.clip(arr + noise, 0, 255).astype(np.uint8)
        frames.append(Frame(f.width, f.height, f.format, noisy.tobytes(), f.timestamp_ms, f.seq))
    return FrameSequence(tuple(frames))
