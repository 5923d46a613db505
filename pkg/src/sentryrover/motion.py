"""Motion detection and the monitoring alarm.

The primary detector thresholds absolute differences between consecutive
frames and combines the last three pairwise difference maps from a
four-frame window:

    B0 = diff(newest, previous)
    B1 = diff(previous, older)
    B2 = diff(older, oldest)
    mask = B0 AND (B1 OR B2)

A pixel is flagged only when it changes now and also changed in the recent
past, which suppresses one-frame sensor sparkle. A running-average
background subtractor is kept as the baseline method. The alarm machine
latches once raised and only a correct password releases it.
"""

from __future__ import annotations

import hashlib
import hmac
import os
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .imaging import Frame, FormatError, PixelFormat


class DimensionError(ValueError):
    """Inputs that must share dimensions do not."""


class NotReadyError(RuntimeError):
    """Detector asked to run before its frame window is warm."""


class AlarmStateError(RuntimeError):
    """Alarm operation invoked in a phase that does not allow it."""


@dataclass(frozen=True)
class MotionMask:
    """Per-pixel binary map; bits holds one 0/1 byte per pixel, row major."""

    width: int
    height: int
    bits: bytes

    def __post_init__(self) -> None:
        if len(self.bits) != self.width * self.height:
            raise ValueError(
                f"mask bits length {len(self.bits)} != {self.width}x{self.height}"
            )
        if self.bits and max(self.bits) > 1:
            raise ValueError("mask bits must be 0 or 1")

    def to_array(self) -> np.ndarray:
        return (
            np.frombuffer(self.bits, dtype=np.uint8)
            .reshape(self.height, self.width)
            .astype(bool)
        )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "MotionMask":
        arr = np.asarray(arr, dtype=bool)
        return cls(arr.shape[1], arr.shape[0], arr.astype(np.uint8).tobytes())

    @property
    def popcount(self) -> int:
        return sum(self.bits)


@dataclass(frozen=True)
class DetectorConfig:
    """Detector thresholds; defaults suit desk-scale scenes."""

    tau: int = 25
    min_ratio: float = 0.005
    persist_k: int = 2
    denoise: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.tau < 255:
            raise ValueError(f"tau must be in (0, 255), got {self.tau}")
        if not 0 < self.min_ratio < 1:
            raise ValueError(f"min_ratio must be in (0, 1), got {self.min_ratio}")
        if self.persist_k < 1:
            raise ValueError(f"persist_k must be >= 1, got {self.persist_k}")


@dataclass(frozen=True)
class FrameWindow:
    """Up to four most recent GRAY8 frames, oldest first."""

    frames: tuple[Frame, ...] = ()

    @classmethod
    def empty(cls) -> "FrameWindow":
        return cls(())

    @property
    def warm(self) -> bool:
        return len(self.frames) == 4

    def push(self, frame: Frame) -> "FrameWindow":
        if frame.format is not PixelFormat.GRAY8:
            raise FormatError("frame window holds GRAY8 frames only")
        if self.frames:
            last = self.frames[-1]
            if (frame.width, frame.height) != (last.width, last.height):
                raise DimensionError("window frames must share dimensions")
            if frame.seq != last.seq + 1:
                raise ValueError(
                    f"window seq must be consecutive, got {frame.seq} after {last.seq}"
                )
        return FrameWindow((self.frames + (frame,))[-4:])


def frame_difference(a: Frame, b: Frame, tau: int) -> MotionMask:
    """mask(p) = 1 iff |a(p) - b(p)| > tau (strictly)."""
    if a.format is not PixelFormat.GRAY8 or b.format is not PixelFormat.GRAY8:
        raise FormatError("frame_difference needs GRAY8 frames")
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionError(
            f"dimension mismatch {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    aa = a.to_array().astype(np.int16)
    bb = b.to_array().astype(np.int16)
    return MotionMask.from_array(np.abs(aa - bb) > tau)


def denoise(mask: MotionMask) -> MotionMask:
    """3x3 erosion; out-of-bounds neighbors are ignored.

    A pixel survives only when all of its in-bounds 3x3 neighborhood is
    set, so isolated specks vanish and the output is always a subset of
    the input.
    """
    arr = mask.to_array()
    padded = np.pad(arr, 1, constant_values=True)
    out = np.ones_like(arr)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            out &= padded[dy : dy + arr.shape[0], dx : dx + arr.shape[1]]
    return MotionMask.from_array(out)


def four_frame_mask(window: FrameWindow, cfg: DetectorConfig) -> MotionMask:
    """Combine the window's three difference maps as B0 AND (B1 OR B2)."""
    if not window.warm:
        raise NotReadyError(f"window holds {len(window.frames)} of 4 frames")
    f0, f1, f2, f3 = window.frames
    b0 = frame_difference(f3, f2, cfg.tau).to_array()
    b1 = frame_difference(f2, f1, cfg.tau).to_array()
    b2 = frame_difference(f1, f0, cfg.tau).to_array()
    mask = MotionMask.from_array(b0 & (b1 | b2))
    if cfg.denoise:
        mask = denoise(mask)
    return mask


def motion_ratio(mask: MotionMask) -> float:
    """Fraction of set pixels, in [0, 1]."""
    return mask.popcount / (mask.width * mask.height)


@dataclass(frozen=True)
class BackgroundModel:
    """Running-average reference image; updates by exponential blending."""

    reference: np.ndarray  # float64 (h, w), values in [0, 255]
    alpha: float

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        ref = np.asarray(self.reference, dtype=np.float64)
        ref.setflags(write=False)
        object.__setattr__(self, "reference", ref)

    @classmethod
    def from_frame(cls, frame: Frame, alpha: float) -> "BackgroundModel":
        if frame.format is not PixelFormat.GRAY8:
            raise FormatError("background model needs GRAY8 frames")
        return cls(frame.to_array().astype(np.float64), alpha)


def bg_step(
    model: BackgroundModel, frame: Frame, tau: int
) -> tuple[MotionMask, BackgroundModel]:
    """Compare against the reference, then blend the frame into it."""
    if frame.format is not PixelFormat.GRAY8:
        raise FormatError("bg_step needs GRAY8 frames")
    if frame.to_array().shape != model.reference.shape:
        raise DimensionError("frame does not match background model dimensions")
    pixels = frame.to_array().astype(np.float64)
    mask = MotionMask.from_array(np.abs(pixels - model.reference) > tau)
    updated = (1.0 - model.alpha) * model.reference + model.alpha * pixels
    return mask, BackgroundModel(updated, model.alpha)


# --- Alarm ------------------------------------------------------------------


class AlarmPhase(Enum):
    IDLE = "idle"
    MONITORING = "monitoring"
    ALARM = "alarm"


class AlarmEvent(Enum):
    ALARM_RAISED = "alarm_raised"


def _digest(salt: bytes, password: str) -> bytes:
    return hashlib.sha256(salt + password.encode("utf-8")).digest()


@dataclass(frozen=True)
class AlarmState:
    """Monitoring state with a latched alarm and a salted disarm password."""

    phase: AlarmPhase
    consecutive_hits: int
    salt: bytes
    password_hash: bytes

    @classmethod
    def new(
        cls,
        password: str,
        phase: AlarmPhase = AlarmPhase.IDLE,
        salt: bytes | None = None,
    ) -> "AlarmState":
        salt = os.urandom(16) if salt is None else salt
        return cls(phase, 0, salt, _digest(salt, password))


def arm(state: AlarmState) -> AlarmState:
    """IDLE -> MONITORING with a clean hit counter."""
    if state.phase is not AlarmPhase.IDLE:
        raise AlarmStateError(f"cannot arm from {state.phase.name}")
    return replace(state, phase=AlarmPhase.MONITORING, consecutive_hits=0)


def alarm_step(
    state: AlarmState, mask: MotionMask, cfg: DetectorConfig
) -> tuple[AlarmState, list[AlarmEvent]]:
    """Feed one detection mask to the alarm machine.

    While monitoring, a mask whose motion ratio reaches min_ratio counts
    as a hit; persist_k consecutive hits raise the alarm exactly once.
    Once latched, further masks are ignored.
    """
    if state.phase is AlarmPhase.IDLE:
        raise AlarmStateError("alarm_step requires MONITORING or ALARM phase")
    if state.phase is AlarmPhase.ALARM:
        return state, []
    if motion_ratio(mask) >= cfg.min_ratio:
        hits = state.consecutive_hits + 1
        if hits >= cfg.persist_k:
            return (
                replace(state, phase=AlarmPhase.ALARM, consecutive_hits=hits),
                [AlarmEvent.ALARM_RAISED],
            )
        return replace(state, consecutive_hits=hits), []
    return replace(state, consecutive_hits=0), []


def disarm(state: AlarmState, password: str) -> tuple[AlarmState, bool]:
    """Try to stop monitoring or release a latched alarm.

    Correct password returns (IDLE state, True); a wrong one leaves the
    state untouched and returns (state, False). The comparison is
    constant-time.
    """
    if state.phase is AlarmPhase.IDLE:
        raise AlarmStateError("nothing to disarm in IDLE")
    if hmac.compare_digest(_digest(state.salt, password), state.password_hash):
        return replace(state, phase=AlarmPhase.IDLE, consecutive_hits=0), True
    return state, False


def mask_to_pnm(mask: MotionMask) -> bytes:
    """Debug dump: P5 image with set pixels white."""
    from .imaging import write_pnm

    img = mask.to_array().astype(np.uint8) * 255
    return write_pnm(Frame(mask.width, mask.height, PixelFormat.GRAY8, img.tobytes()))
