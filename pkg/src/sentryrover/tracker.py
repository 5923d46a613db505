"""Color-blob tracking and steering.

Pixels matching a stored reference color are highlighted, summarized by
screen quadrant, and turned into a drive command that keeps the blob
centered: turn while the centroid sits outside a central dead zone, drive
forward inside it, stop when the blob is lost or fills enough of the frame
to count as reached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import Frame, FormatError, PixelFormat, gray_to_rgb, to_gray, write_pnm
from .motion import MotionMask
from .rover import DriveCommand


@dataclass(frozen=True)
class ColorReference:
    """Target color with a Euclidean RGB tolerance."""

    rgb: tuple[int, int, int]
    tolerance: int = 60

    def __post_init__(self) -> None:
        if len(self.rgb) != 3 or any(not 0 <= c <= 255 for c in self.rgb):
            raise ValueError(f"bad reference color {self.rgb}")
        if self.tolerance < 0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass(frozen=True)
class QuadrantReport:
    """Matched-pixel counts per screen quadrant plus the overall centroid.

    counts is (top-left, top-right, bottom-left, bottom-right); centroid
    is None when nothing matched.
    """

    counts: tuple[int, int, int, int]
    total: int
    centroid: tuple[float, float] | None

    def __post_init__(self) -> None:
        if sum(self.counts) != self.total:
            raise ValueError("quadrant counts must sum to total")
        if (self.total > 0) != (self.centroid is not None):
            raise ValueError("centroid must be present exactly when total > 0")


@dataclass(frozen=True)
class TrackerConfig:
    dead_zone_frac: float = 0.10  # half-width of the centered band, as frac of width
    min_pixels: int = 20
    target_fill: float = 0.02

    def __post_init__(self) -> None:
        if not 0 < self.dead_zone_frac < 0.5:
            raise ValueError(f"dead_zone_frac must be in (0, 0.5), got {self.dead_zone_frac}")
        if self.min_pixels < 1:
            raise ValueError(f"min_pixels must be >= 1, got {self.min_pixels}")
        if not 0 < self.target_fill <= 1:
            raise ValueError(f"target_fill must be in (0, 1], got {self.target_fill}")


def match_color(frame: Frame, ref: ColorReference) -> MotionMask:
    """mask(p) = 1 iff squared RGB distance to the reference <= tolerance^2.

    Integer arithmetic throughout, so the boundary is exact.
    """
    if frame.format is not PixelFormat.RGB24:
        raise FormatError(f"match_color needs RGB24 input, got {frame.format.name}")
    rgb = frame.to_array().astype(np.int32)
    r, g, b = ref.rgb
    dist_sq = (rgb[:, :, 0] - r) ** 2 + (rgb[:, :, 1] - g) ** 2 + (rgb[:, :, 2] - b) ** 2
    return MotionMask.from_array(dist_sq <= ref.tolerance * ref.tolerance)


def quadrant_report(mask: MotionMask) -> QuadrantReport:
    """Count matches per quadrant and average their coordinates.

    A pixel belongs to the left half iff x < width // 2 and to the top
    half iff y < height // 2; the boundary column/row of odd sizes goes
    right/bottom.
    """
    arr = mask.to_array()
    ys, xs = np.nonzero(arr)
    total = len(xs)
    if total == 0:
        return QuadrantReport((0, 0, 0, 0), 0, None)
    half_x = mask.width // 2
    half_y = mask.height // 2
    left = xs < half_x
    top = ys < half_y
    counts = (
        int(np.count_nonzero(left & top)),
        int(np.count_nonzero(~left & top)),
        int(np.count_nonzero(left & ~top)),
        int(np.count_nonzero(~left & ~top)),
    )
    centroid = (float(xs.mean()), float(ys.mean()))
    return QuadrantReport(counts, total, centroid)


def steer(
    report: QuadrantReport, width: int, height: int, cfg: TrackerConfig
) -> DriveCommand:
    """Map a quadrant report to a drive command.

    Rules, in order: too few matches -> Stop (lost); blob at target fill
    -> Stop (reached); centroid left of the dead zone -> Left; right of
    it -> Right; otherwise Forward.
    """
    if report.total < cfg.min_pixels:
        return DriveCommand.STOP
    if report.total >= cfg.target_fill * width * height:
        return DriveCommand.STOP
    cx = report.centroid[0]
    center = width / 2.0
    dead = cfg.dead_zone_frac * width
    if cx < center - dead:
        return DriveCommand.LEFT
    if cx > center + dead:
        return DriveCommand.RIGHT
    return DriveCommand.FORWARD


def track_step(
    frame: Frame, ref: ColorReference, cfg: TrackerConfig
) -> tuple[DriveCommand, QuadrantReport, MotionMask]:
    """Full tracking pass: match, summarize, steer."""
    mask = match_color(frame, ref)
    report = quadrant_report(mask)
    command = steer(report, frame.width, frame.height, cfg)
    return command, report, mask


def overlay_frame(frame: Frame, mask: MotionMask) -> Frame:
    """Paint matched pixels pure red over the gray-scaled frame."""
    if (frame.width, frame.height) != (mask.width, mask.height):
        raise ValueError("frame and mask dimensions differ")
    base = frame if frame.format is PixelFormat.RGB24 else gray_to_rgb(frame)
    img = to_gray(base)
    rgb = gray_to_rgb(img).to_array().copy()
    rgb[mask.to_array()] = (255, 0, 0)
    return Frame(
        frame.width,
        frame.height,
        PixelFormat.RGB24,
        rgb.tobytes(),
        frame.timestamp_ms,
        frame.seq,
    )


def overlay_pnm(frame: Frame, mask: MotionMask) -> bytes:
    """Debug dump of overlay_frame as a P6 file."""
    return write_pnm(overlay_frame(frame, mask))
