import math
import random

import numpy as np
import pytest

from sentryrover.imaging import Frame, FormatError, PixelFormat, Scene, SceneObject, render_scene
from sentryrover.motion import MotionMask
from sentryrover.rover import DriveCommand, RoverState
from sentryrover.tracker import (
    ColorReference,
    QuadrantReport,
    TrackerConfig,
    match_color,
    overlay_frame,
    overlay_pnm,
    quadrant_report,
    steer,
    track_step,
)

RED = ColorReference((255, 0, 0))


def rgb_frame(pixels, w, h):
    return Frame(w, h, PixelFormat.RGB24, bytes(pixels), 0, 0)


def one_pixel(r, g, b):
    return rgb_frame([r, g, b], 1, 1)


def test_match_exact_color():
    assert match_color(one_pixel(255, 0, 0), RED).bits == b"\x01"


def test_match_tolerance_boundary():
    # distance 55 is inside tol 60, 75 is outside
    assert match_color(one_pixel(200, 0, 0), RED).bits == b"\x01"
    assert match_color(one_pixel(180, 0, 0), RED).bits == b"\x00"
    # squared comparison is exact at the boundary
    assert match_color(one_pixel(195, 0, 0), RED).bits == b"\x01"  # distance 60


def test_match_rejects_gray():
    with pytest.raises(FormatError):
        match_color(Frame(1, 1, PixelFormat.GRAY8, b"\x00"), RED)


def test_match_is_pixel_local():
    rng = random.Random(5)
    base = [rng.randrange(256) for _ in range(4 * 4 * 3)]
    f = rgb_frame(base, 4, 4)
    before = match_color(f, RED).bits
    for trial in range(10):
        i = rng.randrange(16)
        changed = list(base)
        for c in range(3):
            changed[i * 3 + c] = rng.randrange(256)
        after = match_color(rgb_frame(changed, 4, 4), RED).bits
        diff = [j for j in range(16) if before[j] != after[j]]
        assert diff in ([], [i])


def mask_of(rows):
    return MotionMask.from_array(np.array(rows, dtype=bool))


def test_quadrant_single_corner_pixel():
    m = mask_of([[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])
    rep = quadrant_report(m)
    assert rep.counts == (1, 0, 0, 0)
    assert rep.total == 1
    assert rep.centroid == (0.0, 0.0)


def test_quadrant_all_ones():
    m = MotionMask.from_array(np.ones((4, 4), dtype=bool))
    rep = quadrant_report(m)
    assert rep.counts == (4, 4, 4, 4)
    assert rep.centroid == (1.5, 1.5)


def test_quadrant_empty():
    rep = quadrant_report(MotionMask.from_array(np.zeros((4, 4), dtype=bool)))
    assert rep.total == 0
    assert rep.centroid is None
    assert rep.counts == (0, 0, 0, 0)


def test_quadrant_boundary_goes_right_bottom():
    # odd 5x5: the middle column/row (index 2) belongs to right/bottom
    arr = np.zeros((5, 5), dtype=bool)
    arr[2, 2] = True
    rep = quadrant_report(MotionMask.from_array(arr))
    assert rep.counts == (0, 0, 0, 1)


def test_quadrant_counts_sum_to_popcount():
    rng = random.Random(7)
    for _ in range(50):
        arr = np.array([[rng.random() < 0.3 for _ in range(9)] for _ in range(6)])
        m = MotionMask.from_array(arr)
        rep = quadrant_report(m)
        assert sum(rep.counts) == rep.total == m.popcount


def report_at(cx, total, w=320, h=240):
    # synthetic report; counts split irrelevant for steer
    return QuadrantReport((total, 0, 0, 0), total, (cx, h / 2) if total else None)


def test_steer_rules_in_order():
    cfg = TrackerConfig()
    w, h = 320, 240
    assert steer(report_at(None, 0), w, h, cfg) is DriveCommand.STOP  # lost
    assert steer(report_at(80.0, 500), w, h, cfg) is DriveCommand.LEFT
    assert steer(report_at(160.0, 500), w, h, cfg) is DriveCommand.FORWARD
    assert steer(report_at(240.0, 500), w, h, cfg) is DriveCommand.RIGHT
    assert steer(report_at(160.0, 2000), w, h, cfg) is DriveCommand.STOP  # reached


def test_steer_thresholds_exact():
    cfg = TrackerConfig()
    w, h = 320, 240
    assert steer(report_at(160.0, 19), w, h, cfg) is DriveCommand.STOP  # < min_pixels
    assert steer(report_at(160.0, 20), w, h, cfg) is DriveCommand.FORWARD
    fill = int(cfg.target_fill * w * h)  # 1536
    assert steer(report_at(160.0, fill - 1), w, h, cfg) is DriveCommand.FORWARD
    assert steer(report_at(160.0, fill), w, h, cfg) is DriveCommand.STOP
    # dead zone boundaries at 160 +- 32, strict comparisons
    assert steer(report_at(128.0, 100), w, h, cfg) is DriveCommand.FORWARD
    assert steer(report_at(127.9, 100), w, h, cfg) is DriveCommand.LEFT
    assert steer(report_at(192.0, 100), w, h, cfg) is DriveCommand.FORWARD
    assert steer(report_at(192.1, 100), w, h, cfg) is DriveCommand.RIGHT


def test_steer_total_function_over_grid():
    cfg = TrackerConfig()
    w, h = 320, 240
    for total in (0, 19, 20, 500, 1535, 1536, 5000):
        for cx10 in range(0, w * 10, 7):
            rep = report_at(cx10 / 10.0, total)
            cmd = steer(rep, w, h, cfg)
            assert cmd in (
                DriveCommand.STOP,
                DriveCommand.LEFT,
                DriveCommand.RIGHT,
                DriveCommand.FORWARD,
            )


def test_steer_mirror_property():
    # flipped mask swaps Left/Right; Forward/Stop are fixed points. Pixel
    # mirroring is about (w-1)/2 while the dead zone is centered at w/2, so
    # centroids within half a pixel of a boundary are excluded.
    rng = random.Random(13)
    cfg = TrackerConfig(min_pixels=1)
    w, h = 32, 16
    swap = {
        DriveCommand.LEFT: DriveCommand.RIGHT,
        DriveCommand.RIGHT: DriveCommand.LEFT,
        DriveCommand.FORWARD: DriveCommand.FORWARD,
        DriveCommand.STOP: DriveCommand.STOP,
    }
    tried = 0
    for _ in range(300):
        arr = np.array([[rng.random() < 0.05 for _ in range(w)] for _ in range(h)])
        rep = quadrant_report(MotionMask.from_array(arr))
        if rep.centroid is not None:
            cx = rep.centroid[0]
            for boundary in (w / 2 - cfg.dead_zone_frac * w, w / 2 + cfg.dead_zone_frac * w):
                if abs(cx - boundary) < 1.0:
                    break
            else:
                boundary = None
            if boundary is not None:
                continue
        flipped = quadrant_report(MotionMask.from_array(arr[:, ::-1]))
        cmd = steer(rep, w, h, cfg)
        mirrored = steer(flipped, w, h, cfg)
        assert mirrored is swap[cmd]
        tried += 1
    assert tried > 100


def test_track_step_empty_frame():
    f = rgb_frame([0, 0, 255] * 16, 4, 4)
    cmd, rep, mask = track_step(f, RED, TrackerConfig())
    assert cmd is DriveCommand.STOP
    assert rep.total == 0
    assert mask.popcount == 0


def test_track_step_rendered_ball_left_of_center():
    # ball at screen bearing -20 degrees: centroid at w/2*(1 - 20/30)
    d = 3.0
    scene = Scene(
        96, (SceneObject(d * math.cos(math.radians(20)), d * math.sin(math.radians(20)), 0.5, (255, 0, 0)),)
    )
    frame = render_scene(scene, RoverState(), 640, 480)
    cmd, rep, _ = track_step(frame, RED, TrackerConfig())
    assert cmd is DriveCommand.LEFT
    expected_cx = 320.0 * (1.0 - 20.0 / 30.0)
    assert rep.centroid[0] == pytest.approx(expected_cx, abs=1.0)


def test_track_step_ball_dead_ahead_goes_forward():
    scene = Scene(96, (SceneObject(3.0, 0.0, 0.2, (255, 0, 0)),))
    frame = render_scene(scene, RoverState(), 320, 240)
    cmd, rep, _ = track_step(frame, RED, TrackerConfig())
    assert cmd is DriveCommand.FORWARD
    assert rep.centroid[0] == pytest.approx(160.0, abs=0.5)


def test_overlay_paints_matches_red():
    f = rgb_frame([255, 0, 0, 10, 20, 30], 2, 1)
    mask = match_color(f, RED)
    over = overlay_frame(f, mask)
    arr = over.to_array()
    assert tuple(arr[0, 0]) == (255, 0, 0)
    luma = (77 * 10 + 150 * 20 + 29 * 30) >> 8
    assert tuple(arr[0, 1]) == (luma, luma, luma)
    assert overlay_pnm(f, mask).startswith(b"P6\n2 1\n255\n")
