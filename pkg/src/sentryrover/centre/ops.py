"""Headless batch operations: analyze, trace, dataset generation.

These run the same building blocks as the live service but on a
simulated clock, so identical inputs always give byte-identical outputs.
"""

from __future__ import annotations

from .. import imaging, motion, tracker
from ..imaging import Frame, FrameSequence, PixelFormat, Scene
from ..motion import AlarmPhase, DetectorConfig, MotionMask
from ..protocol import Mode
from ..rover import DriveCommand, RoverState, apply_command, decode_packet, encode_packet, step
from ..tracker import ColorReference, TrackerConfig
from .config import ConfigError, DatasetSpec
from .report import MODE_LABELS, FrameRecord, RunReport, TraceStep


def analyze(
    sequence: FrameSequence,
    cfg: DetectorConfig,
    password: str = "analyze",
) -> tuple[RunReport, list[tuple[int, MotionMask]]]:
    """Run the monitoring pipeline over a recorded sequence.

    Returns the per-frame report and the detection masks keyed by frame
    seq (masks exist only once the four-frame window is warm).
    """
    report = RunReport()
    masks: list[tuple[int, MotionMask]] = []
    window = motion.FrameWindow.empty()
    alarm = motion.AlarmState.new(password, AlarmPhase.MONITORING)
    label = MODE_LABELS[Mode.MOTION_DETECTION]
    for frame in sequence:
        gray = imaging.to_gray(frame) if frame.format is PixelFormat.RGB24 else frame
        window = window.push(gray)
        ratio: float | None = None
        if window.warm:
            mask = motion.four_frame_mask(window, cfg)
            masks.append((frame.seq, mask))
            ratio = motion.motion_ratio(mask)
            alarm, events = motion.alarm_step(alarm, mask, cfg)
            if events:
                report.alarm_seqs.append(frame.seq)
        report.add(
            FrameRecord(
                seq=frame.seq,
                mode=label,
                motion_ratio=ratio,
                alarm_phase=alarm.phase.value,
            )
        )
    if len(sequence) < 4:
        report.warnings.append(
            f"sequence has {len(sequence)} frames; the detector needs 4 to warm up"
        )
    return report, masks


def trace(
    scene: Scene,
    start_pose: RoverState,
    color_ref: ColorReference,
    tracker_cfg: TrackerConfig,
    width: int = 320,
    height: int = 240,
    frame_rate: float = 10.0,
    max_steps: int = 300,
) -> tuple[RunReport, list[TraceStep]]:
    """Close the loop: render, track, steer, drive, repeat.

    Stops when the tracker reports the object reached or lost, or after
    max_steps. Every command passes through the serial codec, exactly as
    on the live command link.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    report = RunReport()
    steps: list[TraceStep] = []
    rover_state = start_pose
    dt = 1.0 / frame_rate
    label = MODE_LABELS[Mode.TRACING]
    for t in range(max_steps):
        frame = imaging.render_scene(
            scene,
            rover_state,
            width,
            height,
            lights=rover_state.lights,
            night_vision=rover_state.night_vision,
            timestamp_ms=round(t * dt * 1000),
            seq=t,
        )
        command, rep, mask = tracker.track_step(frame, color_ref, tracker_cfg)
        cx, cy = rep.centroid if rep.centroid is not None else (None, None)
        steps.append(
            TraceStep(
                t,
                rover_state.x,
                rover_state.y,
                rover_state.heading,
                cx,
                cy,
                rep.total,
                command.name,
            )
        )
        report.add(
            FrameRecord(
                seq=t,
                mode=label,
                motion_ratio=motion.motion_ratio(mask),
                command=command.name,
            )
        )
        rover_state = apply_command(
            rover_state, decode_packet(encode_packet(command)), round(t * dt * 1000)
        )
        if command is DriveCommand.STOP:
            report.stop_reason = "lost" if rep.total < tracker_cfg.min_pixels else "reached"
            break
        rover_state = step(rover_state, dt)
    else:
        report.stop_reason = "max-steps"
    return report, steps


def generate_dataset(spec: DatasetSpec, seed: int = 0) -> FrameSequence:
    """Produce a frame sequence from a dataset spec, deterministically."""
    if spec.kind == "synth":
        try:
            seq = imaging.synth_motion_sequence(
                spec.width,
                spec.height,
                spec.side,
                spec.start,
                spec.velocity,
                spec.frames,
                fg=spec.fg,
                bg=spec.bg,
            )
        except imaging.ParameterError as e:
            raise ConfigError(str(e)) from None
    elif spec.kind == "scene":
        frames = []
        for t in range(spec.frames):
            frame = imaging.render_scene(
                spec.scene,
                spec.pose,
                spec.width,
                spec.height,
                lights=spec.lights,
                night_vision=spec.night_vision,
                timestamp_ms=t * 100,
                seq=t,
            )
            frames.append(frame)
        seq = FrameSequence(tuple(frames))
    else:
        raise ConfigError(f"unknown dataset kind {spec.kind!r}")
    return imaging.add_noise(seq, spec.noise, seed)
