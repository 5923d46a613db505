"""Configuration files.

All config files share one shape: UTF-8 text, one `key=value` per line,
'#' starts a comment, blank lines ignored. Keys for the service config:

    listen_port=8640
    shared_secret=opensesame        # env SENTRY_SECRET overrides
    alarm_password=lockdown
    frame_rate=10
    width=320
    height=240
    watchdog_timeout_ms=2000
    scene_file=scene.cfg            # exactly one of scene_file /
    sequence_file=capture.srseq     # sequence_file for serve
    static_dir=frontend             # optional, console assets
    detector.tau=25
    detector.min_ratio=0.005
    detector.persist_k=2
    detector.denoise=true
    tracker.dead_zone_frac=0.10
    tracker.min_pixels=20
    tracker.target_fill=0.02
    tracker.color=255,0,0
    tracker.tolerance=60

Scene files use `background_gray`, repeatable `object=x,y,radius,R,G,B`
and optional `rover=x,y,heading_deg`. Dataset specs are documented in
load_dataset_spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..imaging import Scene, SceneObject
from ..motion import DetectorConfig
from ..rover import RoverState
from ..tracker import ColorReference, TrackerConfig


class ConfigError(ValueError):
    pass


def parse_kv(text: str) -> list[tuple[str, str]]:
    """Split config text into ordered (key, value) pairs."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        pairs.append((key, value))
    return pairs


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected integer, got {value!r}") from None


def _to_float(key: str, value: str) -> float:
    try:
        f = float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected number, got {value!r}") from None
    if not math.isfinite(f):
        raise ConfigError(f"{key}: value must be finite")
    return f


def _to_bool(key: str, value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected boolean, got {value!r}")


def _to_ints(key: str, value: str, n: int) -> tuple[int, ...]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != n:
        raise ConfigError(f"{key}: expected {n} comma-separated values, got {value!r}")
    return tuple(_to_int(key, p) for p in parts)


@dataclass(frozen=True)
class CentreConfig:
    listen_port: int = 8640
    shared_secret: str = ""
    alarm_password: str = ""
    frame_rate: float = 10.0
    width: int = 320
    height: int = 240
    watchdog_timeout_ms: int = 2000
    scene_file: str | None = None
    sequence_file: str | None = None
    static_dir: str | None = None
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    color_ref: ColorReference = field(default_factory=lambda: ColorReference((255, 0, 0)))

    def __post_init__(self) -> None:
        if self.frame_rate <= 0:
            raise ConfigError(f"frame_rate must be positive, got {self.frame_rate}")
        if self.width < 8 or self.height < 8:
            raise ConfigError(f"frame size must be at least 8x8, got {self.width}x{self.height}")
        if self.watchdog_timeout_ms <= 0:
            raise ConfigError("watchdog_timeout_ms must be positive")


def load_centre_config(text: str) -> CentreConfig:
    kv: dict[str, str] = {}
    for key, value in parse_kv(text):
        if key in kv:
            raise ConfigError(f"duplicate key {key}")
        kv[key] = value

    def take(key: str, default: str | None = None) -> str | None:
        return kv.pop(key, default)

    try:
        detector = DetectorConfig(
            tau=_to_int("detector.tau", take("detector.tau", "25")),
            min_ratio=_to_float("detector.min_ratio", take("detector.min_ratio", "0.005")),
            persist_k=_to_int("detector.persist_k", take("detector.persist_k", "2")),
            denoise=_to_bool("detector.denoise", take("detector.denoise", "true")),
        )
        tracker = TrackerConfig(
            dead_zone_frac=_to_float(
                "tracker.dead_zone_frac", take("tracker.dead_zone_frac", "0.10")
            ),
            min_pixels=_to_int("tracker.min_pixels", take("tracker.min_pixels", "20")),
            target_fill=_to_float("tracker.target_fill", take("tracker.target_fill", "0.02")),
        )
        color = _to_ints("tracker.color", take("tracker.color", "255,0,0"), 3)
        color_ref = ColorReference(color, _to_int("tracker.tolerance", take("tracker.tolerance", "60")))
        cfg = CentreConfig(
            listen_port=_to_int("listen_port", take("listen_port", "8640")),
            shared_secret=take("shared_secret", "") or "",
            alarm_password=take("alarm_password", "") or "",
            frame_rate=_to_float("frame_rate", take("frame_rate", "10")),
            width=_to_int("width", take("width", "320")),
            height=_to_int("height", take("height", "240")),
            watchdog_timeout_ms=_to_int(
                "watchdog_timeout_ms", take("watchdog_timeout_ms", "2000")
            ),
            scene_file=take("scene_file"),
            sequence_file=take("sequence_file"),
            static_dir=take("static_dir"),
            detector=detector,
            tracker=tracker,
            color_ref=color_ref,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if kv:
        raise ConfigError(f"unknown keys: {', '.join(sorted(kv))}")
    return cfg


def load_scene(text: str) -> tuple[Scene, RoverState]:
    """Parse a scene file into the world and the rover start pose."""
    background = 128
    objects: list[SceneObject] = []
    pose = RoverState()
    for key, value in parse_kv(text):
        if key == "background_gray":
            background = _to_int(key, value)
        elif key == "object":
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 6:
                raise ConfigError(f"object: expected x,y,radius,R,G,B, got {value!r}")
            try:
                x, y, radius = (float(p) for p in parts[:3])
                color = tuple(int(p) for p in parts[3:])
                objects.append(SceneObject(x, y, radius, color))
            except ValueError as e:
                raise ConfigError(f"object: {e}") from None
        elif key == "rover":
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"rover: expected x,y,heading_deg, got {value!r}")
            try:
                x, y, hdg = (float(p) for p in parts)
            except ValueError:
                raise ConfigError(f"rover: bad numbers in {value!r}") from None
            pose = RoverState(x=x, y=y, heading=math.radians(hdg))
        else:
            raise ConfigError(f"unknown scene key {key}")
    try:
        scene = Scene(background, tuple(objects))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return scene, pose


@dataclass(frozen=True)
class DatasetSpec:
    """What generate_dataset should produce."""

    kind: str  # "synth" or "scene"
    width: int
    height: int
    frames: int
    noise: int = 0
    # synth
    side: int = 8
    start: tuple[int, int] = (0, 0)
    velocity: tuple[int, int] = (0, 0)
    fg: int = 200
    bg: int = 30
    # scene
    scene: Scene | None = None
    pose: RoverState | None = None
    lights: bool = False
    night_vision: bool = False


def load_dataset_spec(text: str) -> DatasetSpec:
    """Parse a dataset spec.

    `kind=synth` takes width, height, side, start=x,y, velocity=dx,dy,
    frames, fg, bg and noise; `kind=scene` takes width, height, frames,
    noise, lights, night_vision plus the usual scene keys.
    """
    kv: dict[str, str] = {}
    scene_lines: list[str] = []
    for key, value in parse_kv(text):
        if key in ("background_gray", "object", "rover"):
            scene_lines.append(f"{key}={value}")
        elif key in kv:
            raise ConfigError(f"duplicate key {key}")
        else:
            kv[key] = value
    kind = kv.pop("kind", None)
    if kind not in ("synth", "scene"):
        raise ConfigError(f"kind must be synth or scene, got {kind!r}")
    width = _to_int("width", kv.pop("width", "320"))
    height = _to_int("height", kv.pop("height", "240"))
    frames = _to_int("frames", kv.pop("frames", "10"))
    noise = _to_int("noise", kv.pop("noise", "0"))
    if kind == "synth":
        spec = DatasetSpec(
            kind="synth",
            width=width,
            height=height,
            frames=frames,
            noise=noise,
            side=_to_int("side", kv.pop("side", "8")),
            start=_to_ints("start", kv.pop("start", "0,0"), 2),
            velocity=_to_ints("velocity", kv.pop("velocity", "0,0"), 2),
            fg=_to_int("fg", kv.pop("fg", "200")),
            bg=_to_int("bg", kv.pop("bg", "30")),
        )
    else:
        scene, pose = load_scene("\n".join(scene_lines))
        spec = DatasetSpec(
            kind="scene",
            width=width,
            height=height,
            frames=frames,
            noise=noise,
            scene=scene,
            pose=pose,
            lights=_to_bool("lights", kv.pop("lights", "false")),
            night_vision=_to_bool("night_vision", kv.pop("night_vision", "false")),
        )
        scene_lines = []
    if kv:
        raise ConfigError(f"unknown keys: {', '.join(sorted(kv))}")
    if scene_lines and kind == "synth":
        raise ConfigError("scene keys are not allowed in a synth spec")
    return spec
