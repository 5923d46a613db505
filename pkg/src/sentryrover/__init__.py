"""Surveillance rover toolkit.

Pure-software rebuild of a camera-equipped teleoperated rover: frame
pipeline, motion detection with an alarm latch, color-blob tracking,
a byte-exact serial command codec, a framed TCP control protocol, and
the control-centre service that ties them together.
"""

__version__ = "0.1.0"

from .imaging import Frame, FrameSequence, PixelFormat, Scene, SceneObject
from .motion import AlarmPhase, AlarmState, DetectorConfig, FrameWindow, MotionMask
from .rover import AuxCommand, DriveCommand, RoverState
from .tracker import ColorReference, QuadrantReport, TrackerConfig

__all__ = [
    "AlarmPhase",
    "AlarmState",
    "AuxCommand",
    "ColorReference",
    "DetectorConfig",
    "DriveCommand",
    "Frame",
    "FrameSequence",
    "FrameWindow",
    "MotionMask",
    "PixelFormat",
    "QuadrantReport",
    "RoverState",
    "Scene",
    "SceneObject",
    "TrackerConfig",
]
