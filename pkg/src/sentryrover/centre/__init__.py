"""Control-centre service, batch operations and CLI."""

from .config import CentreConfig, ConfigError, DatasetSpec, load_centre_config, load_dataset_spec, load_scene
from .ops import analyze, generate_dataset, trace
from .report import FrameRecord, RunReport, TraceStep
from .server import Centre

__all__ = [
    "Centre",
    "CentreConfig",
    "ConfigError",
    "DatasetSpec",
    "FrameRecord",
    "RunReport",
    "TraceStep",
    "analyze",
    "generate_dataset",
    "load_centre_config",
    "load_dataset_spec",
    "load_scene",
    "trace",
]
