"""Run reports: one record per processed frame plus a summary.

Reports render as tab-separated text with '#'-prefixed header, warning
and summary lines so two runs can be compared with a plain diff. Missing
values print as '-'. Rendering is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..protocol import Mode
from ..rover import DriveCommand

MODE_LABELS = {
    Mode.PC_CONTROL: "pc-control",
    Mode.INTERNET_CONTROL: "internet-control",
    Mode.TRACING: "tracing",
    Mode.MOTION_DETECTION: "motion-detection",
}

_REPORT_HEADER = "# sentryrover report v1"
_COLUMNS = "# seq\tmode\tmotion_ratio\tcommand\talarm_phase"


@dataclass(frozen=True)
class FrameRecord:
    seq: int
    mode: str
    motion_ratio: float | None = None
    command: str | None = None
    alarm_phase: str | None = None

    def render(self) -> str:
        ratio = "-" if self.motion_ratio is None else f"{self.motion_ratio:.6f}"
        return "\t".join(
            (
                str(self.seq),
                self.mode,
                ratio,
                self.command or "-",
                self.alarm_phase or "-",
            )
        )


@dataclass
class RunReport:
    records: list[FrameRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    alarm_seqs: list[int] = field(default_factory=list)
    stop_reason: str | None = None

    def add(self, record: FrameRecord) -> None:
        self.records.append(record)

    def command_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for cmd in DriveCommand:
            n = sum(1 for r in self.records if r.command == cmd.name)
            if n:
                counts[cmd.name] = n
        return counts

    def to_tsv(self) -> str:
        lines = [_REPORT_HEADER, _COLUMNS]
        lines.extend(r.render() for r in self.records)
        for w in self.warnings:
            lines.append(f"# warning\t{w}")
        counts = ",".join(f"{k}:{v}" for k, v in self.command_counts().items()) or "-"
        alarm_seqs = ",".join(str(s) for s in self.alarm_seqs) or "-"
        summary = (
            f"# summary\tframes={len(self.records)}"
            f"\talarms={len(self.alarm_seqs)}"
            f"\talarm_seqs={alarm_seqs}"
            f"\tcommands={counts}"
        )
        if self.stop_reason is not None:
            summary += f"\tstop={self.stop_reason}"
        lines.append(summary)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TraceStep:
    """One closed-loop tracking step: pose before stepping, then the decision."""

    step: int
    x: float
    y: float
    heading: float
    cx: float | None
    cy: float | None
    total: int
    command: str

    def render(self) -> str:
        cx = "-" if self.cx is None else f"{self.cx:.3f}"
        cy = "-" if self.cy is None else f"{self.cy:.3f}"
        return "\t".join(
            (
                str(self.step),
                f"{self.x:.6f}",
                f"{self.y:.6f}",
                f"{self.heading:.6f}",
                cx,
                cy,
                str(self.total),
                self.command,
            )
        )


def trajectory_tsv(steps: list[TraceStep]) -> str:
    lines = ["# sentryrover trajectory v1", "# step\tx\ty\theading\tcx\tcy\ttotal\tcommand"]
    lines.extend(s.render() for s in steps)
    return "\n".join(lines) + "\n"
