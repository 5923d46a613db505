"""Command-line interface.

    sentryrover serve --config centre.cfg
    sentryrover analyze --in capture.srseq --out report.tsv [--dump-masks DIR]
    sentryrover trace --scene scene.cfg --color 255,0,0 --tol 60 --out report.tsv
    sentryrover gen-dataset --spec dataset.cfg --seed 7 --out out.srseq

Exit codes: 0 ok, 1 usage, 2 I/O error, 3 configuration error.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys
from pathlib import Path

from dataclasses import replace

from ..imaging import SequenceError, read_srseq, write_srseq
from ..motion import DetectorConfig, mask_to_pnm
from ..tracker import ColorReference, TrackerConfig
from . import ops
from .config import ConfigError, load_centre_config, load_dataset_spec, load_scene
from .report import trajectory_tsv
from .server import Centre

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sentryrover", description="Surveillance rover control centre")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    serve = sub.add_parser("serve", help="run the control-centre service")
    serve.add_argument("--config", required=True, help="service config file")

    analyze = sub.add_parser("analyze", help="run motion detection over a recorded sequence")
    analyze.add_argument("--in", dest="infile", required=True, help="SRSEQ1 sequence")
    analyze.add_argument("--out", required=True, help="report file")
    analyze.add_argument("--dump-masks", help="directory for per-frame mask images")
    analyze.add_argument("--config", help="service config supplying detector settings")

    trace = sub.add_parser("trace", help="closed-loop color tracking in a simulated scene")
    trace.add_argument("--scene", required=True, help="scene file")
    trace.add_argument("--color", required=True, help="reference color R,G,B")
    trace.add_argument("--tol", type=int, default=60, help="color tolerance (default 60)")
    trace.add_argument("--out", required=True, help="report file")
    trace.add_argument("--traj", help="trajectory file (default: <out>.traj)")
    trace.add_argument("--max-steps", type=int, default=300)
    trace.add_argument("--width", type=int, default=320)
    trace.add_argument("--height", type=int, default=240)
    trace.add_argument("--rate", type=float, default=10.0, help="frames per second")

    gen = sub.add_parser("gen-dataset", help="generate a synthetic SRSEQ1 sequence")
    gen.add_argument("--spec", required=True, help="dataset spec file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output sequence file")

    return parser


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _IoFailure(f"cannot read {path}: {e}") from None


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise _IoFailure(f"cannot read {path}: {e}") from None


def _write_bytes(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise _IoFailure(f"cannot write {path}: {e}") from None


class _IoFailure(Exception):
    pass


def apply_env_overrides(cfg):
    """SENTRY_SECRET beats the config file's shared_secret."""
    secret = os.environ.get("SENTRY_SECRET")
    if secret:
        return replace(cfg, shared_secret=secret)
    return cfg


def _cmd_serve(args: argparse.Namespace) -> int:
    cfg = apply_env_overrides(load_centre_config(_read_text(args.config)))
    centre = Centre(cfg)
    try:
        asyncio.run(_serve_until_interrupt(centre))
    except OSError as e:
        print(f"sentryrover: cannot start service: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


async def _serve_until_interrupt(centre: Centre) -> None:
    await centre.start()
    print(
        f"sentryrover: listening on tcp {centre.tcp_port}, bridge {centre.bridge_port}",
        flush=True,
    )
    try:
        await asyncio.Event().wait()
    except asyncio.CancelledError:
        pass
    finally:
        await centre.stop()


def _cmd_analyze(args: argparse.Namespace) -> int:
    detector_cfg = (
        load_centre_config(_read_text(args.config)).detector if args.config else DetectorConfig()
    )
    data = _read_bytes(args.infile)
    try:
        sequence = read_srseq(data)
    except SequenceError as e:
        print(f"sentryrover: bad sequence {args.infile}: {e}", file=sys.stderr)
        return EXIT_IO
    report, masks = ops.analyze(sequence, detector_cfg)
    _write_bytes(args.out, report.to_tsv().encode("utf-8"))
    if args.dump_masks:
        mask_dir = Path(args.dump_masks)
        try:
            mask_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise _IoFailure(f"cannot create {mask_dir}: {e}") from None
        for seq, mask in masks:
            _write_bytes(str(mask_dir / f"mask_{seq:06d}.pgm"), mask_to_pnm(mask))
    return EXIT_OK


def _parse_color(value: str) -> tuple[int, int, int]:
    parts = value.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--color expects R,G,B, got {value!r}")
    try:
        color = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--color expects integers, got {value!r}") from None
    return color


def _cmd_trace(args: argparse.Namespace) -> int:
    scene, pose = load_scene(_read_text(args.scene))
    color_ref = ColorReference(_parse_color(args.color), args.tol)
    report, steps = ops.trace(
        scene,
        pose,
        color_ref,
        TrackerConfig(),
        width=args.width,
        height=args.height,
        frame_rate=args.rate,
        max_steps=args.max_steps,
    )
    _write_bytes(args.out, report.to_tsv().encode("utf-8"))
    traj_path = args.traj or f"{args.out}.traj"
    _write_bytes(traj_path, trajectory_tsv(steps).encode("utf-8"))
    return EXIT_OK


def _cmd_gen_dataset(args: argparse.Namespace) -> int:
    spec = load_dataset_spec(_read_text(args.spec))
    sequence = ops.generate_dataset(spec, args.seed)
    _write_bytes(args.out, write_srseq(sequence))
    return EXIT_OK


_COMMANDS = {
    "serve": _cmd_serve,
    "analyze": _cmd_analyze,
    "trace": _cmd_trace,
    "gen-dataset": _cmd_gen_dataset,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"sentryrover: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except _IoFailure as e:
        print(f"sentryrover: {e}", file=sys.stderr)
        return EXIT_IO
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
