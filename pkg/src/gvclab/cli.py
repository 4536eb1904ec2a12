"""Command-line interface: encode, decode, eval, plan, simulate, corpus.

Machine-readable output is JSON written to files (or stdout for plan and
simulate); human summaries go to stderr.  Output files are written to a
temporary sibling and atomically renamed, so failures never leave partial
files.  Exit codes: 0 success, 2 unreadable/malformed input, 3 invalid
configuration or operating point, 4 corrupt bitstream, 5 infeasible budget.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

from .bitstream import measure_bpp, stream_layout
from .channel import run_scenario
from .corpus import GENERATOR_NAMES, generate_sequence, load_manifest
from .errors import (
    ConfigError,
    DecodeError,
    EncodeError,
    GvcError,
    InfeasibleError,
    InvalidArgument,
    ParseError,
    ProfileError,
    SerializeError,
    ShapeError,
    UnsupportedFormat,
)
from .metrics import build_report, report_to_csv
from .pipeline import decode_bitstream, encode_video, roundtrip_eval
from .tokens import OperatingPoint
from .tradeoff import Budget, Resolution, load_ladder, load_profile, select_operating_point
from .video_io import Chroma, parse_y4m, read_raw, write_y4m

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_CORRUPT = 4
EXIT_INFEASIBLE = 5

_RAW_CHROMA = {"420": Chroma.C420, "444": Chroma.C444, "mono": Chroma.GRAY}


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    _atomic_write(path, text.encode("utf-8"))


def _read_input_video(args):
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read input {args.input!r}: {exc}") from exc
    if getattr(args, "raw_size", None):
        try:
            w, h = (int(v) for v in args.raw_size.lower().split("x"))
        except ValueError as exc:
            raise ConfigError(f"bad --raw-size {args.raw_size!r}, expected WxH") from exc
        num, _, den = args.raw_fps.partition(":")
        rate = Fraction(int(num), int(den) if den else 1)
        return read_raw(data, w, h, _RAW_CHROMA[args.raw_chroma], rate)
    return parse_y4m(data)


def _operating_point(args) -> OperatingPoint:
    return OperatingPoint(
        quant_step=args.quant_step,
        spatial_stride=args.spatial_stride,
        temporal_stride=args.temporal_stride,
        descriptor_len=args.descriptor_len,
        refine_iters=args.refine_iters,
        gop_size=args.gop_size,
    )


def _add_operating_point_args(p: argparse.ArgumentParser) -> None:
    d = OperatingPoint()
    p.add_argument("--quant-step", type=float, default=d.quant_step,
                   help=f"quantizer step size (default {d.quant_step})")
    p.add_argument("--spatial-stride", type=int, default=d.spatial_stride,
                   help=f"latent grid spatial stride (default {d.spatial_stride})")
    p.add_argument("--temporal-stride", type=int, default=d.temporal_stride,
                   help=f"latent grid temporal stride (default {d.temporal_stride})")
    p.add_argument("--descriptor-len", type=int, default=d.descriptor_len,
                   help=f"descriptor length (default {d.descriptor_len})")
    p.add_argument("--refine-iters", type=int, default=d.refine_iters,
                   help=f"decoder refinement iterations (default {d.refine_iters})")
    p.add_argument("--gop-size", type=int, default=d.gop_size,
                   help=f"frames per GOP (default {d.gop_size})")


def _add_raw_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--raw-size", metavar="WxH",
                   help="treat input as headerless planar YUV of this size")
    p.add_argument("--raw-chroma", choices=sorted(_RAW_CHROMA), default="420",
                   help="chroma layout for --raw-size input")
    p.add_argument("--raw-fps", default="25", metavar="N[:D]",
                   help="frame rate for --raw-size input")


def cmd_encode(args) -> int:
    video = _read_input_video(args)
    op = _operating_point(args)
    stream, summary = encode_video(video, op, workers=args.workers)
    _atomic_write(Path(args.output), stream)
    print(
        f"{args.input}: {summary.gop_count} GOPs, {summary.discarded_frames} frames "
        f"discarded, {summary.stream_bytes} bytes, {summary.bpp:.6f} bpp",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_decode(args) -> int:
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read input {args.input!r}: {exc}") from exc
    video, reports = decode_bitstream(data, workers=args.workers)
    _atomic_write(Path(args.output), write_y4m(video))
    if args.report:
        _write_json(Path(args.report), {"gops": [asdict(r) for r in reports]})
    worst = max((r.token_consistency_error for r in reports), default=0.0)
    print(
        f"{args.input}: {len(reports)} GOPs, {len(video.frames)} frames, "
        f"max consistency error {worst:.6f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    video = _read_input_video(args)
    op = _operating_point(args)
    name = args.name or Path(args.input).stem
    row, details = roundtrip_eval(video, op, name=name, workers=args.workers)
    report = build_report([row], extra={"details": [details]})
    if args.report:
        _write_json(Path(args.report), report)
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    if args.csv:
        _atomic_write(Path(args.csv), report_to_csv(report).encode("utf-8"))
    print(
        f"{name}: bpp {row.bpp:.6f} ({row.compression_rate_percent:.4f}%), "
        f"PSNR {row.psnr_db:.2f} dB, SSIM {row.ssim:.4f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    profile = load_profile(args.profile, profile_dir=args.profile_dir)
    budget = Budget(
        max_total_latency=args.latency,
        resolution=Resolution.parse(args.resolution),
        max_bpp=args.max_bpp,
    )
    ladder = load_ladder(args.ladder)
    selection = select_operating_point(profile, budget, ladder)
    doc = {
        "profile": profile.name,
        "resolution": budget.resolution.value,
        "rung_index": selection.rung_index,
        "operating_point": asdict(selection.operating_point),
        "predicted_bpp": selection.predicted_bpp,
        "predicted_latency_s": selection.predicted_latency,
        "explanation": selection.explanation,
    }
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    print(
        f"selected rung {selection.rung_index} ({selection.explanation}): "
        f"predicted {selection.predicted_bpp:.6f} bpp, "
        f"{selection.predicted_latency:.3f} s per GOP",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        scenario = json.loads(Path(args.scenario).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read scenario {args.scenario!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed scenario JSON: {exc}") from exc
    layout = None
    if args.stream:
        try:
            layout = stream_layout(Path(args.stream).read_bytes())
        except OSError as exc:
            raise ParseError(f"cannot read stream {args.stream!r}: {exc}") from exc
    report = run_scenario(scenario, stream_layout=layout)
    if args.report:
        _write_json(Path(args.report), report)
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    completion = report["stream"]["completion_time"]
    ratio = report.get("bandwidth_ratio")
    summary = f"completion {completion:.6f} s"
    if ratio is not None:
        summary += f", bandwidth ratio {ratio:.6f}"
    print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_corpus(args) -> int:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.generator:
        if args.seed is None:
            raise ConfigError("--seed is required with --generator")
        w, h = (int(v) for v in args.size.lower().split("x"))
        video = generate_sequence(args.generator, args.seed, w, h, args.frames)
        path = out_dir / f"{args.generator}-{args.seed}.y4m"
        _atomic_write(path, write_y4m(video))
        print(f"wrote {path}", file=sys.stderr)
        return EXIT_OK
    entries = load_manifest(args.manifest)
    for entry in entries:
        path = out_dir / f"{entry.id}.y4m"
        _atomic_write(path, write_y4m(entry.generate()))
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gvc-lab",
        description="Ultra-low-bitrate generative video codec laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="compress a video into a token stream")
    p.add_argument("input", help="input video (.y4m, or raw planar with --raw-size)")
    p.add_argument("-o", "--output", required=True, help="output bitstream path")
    p.add_argument("--workers", type=int, default=1, help="parallel GOP workers")
    _add_operating_point_args(p)
    _add_raw_args(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="reconstruct video from a token stream")
    p.add_argument("input", help="input bitstream path")
    p.add_argument("-o", "--output", required=True, help="output video path (.y4m)")
    p.add_argument("--report", help="write per-GOP reconstruction reports (JSON)")
    p.add_argument("--workers", type=int, default=1, help="parallel GOP workers")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="round-trip encode/decode and score a video")
    p.add_argument("input", help="input video (.y4m, or raw planar with --raw-size)")
    p.add_argument("--name", help="sequence name in the report")
    p.add_argument("--report", help="write the metrics report here (JSON)")
    p.add_argument("--csv", help="also write a per-sequence CSV table")
    p.add_argument("--workers", type=int, default=1, help="parallel GOP workers")
    _add_operating_point_args(p)
    _add_raw_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plan", help="select an operating point for a budget")
    p.add_argument("--profile", required=True, help="hardware profile name")
    p.add_argument("--resolution", required=True, help="480p, 720p, or 1080p")
    p.add_argument("--latency", required=True, type=float,
                   help="max encoder+decoder seconds per GOP")
    p.add_argument("--max-bpp", type=float, help="optional bits/pixel ceiling")
    p.add_argument("--ladder", help="candidate ladder JSON (default: built-in)")
    p.add_argument("--profile-dir", help="directory of profile JSON files "
                                         "(default: $GVC_PROFILE_DIR)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run a channel transmission scenario")
    p.add_argument("scenario", help="scenario JSON path")
    p.add_argument("--stream", help="bitstream file overriding scenario.stream")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("corpus", help="generate synthetic test sequences")
    p.add_argument("output_dir", help="directory for generated .y4m files")
    p.add_argument("--manifest", help="corpus manifest JSON (default: built-in)")
    p.add_argument("--generator", choices=GENERATOR_NAMES,
                   help="generate a single sequence instead of a manifest")
    p.add_argument("--seed", type=int, help="seed for --generator")
    p.add_argument("--size", default="640x360", metavar="WxH",
                   help="geometry for --generator (default 640x360)")
    p.add_argument("--frames", type=int, default=64,
                   help="frame count for --generator (default 64)")
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnsupportedFormat as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except (InvalidArgument, ConfigError, ProfileError, EncodeError,
            SerializeError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GvcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
