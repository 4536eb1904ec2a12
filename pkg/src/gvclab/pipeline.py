"""End-to-end encode / decode / evaluate orchestration.

Per-GOP work is independent on both sides of the channel, so it fans out over
a thread pool when workers > 1; results are assembled in container order, so
outputs are byte-identical for any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .bitstream import deserialize_stream, measure_bpp, serialize_stream
from .decoder import ReconstructionReport, decode_gop
from .errors import EncodeError, InvalidArgument
from .metrics import SequenceMetrics, compression_rate, psnr, ssim
from .tokens import CompressedTokens, OperatingPoint, encode_gop
from .video_io import VideoSequence, segment_gops


@dataclass(frozen=True)
class EncodeSummary:
    gop_count: int
    coded_frames: int
    discarded_frames: int
    stream_bytes: int
    bpp: float


def _map_in_order(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def encode_video(
    video: VideoSequence, op: OperatingPoint, workers: int = 1
) -> tuple[bytes, EncodeSummary]:
    """Segment, tokenize, and serialize a sequence at one operating point."""
    if workers < 1:
        raise InvalidArgument("workers must be >= 1")
    gops = segment_gops(video, op.gop_size)
    if not gops:
        raise EncodeError(
            f"input has {len(video.frames)} frames, fewer than one GOP of {op.gop_size}"
        )
    tokens = _map_in_order(lambda g: encode_gop(g, op), gops, workers)
    stream = serialize_stream(
        tokens, video.width, video.height, video.frame_rate, video.chroma
    )
    coded = len(gops) * op.gop_size
    summary = EncodeSummary(
        gop_count=len(gops),
        coded_frames=coded,
        discarded_frames=len(video.frames) - coded,
        stream_bytes=len(stream),
        bpp=measure_bpp(stream, video.width, video.height, coded),
    )
    return stream, summary


def decode_bitstream(
    data: bytes, workers: int = 1
) -> tuple[VideoSequence, list[ReconstructionReport]]:
    """Deserialize and reconstruct every GOP of a stream."""
    if workers < 1:
        raise InvalidArgument("workers must be >= 1")
    tokens_list, info = deserialize_stream(data)

    def _decode(pair: tuple[int, CompressedTokens]):
        index, tokens = pair
        return decode_gop(tokens, info.width, info.height, info.chroma, gop_index=index)

    results = _map_in_order(_decode, list(enumerate(tokens_list)), workers)
    frames = [f for gop, _ in results for f in gop.frames]
    video = VideoSequence(
        width=info.width,
        height=info.height,
        frame_rate=info.frame_rate,
        chroma=info.chroma,
        frames=frames,
    )
    return video, [report for _, report in results]


def roundtrip_eval(
    video: VideoSequence, op: OperatingPoint, name: str = "sequence", workers: int = 1
) -> tuple[SequenceMetrics, dict]:
    """Encode, decode, and score one sequence.

    Quality is measured against the coded frames only (trailing frames that do
    not fill a GOP are discarded before encoding).  Returns the per-sequence
    metrics row and a details dict with per-GOP reconstruction reports.
    """
    t0 = time.perf_counter()
    stream, summary = encode_video(video, op, workers=workers)
    t1 = time.perf_counter()
    decoded, reports = decode_bitstream(stream, workers=workers)
    t2 = time.perf_counter()

    reference = VideoSequence(
        width=video.width,
        height=video.height,
        frame_rate=video.frame_rate,
        chroma=video.chroma,
        frames=list(video.frames[: summary.coded_frames]),
    )
    row = SequenceMetrics(
        name=name,
        bpp=summary.bpp,
        compression_rate_percent=compression_rate(summary.bpp),
        psnr_db=psnr(reference, decoded),
        ssim=ssim(reference, decoded),
        coded_frames=summary.coded_frames,
        discarded_frames=summary.discarded_frames,
    )
    details = {
        "name": name,
        "stream_bytes": summary.stream_bytes,
        "gop_count": summary.gop_count,
        "reconstruction": [
            {
                "gop_index": r.gop_index,
                "iterations_run": r.iterations_run,
                "token_consistency_error": r.token_consistency_error,
                "wall_time": r.wall_time,
            }
            for r in reports
        ],
        "wall_time_encode": t1 - t0,
        "wall_time_decode": t2 - t1,
    }
    return row, details
