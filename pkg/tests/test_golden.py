"""Committed-bitstream compatibility guard.

The fixture pins the on-disk format: byte layout, entropy tables, residual
chaining, and the decoder's output for a fixed input.  If an intentional
format change invalidates it, regenerate with the encode below and bump the
container version.
"""

import hashlib
from fractions import Fraction
from pathlib import Path

from gvclab import Chroma, OperatingPoint
from gvclab.bitstream import deserialize_stream
from gvclab.corpus import generate_sequence
from gvclab.pipeline import decode_bitstream, encode_video
from gvclab.video_io import write_y4m

GOLDEN = Path(__file__).parent / "golden" / "gradient-64x48.gvc"
GOLDEN_OP = OperatingPoint(
    quant_step=4.0,
    spatial_stride=8,
    temporal_stride=2,
    descriptor_len=8,
    refine_iters=2,
    gop_size=6,
)
DECODED_SHA256 = "216247b30cfd6af5574ebd2b03f064a2424f3e3ed985aff9ef24841ac57f1c5b"


def source_video():
    return generate_sequence("moving-gradient", seed=21, width=64, height=48, n_frames=13)


def test_encode_reproduces_golden_bytes():
    stream, summary = encode_video(source_video(), GOLDEN_OP)
    assert stream == GOLDEN.read_bytes()
    assert summary.gop_count == 2
    assert summary.discarded_frames == 1


def test_golden_header_fields():
    tokens, info = deserialize_stream(GOLDEN.read_bytes())
    assert (info.width, info.height) == (64, 48)
    assert info.frame_rate == Fraction(25, 1)
    assert info.chroma is Chroma.GRAY
    assert info.gop_count == 2
    assert info.operating_point == GOLDEN_OP
    assert len(tokens) == 2


def test_golden_decodes_to_pinned_frames():
    decoded, reports = decode_bitstream(GOLDEN.read_bytes())
    digest = hashlib.sha256(write_y4m(decoded)).hexdigest()
    assert digest == DECODED_SHA256
    assert [r.iterations_run for r in reports] == [2, 2]
