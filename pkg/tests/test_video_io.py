"""Y4M parsing/serialization, raw input, and GOP segmentation."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvclab import Chroma, InvalidArgument, ParseError, TruncationError, UnsupportedFormat
from gvclab.video_io import frames_equal, parse_y4m, read_raw, segment_gops, write_y4m

from conftest import make_gray_video


def test_parse_minimal_c420():
    data = b"YUV4MPEG2 W4 H4 F25:1 C420\nFRAME\n" + bytes(range(24))
    video = parse_y4m(data)
    assert (video.width, video.height) == (4, 4)
    assert video.frame_rate == Fraction(25, 1)
    assert video.chroma is Chroma.C420
    assert len(video.frames) == 1
    y, u, v = video.frames[0].planes
    assert y.shape == (4, 4) and u.shape == (2, 2) and v.shape == (2, 2)
    assert y.ravel().tolist() == list(range(16))
    assert u.ravel().tolist() == list(range(16, 20))
    assert v.ravel().tolist() == list(range(20, 24))


def test_parse_mono_and_c444():
    mono = parse_y4m(b"YUV4MPEG2 W3 H2 F30:1 Cmono\nFRAME\n" + bytes(6))
    assert mono.chroma is Chroma.GRAY
    assert len(mono.frames[0].planes) == 1
    assert mono.frames[0].planes[0].shape == (2, 3)

    full = parse_y4m(b"YUV4MPEG2 W2 H2 F24:1 C444\nFRAME\n" + bytes(12))
    assert full.chroma is Chroma.C444
    assert all(p.shape == (2, 2) for p in full.frames[0].planes)


@pytest.mark.parametrize("tag", ["C420", "C420jpeg", "C420paldv", "C420mpeg2"])
def test_c420_variants_collapse(tag):
    video = parse_y4m(f"YUV4MPEG2 W4 H4 F25:1 {tag}\nFRAME\n".encode() + bytes(24))
    assert video.chroma is Chroma.C420


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_y4m(b"JUNK W4 H4\n")
    with pytest.raises(ParseError):
        parse_y4m(b"YUV4MPEG2 H4 F25:1\nFRAME\n" + bytes(24))
    with pytest.raises(UnsupportedFormat):
        parse_y4m(b"YUV4MPEG2 W4 H4 F25:1 C422\nFRAME\n" + bytes(32))


def test_truncated_frame_reports_offset():
    data = b"YUV4MPEG2 W4 H4 F25:1 C420\nFRAME\n" + bytes(24)
    trunc = data[:-5]
    with pytest.raises(TruncationError) as exc:
        parse_y4m(trunc)
    assert exc.value.byte_offset == len(trunc)
    assert isinstance(exc.value, ParseError)


def test_write_then_parse_is_identity():
    rng = np.random.default_rng(3)
    video = make_gray_video(rng.integers(0, 256, size=(5, 6, 8), dtype=np.uint8))
    out = write_y4m(video)
    back = parse_y4m(out)
    assert (back.width, back.height, back.frame_rate, back.chroma) == (
        video.width,
        video.height,
        video.frame_rate,
        video.chroma,
    )
    assert frames_equal(video.frames, back.frames)


@settings(max_examples=25, deadline=None)
@given(
    w=st.integers(1, 12),
    h=st.integers(1, 12),
    n=st.integers(1, 4),
    num=st.integers(1, 60),
    den=st.integers(1, 3),
    seed=st.integers(0, 2**31),
)
def test_roundtrip_property_gray(w, h, n, num, den, seed):
    rng = np.random.default_rng(seed)
    video = make_gray_video(
        rng.integers(0, 256, size=(n, h, w), dtype=np.uint8),
        rate=Fraction(num, den),
    )
    back = parse_y4m(write_y4m(video))
    assert back.frame_rate == Fraction(num, den)
    assert frames_equal(video.frames, back.frames)


def test_roundtrip_c420_planes():
    data = b"YUV4MPEG2 W6 H4 F25:1 C420\nFRAME\n" + bytes(range(36)) + b"FRAME\n" + bytes(range(100, 136))
    video = parse_y4m(data)
    assert parse_y4m(write_y4m(video)).frames[1].planes[2].ravel().tolist() == list(range(130, 136))


def test_read_raw_gray():
    video = read_raw(bytes(range(12)), 3, 2, Chroma.GRAY, Fraction(25, 1))
    assert len(video.frames) == 2
    assert video.frames[1].planes[0].ravel().tolist() == list(range(6, 12))


def test_read_raw_misaligned():
    with pytest.raises(TruncationError):
        read_raw(bytes(13), 3, 2, Chroma.GRAY, Fraction(25, 1))


@pytest.mark.parametrize(
    "n_frames,gops,discarded",
    [(28, 0, 28), (29, 1, 0), (30, 1, 1), (57, 1, 28), (58, 2, 0), (64, 2, 6)],
)
def test_segmentation_counts(n_frames, gops, discarded):
    video = make_gray_video(np.zeros((n_frames, 4, 4), dtype=np.uint8))
    out = segment_gops(video, gop_size=29)
    assert len(out) == gops
    assert n_frames - sum(len(g.frames) for g in out) == discarded
    for i, gop in enumerate(out):
        assert gop.index == i
        assert gop.gop_size == 29
        assert len(gop.frames) == 29


def test_segmentation_preserves_frame_order():
    stack = np.arange(8, dtype=np.uint8).reshape(8, 1, 1) * 10
    video = make_gray_video(stack)
    out = segment_gops(video, gop_size=3)
    assert [f.planes[0][0, 0] for g in out for f in g.frames] == [0, 10, 20, 30, 40, 50]


def test_segmentation_rejects_bad_size():
    video = make_gray_video(np.zeros((4, 2, 2), dtype=np.uint8))
    with pytest.raises(InvalidArgument):
        segment_gops(video, gop_size=0)
