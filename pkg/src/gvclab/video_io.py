"""Raw planar video: Y4M parsing/writing and GOP segmentation.

Samples are 8-bit throughout.  Supported chroma layouts are 4:2:0, 4:4:4 and
luma-only; trailing frames that do not fill a whole GOP are dropped by
``segment_gops`` (the caller is expected to report the discard count).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import InvalidArgument, ParseError, TruncationError, UnsupportedFormat

DEFAULT_GOP_SIZE = 29

Y4M_MAGIC = b"YUV4MPEG2"

# Y4M tag -> canonical chroma.  Writing always emits the first tag of each family.
_CHROMA_TAGS = {
    "420": "C420",
    "420jpeg": "C420",
    "420mpeg2": "C420",
    "420paldv": "C420",
    "444": "C444",
    "mono": "GRAY",
}
_CANONICAL_TAG = {"C420": "420", "C444": "444", "GRAY": "mono"}


class Chroma(enum.Enum):
    C420 = "C420"
    C444 = "C444"
    GRAY = "GRAY"

    def plane_shapes(self, width: int, height: int) -> tuple[tuple[int, int], ...]:
        """Per-plane (rows, cols) for a frame of the given luma geometry."""
        if self is Chroma.GRAY:
            return ((height, width),)
        if self is Chroma.C444:
            return ((height, width),) * 3
        return ((height, width), (height // 2, width // 2), (height // 2, width // 2))


@dataclass(frozen=True)
class Frame:
    """One frame as a tuple of uint8 planes (luma first)."""

    planes: tuple[np.ndarray, ...]

    @property
    def luma(self) -> np.ndarray:
        return self.planes[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return len(self.planes) == len(other.planes) and all(
            np.array_equal(a, b) for a, b in zip(self.planes, other.planes)
        )


@dataclass
class VideoSequence:
    width: int
    height: int
    frame_rate: Fraction
    chroma: Chroma
    frames: list[Frame] = field(default_factory=list)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidArgument(f"geometry must be positive, got {self.width}x{self.height}")
        if self.frame_rate <= 0:
            raise InvalidArgument(f"frame rate must be positive, got {self.frame_rate}")
        if self.chroma is Chroma.C420 and (self.width % 2 or self.height % 2):
            raise InvalidArgument(
                f"4:2:0 requires even dimensions, got {self.width}x{self.height}"
            )
        if not self.frames:
            raise InvalidArgument("a video sequence needs at least one frame")
        shapes = self.chroma.plane_shapes(self.width, self.height)
        for i, frame in enumerate(self.frames):
            if len(frame.planes) != len(shapes):
                raise InvalidArgument(f"frame {i} has {len(frame.planes)} planes, expected {len(shapes)}")
            for plane, shape in zip(frame.planes, shapes):
                if plane.shape != shape:
                    raise InvalidArgument(f"frame {i} plane shape {plane.shape} != expected {shape}")
                if plane.dtype != np.uint8:
                    raise InvalidArgument(f"frame {i} plane dtype {plane.dtype}, expected uint8")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VideoSequence):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.frame_rate == other.frame_rate
            and self.chroma == other.chroma
            and self.frames == other.frames
        )


@dataclass
class Gop:
    """A fixed-length group of frames; the unit of encoding and transmission."""

    index: int
    frames: list[Frame]
    gop_size: int = DEFAULT_GOP_SIZE

    def __post_init__(self):
        if self.gop_size < 1:
            raise InvalidArgument(f"gop_size must be >= 1, got {self.gop_size}")
        if len(self.frames) != self.gop_size:
            raise InvalidArgument(
                f"GOP {self.index} holds {len(self.frames)} frames, expected {self.gop_size}"
            )


def _parse_ratio(text: str, what: str) -> Fraction:
    num, sep, den = text.partition(":")
    if not sep:
        raise ParseError(f"malformed {what} '{text}' (expected NUM:DEN)")
    try:
        value = Fraction(int(num), int(den))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"malformed {what} '{text}'") from exc
    return value


def parse_y4m(data: bytes) -> VideoSequence:
    """Decode a Y4M byte stream into a VideoSequence.

    Unknown header parameters are ignored with a warning.  Raises ParseError
    for a malformed signature, UnsupportedFormat for chroma layouts other than
    4:2:0 / 4:4:4 / mono, and TruncationError (with byte offset) when a frame
    payload is incomplete.
    """
    newline = data.find(b"\n")
    if newline < 0 or not data.startswith(Y4M_MAGIC):
        raise ParseError("missing YUV4MPEG2 signature")
    header = data[:newline].decode("ascii", errors="replace")
    fields = header.split(" ")
    if fields[0] != Y4M_MAGIC.decode("ascii"):
        raise ParseError("missing YUV4MPEG2 signature")

    width = height = None
    frame_rate = None
    chroma = None
    for token in fields[1:]:
        if not token:
            continue
        key, value = token[0], token[1:]
        if key == "W":
            width = int(value)
        elif key == "H":
            height = int(value)
        elif key == "F":
            frame_rate = _parse_ratio(value, "frame rate")
        elif key == "C":
            tag = _CHROMA_TAGS.get(value)
            if tag is None:
                raise UnsupportedFormat(f"unsupported chroma tag C{value}")
            chroma = Chroma(tag)
        elif key in ("I", "A", "X"):
            pass  # interlacing, aspect and extensions carry no data we use
        else:
            warnings.warn(f"ignoring unknown Y4M header parameter '{token}'", stacklevel=2)
    if width is None or height is None:
        raise ParseError("Y4M header must declare W and H")
    if frame_rate is None:
        warnings.warn("Y4M header has no F parameter; assuming 25:1", stacklevel=2)
        frame_rate = Fraction(25, 1)
    if chroma is None:
        chroma = Chroma.C420  # Y4M default when no C tag is present

    shapes = Chroma.plane_shapes(chroma, width, height)
    plane_sizes = [rows * cols for rows, cols in shapes]
    frame_bytes = sum(plane_sizes)

    frames: list[Frame] = []
    pos = newline + 1
    n = len(data)
    while pos < n:
        marker_end = data.find(b"\n", pos)
        if marker_end < 0:
            raise TruncationError(f"unterminated FRAME header at byte {pos}", byte_offset=pos)
        if not data[pos:marker_end].startswith(b"FRAME"):
            raise ParseError(f"expected FRAME marker at byte {pos}")
        pos = marker_end + 1
        if pos + frame_bytes > n:
            raise TruncationError(
                f"frame payload truncated at byte {n} (needed {pos + frame_bytes})",
                byte_offset=n,
            )
        planes = []
        for size, shape in zip(plane_sizes, shapes):
            buf = np.frombuffer(data, dtype=np.uint8, count=size, offset=pos)
            planes.append(buf.reshape(shape).copy())
            pos += size
        frames.append(Frame(planes=tuple(planes)))

    if not frames:
        raise TruncationError("stream contains no frames", byte_offset=pos)
    return VideoSequence(width=width, height=height, frame_rate=frame_rate, chroma=chroma, frames=frames)


def write_y4m(video: VideoSequence) -> bytes:
    """Serialize a VideoSequence to Y4M bytes; parse_y4m inverts this exactly."""
    header = (
        f"YUV4MPEG2 W{video.width} H{video.height} "
        f"F{video.frame_rate.numerator}:{video.frame_rate.denominator} "
        f"C{_CANONICAL_TAG[video.chroma.value]}\n"
    )
    parts = [header.encode("ascii")]
    for frame in video.frames:
        parts.append(b"FRAME\n")
        for plane in frame.planes:
            parts.append(np.ascontiguousarray(plane).tobytes())
    return b"".join(parts)


def read_raw(data: bytes, width: int, height: int, chroma: Chroma, frame_rate: Fraction) -> VideoSequence:
    """Interpret headerless planar YUV bytes using caller-supplied geometry."""
    shapes = chroma.plane_shapes(width, height)
    plane_sizes = [rows * cols for rows, cols in shapes]
    frame_bytes = sum(plane_sizes)
    if len(data) % frame_bytes:
        raise TruncationError(
            f"raw stream length {len(data)} is not a multiple of the {frame_bytes}-byte frame size",
            byte_offset=len(data) - len(data) % frame_bytes,
        )
    frames = []
    pos = 0
    while pos < len(data):
        planes = []
        for size, shape in zip(plane_sizes, shapes):
            planes.append(np.frombuffer(data, dtype=np.uint8, count=size, offset=pos).reshape(shape).copy())
            pos += size
        frames.append(Frame(planes=tuple(planes)))
    if not frames:
        raise TruncationError("raw stream contains no frames", byte_offset=0)
    return VideoSequence(width=width, height=height, frame_rate=frame_rate, chroma=chroma, frames=frames)


def segment_gops(video: VideoSequence, gop_size: int = DEFAULT_GOP_SIZE) -> list[Gop]:
    """Split leading frames into complete GOPs; the trailing remainder is discarded.

    Returns floor(frame_count / gop_size) GOPs in order.  The discard count is
    ``len(video.frames) - len(gops) * gop_size``.
    """
    if gop_size < 1:
        raise InvalidArgument(f"gop_size must be >= 1, got {gop_size}")
    count = len(video.frames) // gop_size
    return [
        Gop(index=i, frames=list(video.frames[i * gop_size : (i + 1) * gop_size]), gop_size=gop_size)
        for i in range(count)
    ]


def frames_equal(a: Iterable[Frame], b: Iterable[Frame]) -> bool:
    """Sample-exact comparison of two frame runs."""
    a, b = list(a), list(b)
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))
