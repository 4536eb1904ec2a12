"""Token symbolization, cross-GOP residual coding, and the container format.

Integer token arrays are flattened into a run-length / escape symbol stream
and entropy coded (rans).  A stream is a fixed little-endian header followed
by one length-prefixed payload per GOP; each payload carries a CRC32 and one
section per token family (keyframe, descriptor, latent).  All values coded
here live in the quantized integer domain, so serialization is lossless and
bit-exact by construction.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DecodeError, SerializeError, ShapeError
from .rans import SymbolModel, entropy_decode, entropy_encode
from .tokens import CompressedTokens, OperatingPoint, padded_dims, validate_tokens
from .video_io import Chroma

MAGIC = b"GVC1"
VERSION = 1

# Symbol alphabet: 0..16 are zero runs of length 2**k, then 1000 direct
# zigzag values, then one escape symbol for anything larger.
ZERO_RUN_SYMS = 17
VALUE_SYMS = 1000
ESCAPE_SYM = ZERO_RUN_SYMS + VALUE_SYMS
ALPHABET = ESCAPE_SYM + 1

_CHROMA_CODE = {Chroma.C420: 0, Chroma.C444: 1, Chroma.GRAY: 2}
_CODE_CHROMA = {v: k for k, v in _CHROMA_CODE.items()}

_U32_MAX = 0xFFFFFFFF


def zigzag_int(v: int) -> int:
    """Map signed to unsigned: 0,-1,1,-2,2 -> 0,1,2,3,4."""
    return 2 * v if v >= 0 else -2 * v - 1


def unzigzag_int(z: int) -> int:
    return z // 2 if z % 2 == 0 else -(z + 1) // 2


def _run_symbols(n: int) -> list[int]:
    """Zero run of length n as power-of-two run symbols, largest first."""
    out = []
    while n > 0:
        k = min(n.bit_length() - 1, ZERO_RUN_SYMS - 1)
        out.append(k)
        n -= 1 << k
    return out


def symbolize(values: np.ndarray) -> tuple[list[int], list[int]]:
    """Flatten an integer array into (symbols, escape side list)."""
    flat = np.asarray(values).ravel().astype(np.int64)
    nz = np.flatnonzero(flat)
    bounds = np.concatenate(([-1], nz, [flat.size]))
    gaps = np.diff(bounds) - 1
    symbols: list[int] = []
    escapes: list[int] = []
    for i, idx in enumerate(nz):
        if gaps[i]:
            symbols.extend(_run_symbols(int(gaps[i])))
        z = zigzag_int(int(flat[idx]))
        if z <= VALUE_SYMS:
            symbols.append(ZERO_RUN_SYMS + z - 1)
        else:
            symbols.append(ESCAPE_SYM)
            escapes.append(z)
    if gaps[-1]:
        symbols.extend(_run_symbols(int(gaps[-1])))
    return symbols, escapes


def desymbolize(symbols, escapes, n_values: int) -> np.ndarray:
    """Inverse of symbolize; returns a flat int32 array of n_values."""
    out = np.zeros(n_values, dtype=np.int64)
    pos = 0
    esc = 0
    for s in symbols:
        if s < ZERO_RUN_SYMS:
            pos += 1 << s
            if pos > n_values:
                raise DecodeError("zero run overruns declared value count")
        else:
            if pos >= n_values:
                raise DecodeError("symbol stream overruns declared value count")
            if s == ESCAPE_SYM:
                if esc >= len(escapes):
                    raise DecodeError("missing escape value")
                z = escapes[esc]
                esc += 1
            else:
                z = s - ZERO_RUN_SYMS + 1
            out[pos] = unzigzag_int(int(z))
            pos += 1
    if pos != n_values:
        raise DecodeError(f"symbol stream yields {pos} values, expected {n_values}")
    if esc != len(escapes):
        raise DecodeError("unused escape values")
    return out.astype(np.int32)


def residual_encode(
    tokens: CompressedTokens, previous: CompressedTokens | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-GOP arrays to transmit.  Keyframes are always intra; descriptor and
    latent grid are differenced against the previous GOP when one exists."""
    if previous is None:
        return tokens.keyframe_codes, tokens.descriptor, tokens.latent_grid
    if previous.operating_point != tokens.operating_point:
        raise ShapeError("operating point changed between GOPs")
    if (
        previous.latent_grid.shape != tokens.latent_grid.shape
        or previous.descriptor.shape != tokens.descriptor.shape
    ):
        raise ShapeError("token shapes changed between GOPs")
    return (
        tokens.keyframe_codes,
        tokens.descriptor - previous.descriptor,
        tokens.latent_grid - previous.latent_grid,
    )


def residual_decode(
    arrays: tuple[np.ndarray, np.ndarray, np.ndarray],
    previous: CompressedTokens | None,
    op: OperatingPoint,
) -> CompressedTokens:
    keyframe, descriptor, latent = arrays
    if previous is not None:
        descriptor = descriptor + previous.descriptor
        latent = latent + previous.latent_grid
    return CompressedTokens(
        keyframe_codes=keyframe.astype(np.int32),
        descriptor=descriptor.astype(np.int32),
        latent_grid=latent.astype(np.int32),
        operating_point=op,
    )


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v: int):
        self.parts.append(struct.pack("<B", v))

    def u16(self, v: int):
        if not 0 <= v <= 0xFFFF:
            raise SerializeError(f"value {v} out of u16 range")
        self.parts.append(struct.pack("<H", v))

    def u32(self, v: int):
        if not 0 <= v <= _U32_MAX:
            raise SerializeError(f"value {v} out of u32 range")
        self.parts.append(struct.pack("<I", v))

    def raw(self, b: bytes):
        self.parts.append(b)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError(f"stream truncated at byte {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def raw(self, n: int) -> bytes:
        return self._take(n)

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos


def _write_section(w: _Writer, values: np.ndarray) -> None:
    flat = np.asarray(values).ravel()
    symbols, escapes = symbolize(flat)
    max_sym = max(symbols) if symbols else 0
    counts = np.zeros(max_sym + 1, dtype=np.int64)
    for s in symbols:
        counts[s] += 1
    model = SymbolModel.from_counts(counts)
    data = entropy_encode(symbols, model)
    w.u32(flat.size)
    w.u32(len(symbols))
    w.u16(model.alphabet_size)
    for f in model.freqs:
        w.u16(f)
    w.u32(len(escapes))
    for z in escapes:
        w.u32(z)
    w.u32(len(data))
    w.raw(data)


def _read_section(r: _Reader) -> np.ndarray:
    n_values = r.u32()
    n_symbols = r.u32()
    alphabet = r.u16()
    if alphabet == 0 or alphabet > ALPHABET:
        raise DecodeError(f"invalid section alphabet size {alphabet}")
    freqs = tuple(r.u16() for _ in range(alphabet))
    try:
        model = SymbolModel(freqs)
    except Exception as exc:
        raise DecodeError(f"invalid frequency table: {exc}") from exc
    n_escape = r.u32()
    escapes = [r.u32() for _ in range(n_escape)]
    data = r.raw(r.u32())
    symbols = entropy_decode(data, n_symbols, model)
    return desymbolize(symbols, escapes, n_values)


def encode_payload(
    tokens: CompressedTokens, previous: CompressedTokens | None
) -> bytes:
    """One GOP's payload: u32 CRC32 followed by three coded sections."""
    body = _Writer()
    for arr in residual_encode(tokens, previous):
        _write_section(body, arr)
    blob = body.getvalue()
    return struct.pack("<I", zlib.crc32(blob)) + blob


def decode_payload(
    payload: bytes,
    previous: CompressedTokens | None,
    op: OperatingPoint,
    width: int,
    height: int,
) -> CompressedTokens:
    if len(payload) < 4:
        raise DecodeError("payload shorter than checksum")
    (crc,) = struct.unpack_from("<I", payload, 0)
    body = payload[4:]
    if zlib.crc32(body) != crc:
        raise DecodeError("payload checksum mismatch")
    r = _Reader(body)
    arrays = [_read_section(r) for _ in range(3)]
    if r.remaining:
        raise DecodeError(f"{r.remaining} trailing bytes in payload")
    pw, ph = padded_dims(width, height)
    t, gr, gc = op.latent_extent(width, height)
    expected = [(ph * pw, (ph, pw)), (op.descriptor_len, (op.descriptor_len,)), (t * gr * gc, (t, gr, gc))]
    shaped = []
    for arr, (n, shape) in zip(arrays, expected):
        if arr.size != n:
            raise DecodeError(f"section has {arr.size} values, expected {n}")
        shaped.append(arr.reshape(shape))
    tokens = residual_decode(tuple(shaped), previous, op)
    validate_tokens(tokens, width, height)
    return tokens


@dataclass(frozen=True)
class StreamInfo:
    """Decoded container header."""

    width: int
    height: int
    frame_rate: Fraction
    chroma: Chroma
    operating_point: OperatingPoint
    gop_count: int


def _quant_step_milli(quant_step: float) -> int:
    milli = round(quant_step * 1000)
    if milli < 1 or milli > _U32_MAX:
        raise SerializeError(f"quant_step {quant_step} not representable")
    if abs(quant_step * 1000 - milli) > 1e-6:
        raise SerializeError(f"quant_step {quant_step} must be a multiple of 0.001")
    return milli


def serialize_stream(
    tokens_list: list[CompressedTokens],
    width: int,
    height: int,
    frame_rate: Fraction,
    chroma: Chroma,
) -> bytes:
    """Container: header + per-GOP length-prefixed payloads."""
    if not tokens_list:
        raise SerializeError("no GOPs to serialize")
    op = tokens_list[0].operating_point
    for t in tokens_list:
        if t.operating_point != op:
            raise SerializeError("all GOPs must share one operating point")
        validate_tokens(t, width, height)
    rate = Fraction(frame_rate)
    if rate <= 0 or rate.numerator > _U32_MAX or rate.denominator > _U32_MAX:
        raise SerializeError(f"frame rate {frame_rate} not representable")

    w = _Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    w.u32(width)
    w.u32(height)
    w.u32(rate.numerator)
    w.u32(rate.denominator)
    w.u8(_CHROMA_CODE[chroma])
    w.u32(op.gop_size)
    w.u32(_quant_step_milli(op.quant_step))
    w.u32(op.spatial_stride)
    w.u32(op.temporal_stride)
    w.u32(op.descriptor_len)
    w.u32(op.refine_iters)
    w.u32(len(tokens_list))
    previous = None
    for tokens in tokens_list:
        payload = encode_payload(tokens, previous)
        w.u32(len(payload))
        w.raw(payload)
        previous = tokens
    return w.getvalue()


def deserialize_stream(data: bytes) -> tuple[list[CompressedTokens], StreamInfo]:
    r = _Reader(data)
    if r.raw(4) != MAGIC:
        raise DecodeError("bad stream magic")
    version = r.u16()
    if version != VERSION:
        raise DecodeError(f"unsupported stream version {version}")
    width = r.u32()
    height = r.u32()
    fps_num = r.u32()
    fps_den = r.u32()
    if width < 1 or height < 1 or fps_num < 1 or fps_den < 1:
        raise DecodeError("invalid stream geometry")
    chroma_code = r.u8()
    if chroma_code not in _CODE_CHROMA:
        raise DecodeError(f"unknown chroma code {chroma_code}")
    gop_size = r.u32()
    quant_step = r.u32() / 1000.0
    spatial_stride = r.u32()
    temporal_stride = r.u32()
    descriptor_len = r.u32()
    refine_iters = r.u32()
    gop_count = r.u32()
    try:
        op = OperatingPoint(
            quant_step=quant_step,
            spatial_stride=spatial_stride,
            temporal_stride=temporal_stride,
            descriptor_len=descriptor_len,
            refine_iters=refine_iters,
            gop_size=gop_size,
        )
    except Exception as exc:
        raise DecodeError(f"invalid operating point in header: {exc}") from exc
    info = StreamInfo(
        width=width,
        height=height,
        frame_rate=Fraction(fps_num, fps_den),
        chroma=_CODE_CHROMA[chroma_code],
        operating_point=op,
        gop_count=gop_count,
    )
    tokens_list = []
    previous = None
    for _ in range(gop_count):
        payload = r.raw(r.u32())
        tokens = decode_payload(payload, previous, op, width, height)
        tokens_list.append(tokens)
        previous = tokens
    if r.remaining:
        raise DecodeError(f"{r.remaining} trailing bytes after last GOP")
    return tokens_list, info


@dataclass(frozen=True)
class StreamLayout:
    """Byte accounting of a serialized stream, for channel simulation."""

    header_bytes: int
    payload_bytes: tuple[int, ...]

    @property
    def total_bytes(self) -> int:
        return self.header_bytes + sum(self.payload_bytes)


def stream_layout(data: bytes) -> StreamLayout:
    """Header size and per-GOP payload sizes without decoding payloads."""
    r = _Reader(data)
    if r.raw(4) != MAGIC:
        raise DecodeError("bad stream magic")
    r.u16()
    for _ in range(4):
        r.u32()
    r.u8()
    for _ in range(6):
        r.u32()
    gop_count = r.u32()
    header_bytes = r.pos
    sizes = []
    for _ in range(gop_count):
        n = r.u32()
        r.raw(n)
        sizes.append(4 + n)
    if r.remaining:
        raise DecodeError(f"{r.remaining} trailing bytes after last GOP")
    return StreamLayout(header_bytes=header_bytes, payload_bytes=tuple(sizes))


def measure_bpp(stream: bytes, width: int, height: int, n_frames: int) -> float:
    """Bits per pixel over the coded frames."""
    if width < 1 or height < 1 or n_frames < 1:
        raise SerializeError("bpp needs positive geometry and frame count")
    return len(stream) * 8.0 / (width * height * n_frames)
