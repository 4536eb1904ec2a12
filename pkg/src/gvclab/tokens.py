"""Per-GOP compressed tokens: keyframe transform codes, descriptor, latent grid.

Everything here is a fixed analysis transform: an orthonormal 8x8 block DCT
for the keyframe, global statistics plus a coarse 16x16 DCT prefix for the
descriptor, and box-filtered/temporally-subsampled luma for the latent grid.
All quantization is uniform mid-tread with ties rounded away from zero, so a
given (GOP, OperatingPoint) pair always produces bit-identical tokens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, ShapeError
from .video_io import DEFAULT_GOP_SIZE, Gop

BLOCK = 8
DESCRIPTOR_DCT_SIZE = 16
# Fixed-point scale for 16-bit descriptor entries (precision 0.5).
DESCRIPTOR_SCALE = 2.0
_I16_MAX = 32767


@dataclass(frozen=True)
class OperatingPoint:
    """Knob bundle positioning the codec on the rate/computation/quality triangle.

    quant_step drives both keyframe-coefficient and latent-grid quantization;
    spatial_stride / temporal_stride set latent grid resolution; descriptor_len
    trades descriptor richness for rate; refine_iters is the decoder-side
    computation knob.
    """

    quant_step: float = 12.0
    spatial_stride: int = 16
    temporal_stride: int = 4
    descriptor_len: int = 16
    refine_iters: int = 4
    gop_size: int = DEFAULT_GOP_SIZE

    def __post_init__(self):
        if not self.quant_step > 0:
            raise InvalidArgument(f"quant_step must be > 0, got {self.quant_step}")
        if self.spatial_stride < 1 or self.temporal_stride < 1:
            raise InvalidArgument("strides must be >= 1")
        if self.descriptor_len < 0:
            raise InvalidArgument("descriptor_len must be >= 0")
        if self.refine_iters < 0:
            raise InvalidArgument("refine_iters must be >= 0")
        if self.gop_size < 1:
            raise InvalidArgument("gop_size must be >= 1")

    def latent_extent(self, width: int, height: int) -> tuple[int, int, int]:
        """(t, rows, cols) of the latent grid for the given luma geometry."""
        return (
            -(-self.gop_size // self.temporal_stride),
            -(-height // self.spatial_stride),
            -(-width // self.spatial_stride),
        )


@dataclass
class CompressedTokens:
    """The transmitted representation of one GOP.

    keyframe_codes: quantized DCT coefficients of the first frame's luma,
        tiled as one int32 array of the 8-padded geometry.
    descriptor: per-GOP statistics quantized to 16-bit fixed point.
    latent_grid: quantized (t, rows, cols) coarse luma, 128-centered.
    """

    keyframe_codes: np.ndarray
    descriptor: np.ndarray
    latent_grid: np.ndarray
    operating_point: OperatingPoint

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CompressedTokens):
            return NotImplemented
        return (
            self.operating_point == other.operating_point
            and np.array_equal(self.keyframe_codes, other.keyframe_codes)
            and np.array_equal(self.descriptor, other.descriptor)
            and np.array_equal(self.latent_grid, other.latent_grid)
        )


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer with ties away from zero (not banker's)."""
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize(values: np.ndarray, step: float) -> np.ndarray:
    return round_half_away(np.asarray(values, dtype=np.float64) / step).astype(np.int32)


def dequantize(codes: np.ndarray, step: float) -> np.ndarray:
    return codes.astype(np.float64) * step


@lru_cache(maxsize=None)
def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * m + 1) * k / (2 * n))
    mat[0] *= math.sqrt(1.0 / n)
    mat[1:] *= math.sqrt(2.0 / n)
    return mat


def dct2d_forward(block: np.ndarray) -> np.ndarray:
    """Orthonormal type-II 2D DCT of one or more 8x8 blocks (last two axes)."""
    block = np.asarray(block, dtype=np.float64)
    if block.shape[-2:] != (BLOCK, BLOCK):
        raise ShapeError(f"expected trailing 8x8 axes, got {block.shape}")
    c = _dct_matrix(BLOCK)
    return np.einsum("ij,...jk,lk->...il", c, block, c)


def dct2d_inverse(coefs: np.ndarray) -> np.ndarray:
    coefs = np.asarray(coefs, dtype=np.float64)
    if coefs.shape[-2:] != (BLOCK, BLOCK):
        raise ShapeError(f"expected trailing 8x8 axes, got {coefs.shape}")
    c = _dct_matrix(BLOCK)
    return np.einsum("ji,...jk,kl->...il", c, coefs, c)


def padded_dims(width: int, height: int) -> tuple[int, int]:
    """Luma geometry rounded up to whole 8x8 blocks."""
    return (-(-width // BLOCK) * BLOCK, -(-height // BLOCK) * BLOCK)


def _pad_to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    pw, ph = padded_dims(w, h)
    return np.pad(plane, ((0, ph - h), (0, pw - w)), mode="edge")


def _blockify(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).swapaxes(1, 2)


def _unblockify(blocks: np.ndarray) -> np.ndarray:
    bh, bw = blocks.shape[:2]
    return blocks.swapaxes(1, 2).reshape(bh * BLOCK, bw * BLOCK)


def encode_keyframe(frame, quant_step: float) -> np.ndarray:
    """Quantized per-block DCT codes of a frame's luma, blocks in raster order."""
    luma = frame.luma if hasattr(frame, "luma") else np.asarray(frame)
    padded = _pad_to_blocks(luma.astype(np.float64) - 128.0)
    coefs = dct2d_forward(_blockify(padded))
    return _unblockify(quantize(coefs, quant_step))


def decode_keyframe(codes: np.ndarray, quant_step: float, width: int, height: int) -> np.ndarray:
    """Reconstruct keyframe luma (float64, uncentered) from quantized codes."""
    pw, ph = padded_dims(width, height)
    if codes.shape != (ph, pw):
        raise ShapeError(f"keyframe codes shape {codes.shape} != padded {(ph, pw)}")
    blocks = dct2d_inverse(_blockify(dequantize(codes, quant_step)))
    return _unblockify(blocks)[:height, :width] + 128.0


def box_downsample(plane: np.ndarray, stride: int) -> np.ndarray:
    """Per-cell means over a ceil-tiled stride x stride grid (partial edge cells
    average only their real pixels)."""
    a = np.asarray(plane, dtype=np.float64)
    h, w = a.shape
    r_edges = np.arange(0, h, stride)
    c_edges = np.arange(0, w, stride)
    sums = np.add.reduceat(np.add.reduceat(a, r_edges, axis=0), c_edges, axis=1)
    r_sizes = np.minimum(r_edges + stride, h) - r_edges
    c_sizes = np.minimum(c_edges + stride, w) - c_edges
    return sums / np.outer(r_sizes, c_sizes)


def bilinear_upsample(cells: np.ndarray, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """Upsample a cell grid back to pixel resolution, cells treated as samples
    at the centers of a uniform stride grid, edge-clamped outside."""
    cells = np.asarray(cells, dtype=np.float64)

    def axis(n_out: int, n_cells: int):
        p = np.clip((np.arange(n_out) + 0.5) / stride - 0.5, 0.0, n_cells - 1.0)
        i0 = np.clip(np.floor(p).astype(np.intp), 0, max(n_cells - 2, 0))
        i1 = np.minimum(i0 + 1, n_cells - 1)
        return i0, i1, p - i0

    r0, r1, fr = axis(out_h, cells.shape[0])
    c0, c1, fc = axis(out_w, cells.shape[1])
    rows = cells[r0, :] * (1.0 - fr)[:, None] + cells[r1, :] * fr[:, None]
    return rows[:, c0] * (1.0 - fc)[None, :] + rows[:, c1] * fc[None, :]


def pool_to_grid(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Mean-pool a plane onto an out_h x out_w grid (nearest rows/cols when the
    plane is smaller than the grid)."""
    a = np.asarray(plane, dtype=np.float64)

    def bands(n_in: int, n_out: int):
        out = []
        for i in range(n_out):
            lo = (i * n_in) // n_out
            hi = max(((i + 1) * n_in) // n_out, lo + 1)
            out.append((min(lo, n_in - 1), min(hi, n_in)))
        return out

    row_pooled = np.stack([a[lo:hi].mean(axis=0) for lo, hi in bands(a.shape[0], out_h)])
    return np.stack(
        [row_pooled[:, lo:hi].mean(axis=1) for lo, hi in bands(a.shape[1], out_w)], axis=1
    )


@lru_cache(maxsize=None)
def zigzag_indices(n: int) -> tuple[tuple[int, int], ...]:
    """Diagonal scan order over an n x n grid, (0,0) first."""
    order = []
    for d in range(2 * n - 1):
        rng = range(min(d, n - 1), max(0, d - n + 1) - 1, -1)
        if d % 2:
            rng = reversed(list(rng))
        order.extend((r, d - r) for r in rng)
    return tuple(order)


def extract_descriptor(gop: Gop, descriptor_len: int) -> np.ndarray:
    """Per-GOP global statistics (float64, unquantized).

    Layout: mean luma, luma variance, mean absolute temporal difference, then
    the leading zigzag coefficients of the 2D DCT of the temporally averaged,
    16x16-pooled luma.  Truncated/zero-padded to descriptor_len.
    """
    if descriptor_len < 0:
        raise InvalidArgument("descriptor_len must be >= 0")
    if descriptor_len == 0:
        return np.zeros(0, dtype=np.float64)
    lumas = np.stack([f.luma.astype(np.float64) for f in gop.frames])
    stats = [lumas.mean(), lumas.var()]
    if len(gop.frames) > 1:
        stats.append(np.abs(np.diff(lumas, axis=0)).mean())
    else:
        stats.append(0.0)

    out = np.zeros(descriptor_len, dtype=np.float64)
    head = min(3, descriptor_len)
    out[:head] = stats[:head]
    n_dct = descriptor_len - 3
    if n_dct > 0:
        pooled = pool_to_grid(lumas.mean(axis=0), DESCRIPTOR_DCT_SIZE, DESCRIPTOR_DCT_SIZE)
        c = _dct_matrix(DESCRIPTOR_DCT_SIZE)
        coefs = c @ pooled @ c.T
        scan = zigzag_indices(DESCRIPTOR_DCT_SIZE)[: min(n_dct, DESCRIPTOR_DCT_SIZE**2)]
        flat = np.array([coefs[r, c_] for r, c_ in scan])
        out[3 : 3 + len(flat)] = flat
    return out


def quantize_descriptor(values: np.ndarray) -> np.ndarray:
    q = round_half_away(np.asarray(values, dtype=np.float64) * DESCRIPTOR_SCALE)
    return np.clip(q, -_I16_MAX - 1, _I16_MAX).astype(np.int32)


def dequantize_descriptor(codes: np.ndarray) -> np.ndarray:
    return codes.astype(np.float64) / DESCRIPTOR_SCALE


def extract_latent_grid(gop: Gop, op: OperatingPoint) -> np.ndarray:
    """Quantized coarse luma: box downsample by spatial_stride, temporal
    subsample at indices 0, temporal_stride, ..., values 128-centered."""
    h, w = gop.frames[0].luma.shape
    slices = []
    for t in range(0, op.gop_size, op.temporal_stride):
        centered = gop.frames[t].luma.astype(np.float64) - 128.0
        slices.append(quantize(box_downsample(centered, op.spatial_stride), op.quant_step))
    return np.stack(slices)


def encode_gop(gop: Gop, op: OperatingPoint) -> CompressedTokens:
    """Transform a GOP into its compressed token triple.  Deterministic."""
    if gop.gop_size != op.gop_size:
        raise ShapeError(f"GOP size {gop.gop_size} != operating point gop_size {op.gop_size}")
    return CompressedTokens(
        keyframe_codes=encode_keyframe(gop.frames[0], op.quant_step),
        descriptor=quantize_descriptor(extract_descriptor(gop, op.descriptor_len)),
        latent_grid=extract_latent_grid(gop, op),
        operating_point=op,
    )


def validate_tokens(tokens: CompressedTokens, width: int, height: int) -> None:
    """Check token array shapes against the dimensional contract."""
    op = tokens.operating_point
    pw, ph = padded_dims(width, height)
    if tokens.keyframe_codes.shape != (ph, pw):
        raise ShapeError(
            f"keyframe codes shape {tokens.keyframe_codes.shape}, expected {(ph, pw)}"
        )
    if tokens.descriptor.shape != (op.descriptor_len,):
        raise ShapeError(
            f"descriptor length {tokens.descriptor.shape[0]}, expected {op.descriptor_len}"
        )
    expected = op.latent_extent(width, height)
    if tokens.latent_grid.shape != expected:
        raise ShapeError(f"latent grid shape {tokens.latent_grid.shape}, expected {expected}")
