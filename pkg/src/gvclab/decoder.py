"""GOP reconstruction from compressed tokens by conditional iterative refinement.

The pipeline is deterministic and training free: frames are initialized by
space/time interpolation of the latent grid, then refined for refine_iters
rounds of edge-preserving smoothing guided by the keyframe's (motion-aligned)
structure, injection of the keyframe warped along latent-estimated global
motion and gated by agreement with the latent field, and a hard
token-consistency projection.  Finalization shifts the global mean to the
transmitted descriptor value, re-projects, clamps, and rounds to uint8.  The
projection guarantees that re-extracting the latent grid from the output
deviates from the transmitted dequantized grid by at most quant_step/2 plus
a small epsilon (for quant_step >= 1, where the band survives 8-bit rounding).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import ShapeError
from .tokens import (
    CompressedTokens,
    OperatingPoint,
    box_downsample,
    bilinear_upsample,
    decode_keyframe,
    dequantize,
    dequantize_descriptor,
    round_half_away,
    validate_tokens,
)
from .video_io import Chroma, Frame, Gop

# Refinement constants: base smoothing strength, gradient scale that shuts
# smoothing off across structural edges, keyframe-injection gain, and the
# latent-agreement gate width in multiples of quant_step.
ALPHA0 = 0.25
TAU = 20.0
GAMMA = 0.5
GATE_SIGMA_STEPS = 0.5
GATE_SIGMA_MIN = 4.0

# Final projection shrinks the consistency band by just under 0.5 so the
# guarantee survives rounding to integers without ties.
_FINAL_MARGIN = 0.5 - 5e-7
_MAX_PROJECT_ROUNDS = 200
_IMPROVE_TOL = 1e-11


@dataclass(frozen=True)
class ReconstructionReport:
    """Audit record for one decoded GOP."""

    gop_index: int
    iterations_run: int
    token_consistency_error: float
    wall_time: float


def _blur3(a: np.ndarray) -> np.ndarray:
    """Separable 3x3 binomial blur with edge padding."""
    p = np.pad(a, 1, mode="edge")
    h = (p[:, :-2] + 2.0 * p[:, 1:-1] + p[:, 2:]) * 0.25
    return (h[:-2] + 2.0 * h[1:-1] + h[2:]) * 0.25


def _anchor_times(op: OperatingPoint) -> list[int]:
    return list(range(0, op.gop_size, op.temporal_stride))


def _global_shift(ref: np.ndarray, tgt: np.ndarray) -> tuple[float, float]:
    """Dominant translation (dy, dx) taking ref to tgt, by cross-correlation
    peak with parabolic subpixel refinement.  (0, 0) for featureless fields."""
    a = ref - ref.mean()
    b = tgt - tgt.mean()
    corr = np.fft.irfft2(np.conj(np.fft.rfft2(a)) * np.fft.rfft2(b), s=ref.shape)
    h, w = corr.shape
    iy, ix = np.unravel_index(int(np.argmax(corr)), corr.shape)

    def refine(c_minus: float, c_peak: float, c_plus: float) -> float:
        den = c_minus - 2.0 * c_peak + c_plus
        if den == 0.0 or not np.isfinite(den):
            return 0.0
        return float(np.clip(0.5 * (c_minus - c_plus) / den, -0.5, 0.5))

    dy = iy + refine(corr[(iy - 1) % h, ix], corr[iy, ix], corr[(iy + 1) % h, ix])
    dx = ix + refine(corr[iy, (ix - 1) % w], corr[iy, ix], corr[iy, (ix + 1) % w])
    if dy > h / 2:
        dy -= h
    if dx > w / 2:
        dx -= w
    return float(dy), float(dx)


def _warp(img: np.ndarray, dy: float, dx: float) -> np.ndarray:
    """Translate an image by (dy, dx) with bilinear sampling, edges clamped."""
    h, w = img.shape

    def axis(n: int, d: float):
        p = np.clip(np.arange(n) - d, 0.0, n - 1.0)
        i0 = np.clip(np.floor(p).astype(np.intp), 0, max(n - 2, 0))
        i1 = np.minimum(i0 + 1, n - 1)
        return i0, i1, p - i0

    y0, y1, fy = axis(h, dy)
    x0, x1, fx = axis(w, dx)
    rows = img[y0, :] * (1.0 - fy)[:, None] + img[y1, :] * fy[:, None]
    return rows[:, x0] * (1.0 - fx)[None, :] + rows[:, x1] * fx[None, :]


def _expand_cells(cells: np.ndarray, stride: int, h: int, w: int) -> np.ndarray:
    """Broadcast one value per cell uniformly over the cell's pixel footprint."""
    return np.repeat(np.repeat(cells, stride, axis=0), stride, axis=1)[:h, :w]


def _project_anchor_stack(
    lumas: np.ndarray,
    grid: np.ndarray,
    op: OperatingPoint,
    margin: float,
    clamp: bool,
    max_rounds: int,
    only_violations: bool,
) -> np.ndarray:
    """Shift each latent cell's footprint so the cell mean lands inside the
    consistency band around its transmitted value.  Mutates and returns the
    (n_anchors, h, w) float stack.  With clamping enabled the shift is
    iterated, since clamping can pull a cell mean back out of the band; the
    loop stops once inside the band or once progress stalls (bands centered
    outside [0,255] are satisfied at the boundary, still within quant_step/2).
    """
    s = op.quant_step
    stride = op.spatial_stride
    h, w = lumas.shape[1:]
    targets = dequantize(grid, s) + 128.0
    lo = targets - (s / 2.0 - margin)
    hi = targets + (s / 2.0 - margin)
    prev_worst = np.inf
    for _ in range(max_rounds):
        means = np.stack([box_downsample(sl, stride) for sl in lumas])
        delta = np.clip(means, lo, hi) - means
        if only_violations:
            delta[np.abs(means - targets) <= s / 2.0 + 1e-9] = 0.0
        worst = float(np.abs(delta).max()) if delta.size else 0.0
        if worst < 1e-12 or worst > prev_worst - _IMPROVE_TOL:
            break
        prev_worst = worst
        for i in range(lumas.shape[0]):
            lumas[i] += _expand_cells(delta[i], stride, h, w)
        if clamp:
            np.clip(lumas, 0.0, 255.0, out=lumas)
    return lumas


def _consistency_error(lumas_u8: list[np.ndarray], tokens: CompressedTokens) -> float:
    """Max deviation between re-extracted and transmitted dequantized latents."""
    op = tokens.operating_point
    targets = dequantize(tokens.latent_grid, op.quant_step)
    worst = 0.0
    for i, t in enumerate(_anchor_times(op)):
        means = box_downsample(lumas_u8[t].astype(np.float64) - 128.0, op.spatial_stride)
        worst = max(worst, float(np.abs(means - targets[i]).max()))
    return worst


def _initialize(tokens: CompressedTokens, h: int, w: int) -> list[np.ndarray]:
    """Step-2 estimate: bilinear upsampling of latent slices, linear in time
    between anchors, held after the last anchor."""
    op = tokens.operating_point
    anchors = _anchor_times(op)
    fields = [
        bilinear_upsample(dequantize(sl, op.quant_step) + 128.0, op.spatial_stride, h, w)
        for sl in tokens.latent_grid
    ]
    ts = op.temporal_stride
    frames = []
    for t in range(op.gop_size):
        i = t // ts
        if i >= len(anchors) - 1:
            frames.append(fields[-1].copy())
        else:
            f = (t - anchors[i]) / ts
            frames.append((1.0 - f) * fields[i] + f * fields[i + 1])
    return frames


def _frame_motions(
    lumas: list[np.ndarray], anchors: list[int], op: OperatingPoint
) -> list[tuple[float, float]]:
    """Per-frame global displacement relative to the keyframe, estimated from
    the interpolated latent fields: consecutive anchor fields are correlated,
    displacements accumulate, and in-between frames interpolate linearly
    (extrapolating past the last anchor)."""
    fields = [lumas[t] for t in anchors]
    disp = [(0.0, 0.0)]
    for i in range(1, len(fields)):
        dy, dx = _global_shift(fields[i - 1], fields[i])
        disp.append((disp[-1][0] + dy, disp[-1][1] + dx))
    ts = op.temporal_stride
    motions = []
    for t in range(op.gop_size):
        i = t // ts
        if len(disp) == 1:
            motions.append(disp[0])
        elif i >= len(disp) - 1:
            last = disp[-1]
            slope = (disp[-1][0] - disp[-2][0], disp[-1][1] - disp[-2][1])
            f = (t - anchors[-1]) / ts
            motions.append((last[0] + slope[0] * f, last[1] + slope[1] * f))
        else:
            f = (t - anchors[i]) / ts
            motions.append(
                (
                    disp[i][0] + (disp[i + 1][0] - disp[i][0]) * f,
                    disp[i][1] + (disp[i + 1][1] - disp[i][1]) * f,
                )
            )
    return motions


def decode_gop(
    tokens: CompressedTokens,
    width: int,
    height: int,
    chroma: Chroma = Chroma.GRAY,
    gop_index: int = 0,
) -> tuple[Gop, ReconstructionReport]:
    """Reconstruct one GOP.  Deterministic for fixed inputs.

    Chroma is not transmitted; non-luma planes come back neutral (128).
    """
    start = time.perf_counter()
    validate_tokens(tokens, width, height)
    op = tokens.operating_point

    keyframe = decode_keyframe(tokens.keyframe_codes, op.quant_step, width, height)
    lumas = _initialize(tokens, height, width)

    if op.refine_iters > 0:
        anchors = _anchor_times(op)
        motions = _frame_motions(lumas, anchors, op)
        sigma = max(GATE_SIGMA_MIN, GATE_SIGMA_STEPS * op.quant_step)

        def lowpass(field: np.ndarray) -> np.ndarray:
            return bilinear_upsample(
                box_downsample(field, op.spatial_stride), op.spatial_stride, height, width
            )

        details = []
        weights = []
        alphas = []
        for t in range(op.gop_size):
            pred = _warp(keyframe, *motions[t])
            pred_low = lowpass(pred)
            # Trust the warped keyframe only where the transmitted latent
            # field agrees with it; elsewhere the estimate stays untouched.
            gate = np.exp(-(((pred_low - lumas[t]) / sigma) ** 2))
            gy, gx = np.gradient(pred)
            alpha = ALPHA0 / (1.0 + (np.hypot(gx, gy) / TAU) ** 2)
            details.append((pred - pred_low).astype(np.float32))
            weights.append((GAMMA * gate).astype(np.float32))
            alphas.append((alpha * gate).astype(np.float32))
        for _ in range(op.refine_iters):
            for t in range(op.gop_size):
                x = lumas[t]
                x += alphas[t] * (_blur3(x) - x)
                # Pull only the band above latent resolution toward the
                # warped keyframe's detail; the low band belongs to the
                # transmitted latents.
                x += weights[t] * (details[t] - (x - lowpass(x)))
            stack = np.stack([lumas[t] for t in anchors])
            _project_anchor_stack(
                stack, tokens.latent_grid, op, margin=0.0, clamp=False,
                max_rounds=1, only_violations=False,
            )
            for i, t in enumerate(anchors):
                lumas[t] = stack[i]

    # Finalization: global mean correction, then the rounding-safe projection.
    if op.descriptor_len >= 1:
        target_mean = dequantize_descriptor(tokens.descriptor)[0]
        current = float(np.mean(lumas))
        shift = target_mean - current
        for x in lumas:
            x += shift

    anchors = _anchor_times(op)
    stack = np.stack([lumas[t] for t in anchors])
    np.clip(stack, 0.0, 255.0, out=stack)
    _project_anchor_stack(
        stack, tokens.latent_grid, op, margin=_FINAL_MARGIN, clamp=True,
        max_rounds=_MAX_PROJECT_ROUNDS, only_violations=False,
    )
    for i, t in enumerate(anchors):
        lumas[t] = stack[i]

    out_lumas = [
        round_half_away(np.clip(x, 0.0, 255.0)).astype(np.uint8) for x in lumas
    ]
    frames = [_assemble_frame(y, width, height, chroma) for y in out_lumas]
    gop = Gop(index=gop_index, frames=frames, gop_size=op.gop_size)
    report = ReconstructionReport(
        gop_index=gop_index,
        iterations_run=op.refine_iters,
        token_consistency_error=_consistency_error(out_lumas, tokens),
        wall_time=time.perf_counter() - start,
    )
    return gop, report


def _assemble_frame(luma: np.ndarray, width: int, height: int, chroma: Chroma) -> Frame:
    shapes = chroma.plane_shapes(width, height)
    planes = [luma]
    for shape in shapes[1:]:
        planes.append(np.full(shape, 128, dtype=np.uint8))
    return Frame(planes=tuple(planes))


def token_consistency_project(estimate: Gop, tokens: CompressedTokens) -> Gop:
    """Minimally adjust a GOP estimate so its re-extracted latent grid matches
    the transmitted dequantized grid within quant_step/2.

    Cells already within the band are left untouched, so a consistent estimate
    (in particular the original source) passes through unchanged and the
    operation is idempotent.  Adjusted cells are shifted uniformly over their
    footprint into a band shrunk by half a code so the guarantee survives
    re-rounding to uint8 (exact for quant_step >= 1).
    """
    op = tokens.operating_point
    h, w = estimate.frames[0].luma.shape
    validate_tokens(tokens, w, h)
    if estimate.gop_size != op.gop_size:
        raise ShapeError(
            f"estimate GOP size {estimate.gop_size} != operating point {op.gop_size}"
        )
    anchors = _anchor_times(op)
    stack = np.stack(
        [estimate.frames[t].luma.astype(np.float64) for t in anchors]
    )
    _project_anchor_stack(
        stack, tokens.latent_grid, op, margin=_FINAL_MARGIN, clamp=True,
        max_rounds=_MAX_PROJECT_ROUNDS, only_violations=True,
    )
    frames = list(estimate.frames)
    for i, t in enumerate(anchors):
        luma = round_half_away(np.clip(stack[i], 0.0, 255.0)).astype(np.uint8)
        if np.array_equal(luma, frames[t].luma):
            continue
        frames[t] = Frame(planes=(luma,) + frames[t].planes[1:])
    return Gop(index=estimate.index, frames=frames, gop_size=estimate.gop_size)


def measure_quality_vs_compute(
    tokens: CompressedTokens,
    source: Gop,
    iteration_grid: list[int],
    width: int,
    height: int,
    repetitions: int = 3,
) -> list[tuple[int, float, float]]:
    """Decode at each iteration count and report (iters, psnr, wall_time),
    rows sorted by iters, wall time averaged over repetitions."""
    from .metrics import psnr

    if repetitions < 1:
        repetitions = 1
    rows = []
    for iters in sorted(set(int(i) for i in iteration_grid)):
        op = replace(tokens.operating_point, refine_iters=iters)
        variant = CompressedTokens(
            keyframe_codes=tokens.keyframe_codes,
            descriptor=tokens.descriptor,
            latent_grid=tokens.latent_grid,
            operating_point=op,
        )
        times = []
        gop = None
        for _ in range(repetitions):
            gop, report = decode_gop(variant, width, height)
            times.append(report.wall_time)
        rows.append((iters, psnr(source, gop), sum(times) / len(times)))
    return rows
