"""Rate and quality metrics plus JSON/CSV report assembly.

PSNR and SSIM are computed on luma only.  The compression-rate percentage is
relative to a raw 24 bits/pixel (8-bit RGB) baseline.  Dataset aggregates are
unweighted means across sequences, independent of sequence length.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from importlib import resources

import jsonschema
import numpy as np

from .errors import InvalidArgument, ShapeError

# Sentinel for MSE == 0: finite so reports stay sortable.
PSNR_CAP_DB = 99.0
RAW_BASELINE_BPP = 24.0

_SSIM_WINDOW = 8
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_L = 255.0

SCHEMA_VERSION = 1


def _luma_stack(video) -> np.ndarray:
    """Float64 (frames, h, w) luma from a Gop, VideoSequence, or frame list."""
    frames = getattr(video, "frames", video)
    return np.stack([f.luma.astype(np.float64) for f in frames])


def _paired_stacks(reference, test) -> tuple[np.ndarray, np.ndarray]:
    a = _luma_stack(reference)
    b = _luma_stack(test)
    if a.shape != b.shape:
        raise ShapeError(f"geometry mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(reference, test) -> float:
    """Luma PSNR in dB, pooled over all frames; 0-MSE capped at 99 dB."""
    a, b = _paired_stacks(reference, test)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * math.log10(255.0**2 / mse)


def _window_means(a: np.ndarray, k: int) -> np.ndarray:
    c = np.cumsum(np.cumsum(a, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    s = c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]
    return s / (k * k)


def ssim(reference, test) -> float:
    """Single-scale SSIM on luma, sliding 8x8 uniform windows, averaged over
    windows and frames."""
    a, b = _paired_stacks(reference, test)
    k = min(_SSIM_WINDOW, a.shape[1], a.shape[2])
    c1 = (_SSIM_K1 * _SSIM_L) ** 2
    c2 = (_SSIM_K2 * _SSIM_L) ** 2
    values = []
    for x, y in zip(a, b):
        mu_x = _window_means(x, k)
        mu_y = _window_means(y, k)
        sxx = _window_means(x * x, k) - mu_x * mu_x
        syy = _window_means(y * y, k) - mu_y * mu_y
        sxy = _window_means(x * y, k) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
        den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
        values.append(num / den)
    return float(np.mean(values))


def compression_rate(bpp: float) -> float:
    """Coded rate as a percentage of the 24 bpp raw baseline."""
    if bpp < 0:
        raise InvalidArgument(f"bpp must be >= 0, got {bpp}")
    return 100.0 * bpp / RAW_BASELINE_BPP


@dataclass(frozen=True)
class SequenceMetrics:
    """Per-sequence row of a metrics report."""

    name: str
    bpp: float
    compression_rate_percent: float
    psnr_db: float
    ssim: float
    coded_frames: int
    discarded_frames: int
    external_perceptual: float | None = None


def dataset_means(rows: list[SequenceMetrics]) -> dict:
    """Unweighted per-sequence averaging (sequence first, then dataset)."""
    if not rows:
        raise InvalidArgument("no sequences to aggregate")
    return {
        "mean_bpp": float(np.mean([r.bpp for r in rows])),
        "mean_compression_rate_percent": float(
            np.mean([r.compression_rate_percent for r in rows])
        ),
        "mean_psnr_db": float(np.mean([r.psnr_db for r in rows])),
        "mean_ssim": float(np.mean([r.ssim for r in rows])),
        "sequence_count": len(rows),
    }


def build_report(rows: list[SequenceMetrics], extra: dict | None = None) -> dict:
    """Assemble and schema-validate a metrics report."""
    report = {
        "schema_version": SCHEMA_VERSION,
        "sequences": [asdict(r) for r in rows],
        "dataset": dataset_means(rows),
    }
    if extra:
        report.update(extra)
    validate_report(report)
    return report


def load_schema() -> dict:
    with resources.files("gvclab.data").joinpath("metrics_schema.json").open("rb") as f:
        return json.load(f)


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_schema())


def report_to_csv(report: dict) -> str:
    """Flat per-sequence CSV for rate-distortion tables."""
    buf = io.StringIO()
    fields = [
        "name",
        "bpp",
        "compression_rate_percent",
        "psnr_db",
        "ssim",
        "coded_frames",
        "discarded_frames",
    ]
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore")
    writer.writeheader()
    for row in report["sequences"]:
        writer.writerow(row)
    return buf.getvalue()
