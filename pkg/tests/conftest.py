"""Shared fixtures: small deterministic videos and cached corpus artifacts."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from gvclab import Chroma, Frame, OperatingPoint, VideoSequence
from gvclab.corpus import load_manifest
from gvclab.video_io import Gop


def make_gray_video(stack: np.ndarray, rate: Fraction = Fraction(25, 1)) -> VideoSequence:
    stack = np.asarray(stack, dtype=np.uint8)
    frames = [Frame(planes=(p,)) for p in stack]
    return VideoSequence(
        width=stack.shape[2],
        height=stack.shape[1],
        frame_rate=rate,
        chroma=Chroma.GRAY,
        frames=frames,
    )


def make_gop(stack: np.ndarray, index: int = 0) -> Gop:
    stack = np.asarray(stack, dtype=np.uint8)
    frames = [Frame(planes=(p,)) for p in stack]
    return Gop(index=index, frames=frames, gop_size=len(frames))


def small_op(**overrides) -> OperatingPoint:
    """Operating point sized for tiny unit-test GOPs."""
    base = dict(
        quant_step=4.0,
        spatial_stride=4,
        temporal_stride=2,
        descriptor_len=8,
        refine_iters=2,
        gop_size=6,
    )
    base.update(overrides)
    return OperatingPoint(**base)


def moving_stack(
    n: int, h: int, w: int, seed: int = 7, amplitude: float = 60.0
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    phase = rng.uniform(0, 2 * np.pi)
    frames = []
    for t in range(n):
        v = 128.0 + amplitude * np.sin(
            2 * np.pi * (1.5 * x / w + 0.8 * y / h + 0.03 * t) + phase
        )
        frames.append(np.clip(np.round(v), 0, 255))
    return np.stack(frames).astype(np.uint8)


@pytest.fixture(scope="session")
def corpus_entries():
    return load_manifest()


@pytest.fixture(scope="session")
def corpus_videos(corpus_entries):
    """Generated committed corpus, shared across the whole test session."""
    return {e.id: e.generate() for e in corpus_entries}
