"""Deterministic synthetic test sequences.

Five generators (static, moving-gradient, bouncing-blocks, textured-pan,
noise) parameterized by seed and geometry.  The committed manifest pins the
sequences used by the acceptance suite; everything is reproducible bit for
bit from (generator, seed, geometry).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .video_io import Chroma, Frame, VideoSequence

_DEFAULT_RATE = Fraction(25, 1)


def _grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    y, x = np.mgrid[0:height, 0:width]
    return x.astype(np.float64), y.astype(np.float64)


def _to_frames(stack: np.ndarray) -> list[Frame]:
    return [Frame(planes=(f,)) for f in np.ascontiguousarray(stack, dtype=np.uint8)]


def _gen_static(width, height, n_frames, rng):
    value = int(rng.integers(16, 240))
    plane = np.full((height, width), value, dtype=np.uint8)
    return [Frame(planes=(plane.copy(),)) for _ in range(n_frames)]


def _gen_moving_gradient(width, height, n_frames, rng):
    x, y = _grid(width, height)
    amp = rng.uniform(40.0, 90.0)
    fx = rng.uniform(0.5, 2.0)
    fy = rng.uniform(0.5, 2.0)
    vel = rng.uniform(0.01, 0.05)
    base = x * (fx / width) + y * (fy / height)
    frames = []
    for t in range(n_frames):
        v = 127.5 + amp * np.sin(2.0 * np.pi * (base + vel * t))
        frames.append(np.clip(np.round(v), 0, 255))
    return _to_frames(np.stack(frames))


def _gen_bouncing_blocks(width, height, n_frames, rng):
    background = int(rng.integers(32, 96))
    n_blocks = int(rng.integers(2, 5))
    blocks = []
    for _ in range(n_blocks):
        size = int(rng.integers(height // 8, height // 3))
        blocks.append(
            {
                "size": size,
                "x": float(rng.uniform(0, max(width - size, 1))),
                "y": float(rng.uniform(0, max(height - size, 1))),
                "vx": float(rng.uniform(1.0, 4.0)) * (1 if rng.integers(2) else -1),
                "vy": float(rng.uniform(1.0, 4.0)) * (1 if rng.integers(2) else -1),
                "value": int(rng.integers(140, 240)),
            }
        )
    frames = []
    for _ in range(n_frames):
        plane = np.full((height, width), background, dtype=np.uint8)
        for b in blocks:
            x0, y0 = int(round(b["x"])), int(round(b["y"]))
            plane[y0 : y0 + b["size"], x0 : x0 + b["size"]] = b["value"]
            for axis, limit in (("x", width), ("y", height)):
                b[axis] += b["v" + axis]
                hi = limit - b["size"]
                if b[axis] < 0:
                    b[axis] = -b[axis]
                    b["v" + axis] = -b["v" + axis]
                elif b[axis] > hi:
                    b[axis] = 2 * hi - b[axis]
                    b["v" + axis] = -b["v" + axis]
        frames.append(plane)
    return [Frame(planes=(p,)) for p in frames]


def _gen_textured_pan(width, height, n_frames, rng):
    x, y = _grid(width, height)
    pan_x = rng.uniform(0.5, 3.0)
    pan_y = rng.uniform(-1.0, 1.0)
    layers = []
    for _ in range(3):
        layers.append(
            (
                rng.uniform(15.0, 35.0),
                rng.uniform(2.0, 9.0),
                rng.uniform(2.0, 9.0),
                rng.uniform(0.0, 2.0 * np.pi),
            )
        )
    frames = []
    for t in range(n_frames):
        v = np.full((height, width), 127.5)
        for amp, fx, fy, phase in layers:
            arg = 2.0 * np.pi * (fx * (x + pan_x * t) / width + fy * (y + pan_y * t) / height)
            v = v + amp * np.sin(arg + phase)
        frames.append(np.clip(np.round(v), 0, 255))
    return _to_frames(np.stack(frames))


def _gen_noise(width, height, n_frames, rng):
    stack = rng.integers(0, 256, size=(n_frames, height, width), dtype=np.uint8)
    return _to_frames(stack)


_GENERATORS = {
    "static": _gen_static,
    "moving-gradient": _gen_moving_gradient,
    "bouncing-blocks": _gen_bouncing_blocks,
    "textured-pan": _gen_textured_pan,
    "noise": _gen_noise,
}

GENERATOR_NAMES = tuple(sorted(_GENERATORS))


def generate_sequence(
    generator: str,
    seed: int,
    width: int = 640,
    height: int = 360,
    n_frames: int = 64,
    frame_rate: Fraction = _DEFAULT_RATE,
) -> VideoSequence:
    """Produce one synthetic GRAY sequence, deterministic in all arguments."""
    if generator not in _GENERATORS:
        raise ConfigError(
            f"unknown generator {generator!r}; choose from {', '.join(GENERATOR_NAMES)}"
        )
    rng = np.random.default_rng(seed)
    frames = _GENERATORS[generator](width, height, n_frames, rng)
    return VideoSequence(
        width=width,
        height=height,
        frame_rate=frame_rate,
        chroma=Chroma.GRAY,
        frames=frames,
    )


@dataclass(frozen=True)
class CorpusEntry:
    """One pinned sequence in a corpus manifest."""

    id: str
    generator: str
    seed: int
    width: int
    height: int
    frames: int

    def generate(self) -> VideoSequence:
        return generate_sequence(
            self.generator, self.seed, self.width, self.height, self.frames
        )


def load_manifest(path: str | Path | None = None) -> list[CorpusEntry]:
    """Read a corpus manifest; defaults to the committed one."""
    if path is None:
        with resources.files("gvclab.data").joinpath("corpus_manifest.json").open("rb") as f:
            doc = json.load(f)
    else:
        doc = json.loads(Path(path).read_text())
    try:
        entries = [CorpusEntry(**e) for e in doc["sequences"]]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed corpus manifest: {exc}") from exc
    if len({e.id for e in entries}) != len(entries):
        raise ConfigError("duplicate sequence ids in corpus manifest")
    for e in entries:
        if e.generator not in _GENERATORS:
            raise ConfigError(f"unknown generator {e.generator!r} in manifest")
    return entries
