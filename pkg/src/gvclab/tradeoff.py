"""Operating-point selection under latency and rate budgets.

The latency model is additive per GOP: encoder latency plus decoder latency,
with the decoder term scaled by a per-rung multiplier that tracks
refine_iters.  Built-in profiles carry measured per-resolution GOP-of-29
latencies for three GPUs; empirically calibrated profiles and ladders load
from JSON files.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, InfeasibleError, ProfileError
from .tokens import OperatingPoint

PROFILE_DIR_ENV = "GVC_PROFILE_DIR"

# Decoder latency multiplier per refinement iteration count, normalized to
# 1.0 at the default of 4 iterations (the profiles' reference point).
_SCALE_BASE = 0.4
_SCALE_PER_ITER = 0.15


class Resolution(enum.Enum):
    R480 = "480p"
    R720 = "720p"
    R1080 = "1080p"

    @classmethod
    def parse(cls, text: str) -> "Resolution":
        for r in cls:
            if r.value == text:
                return r
        raise ConfigError(f"unknown resolution {text!r}; choose from "
                          f"{', '.join(r.value for r in cls)}")


@dataclass(frozen=True)
class HardwareProfile:
    """Per-resolution (encoder, decoder) GOP latencies in seconds."""

    name: str
    latencies: dict[Resolution, tuple[float, float]]

    def __post_init__(self):
        for res, (enc, dec) in self.latencies.items():
            if enc <= 0 or dec <= 0:
                raise ProfileError(
                    f"profile {self.name!r} has non-positive latency at {res.value}"
                )

    def latency_pair(self, resolution: Resolution) -> tuple[float, float]:
        if resolution not in self.latencies:
            raise ProfileError(
                f"profile {self.name!r} has no entry for {resolution.value}"
            )
        return self.latencies[resolution]


@dataclass(frozen=True)
class Budget:
    """Per-GOP latency ceiling, optional rate ceiling, target resolution."""

    max_total_latency: float
    resolution: Resolution
    max_bpp: float | None = None

    def __post_init__(self):
        if self.max_total_latency <= 0:
            raise ConfigError("max_total_latency must be > 0")
        if self.max_bpp is not None and self.max_bpp <= 0:
            raise ConfigError("max_bpp must be > 0 when given")


def builtin_profiles() -> dict[str, HardwareProfile]:
    table = {
        "4090": {"480p": (0.95, 1.35), "720p": (1.15, 6.4), "1080p": (1.59, 21.5)},
        "A100": {"480p": (0.64, 1.4), "720p": (0.80, 5.5), "1080p": (0.85, 18.0)},
        "H200": {"480p": (0.2, 1.13), "720p": (0.3, 2.3), "1080p": (0.5, 6.1)},
    }
    return {
        name: HardwareProfile(
            name=name,
            latencies={Resolution.parse(r): pair for r, pair in cells.items()},
        )
        for name, cells in table.items()
    }


def load_profile(name: str, profile_dir: str | Path | None = None) -> HardwareProfile:
    """Resolve a profile by name: JSON file in profile_dir (or $GVC_PROFILE_DIR)
    first, then the built-ins."""
    directory = profile_dir or os.environ.get(PROFILE_DIR_ENV)
    if directory:
        candidate = Path(directory) / f"{name}.json"
        if candidate.exists():
            return profile_from_json(json.loads(candidate.read_text()))
    builtins = builtin_profiles()
    if name in builtins:
        return builtins[name]
    raise ProfileError(f"unknown hardware profile {name!r}")


def profile_from_json(doc: dict) -> HardwareProfile:
    try:
        latencies = {
            Resolution.parse(res): (float(pair[0]), float(pair[1]))
            for res, pair in doc["latencies"].items()
        }
        return HardwareProfile(name=doc["name"], latencies=latencies)
    except (KeyError, TypeError, IndexError) as exc:
        raise ProfileError(f"malformed profile: {exc}") from exc


def feasible(profile: HardwareProfile, budget: Budget) -> tuple[bool, str]:
    """Whether encoder + decoder latency fits the budget at its resolution."""
    enc, dec = profile.latency_pair(budget.resolution)
    total = enc + dec
    ok = total <= budget.max_total_latency
    verdict = "fits" if ok else "exceeds"
    explanation = (
        f"{profile.name}@{budget.resolution.value}: encoder {enc:g} s + decoder "
        f"{dec:g} s = {total:g} s {verdict} budget {budget.max_total_latency:g} s"
    )
    return ok, explanation


def default_latency_scale(refine_iters: int) -> float:
    return _SCALE_BASE + _SCALE_PER_ITER * refine_iters


@dataclass(frozen=True)
class LadderRung:
    """One candidate operating point with its corpus-measured rate and its
    decoder latency multiplier."""

    operating_point: OperatingPoint
    predicted_bpp: float
    latency_scale: float

    def __post_init__(self):
        if self.predicted_bpp < 0:
            raise ConfigError("predicted_bpp must be >= 0")
        if self.latency_scale <= 0:
            raise ConfigError("latency_scale must be > 0")


@dataclass(frozen=True)
class Selection:
    """Result of a ladder search."""

    operating_point: OperatingPoint
    rung_index: int
    predicted_bpp: float
    predicted_latency: float
    explanation: str


def select_operating_point(
    profile: HardwareProfile, budget: Budget, ladder: list[LadderRung]
) -> Selection:
    """First (lowest-bpp) rung whose scaled latency and predicted bpp both fit.

    The ladder must already be sorted by predicted bpp ascending, so bpp
    infeasibility cuts off the tail and the first fit is rate optimal.
    """
    if not ladder:
        raise InfeasibleError("candidate ladder is empty", binding_constraint="empty_ladder")
    for i in range(1, len(ladder)):
        if ladder[i].predicted_bpp < ladder[i - 1].predicted_bpp:
            raise ConfigError("ladder must be sorted by predicted bpp ascending")
    enc, dec = profile.latency_pair(budget.resolution)
    latency_skips = 0
    for index, rung in enumerate(ladder):
        if budget.max_bpp is not None and rung.predicted_bpp > budget.max_bpp:
            break
        latency = enc + dec * rung.latency_scale
        if latency > budget.max_total_latency:
            latency_skips += 1
            continue
        explanation = "latency-bound" if latency_skips else "rate-optimal"
        return Selection(
            operating_point=rung.operating_point,
            rung_index=index,
            predicted_bpp=rung.predicted_bpp,
            predicted_latency=latency,
            explanation=explanation,
        )
    binding = "max_total_latency" if latency_skips else "max_bpp"
    raise InfeasibleError(
        f"no ladder rung fits the budget (binding constraint: {binding})",
        binding_constraint=binding,
    )


def _rung_from_json(doc: dict) -> LadderRung:
    op = OperatingPoint(**doc["operating_point"])
    return LadderRung(
        operating_point=op,
        predicted_bpp=float(doc["predicted_bpp"]),
        latency_scale=float(doc["latency_scale"]),
    )


def load_ladder(path: str | Path | None = None) -> list[LadderRung]:
    """Read a candidate ladder; defaults to the committed one."""
    if path is None:
        with resources.files("gvclab.data").joinpath("default_ladder.json").open("rb") as f:
            doc = json.load(f)
    else:
        doc = json.loads(Path(path).read_text())
    try:
        rungs = [_rung_from_json(r) for r in doc["rungs"]]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed ladder: {exc}") from exc
    for i in range(1, len(rungs)):
        if rungs[i].predicted_bpp < rungs[i - 1].predicted_bpp:
            raise ConfigError("ladder must be sorted by predicted bpp ascending")
    return rungs


def fit_latency_scale(rows: list[tuple[int, float, float]]) -> tuple[float, float]:
    """Calibrate (base, per_iter) multipliers from measured (iters, psnr,
    wall_time) rows, normalized so the default 4-iteration point scales to 1."""
    if len(rows) < 2:
        raise ConfigError("need at least two iteration counts to calibrate")
    import numpy as np

    iters = np.array([r[0] for r in rows], dtype=np.float64)
    times = np.array([r[2] for r in rows], dtype=np.float64)
    slope, intercept = np.polyfit(iters, times, 1)
    reference = intercept + slope * 4.0
    if reference <= 0:
        raise ConfigError("calibration produced a non-positive reference latency")
    return intercept / reference, slope / reference
