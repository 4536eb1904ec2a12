"""Bandwidth-constrained link simulation and bandwidth-ratio comparisons.

The link is serial and lossless: bits go out in container order at a fixed
rate after a fixed propagation delay.  Per-GOP completion times follow from
the container's header and payload sizes; a per-GOP deadline flags GOPs whose
own transmission (delay included) takes too long.  Reference streams for
ratio comparisons are supplied externally, never synthesized here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitstream import StreamLayout
from .errors import InvalidArgument, ParseError
from .tradeoff import HardwareProfile, Resolution


@dataclass(frozen=True)
class LinkModel:
    """Serial link: rate in bits/second, propagation delay in seconds, and an
    optional per-GOP transmission deadline in seconds."""

    rate: float
    propagation_delay: float = 0.0
    gop_deadline: float | None = None

    def __post_init__(self):
        if self.rate <= 0:
            raise InvalidArgument(f"link rate must be > 0, got {self.rate}")
        if self.propagation_delay < 0:
            raise InvalidArgument("propagation delay must be >= 0")
        if self.gop_deadline is not None and self.gop_deadline <= 0:
            raise InvalidArgument("gop deadline must be > 0 when given")


@dataclass(frozen=True)
class TransmissionReport:
    """Timing of one stream over one link.

    gop_send_seconds: each GOP's own transmission time (delay + payload/rate).
    gop_completion_times: arrival time of each GOP's last bit, header included.
    completion_time: arrival of the whole stream's last bit.
    deadline_violations: per-GOP flags against the link's gop_deadline.
    """

    total_bits: float
    gop_send_seconds: tuple[float, ...]
    gop_completion_times: tuple[float, ...]
    completion_time: float
    deadline_violations: tuple[bool, ...]

    def to_json_dict(self) -> dict:
        return {
            "total_bits": self.total_bits,
            "gop_send_seconds": list(self.gop_send_seconds),
            "gop_completion_times": list(self.gop_completion_times),
            "completion_time": self.completion_time,
            "deadline_violations": list(self.deadline_violations),
        }


def transmit(stream, link: LinkModel) -> TransmissionReport:
    """Simulate sending a stream (total bits, or a StreamLayout for per-GOP
    accounting) over a link."""
    if isinstance(stream, StreamLayout):
        header_bits = stream.header_bytes * 8
        payload_bits = [n * 8 for n in stream.payload_bytes]
        total_bits = header_bits + sum(payload_bits)
    else:
        # fractional bit totals (bpp x geometry products) are kept exact so
        # time ratios reduce to exact bpp ratios
        total_bits = stream if isinstance(stream, int) else float(stream)
        header_bits = 0
        payload_bits = []
    if total_bits <= 0:
        raise InvalidArgument("stream size must be > 0 bits")

    sent = header_bits
    send_seconds = []
    completions = []
    violations = []
    for bits in payload_bits:
        sent += bits
        own = link.propagation_delay + bits / link.rate
        send_seconds.append(own)
        completions.append(link.propagation_delay + sent / link.rate)
        violations.append(link.gop_deadline is not None and own > link.gop_deadline)
    return TransmissionReport(
        total_bits=total_bits,
        gop_send_seconds=tuple(send_seconds),
        gop_completion_times=tuple(completions),
        completion_time=link.propagation_delay + total_bits / link.rate,
        deadline_violations=tuple(violations),
    )


def bandwidth_ratio(size_a_bits: float, size_b_bits: float) -> float:
    """How many times more bandwidth stream B needs than stream A."""
    if size_a_bits == 0:
        raise InvalidArgument("size_a must be nonzero")
    return size_b_bits / size_a_bits


def end_to_end_latency(
    profile: HardwareProfile,
    resolution: Resolution,
    transmit_completion: float,
    decoder_scale: float = 1.0,
) -> float:
    """Encode latency + transmission completion + (scaled) decode latency."""
    enc, dec = profile.latency_pair(resolution)
    return enc + transmit_completion + dec * decoder_scale


def _require(doc: dict, key: str, context: str):
    if key not in doc:
        raise ParseError(f"scenario missing {context}.{key}")
    return doc[key]


def _stream_bits(doc, context: str) -> tuple[float, StreamLayout | None]:
    """A scenario stream is either explicit bits or a bpp x geometry product;
    file-backed streams are resolved by the CLI before this point."""
    if isinstance(doc, (int, float)):
        return float(doc), None
    if isinstance(doc, StreamLayout):
        return float(doc.total_bytes * 8), doc
    if not isinstance(doc, dict):
        raise ParseError(f"scenario {context} must be a number or object")
    if "bits" in doc:
        return float(doc["bits"]), None
    if "bpp" in doc:
        pixels = 1
        for key in ("width", "height", "frames"):
            pixels *= int(_require(doc, key, context))
        return float(doc["bpp"]) * pixels, None
    raise ParseError(f"scenario {context} needs 'bits' or 'bpp' + geometry")


def run_scenario(scenario: dict, stream_layout: StreamLayout | None = None) -> dict:
    """Evaluate one scenario document; returns the JSON-ready report.

    scenario keys: link {rate_bps, propagation_delay_s?, gop_deadline_s?},
    stream (bits | {bpp,width,height,frames}; or provide stream_layout),
    reference (same forms, optional), profile {name?, resolution} (optional),
    quality_evidence (free text, optional).
    """
    if not isinstance(scenario, dict):
        raise ParseError("scenario must be a JSON object")
    link_doc = _require(scenario, "link", "scenario")
    if not isinstance(link_doc, dict):
        raise ParseError("scenario.link must be an object")
    try:
        link = LinkModel(
            rate=float(_require(link_doc, "rate_bps", "link")),
            propagation_delay=float(link_doc.get("propagation_delay_s", 0.0)),
            gop_deadline=(
                float(link_doc["gop_deadline_s"]) if "gop_deadline_s" in link_doc else None
            ),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid link parameters: {exc}") from exc

    if stream_layout is not None:
        stream_bits, layout = float(stream_layout.total_bytes * 8), stream_layout
    else:
        stream_bits, layout = _stream_bits(_require(scenario, "stream", "scenario"), "stream")
    report = transmit(layout if layout is not None else stream_bits, link)
    out = {"link": {"rate_bps": link.rate, "propagation_delay_s": link.propagation_delay,
                    "gop_deadline_s": link.gop_deadline},
           "stream": report.to_json_dict()}

    if "reference" in scenario:
        ref_bits, ref_layout = _stream_bits(scenario["reference"], "reference")
        ref_report = transmit(ref_layout if ref_layout is not None else ref_bits, link)
        out["reference"] = ref_report.to_json_dict()
        out["bandwidth_ratio"] = bandwidth_ratio(stream_bits, ref_bits)
        out["transmission_time_ratio"] = (
            (ref_report.completion_time - link.propagation_delay)
            / (report.completion_time - link.propagation_delay)
        )
        out["quality_evidence"] = scenario.get("quality_evidence", "unspecified")

    if "profile" in scenario:
        from .tradeoff import load_profile

        pdoc = scenario["profile"]
        if not isinstance(pdoc, dict):
            raise ParseError("scenario.profile must be an object")
        profile = load_profile(str(_require(pdoc, "name", "profile")))
        resolution = Resolution.parse(str(_require(pdoc, "resolution", "profile")))
        out["end_to_end_latency_s"] = end_to_end_latency(
            profile, resolution, report.completion_time,
            decoder_scale=float(pdoc.get("decoder_scale", 1.0)),
        )
    return out
