"""gvclab: an ultra-low-bitrate generative video compression laboratory.

Encodes video into compact per-GOP tokens (keyframe transform codes, a global
descriptor, and a coarse latent grid), entropy codes them into a container,
and reconstructs frames with a deterministic iterative refinement decoder
whose computation is a tunable knob.  Includes rate/quality metrics, a
synthetic corpus, a latency/rate trade-off planner, and a channel simulator.
"""

from .bitstream import (
    StreamInfo,
    StreamLayout,
    deserialize_stream,
    measure_bpp,
    serialize_stream,
    stream_layout,
)
from .channel import (
    LinkModel,
    TransmissionReport,
    bandwidth_ratio,
    end_to_end_latency,
    run_scenario,
    transmit,
)
from .corpus import CorpusEntry, generate_sequence, load_manifest
from .decoder import (
    ReconstructionReport,
    decode_gop,
    measure_quality_vs_compute,
    token_consistency_project,
)
from .errors import (
    ConfigError,
    DecodeError,
    EncodeError,
    GvcError,
    InfeasibleError,
    InvalidArgument,
    ParseError,
    ProfileError,
    SerializeError,
    ShapeError,
    TruncationError,
    UnsupportedFormat,
)
from .metrics import (
    SequenceMetrics,
    build_report,
    compression_rate,
    psnr,
    report_to_csv,
    ssim,
)
from .pipeline import EncodeSummary, decode_bitstream, encode_video, roundtrip_eval
from .rans import SymbolModel, entropy_decode, entropy_encode
from .tokens import (
    CompressedTokens,
    OperatingPoint,
    encode_gop,
    encode_keyframe,
    extract_descriptor,
    extract_latent_grid,
)
from .tradeoff import (
    Budget,
    HardwareProfile,
    LadderRung,
    Resolution,
    Selection,
    builtin_profiles,
    feasible,
    load_ladder,
    load_profile,
    select_operating_point,
)
from .video_io import (
    Chroma,
    Frame,
    Gop,
    VideoSequence,
    parse_y4m,
    read_raw,
    segment_gops,
    write_y4m,
)

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "Chroma",
    "CompressedTokens",
    "ConfigError",
    "CorpusEntry",
    "DecodeError",
    "EncodeError",
    "EncodeSummary",
    "Frame",
    "Gop",
    "GvcError",
    "HardwareProfile",
    "InfeasibleError",
    "InvalidArgument",
    "LadderRung",
    "LinkModel",
    "OperatingPoint",
    "ParseError",
    "ProfileError",
    "ReconstructionReport",
    "Resolution",
    "Selection",
    "SequenceMetrics",
    "SerializeError",
    "ShapeError",
    "StreamInfo",
    "StreamLayout",
    "SymbolModel",
    "TransmissionReport",
    "TruncationError",
    "UnsupportedFormat",
    "VideoSequence",
    "bandwidth_ratio",
    "build_report",
    "builtin_profiles",
    "compression_rate",
    "decode_bitstream",
    "decode_gop",
    "deserialize_stream",
    "encode_gop",
    "encode_keyframe",
    "encode_video",
    "end_to_end_latency",
    "entropy_decode",
    "entropy_encode",
    "extract_descriptor",
    "extract_latent_grid",
    "feasible",
    "generate_sequence",
    "load_ladder",
    "load_manifest",
    "load_profile",
    "measure_bpp",
    "measure_quality_vs_compute",
    "parse_y4m",
    "psnr",
    "read_raw",
    "report_to_csv",
    "roundtrip_eval",
    "run_scenario",
    "segment_gops",
    "select_operating_point",
    "serialize_stream",
    "ssim",
    "stream_layout",
    "token_consistency_project",
    "transmit",
    "write_y4m",
]
