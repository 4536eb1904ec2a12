"""Range asymmetric numeral system entropy coder.

64-bit state, 32-bit word renormalization, 12-bit frequency precision.  The
encoder walks symbols in reverse so the decoder can stream forward; the final
state is flushed as an 8-byte header at the front of the stream.  Symbol
frequency tables are static per stream and carried out of band.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DecodeError, EncodeError, InvalidArgument

PRECISION = 12
TOTAL = 1 << PRECISION
_MASK = TOTAL - 1
RANS_L = 1 << 31
# Size of the flushed final-state header, in bytes.
STATE_BYTES = 8


@dataclass(frozen=True)
class SymbolModel:
    """Normalized frequency table over a dense alphabet 0..n-1.

    Frequencies sum to exactly TOTAL and are all >= 1, so every symbol stays
    codable even when its observed count was zero.
    """

    freqs: tuple[int, ...]
    cum: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.freqs) == 0:
            raise InvalidArgument("empty alphabet")
        if len(self.freqs) > TOTAL:
            raise InvalidArgument(f"alphabet larger than {TOTAL} symbols")
        if any(f < 1 for f in self.freqs):
            raise InvalidArgument("all frequencies must be >= 1")
        if sum(self.freqs) != TOTAL:
            raise InvalidArgument(f"frequencies must sum to {TOTAL}")
        cum = [0]
        for f in self.freqs:
            cum.append(cum[-1] + f)
        object.__setattr__(self, "cum", tuple(cum))

    @property
    def alphabet_size(self) -> int:
        return len(self.freqs)

    @classmethod
    def from_counts(cls, counts) -> "SymbolModel":
        """Build a model from raw counts via largest-remainder normalization."""
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise InvalidArgument("counts must be a non-empty 1-D array")
        if (counts < 0).any():
            raise InvalidArgument("counts must be non-negative")
        if counts.size > TOTAL:
            raise InvalidArgument(f"alphabet larger than {TOTAL} symbols")
        total = int(counts.sum())
        if total == 0:
            counts = np.ones_like(counts)
            total = counts.size
        # one guaranteed slot per symbol, the rest split by largest remainder
        remaining = TOTAL - counts.size
        ideal = counts * (remaining / total)
        extra = np.floor(ideal).astype(np.int64)
        leftover = remaining - int(extra.sum())
        if leftover > 0:
            order = np.argsort(-(ideal - extra), kind="stable")
            extra[order[:leftover]] += 1
        return cls(tuple(int(f) for f in 1 + extra))


def entropy_encode(symbols, model: SymbolModel) -> bytes:
    """Encode a symbol sequence; returns state header + code words."""
    if isinstance(symbols, np.ndarray):
        symbols = symbols.tolist()
    else:
        symbols = [int(s) for s in symbols]
    n = len(model.freqs)
    if symbols and not 0 <= min(symbols) <= max(symbols) < n:
        bad = next(s for s in symbols if not 0 <= s < n)
        raise EncodeError(f"symbol {bad} outside alphabet of {n}")
    shifted_l = (RANS_L >> PRECISION) << 32
    freqs = model.freqs
    cum = model.cum
    x_max_tab = tuple(shifted_l * f for f in freqs)
    x = RANS_L
    words = []
    append = words.append
    for s in reversed(symbols):
        f = freqs[s]
        while x >= x_max_tab[s]:
            append(x & 0xFFFFFFFF)
            x >>= 32
        q, r = divmod(x, f)
        x = (q << PRECISION) + r + cum[s]
    words.reverse()
    return struct.pack("<Q", x) + np.asarray(words, dtype="<u4").tobytes()


def entropy_decode(data: bytes, n_symbols: int, model: SymbolModel) -> list[int]:
    """Decode exactly n_symbols; verifies the stream is fully and exactly consumed."""
    if len(data) < STATE_BYTES:
        raise DecodeError("entropy stream shorter than state header")
    # slot-indexed tables avoid a second lookup through the symbol id
    slot_sym = []
    slot_freq = []
    slot_start = []
    for s, f in enumerate(model.freqs):
        slot_sym.extend([s] * f)
        slot_freq.extend([f] * f)
        slot_start.extend([model.cum[s]] * f)
    (x,) = struct.unpack_from("<Q", data, 0)
    n_words, leftover = divmod(len(data) - STATE_BYTES, 4)
    words = np.frombuffer(data, dtype="<u4", count=n_words, offset=STATE_BYTES).tolist()
    word_at = 0
    out = []
    append = out.append
    for _ in range(n_symbols):
        slot = x & _MASK
        x = slot_freq[slot] * (x >> PRECISION) + slot - slot_start[slot]
        while x < RANS_L:
            if word_at >= n_words:
                raise DecodeError("entropy stream truncated")
            x = (x << 32) | words[word_at]
            word_at += 1
        append(slot_sym[slot])
    if x != RANS_L:
        raise DecodeError("entropy stream final state mismatch")
    if word_at != n_words or leftover:
        raise DecodeError("trailing bytes after entropy stream")
    return out
