"""XOR encryption plus subcarrier-level data obfuscation.

The encrypted bitstream is partitioned into data units.  Each unit spans
``s`` OFDM symbols of ``N_d`` subcarriers; ``k`` of those subcarriers are
dummies carrying decoy tokens from the semantic encoder, and the rest
carry payload.  Per-unit (s, k) and the dummy placement are drawn from a
seeded keystream, so a receiver holding the seed re-derives the layout
exactly and an eavesdropper sees independently scrambled structure.

Stream discipline per frame is fixed and normative: the "xor" stream
yields the l_d encryption bits first, then per unit s, k, and the k
location draws, in that order.  Dummy bits come from a second stream
keyed by seed2 (label "dummy"); tail padding from a "pad" stream.
Deviating from this order desynchronizes the two ends.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .bits import BitString, bytes_from_bits, xor_bits
from .codec import CodecModel, encode
from .keying import Keystream


class DesyncError(ValueError):
    """Frame metadata disagrees with the layout re-derived from the seed."""


@dataclass(frozen=True)
class ObfuscationParams:
    s_max: int = 4
    k_max: int = 10
    n_d: int = 64
    b: int = 4

    def __post_init__(self):
        for name in ("s_max", "k_max", "n_d", "b"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        # guarantees k < s*n_d for every drawable (s, k)
        if self.k_max >= self.n_d:
            raise ValueError("k_max must be < n_d")

    @property
    def symbol_bits(self) -> int:
        return self.n_d * self.b


@dataclass(frozen=True)
class DataUnit:
    """One obfuscated unit: s OFDM symbols with k dummy subcarriers.

    ``payload_bits`` is the full on-air content, s*n_d*b bits with dummy
    and data subcarriers interleaved (b bits per subcarrier, MSB first).
    """

    s: int
    k: int
    dummy_locations: np.ndarray
    payload_bits: BitString

    def __post_init__(self):
        locs = np.asarray(self.dummy_locations, dtype=np.int64)
        object.__setattr__(self, "dummy_locations", locs)
        object.__setattr__(self, "payload_bits", np.asarray(self.payload_bits, dtype=np.uint8))
        if locs.size != self.k:
            raise ValueError("location count must equal k")
        if locs.size and (np.any(np.diff(locs) <= 0) or locs[0] < 0):
            raise ValueError("locations must be strictly increasing and non-negative")

    def capacity_bits(self, p: ObfuscationParams) -> int:
        return (self.s * p.n_d - self.k) * p.b


@dataclass(frozen=True)
class ObfuscatedFrame:
    units: tuple
    tail_bits: BitString
    l_d: int

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "tail_bits", np.asarray(self.tail_bits, dtype=np.uint8))

    def n_units(self) -> int:
        return len(self.units)


def derive_seed2(seed: BitString) -> bytes:
    """Second stream key for dummy data, bound to the frame seed."""
    return hashlib.sha256(bytes_from_bits(np.asarray(seed, dtype=np.uint8)) + b"dummy").digest()


def encrypt_bits(data: BitString, ks: Keystream) -> BitString:
    data = np.asarray(data, dtype=np.uint8)
    return xor_bits(data, ks.bits(data.size))


def draw_unit_params(ks: Keystream, p: ObfuscationParams) -> tuple[int, int]:
    s = 1 + ks.draw_uniform(p.s_max)
    k = 1 + ks.draw_uniform(p.k_max)
    return s, k


def dummy_locations(ks: Keystream, s: int, k: int, n_d: int) -> np.ndarray:
    """k distinct dummy indices in [0, s*n_d), one stream draw per pick."""
    n = s * n_d
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < s*n_d")
    pool = np.arange(n, dtype=np.int64)
    for i in range(k):
        j = i + ks.draw_uniform(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    chosen = pool[:k]
    chosen.sort()
    return chosen


def generate_dummy_bits(seed2_stream: Keystream, k: int, b: int, model: CodecModel) -> BitString:
    """Decoy content: uniformly drawn tokens, semantically encoded, k*b bits."""
    if k < 1 or b < 1:
        raise ValueError("k and b must be >= 1")
    n_tokens = -(-(k * b) // model.token_bits)
    tokens = [seed2_stream.draw_uniform(model.vocab_size) for _ in range(n_tokens)]
    return encode(tokens, model)[: k * b]


def _data_slots(s: int, k: int, n_d: int, locs: np.ndarray) -> np.ndarray:
    mask = np.ones(s * n_d, dtype=bool)
    mask[locs] = False
    return np.flatnonzero(mask)


def obfuscate(data: BitString, seed: BitString, p: ObfuscationParams, model: CodecModel) -> ObfuscatedFrame:
    """Encrypt ``data`` and pack it into dummy-laced units plus a padded tail.

    The unit loop draws (s, k) per unit and stops as soon as the drawn
    unit's data capacity exceeds what is left; the stopping draw is still
    consumed.  Leftover encrypted bits go to the tail, padded with "pad"
    stream bits to a whole number of OFDM symbols.
    """
    data = np.asarray(data, dtype=np.uint8)
    if data.size == 0:
        raise ValueError("data must be non-empty")
    l_d = int(data.size)

    ks = Keystream.from_seed_bits(seed, "xor")
    enc = xor_bits(data, ks.bits(l_d))
    dummy_ks = Keystream(derive_seed2(seed), "dummy")

    units = []
    pos = 0
    remaining = l_d
    while True:
        s, k = draw_unit_params(ks, p)
        cap = (s * p.n_d - k) * p.b
        if cap > remaining:
            break
        locs = dummy_locations(ks, s, k, p.n_d)
        slots = np.empty((s * p.n_d, p.b), dtype=np.uint8)
        slots[locs] = generate_dummy_bits(dummy_ks, k, p.b, model).reshape(k, p.b)
        slots[_data_slots(s, k, p.n_d, locs)] = enc[pos:pos + cap].reshape(-1, p.b)
        units.append(DataUnit(s, k, locs, slots.ravel()))
        pos += cap
        remaining -= cap

    if remaining:
        pad_len = -remaining % p.symbol_bits
        pad_ks = Keystream.from_seed_bits(seed, "pad")
        tail = np.concatenate([enc[pos:], pad_ks.bits(pad_len)])
    else:
        tail = np.zeros(0, dtype=np.uint8)
    return ObfuscatedFrame(tuple(units), tail, l_d)


def ota_bits(frame: ObfuscatedFrame) -> BitString:
    """The over-the-air bit string: unit payloads in order, then the tail."""
    parts = [u.payload_bits for u in frame.units] + [frame.tail_bits]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def _expected_tail_bits(remaining: int, p: ObfuscationParams) -> int:
    if remaining == 0:
        return 0
    return -(-remaining // p.symbol_bits) * p.symbol_bits


def deobfuscate(frame: ObfuscatedFrame, seed: BitString, p: ObfuscationParams) -> BitString:
    """Exact inverse of obfuscate for a trusted frame.

    Replays the stream draws and demands that the frame's recorded
    layout match them bit for bit; any disagreement raises DesyncError.
    """
    ks = Keystream.from_seed_bits(seed, "xor")
    xbits = ks.bits(frame.l_d)
    chunks = []
    remaining = frame.l_d
    for unit in frame.units:
        s, k = draw_unit_params(ks, p)
        cap = (s * p.n_d - k) * p.b
        if cap > remaining:
            raise DesyncError("unit present past the generator's stopping point")
        if (s, k) != (unit.s, unit.k):
            raise DesyncError(f"unit params ({unit.s},{unit.k}) != derived ({s},{k})")
        locs = dummy_locations(ks, s, k, p.n_d)
        if not np.array_equal(locs, unit.dummy_locations):
            raise DesyncError("dummy locations disagree with the derived placement")
        if unit.payload_bits.size != s * p.n_d * p.b:
            raise DesyncError("unit payload has the wrong length")
        chunks.append(unit.payload_bits.reshape(-1, p.b)[_data_slots(s, k, p.n_d, locs)].ravel())
        remaining -= cap
    s, k = draw_unit_params(ks, p)  # the stopping draw
    if (s * p.n_d - k) * p.b <= remaining:
        raise DesyncError("frame ends before the generator would stop")
    if frame.tail_bits.size != _expected_tail_bits(remaining, p):
        raise DesyncError("tail length disagrees with the derived layout")
    chunks.append(frame.tail_bits[:remaining])
    enc = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.uint8)
    return xor_bits(enc[: frame.l_d], xbits)


def _take(bits: np.ndarray, start: int, n: int) -> np.ndarray:
    """Slice with zero padding past the end (lossy-channel tolerance)."""
    out = np.zeros(n, dtype=np.uint8)
    got = bits[start:start + n]
    out[: got.size] = got
    return out


def recover_bits(ota: BitString, l_d: int, seed: BitString, p: ObfuscationParams) -> BitString:
    """Seed-driven deobfuscation of a raw over-the-air bit string.

    Unlike deobfuscate there is no metadata to cross-check: the layout is
    taken entirely from the seed, short input is zero padded and excess
    ignored, so demodulation bit errors (or a wrong seed) degrade the
    output instead of aborting it.
    """
    ota = np.asarray(ota, dtype=np.uint8)
    if l_d < 0:
        raise ValueError("l_d must be >= 0")
    ks = Keystream.from_seed_bits(seed, "xor")
    xbits = ks.bits(l_d)
    chunks = []
    pos = 0
    remaining = l_d
    while remaining > 0:
        s, k = draw_unit_params(ks, p)
        cap = (s * p.n_d - k) * p.b
        if cap > remaining:
            chunks.append(_take(ota, pos, remaining))
            remaining = 0
            break
        locs = dummy_locations(ks, s, k, p.n_d)
        unit = _take(ota, pos, s * p.n_d * p.b)
        chunks.append(unit.reshape(-1, p.b)[_data_slots(s, k, p.n_d, locs)].ravel())
        pos += s * p.n_d * p.b
        remaining -= cap
    enc = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.uint8)
    return xor_bits(enc, xbits)


# --- serialization ----------------------------------------------------------

_MAGIC = b"SOBF"
_VERSION = 1


def serialize_frame(frame: ObfuscatedFrame) -> bytes:
    """Pack a frame for the wire between simulator stages (big-endian)."""
    out = bytearray()
    out += _MAGIC
    out.append(_VERSION)
    out += struct.pack(">QI", frame.l_d, len(frame.units))
    for u in frame.units:
        out += struct.pack(">HH", u.s, u.k)
        out += struct.pack(f">{u.k}I", *u.dummy_locations.tolist())
        out += bytes_from_bits(u.payload_bits)
    out += bytes_from_bits(frame.tail_bits)
    return bytes(out)


def deserialize_frame(buf: bytes, p: ObfuscationParams) -> ObfuscatedFrame:
    if buf[:4] != _MAGIC:
        raise ValueError("bad magic")
    if buf[4] != _VERSION:
        raise ValueError(f"unsupported version {buf[4]}")
    l_d, n_units = struct.unpack_from(">QI", buf, 5)
    off = 17
    units = []
    remaining = l_d
    for _ in range(n_units):
        s, k = struct.unpack_from(">HH", buf, off)
        off += 4
        locs = np.array(struct.unpack_from(f">{k}I", buf, off), dtype=np.int64)
        off += 4 * k
        nbits = s * p.n_d * p.b
        nbytes = (nbits + 7) // 8
        payload = np.unpackbits(np.frombuffer(buf, dtype=np.uint8, count=nbytes, offset=off))[:nbits]
        off += nbytes
        units.append(DataUnit(s, k, locs, payload))
        remaining -= (s * p.n_d - k) * p.b
    if remaining < 0:
        raise ValueError("unit capacities exceed l_d")
    tail_len = _expected_tail_bits(remaining, p)
    tail_bytes = (tail_len + 7) // 8
    if len(buf) - off != tail_bytes:
        raise ValueError("trailing bytes disagree with the derived tail length")
    tail = np.unpackbits(np.frombuffer(buf, dtype=np.uint8, count=tail_bytes, offset=off))[:tail_len]
    return ObfuscatedFrame(tuple(units), tail, l_d)
