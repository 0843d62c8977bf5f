"""Key material: channel-derived bits, score-derived keys, deterministic streams.

Two independent secrets feed the link.  A physical-layer key (PLK) is
distilled from reciprocal channel-gain probes through guard-band
quantization, parity reconciliation, and hash-based amplification.  A
second key (SKey) hashes the weighted sum of the four n-gram scores of a
transmitted sentence; the weights come from a keyed stream so the sum is
unpredictable even when the scores cluster.  ``seed_key = SKey XOR PLK``
seeds every keystream used by encryption and obfuscation.

All streams are ChaCha20 (RFC 8439 semantics: 256-bit key, 96-bit nonce,
32-bit block counter).  Nonces are derived from short label strings so
differently-labeled streams are independent.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from .bits import BitString, bits_from_bytes, bytes_from_bits, int_from_bits, xor_bits
from .codec import BleuScores

DEFAULT_KEY_BITS = 128
CHACHA_BLOCK_BYTES = 64
_WORD = 1 << 32


def skey_hash(data: bytes, nbits: int) -> BitString:
    """SHA-256 truncated to ``nbits``, the hash behind all key derivation."""
    if nbits < 1 or nbits > 256:
        raise ValueError("nbits must lie in [1, 256]")
    return bits_from_bytes(hashlib.sha256(data).digest(), nbits)


def chacha20_stream(key: bytes, nonce: bytes, counter: int, nbytes: int) -> bytes:
    """Raw ChaCha20 keystream bytes starting at the given 64-byte block."""
    if len(key) != 32:
        raise ValueError("key must be 32 bytes")
    if len(nonce) != 12:
        raise ValueError("nonce must be 12 bytes")
    if not 0 <= counter < _WORD:
        raise ValueError("block counter must fit in 32 bits")
    full_nonce = struct.pack("<I", counter) + nonce
    cipher = Cipher(algorithms.ChaCha20(key, full_nonce), mode=None)
    return cipher.encryptor().update(bytes(nbytes))


def expand_seed(seed: BitString) -> bytes:
    """Map seed bits of any length to a 32-byte stream key.

    A 256-bit seed is used verbatim; anything else is hashed.
    """
    seed = np.asarray(seed, dtype=np.uint8)
    if seed.size == 256:
        return bytes_from_bits(seed)
    return hashlib.sha256(bytes_from_bits(seed)).digest()


def label_nonce(label: bytes) -> bytes:
    return hashlib.sha256(label).digest()[:12]


class Keystream:
    """Deterministic bit stream: ChaCha20 keyed by ``seed``, nonce from ``label``.

    The stream is a pure function of (seed, label, position); bits are
    served most-significant-first within each keystream byte.  Instances
    are stateful and single-owner.
    """

    def __init__(self, seed: bytes, label: bytes | str, position: int = 0, nonce: bytes | None = None):
        if len(seed) != 32:
            raise ValueError("seed must be 32 bytes; use Keystream.from_seed_bits for bit strings")
        if isinstance(label, str):
            label = label.encode("utf-8")
        self.seed = seed
        self.label = label
        self.position = position
        self._nonce = nonce if nonce is not None else label_nonce(label)
        self._buf = np.zeros(0, dtype=np.uint8)
        self._buf_pos = 0
        self._gen_offset = position  # absolute bit offset of the next ungenerated bit

    @classmethod
    def from_seed_bits(cls, seed_bits: BitString, label: bytes | str, position: int = 0) -> "Keystream":
        return cls(expand_seed(seed_bits), label, position)

    def _refill(self, min_bits: int) -> None:
        n_gen = max(min_bits, 32768)
        offset = self._gen_offset
        first_byte, bit_in_byte = divmod(offset, 8)
        counter, skip = divmod(first_byte, CHACHA_BLOCK_BYTES)
        nbytes = (bit_in_byte + n_gen + 7) // 8
        raw = chacha20_stream(self.seed, self._nonce, counter, skip + nbytes)[skip:]
        fresh = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[bit_in_byte:bit_in_byte + n_gen]
        self._buf = np.concatenate([self._buf[self._buf_pos:], fresh])
        self._buf_pos = 0
        self._gen_offset += n_gen

    def bits(self, nbits: int) -> BitString:
        """Return the next ``nbits`` of the stream and advance the position."""
        if nbits < 0:
            raise ValueError("nbits must be non-negative")
        if nbits == 0:
            return np.zeros(0, dtype=np.uint8)
        available = self._buf.size - self._buf_pos
        if available < nbits:
            self._refill(nbits - available)
        out = self._buf[self._buf_pos:self._buf_pos + nbits].copy()
        self._buf_pos += nbits
        self.position += nbits
        return out

    def draw_uniform(self, m: int) -> int:
        """Unbiased draw from [0, m) by rejection on 32-bit stream words."""
        if not 1 <= m <= _WORD:
            raise ValueError("m must lie in [1, 2^32]")
        limit = (_WORD // m) * m
        for _ in range(1000):
            word = int_from_bits(self.bits(32))
            if word < limit:
                return word % m
        raise RuntimeError("rejection sampling failed to terminate")


@dataclass(frozen=True)
class WeightVector:
    """Four score weights as raw fixed-point integers with ``l_weight`` fractional bits."""

    w1: int
    w2: int
    w3: int
    w4: int
    l_weight: int = 16

    def __post_init__(self):
        top = 1 << self.l_weight
        for value in (self.w1, self.w2, self.w3, self.w4):
            if not 0 <= value < top:
                raise ValueError(f"weight {value} outside [0, 2^{self.l_weight})")

    def as_floats(self) -> tuple[float, float, float, float]:
        scale = 1 << self.l_weight
        return tuple(w / scale for w in (self.w1, self.w2, self.w3, self.w4))

    @property
    def raw(self) -> tuple[int, int, int, int]:
        return (self.w1, self.w2, self.w3, self.w4)


def weight_generator(ks, l_weight: int = 16) -> WeightVector:
    """Draw four weights from the stream, ``l_weight`` bits each, in order w1..w4."""
    raw = [int_from_bits(ks.bits(l_weight)) for _ in range(4)]
    return WeightVector(*raw, l_weight=l_weight)


def generated_bleu(scores: BleuScores, w: WeightVector) -> int:
    """Fractional part of the weighted score sum as a raw Q0.32 integer.

    Q0.32 scores times raw weights accumulate exactly; the sum is aligned
    back to Q0.32 and reduced mod 1 by keeping the low 32 bits.
    """
    acc = (
        scores.s1 * w.w1
        + scores.s2 * w.w2
        + scores.s3 * w.w3
        + scores.s4 * w.w4
    )
    return (acc >> w.l_weight) & 0xFFFFFFFF


def generate_skey(scores: BleuScores, w: WeightVector, l_skey: int = DEFAULT_KEY_BITS) -> BitString:
    """Hash the weighted score sum into an ``l_skey``-bit key."""
    gb = generated_bleu(scores, w)
    return skey_hash(gb.to_bytes(4, "big"), l_skey)


def make_seed_key(skey: BitString, plk: BitString) -> BitString:
    """Bitwise XOR of the two keys (equal lengths required)."""
    return xor_bits(skey, plk)


@dataclass(eq=False)
class KeyMaterial:
    """The three key strings of one session."""

    plk: BitString
    skey: BitString
    seed_key: BitString = field(init=False)

    def __post_init__(self):
        skey = np.asarray(self.skey, dtype=np.uint8)
        target = len(self.plk)
        if skey.size < target:
            skey = np.concatenate([skey, np.zeros(target - skey.size, dtype=np.uint8)])
        elif skey.size > target:
            skey = skey[:target]
        self.seed_key = xor_bits(skey, np.asarray(self.plk, dtype=np.uint8))


# --- physical-layer key simulation -----------------------------------------


@dataclass(frozen=True)
class ChannelTrace:
    """A probed channel-gain record.

    ``samples`` holds the underlying gain process; each value is observed
    for ``coherence`` consecutive probes.  Each party sees the probes plus
    its own Gaussian observation noise of std ``probe_noise_std``.
    """

    samples: np.ndarray
    coherence: int = 1
    probe_noise_std: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.samples.size == 0:
            raise ValueError("trace must contain at least one sample")
        if self.coherence < 1:
            raise ValueError("coherence must be >= 1")
        if self.probe_noise_std < 0:
            raise ValueError("probe_noise_std must be >= 0")

    def probes(self) -> np.ndarray:
        return np.repeat(self.samples, self.coherence)


def rayleigh_trace(n_probes: int, seed: int, coherence: int = 1, probe_noise_std: float = 0.0) -> ChannelTrace:
    """I.i.d. Rayleigh gain magnitudes, a dynamic-environment trace."""
    rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 0x7261])
    n_values = -(-n_probes // coherence)
    samples = rng.rayleigh(scale=1.0 / math.sqrt(2.0), size=n_values)
    return ChannelTrace(samples, coherence=coherence, probe_noise_std=probe_noise_std)


def constant_trace(n_probes: int, value: float = 1.0, probe_noise_std: float = 0.0) -> ChannelTrace:
    """A static-environment trace: one gain value held for the whole record."""
    return ChannelTrace(np.full(1, value), coherence=n_probes, probe_noise_std=probe_noise_std)


class InsufficientEntropyError(ValueError):
    """Too few agreed bits survived quantization and reconciliation."""

    def __init__(self, entropy_estimate: float, agreed_bits: int):
        super().__init__(
            f"only {agreed_bits} agreed bits before amplification "
            f"(entropy estimate {entropy_estimate:.4f} bits/bit)"
        )
        self.entropy_estimate = entropy_estimate
        self.agreed_bits = agreed_bits


def quantize_samples(samples: np.ndarray, guard_band: float) -> tuple[BitString, np.ndarray]:
    """Guard-band quantization around the sample median.

    Emits 1 above median + guard_band*std, 0 below median - guard_band*std,
    and discards everything in between.  Returns (bits, kept_indices).
    """
    samples = np.asarray(samples, dtype=np.float64)
    median = float(np.median(samples))
    std = float(np.std(samples))
    hi = median + guard_band * std
    lo = median - guard_band * std
    ones = samples > hi
    zeros = samples < lo
    kept = np.flatnonzero(ones | zeros)
    return ones[kept].astype(np.uint8), kept


def empirical_bit_entropy(bits: BitString) -> float:
    """Order-0 Shannon entropy per bit of a 0/1 string (0.0 for empty input)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        return 0.0
    p = float(bits.mean())
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _amplify(agreed: BitString, target_bits: int) -> BitString:
    # skey_hash in counter mode over the agreed bits (length-prefixed).
    material = struct.pack(">Q", len(agreed)) + bytes_from_bits(agreed)
    chunks = []
    produced = 0
    counter = 0
    while produced < target_bits:
        take = min(256, target_bits - produced)
        chunks.append(skey_hash(material + struct.pack(">I", counter), take))
        produced += take
        counter += 1
    return np.concatenate(chunks)


def simulate_plk(
    trace: ChannelTrace,
    target_bits: int,
    guard_band: float,
    noise_seed: int = 0,
) -> tuple[BitString, float]:
    """Distill a shared key from reciprocal channel probes.

    Both parties observe the probe sequence plus independent Gaussian
    noise, quantize with a guard band around their own median, keep only
    indices where both emitted a bit, and drop 8-bit blocks whose parity
    disagrees.  The surviving bits are hashed (counter mode) down to
    exactly ``target_bits``.  Returns (plk, entropy_estimate) where the
    estimate is the empirical per-bit entropy of the pre-amplification
    string.  Raises InsufficientEntropyError when fewer than 8 bits agree.
    """
    if target_bits < 1:
        raise ValueError("target_bits must be >= 1")
    if guard_band < 0:
        raise ValueError("guard_band must be >= 0")
    probes = trace.probes()
    rng_a = np.random.default_rng([noise_seed & 0xFFFFFFFFFFFFFFFF, 0xA11CE])
    rng_b = np.random.default_rng([noise_seed & 0xFFFFFFFFFFFFFFFF, 0xB0B])
    obs_a = probes + rng_a.normal(0.0, trace.probe_noise_std, size=probes.size) if trace.probe_noise_std else probes
    obs_b = probes + rng_b.normal(0.0, trace.probe_noise_std, size=probes.size) if trace.probe_noise_std else probes

    bits_a, kept_a = quantize_samples(obs_a, guard_band)
    bits_b, kept_b = quantize_samples(obs_b, guard_band)
    common, idx_a, idx_b = np.intersect1d(kept_a, kept_b, return_indices=True)
    a = bits_a[idx_a]
    b = bits_b[idx_b]

    # Parity reconciliation: compare 8-bit block parities, discard
    # disagreeing blocks and the ragged tail.
    n_blocks = a.size // 8
    if n_blocks:
        blk_a = a[: n_blocks * 8].reshape(n_blocks, 8)
        blk_b = b[: n_blocks * 8].reshape(n_blocks, 8)
        keep = (blk_a.sum(axis=1) & 1) == (blk_b.sum(axis=1) & 1)
        agreed = blk_a[keep].ravel()
    else:
        agreed = np.zeros(0, dtype=np.uint8)

    entropy = empirical_bit_entropy(agreed)
    if agreed.size < 8:
        raise InsufficientEntropyError(entropy, int(agreed.size))
    return _amplify(agreed, target_bits), entropy
