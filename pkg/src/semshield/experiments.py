"""End-to-end experiment scenarios with deterministic, file-based output.

Every scenario is a pure function of its config: all randomness flows
through SHA-256-derived substreams of (master_seed, scenario, point
index, role), so re-running a config reproduces its output files byte
for byte and points can be computed in any order.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bits import BitString, hex_from_bits, xor_bits
from .codec import CodecModel, bleu_scores, decode, encode, make_corpus
from .keying import (
    InsufficientEntropyError,
    KeyMaterial,
    Keystream,
    constant_trace,
    generate_skey,
    rayleigh_trace,
    simulate_plk,
    weight_generator,
)
from .obfuscation import ObfuscationParams, obfuscate, ota_bits, recover_bits
from .ofdm import (
    BITS_PER_SYMBOL,
    KIND_RAYLEIGH_MULTIPATH,
    N_FFT,
    ChannelModel,
    apply_channel,
    measure_ber,
    ofdm_demodulate_equalize,
    ofdm_modulate,
    qam16_demap,
    qam16_map,
)
from . import security

SCENARIOS = (
    "ber_sweep",
    "bleu_compare",
    "constellation",
    "keygen_demo",
    "search_space",
    "dispersion",
)
_CHANNEL_SCENARIOS = ("ber_sweep", "bleu_compare", "constellation")
DEFAULT_SNR_GRID = (0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0)
_MASK64 = 0xFFFFFFFFFFFFFFFF


class ConfigError(ValueError):
    """The experiment configuration is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "ber_sweep"
    snr_list: tuple = DEFAULT_SNR_GRID
    n_bits: int = 1_000_000
    n_sentences: int = 500
    obfuscation: ObfuscationParams = field(default_factory=ObfuscationParams)
    codec: CodecModel = field(default_factory=CodecModel)
    channel_kind: str = "awgn"
    channel_taps: int = 3
    master_seed: int = 0
    static_channel: bool = False
    key_refresh: str = "per_frame"
    output_path: str | None = None
    n_unit: int = 16
    l_weight: int = 16
    l_skey: int = 128
    l_seedkey: int = 128
    guard_band: float = 0.2
    n_probes: int = 4096
    probe_coherence: int = 1
    probe_noise_std: float = 0.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        object.__setattr__(self, "snr_list", tuple(sorted(float(s) for s in self.snr_list)))
        if self.scenario in _CHANNEL_SCENARIOS and not self.snr_list:
            raise ConfigError("snr_list must be non-empty for channel scenarios")
        if self.n_bits < 1 or self.n_sentences < 1:
            raise ConfigError("workload sizes must be >= 1")
        if self.key_refresh not in ("per_frame", "per_point"):
            raise ConfigError("key_refresh must be per_frame or per_point")
        for name in ("n_unit", "l_weight", "l_skey", "l_seedkey", "n_probes", "probe_coherence"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.l_skey > 256 or self.l_seedkey > 256:
            raise ConfigError("key lengths above 256 bits are not supported")
        if self.guard_band < 0 or self.probe_noise_std < 0:
            raise ConfigError("guard_band and probe_noise_std must be >= 0")
        try:
            self.channel(snr_db=math.inf, channel_seed=0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def channel(self, snr_db: float, channel_seed: int) -> ChannelModel:
        taps = self.channel_taps if self.channel_kind == KIND_RAYLEIGH_MULTIPATH else 1
        return ChannelModel(self.channel_kind, snr_db, taps, channel_seed)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        data = dict(raw)
        try:
            if "obfuscation" in data:
                data["obfuscation"] = ObfuscationParams(**data["obfuscation"])
            if "codec" in data:
                data["codec"] = CodecModel(**data["codec"])
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(raw)


# --- deterministic substreams ------------------------------------------------


def derive_digest(master_seed: int, *parts) -> bytes:
    tag = "|".join([str(int(master_seed))] + [str(p) for p in parts])
    return hashlib.sha256(tag.encode("ascii")).digest()


def derive_rng(master_seed: int, *parts) -> np.random.Generator:
    words = np.frombuffer(derive_digest(master_seed, *parts), dtype="<u8")
    return np.random.default_rng(words.tolist())


def derive_int(master_seed: int, *parts) -> int:
    return int.from_bytes(derive_digest(master_seed, *parts)[:8], "big")


# --- shared chain pieces ------------------------------------------------------


def _pad_to_grid(bits: BitString, pad_rng: np.random.Generator) -> np.ndarray:
    """Extend a bit string with random filler so it fills whole OFDM symbols."""
    grid = N_FFT * BITS_PER_SYMBOL
    total = -(-bits.size // grid) * grid
    if total == bits.size:
        return bits
    filler = pad_rng.integers(0, 2, total - bits.size).astype(np.uint8)
    return np.concatenate([bits, filler])


def _transmit(bits: BitString, pad_rng: np.random.Generator) -> np.ndarray:
    return ofdm_modulate(qam16_map(_pad_to_grid(bits, pad_rng)))


def _receive(tx: np.ndarray, ch: ChannelModel, nbits: int) -> BitString:
    eq = ofdm_demodulate_equalize(apply_channel(tx, ch), ch)
    return qam16_demap(eq)[:nbits]


def _run_chain(bits: BitString, ch: ChannelModel, pad_rng: np.random.Generator) -> BitString:
    return _receive(_transmit(bits, pad_rng), ch, bits.size)


def _corpus_bits(cfg: ExperimentConfig, n_bits: int, rng: np.random.Generator) -> BitString:
    """Payload bits drawn as a uniformly random token stream."""
    n_tokens = -(-n_bits // cfg.codec.token_bits)
    tokens = rng.integers(0, cfg.codec.vocab_size, size=n_tokens)
    return encode(tokens, cfg.codec)[:n_bits]


def _derive_key_material(cfg: ExperimentConfig, *scope) -> tuple[KeyMaterial, dict]:
    """Run the whole keying ceremony for one frame scope.

    PLK from a channel trace (constant when static_channel), SKey from
    the n-gram scores of one reference sentence against its decoded
    version, weights drawn from a PLK-seeded stream.
    """
    if cfg.static_channel:
        trace = constant_trace(cfg.n_probes, 1.0, cfg.probe_noise_std)
    else:
        trace = rayleigh_trace(
            cfg.n_probes,
            derive_int(cfg.master_seed, *scope, "trace"),
            cfg.probe_coherence,
            cfg.probe_noise_std,
        )
    try:
        plk, entropy = simulate_plk(
            trace, cfg.l_seedkey, cfg.guard_band,
            noise_seed=derive_int(cfg.master_seed, *scope, "probe-noise"),
        )
        insufficient = False
    except InsufficientEntropyError as exc:
        plk = np.zeros(cfg.l_seedkey, dtype=np.uint8)
        entropy = exc.entropy_estimate
        insufficient = True

    sentence = make_corpus(1, cfg.codec, derive_int(cfg.master_seed, *scope, "sentence"))[0]
    decoded = decode(
        encode(sentence, cfg.codec), cfg.codec,
        noise_seed=derive_int(cfg.master_seed, *scope, "decode"),
    )
    scores = bleu_scores(sentence, decoded)
    weights = weight_generator(Keystream.from_seed_bits(plk, "weights"), cfg.l_weight)
    skey = generate_skey(scores, weights, cfg.l_skey)
    km = KeyMaterial(plk, skey)
    info = {
        "plk_entropy_estimate": entropy,
        "insufficient_entropy": insufficient,
        "scores": scores,
        "weights": weights,
    }
    return km, info


# --- scenarios ----------------------------------------------------------------


def run_ber_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Plain, legitimate, and wrong-seed receiver BER at each SNR point."""
    rows = []
    p = cfg.obfuscation
    for i, snr in enumerate(cfg.snr_list):
        scope = ("ber_sweep", i)
        data = _corpus_bits(cfg, cfg.n_bits, derive_rng(cfg.master_seed, *scope, "data"))

        km, _ = _derive_key_material(cfg, *scope)
        frame = obfuscate(data, km.seed_key, p, cfg.codec)
        ota = ota_bits(frame)
        tx = _transmit(ota, derive_rng(cfg.master_seed, *scope, "pad"))

        ch_legit = cfg.channel(snr, derive_int(cfg.master_seed, *scope, "ch-legit"))
        rx_legit = _receive(tx, ch_legit, ota.size)
        ber_legit = measure_ber(data, recover_bits(rx_legit, frame.l_d, km.seed_key, p))

        # Eavesdropper: own independent channel, correct demodulation,
        # uniformly random wrong seed.
        ch_eve = cfg.channel(snr, derive_int(cfg.master_seed, *scope, "ch-eve"))
        rx_eve = _receive(tx, ch_eve, ota.size)
        wrong_seed = derive_rng(cfg.master_seed, *scope, "eve-seed").integers(
            0, 2, cfg.l_seedkey).astype(np.uint8)
        if np.array_equal(wrong_seed, km.seed_key):
            wrong_seed = xor_bits(wrong_seed, np.eye(1, cfg.l_seedkey, dtype=np.uint8)[0])
        ber_eve = measure_ber(data, recover_bits(rx_eve, frame.l_d, wrong_seed, p))

        ch_plain = cfg.channel(snr, derive_int(cfg.master_seed, *scope, "ch-plain"))
        ber_plain = measure_ber(
            data, _run_chain(data, ch_plain, derive_rng(cfg.master_seed, *scope, "pad-plain")))

        rows.append({
            "snr_db": snr,
            "ber_plain": ber_plain,
            "ber_legit": ber_legit,
            "ber_eavesdropper": ber_eve,
            "n_bits": cfg.n_bits,
        })
    return rows


def run_bleu_compare(cfg: ExperimentConfig) -> list[dict]:
    """Corpus-mean n-gram scores with and without the encryption chain."""
    corpus = make_corpus(cfg.n_sentences, cfg.codec, derive_int(cfg.master_seed, "bleu", "corpus"))
    p = cfg.obfuscation
    means = {}
    for i, snr in enumerate(cfg.snr_list):
        scope = ("bleu_compare", i)
        sums_enc = np.zeros(4)
        sums_plain = np.zeros(4)
        if cfg.key_refresh == "per_point":
            km, _ = _derive_key_material(cfg, *scope)
        for j, sentence in enumerate(corpus):
            if cfg.key_refresh == "per_frame":
                km, _ = _derive_key_material(cfg, *scope, j)
            bits = encode(sentence, cfg.codec)

            frame = obfuscate(bits, km.seed_key, p, cfg.codec)
            ota = ota_bits(frame)
            ch = cfg.channel(snr, derive_int(cfg.master_seed, *scope, j, "ch"))
            rx = _run_chain(ota, ch, derive_rng(cfg.master_seed, *scope, j, "pad"))
            recovered = recover_bits(rx, frame.l_d, km.seed_key, p)
            hyp_enc = decode(recovered, cfg.codec, noise_seed=j)
            sums_enc += bleu_scores(sentence, hyp_enc).as_floats()

            ch_plain = cfg.channel(snr, derive_int(cfg.master_seed, *scope, j, "ch-plain"))
            rx_plain = _run_chain(bits, ch_plain, derive_rng(cfg.master_seed, *scope, j, "pad-plain"))
            hyp_plain = decode(rx_plain, cfg.codec, noise_seed=j)
            sums_plain += bleu_scores(sentence, hyp_plain).as_floats()
        means[snr] = (sums_enc / len(corpus), sums_plain / len(corpus))
    rows = []
    for gram in range(1, 5):
        for snr in cfg.snr_list:
            enc_mean, plain_mean = means[snr]
            rows.append({
                "gram": gram,
                "snr_db": snr,
                "bleu_enc": float(enc_mean[gram - 1]),
                "bleu_noenc": float(plain_mean[gram - 1]),
            })
    return rows


def emit_constellation(cfg: ExperimentConfig) -> np.ndarray:
    """Received equalized symbols at the first configured SNR."""
    snr = cfg.snr_list[0]
    scope = ("constellation", 0)
    bits = _corpus_bits(cfg, cfg.n_bits, derive_rng(cfg.master_seed, *scope, "data"))
    padded = _pad_to_grid(bits, derive_rng(cfg.master_seed, *scope, "pad"))
    tx = ofdm_modulate(qam16_map(padded))
    ch = cfg.channel(snr, derive_int(cfg.master_seed, *scope, "ch"))
    return ofdm_demodulate_equalize(apply_channel(tx, ch), ch)


def run_keygen_demo(cfg: ExperimentConfig) -> dict:
    """One full key ceremony plus the SKey transport round trip."""
    km, info = _derive_key_material(cfg, "keygen", 0)
    transport = xor_bits(km.skey, Keystream.from_seed_bits(km.plk, "skey-transport").bits(cfg.l_skey))
    skey_rx = xor_bits(transport, Keystream.from_seed_bits(km.plk, "skey-transport").bits(cfg.l_skey))
    seed_rx = KeyMaterial(km.plk, skey_rx).seed_key
    return {
        "scenario": "keygen_demo",
        "static_channel": cfg.static_channel,
        "plk_entropy_estimate": info["plk_entropy_estimate"],
        "insufficient_entropy": info["insufficient_entropy"],
        "plk_hex": hex_from_bits(km.plk),
        "skey_hex": hex_from_bits(km.skey),
        "seed_hex": hex_from_bits(km.seed_key),
        "skey_transport_hex": hex_from_bits(transport),
        "match": bool(np.array_equal(seed_rx, km.seed_key)),
        "l_skey": cfg.l_skey,
        "l_seedkey": cfg.l_seedkey,
    }


def run_search_space(cfg: ExperimentConfig) -> dict:
    p = cfg.obfuscation
    report = security.analyze(
        s_max=p.s_max, k_max=p.k_max, n_d=p.n_d, n_unit=cfg.n_unit,
        l_weight=cfg.l_weight, l_skey=cfg.l_skey, l_seedkey=cfg.l_seedkey,
    )
    report["scenario"] = "search_space"
    report["ours_exceeds_baseline"] = int(report["eq11"]["exact"]) > int(report["eq9"]["exact"])
    return report


def run_dispersion(cfg: ExperimentConfig) -> dict:
    corpus = make_corpus(cfg.n_sentences, cfg.codec, derive_int(cfg.master_seed, "dispersion", "corpus"))
    ks = Keystream(derive_digest(cfg.master_seed, "dispersion", "weights"), "weights")
    report = security.bleu_dispersion_report(corpus, cfg.codec, ks)
    report["scenario"] = "dispersion"
    report["master_seed"] = cfg.master_seed
    return report


# --- output -------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.8f}"
    return str(value)


def _csv_text(header: list[str], rows: list[dict]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[col]) for col in header))
    return "\n".join(lines) + "\n"


def render_output(cfg: ExperimentConfig) -> str:
    """Run the configured scenario and render its canonical file content."""
    if cfg.scenario == "ber_sweep":
        rows = sorted(run_ber_sweep(cfg), key=lambda r: r["snr_db"])
        return _csv_text(["snr_db", "ber_plain", "ber_legit", "ber_eavesdropper", "n_bits"], rows)
    if cfg.scenario == "bleu_compare":
        rows = sorted(run_bleu_compare(cfg), key=lambda r: (r["gram"], r["snr_db"]))
        return _csv_text(["gram", "snr_db", "bleu_enc", "bleu_noenc"], rows)
    if cfg.scenario == "constellation":
        symbols = emit_constellation(cfg)
        lines = ["re,im"] + [f"{s.real:.9f},{s.imag:.9f}" for s in symbols]
        return "\n".join(lines) + "\n"
    if cfg.scenario == "keygen_demo":
        return json.dumps(run_keygen_demo(cfg), indent=2, sort_keys=True) + "\n"
    if cfg.scenario == "search_space":
        return json.dumps(run_search_space(cfg), indent=2, sort_keys=True) + "\n"
    if cfg.scenario == "dispersion":
        return json.dumps(run_dispersion(cfg), indent=2, sort_keys=True) + "\n"
    raise ConfigError(f"unknown scenario {cfg.scenario!r}")


def run_to_file(cfg: ExperimentConfig, out_path: str | Path) -> Path:
    text = render_output(cfg)
    out = Path(out_path)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="ascii")
    return out
