"""Semantic-key encryption and subcarrier obfuscation over a simulated OFDM link."""

from .bits import (
    as_bits,
    bits_from_bytes,
    bits_from_hex,
    bits_from_int,
    bytes_from_bits,
    hex_from_bits,
    int_from_bits,
    xor_bits,
)
from .codec import (
    BleuScores,
    CodecModel,
    InvalidTokenError,
    bleu_scores,
    decode,
    encode,
    load_corpus,
    make_corpus,
    quantize_q32,
    save_corpus,
)
from .keying import (
    ChannelTrace,
    InsufficientEntropyError,
    KeyMaterial,
    Keystream,
    WeightVector,
    chacha20_stream,
    constant_trace,
    empirical_bit_entropy,
    expand_seed,
    generate_skey,
    generated_bleu,
    label_nonce,
    make_seed_key,
    quantize_samples,
    rayleigh_trace,
    simulate_plk,
    skey_hash,
    weight_generator,
)
from .obfuscation import (
    DataUnit,
    DesyncError,
    ObfuscatedFrame,
    ObfuscationParams,
    deobfuscate,
    derive_seed2,
    deserialize_frame,
    draw_unit_params,
    dummy_locations,
    encrypt_bits,
    generate_dummy_bits,
    obfuscate,
    ota_bits,
    recover_bits,
    serialize_frame,
)
from .ofdm import (
    BITS_PER_SYMBOL,
    CP_LEN,
    N_FFT,
    ChannelModel,
    apply_channel,
    ber_16qam_awgn_theory,
    measure_ber,
    ofdm_demodulate_equalize,
    ofdm_modulate,
    qam16_demap,
    qam16_map,
    realize_taps,
)
from .security import (
    SearchSpaceReport,
    analyze,
    bleu_dispersion_report,
    brute_force_placements,
    histogram_entropy,
    score_histogram,
    ss_data,
    ss_dummy_location,
    ss_dummy_location_dynamic,
    ss_seedkey,
    ss_seedkey_baseline,
    ss_seedkey_dynamic,
    ss_skey,
    ss_total,
    ss_weight,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    load_config,
    render_output,
    run_ber_sweep,
    run_bleu_compare,
    run_dispersion,
    run_keygen_demo,
    run_search_space,
    run_to_file,
)

__version__ = "0.1.0"
