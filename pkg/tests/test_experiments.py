import json
import math

import numpy as np
import pytest

from semshield.cli import main
from semshield.experiments import (
    DEFAULT_SNR_GRID,
    SCENARIOS,
    ConfigError,
    ExperimentConfig,
    derive_digest,
    derive_int,
    derive_rng,
    emit_constellation,
    load_config,
    render_output,
    run_ber_sweep,
    run_bleu_compare,
    run_keygen_demo,
    run_search_space,
    run_to_file,
)
from semshield.ofdm import qam16_map


def _fast_cfg(**kw):
    base = dict(scenario="ber_sweep", snr_list=(math.inf,), n_bits=2000,
                n_sentences=10, n_probes=512)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.scenario == "ber_sweep"
        assert cfg.snr_list == DEFAULT_SNR_GRID
        assert cfg.n_bits == 1_000_000
        assert cfg.n_sentences == 500
        assert cfg.key_refresh == "per_frame"

    def test_scenarios_enumerated(self):
        assert set(SCENARIOS) == {"ber_sweep", "bleu_compare", "constellation",
                                  "keygen_demo", "search_space", "dispersion"}

    def test_snr_list_is_sorted(self):
        cfg = ExperimentConfig(snr_list=(12, 0, 6))
        assert cfg.snr_list == (0.0, 6.0, 12.0)

    def test_rejects_unknown_scenario(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(scenario="nope")

    def test_rejects_bad_key_refresh(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(key_refresh="sometimes")

    def test_rejects_oversize_keys(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(l_skey=257)

    def test_channel_helper_passes_taps_only_for_multipath(self):
        cfg = ExperimentConfig(channel_kind="rayleigh_multipath", channel_taps=5)
        assert cfg.channel(10.0, 1).taps == 5
        cfg = ExperimentConfig(channel_kind="awgn", channel_taps=5)
        assert cfg.channel(10.0, 1).taps == 1

    def test_from_dict_nested_sections(self):
        cfg = ExperimentConfig.from_dict({
            "scenario": "ber_sweep",
            "snr_list": [3, 0],
            "obfuscation": {"s_max": 2, "k_max": 3, "n_d": 8, "b": 2},
            "codec": {"vocab_size": 256, "deviation_rate": 0.0},
        })
        assert cfg.obfuscation.n_d == 8
        assert cfg.codec.token_bits == 8
        assert cfg.snr_list == (0.0, 3.0)

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"scenario": "ber_sweep", "bogus": 1})

    def test_load_config_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.json")

    def test_load_config_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_load_config_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"scenario": "search_space", "n_unit": 4}),
                        encoding="utf-8")
        cfg = load_config(path)
        assert cfg.scenario == "search_space"
        assert cfg.n_unit == 4


class TestDerivation:
    def test_digest_deterministic_and_scoped(self):
        assert derive_digest(0, "a", 1) == derive_digest(0, "a", 1)
        assert derive_digest(0, "a", 1) != derive_digest(0, "a", 2)
        assert derive_digest(0, "a") != derive_digest(1, "a")

    def test_rng_streams_reproducible(self):
        a = derive_rng(7, "x").integers(0, 1000, 10)
        b = derive_rng(7, "x").integers(0, 1000, 10)
        assert np.array_equal(a, b)

    def test_int_is_stable(self):
        assert derive_int(3, "tag") == derive_int(3, "tag")
        assert 0 <= derive_int(3, "tag") < 2 ** 64


class TestBerSweep:
    def test_noiseless_point_is_error_free_for_legitimate_parties(self):
        rows = run_ber_sweep(_fast_cfg())
        assert len(rows) == 1
        row = rows[0]
        assert row["ber_plain"] == 0.0
        assert row["ber_legit"] == 0.0
        assert 0.4 <= row["ber_eavesdropper"] <= 0.6
        assert row["n_bits"] == 2000

    def test_rows_cover_grid_in_order(self):
        cfg = _fast_cfg(snr_list=(12.0, 0.0))
        rows = run_ber_sweep(cfg)
        assert [r["snr_db"] for r in rows] == [0.0, 12.0]

    def test_deterministic_output(self):
        cfg = _fast_cfg(snr_list=(6.0,), master_seed=42)
        assert render_output(cfg) == render_output(cfg)


class TestBleuCompare:
    def test_noiseless_channel_gives_identical_columns(self):
        cfg = _fast_cfg(scenario="bleu_compare")
        rows = run_bleu_compare(cfg)
        assert len(rows) == 4  # 4 grams x 1 snr
        for row in rows:
            assert row["bleu_enc"] == pytest.approx(row["bleu_noenc"], abs=0.0)

    def test_zero_deviation_noiseless_scores_are_perfect(self):
        cfg = ExperimentConfig.from_dict({
            "scenario": "bleu_compare", "snr_list": [math.inf],
            "n_sentences": 10, "n_probes": 512,
            "codec": {"deviation_rate": 0.0},
        })
        for row in run_bleu_compare(cfg):
            assert row["bleu_enc"] == pytest.approx(1.0, abs=1e-9)
            assert row["bleu_noenc"] == pytest.approx(1.0, abs=1e-9)

    def test_row_order_gram_major(self):
        cfg = _fast_cfg(scenario="bleu_compare", snr_list=(0.0, 12.0),
                        n_sentences=4)
        rows = run_bleu_compare(cfg)
        assert [(r["gram"], r["snr_db"]) for r in rows] == \
            [(g, s) for g in (1, 2, 3, 4) for s in (0.0, 12.0)]


class TestConstellation:
    def test_noiseless_points_sit_on_ideal_grid(self):
        cfg = _fast_cfg(scenario="constellation", n_bits=4096)
        symbols = emit_constellation(cfg)
        assert symbols.size == 1024
        ideal = qam16_map(np.array(
            [[(v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1] for v in range(16)],
            dtype=np.uint8).reshape(-1))
        dist = np.min(np.abs(symbols[:, None] - ideal[None, :]), axis=1)
        assert np.max(dist) < 1e-9

    def test_high_snr_points_cluster(self):
        cfg = _fast_cfg(scenario="constellation", snr_list=(24.0,), n_bits=4096)
        symbols = emit_constellation(cfg)
        ideal = qam16_map(np.array(
            [[(v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1] for v in range(16)],
            dtype=np.uint8).reshape(-1))
        dist = np.min(np.abs(symbols[:, None] - ideal[None, :]), axis=1)
        half_min = 1.0 / np.sqrt(10.0)
        assert np.mean(dist < half_min) >= 0.99

    def test_csv_shape(self):
        cfg = _fast_cfg(scenario="constellation", n_bits=4096)
        lines = render_output(cfg).strip().split("\n")
        assert lines[0] == "re,im"
        assert len(lines) == 1 + 1024
        re, im = lines[1].split(",")
        float(re), float(im)  # parseable


class TestKeygenDemo:
    def test_static_channel_yields_degenerate_plk(self):
        cfg = _fast_cfg(scenario="keygen_demo", static_channel=True)
        report = run_keygen_demo(cfg)
        assert report["static_channel"] is True
        assert report["insufficient_entropy"] is True
        assert report["plk_entropy_estimate"] == 0.0
        assert report["plk_hex"] == "0" * 32
        assert len(report["seed_hex"]) == 32
        assert report["match"] is True

    def test_fading_channel_yields_usable_key(self):
        cfg = _fast_cfg(scenario="keygen_demo", n_probes=4096)
        report = run_keygen_demo(cfg)
        assert report["insufficient_entropy"] is False
        assert report["plk_entropy_estimate"] > 0.5
        assert report["plk_hex"] != "0" * 32
        assert report["match"] is True
        assert len(report["skey_hex"]) == 32
        assert report["skey_transport_hex"] != report["skey_hex"]

    def test_transport_hides_skey(self):
        cfg = _fast_cfg(scenario="keygen_demo", master_seed=5)
        report = run_keygen_demo(cfg)
        # transport word is the XOR of the skey with a PLK-derived stream
        t = int(report["skey_transport_hex"], 16) ^ int(report["skey_hex"], 16)
        assert t != 0


class TestSearchSpaceScenario:
    def test_default_log2_identity(self):
        cfg = ExperimentConfig(scenario="search_space")
        report = run_search_space(cfg)
        assert report["scenario"] == "search_space"
        assert report["ours_exceeds_baseline"] is True
        expect = 16 * math.log2(40) + 128
        assert report["eq10"]["log2"] == pytest.approx(expect, rel=1e-12)

    def test_json_renders_sorted(self):
        cfg = ExperimentConfig(scenario="search_space")
        text = render_output(cfg)
        parsed = json.loads(text)
        assert parsed["eq11"]["exact"] == str(
            int(parsed["eq5"]["exact"]) * int(parsed["eq10"]["exact"]))


class TestDispersionScenario:
    def test_report_shape(self):
        cfg = ExperimentConfig(scenario="dispersion", n_sentences=100)
        text = render_output(cfg)
        parsed = json.loads(text)
        assert parsed["scenario"] == "dispersion"
        assert parsed["n_sentences"] == 100
        assert set(parsed["channels"]) == {"s1", "s2", "s3", "s4", "weighted_sum"}


class TestOutput:
    def test_run_to_file_creates_parents(self, tmp_path):
        cfg = ExperimentConfig(scenario="search_space")
        out = run_to_file(cfg, tmp_path / "deep" / "dir" / "out.json")
        assert out.exists()
        json.loads(out.read_text())

    def test_float_formatting_is_fixed_width(self):
        cfg = _fast_cfg(snr_list=(6.0,))
        body = render_output(cfg).strip().split("\n")[1]
        fields = body.split(",")
        assert fields[0] == "6.00000000"
        assert len(fields) == 5


class TestCli:
    def test_success_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "space.json"
        assert main(["search_space", "--out", str(out)]) == 0
        assert out.exists()
        assert str(out) in capsys.readouterr().out

    def test_config_plus_overrides(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "scenario": "keygen_demo", "static_channel": True,
            "n_probes": 512,
        }), encoding="utf-8")
        out = tmp_path / "demo.json"
        rc = main(["keygen_demo", "--config", str(cfg_path), "--seed", "9",
                   "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["static_channel"] is True

    def test_output_path_from_config(self, tmp_path):
        target = tmp_path / "from_config.json"
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "scenario": "search_space", "output_path": str(target),
        }), encoding="utf-8")
        assert main(["search_space", "--config", str(cfg_path)]) == 0
        assert target.exists()

    def test_bad_snr_exits_two(self, tmp_path, capsys):
        rc = main(["ber_sweep", "--snr", "abc", "--out",
                   str(tmp_path / "x.csv")])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_bad_config_exits_two(self, tmp_path, capsys):
        cfg_path = tmp_path / "broken.json"
        cfg_path.write_text("{oops", encoding="utf-8")
        rc = main(["search_space", "--config", str(cfg_path)])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_runtime_failure_exits_three(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory", encoding="utf-8")
        rc = main(["search_space", "--out", str(blocker / "out.json")])
        assert rc == 3
        assert "runtime error" in capsys.readouterr().err

    def test_scenario_argument_wins_over_config(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"scenario": "ber_sweep"}),
                            encoding="utf-8")
        out = tmp_path / "space.json"
        rc = main(["search_space", "--config", str(cfg_path), "--out", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["scenario"] == "search_space"
