"""Config serialization round-trips, hashing, and the bundled presets."""

from dataclasses import replace

import pytest

from janus_sim.config_io import (
    PRESET_NAMES,
    config_from_dict,
    config_hash,
    config_to_dict,
    load_config,
    load_preset,
)
from janus_sim.sim_engine import ConfigError

from test_sim_engine import small_config


class TestRoundTrip:
    def test_dict_round_trip_is_identity(self):
        cfg = small_config()
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_round_trip_with_stress_and_failure(self):
        from janus_sim.sim_engine import FailureDef, StressKind, StressOverlay

        cfg = small_config(
            stress=StressOverlay(StressKind.DEMAND_COLLAPSE, onset=5, magnitude=0.8, duration=10),
            failure=FailureDef(grace=7, floor=0.4),
        )
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_file_round_trip(self, tmp_path):
        import json

        cfg = small_config()
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(config_to_dict(cfg)))
        assert load_config(str(path)) == cfg


class TestValidation:
    def test_unknown_top_key_rejected(self):
        data = config_to_dict(small_config())
        data["typo_section"] = {}
        with pytest.raises(ConfigError, match="typo_section"):
            config_from_dict(data)

    def test_unknown_market_key_rejected(self):
        data = config_to_dict(small_config())
        data["market"]["depht_alpha"] = 1.0
        del data["market"]["depth_alpha"]
        with pytest.raises(ConfigError, match="depht_alpha"):
            config_from_dict(data)

    def test_missing_required_section(self):
        data = config_to_dict(small_config())
        del data["assets"]
        with pytest.raises(ConfigError, match="assets"):
            config_from_dict(data)

    def test_asymmetric_correlation_rejected(self):
        data = config_to_dict(small_config())
        data["correlation"] = [[1.0, 0.5], [0.3, 1.0]]
        with pytest.raises(ConfigError, match="correlation"):
            config_from_dict(data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "nope.json"))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            load_config(str(path))


class TestHash:
    def test_stable(self):
        cfg = small_config()
        assert config_hash(cfg) == config_hash(small_config())

    def test_sensitive_to_any_field(self):
        cfg = small_config()
        assert config_hash(cfg) != config_hash(replace(cfg, seed=cfg.seed + 1))
        assert config_hash(cfg) != config_hash(replace(cfg, turnover=cfg.turnover + 0.01))

    def test_hex_digest_shape(self):
        h = config_hash(small_config())
        assert len(h) == 64
        int(h, 16)


class TestPresets:
    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_all_presets_load(self, name):
        cfg = load_preset(name)
        assert cfg.horizon >= 1

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            load_preset("nonexistent")

    def test_baseline_is_dual_asset(self):
        cfg = load_preset("janus_baseline")
        assert len(cfg.assets) == 2
