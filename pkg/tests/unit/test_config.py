"""
Tests for Run Configuration

Tests for:
- RunConfig defaults and derived properties
- Validation errors naming the offending field
- load_config() - JSON and YAML documents, unreadable files
- apply_env_overrides() - endpoint variables only

Author: Vladimir K.S.
"""

import json

import pytest

from raise_t2i import ENV_AGENT_URL, ENV_SCORER_URL
from raise_t2i.config import RunConfig, apply_env_overrides, config_from_mapping, load_config
from raise_t2i.errors import ConfigError


class TestDefaults:
    def test_reference_setup(self):
        config = RunConfig()
        assert (config.k_min, config.k_max) == (2, 4)
        assert config.samples_per_round == 8
        assert config.last_round == 4
        assert config.adaptive_stopping
        assert (config.width, config.height, config.steps) == (1024, 1024, 28)

    def test_force_rounds_replaces_the_cap(self):
        config = RunConfig(force_rounds=6)
        assert config.last_round == 6
        assert not config.adaptive_stopping

    def test_with_overrides_skips_none(self):
        config = RunConfig(run_seed=3)
        assert config.with_overrides(run_seed=None, parallelism=1).run_seed == 3


class TestValidation:
    @pytest.mark.parametrize(
        ("data", "field"),
        [
            ({"parallelism": 0}, "parallelism"),
            ({"bogus": 1}, "bogus"),
            ({"world": {"m": 0}}, "world.m"),
            ({"world": {"p_rewrite": 1.5}}, "world.p_rewrite"),
            ({"backend_profile": "cloud"}, "backend_profile"),
            ({"backends": {"timeout_s": -1}}, "backends.timeout_s"),
        ],
    )
    def test_error_names_the_field(self, data, field):
        with pytest.raises(ConfigError, match=f"'{field}'"):
            config_from_mapping(data)

    def test_k_min_above_k_max_is_rejected(self):
        with pytest.raises(ConfigError, match="k_min"):
            config_from_mapping({"k_min": 5, "k_max": 4})

    def test_per_round_count_must_be_fixed(self):
        with pytest.raises(ConfigError, match="fixed"):
            config_from_mapping({"late_rewrite": 4})

    def test_late_edits_set_is_fixed(self):
        with pytest.raises(ConfigError, match="late_edits"):
            config_from_mapping({"late_edits": ["top", "top", "comp"]})

    def test_overrides_are_revalidated(self):
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(k_min=9)


class TestLoadConfig:
    def test_no_path_gives_defaults(self):
        assert load_config(None, environ={}) == RunConfig()

    def test_json_document(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"k_min": 1, "run_seed": 7, "world": {"m": 3}}))
        config = load_config(path, environ={})
        assert (config.k_min, config.run_seed, config.world.m) == (1, 7, 3)

    def test_yaml_document(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("backend_profile: sim\nworld:\n  p_rewrite: 0.9\n")
        config = load_config(path, environ={})
        assert config.backend_profile == "sim"
        assert config.world.p_rewrite == 0.9

    def test_empty_document_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(path, environ={}) == RunConfig()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_config(tmp_path / "absent.json")

    def test_non_mapping_document(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_environment_overrides_endpoints(self, tmp_path, monkeypatch):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"backends": {"agent_url": "http://file"}}))
        monkeypatch.setenv(ENV_AGENT_URL, "http://env")
        assert load_config(path).backends.agent_url == "http://env"


class TestEnvOverrides:
    def test_unset_environment_returns_same_config(self):
        config = RunConfig()
        assert apply_env_overrides(config, {}) is config

    def test_only_endpoints_change(self):
        config = apply_env_overrides(
            RunConfig(run_seed=4), {ENV_SCORER_URL: "http://scorer", "RAISE_RUN_SEED": "9"}
        )
        assert config.backends.scorer_url == "http://scorer"
        assert config.run_seed == 4

    def test_empty_variable_is_ignored(self):
        config = apply_env_overrides(RunConfig(), {ENV_SCORER_URL: ""})
        assert config.backends.scorer_url is None
