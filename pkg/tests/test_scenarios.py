"""Tests for scenario configs, settings and the built-in battery."""

import json

import pytest

from genbound.config import (
    config_hash,
    get_setting,
    load_config,
    load_scenario_config,
    set_setting,
    thread_count,
)
from genbound.errors import ConfigError, NormalizationError, UnknownFamilyError
from genbound.scenarios import (
    BATTERY_SIZES,
    battery,
    builtin_config,
    materialize,
    scenario_from_config,
    sgd_scenario,
)


def binary_config(**overrides):
    config = builtin_config("binary", "gibbs:1", (1, 2))
    config.update(overrides)
    return config


class TestBattery:
    def test_size_and_ids(self):
        scenarios = battery()
        assert len(scenarios) == 21
        assert len({s.id for s in scenarios}) == 21
        assert all(s.sizes == BATTERY_SIZES for s in scenarios)
        assert "cosine-erm:0.05" in {s.id for s in scenarios}

    def test_materialize(self):
        inst = materialize(scenario_from_config(binary_config()), 2)
        assert inst.id == "binary-gibbs:1"
        assert inst.law.size == 4
        assert inst.joint.in_hull_domain()

    def test_sgd_has_no_tables(self):
        scenario = sgd_scenario()
        assert scenario.is_sgd
        assert scenario.sgd == {"sigma": 0.5}
        with pytest.raises(ConfigError):
            materialize(scenario, 4)


class TestValidation:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"colour": "blue"},
            {"n": 2},
            {"n_sweep": []},
            {"n_sweep": [0]},
            {"seed": -1},
            {"tolerances": {"tolerances.nonsense": 1.0}},
            {"hypotheses": {"labels": ["0", "0"]}},
            {"smoothing": {"width": 1.0}},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(ConfigError):
            scenario_from_config(binary_config(**overrides))

    def test_rejects_unnormalized_mu(self):
        with pytest.raises(NormalizationError):
            scenario_from_config(binary_config(instances={"labels": ["0", "1"], "mu": [0.5, 0.6]}))

    def test_missing_keys(self):
        config = binary_config()
        del config["loss"]
        with pytest.raises(ConfigError):
            scenario_from_config(config)

    @pytest.mark.parametrize("key, value", [("algorithm", "adam"), ("loss", "hinge"), ("divergences", ["renyi"])])
    def test_unknown_registry_ids(self, key, value):
        with pytest.raises(UnknownFamilyError):
            scenario_from_config(binary_config(**{key: value}))

    def test_sgd_keys(self):
        with pytest.raises(ConfigError):
            scenario_from_config({"id": "x", "algorithm": "sgd1d", "n": 4, "sgd": {"momentum": 0.9}})
        with pytest.raises(ConfigError):
            scenario_from_config({"id": "x", "algorithm": "sgd1d"})

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(binary_config()))
        assert load_scenario_config(path)["id"] == "binary-gibbs:1"
        with pytest.raises(ConfigError):
            load_scenario_config(tmp_path / "missing.json")
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_scenario_config(path)


class TestSettings:
    def test_hash_ignores_key_order(self):
        config = binary_config()
        reordered = dict(reversed(list(config.items())))
        assert config_hash(config) == config_hash(reordered)
        assert config_hash(config) != config_hash(binary_config(seed=1))

    def test_defaults(self, home):
        assert load_config()["tolerances"]["chain"] == 1e-7
        assert get_setting("potential.tol") == 1e-9

    def test_override_wins(self, home):
        scenario = scenario_from_config(binary_config(tolerances={"tolerances.chain": 1e-5}))
        assert scenario.tolerance("chain") == 1e-5
        assert scenario.tolerance("identity") == 1e-10

    def test_set_persists(self, home):
        set_setting("tolerances.oracle", 1e-3)
        assert get_setting("tolerances.oracle") == 1e-3
        assert (home / "config.json").exists()
        with pytest.raises(ConfigError):
            set_setting("tolerances.unknown", 1.0)

    def test_thread_count(self, monkeypatch):
        monkeypatch.setenv("GENBOUND_THREADS", "4")
        assert thread_count() == 4
        monkeypatch.setenv("GENBOUND_THREADS", "0")
        assert thread_count() == 1
        monkeypatch.setenv("GENBOUND_THREADS", "many")
        with pytest.raises(ConfigError):
            thread_count()
