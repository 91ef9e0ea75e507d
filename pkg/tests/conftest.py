"""Shared fixtures: small exact instances and an isolated data directory."""

import numpy as np
import pytest

from genbound.probability import InstanceSpace, product_measure
from genbound.scenarios import builtin_config, materialize, scenario_from_config


def make_instance(instance: str, algorithm: str, n: int):
    return materialize(scenario_from_config(builtin_config(instance, algorithm, (n,))), n)


@pytest.fixture
def build():
    """Factory for built-in instances at any sample size."""
    return make_instance


@pytest.fixture
def binary_space():
    return InstanceSpace(labels=("0", "1"), mu=np.array([0.5, 0.5]))


@pytest.fixture
def binary_law(binary_space):
    return product_measure(binary_space, 2)


@pytest.fixture
def gibbs2():
    """Gibbs β=1 on the 2×2 zero-one instance, n = 2."""
    return make_instance("binary", "gibbs:1", 2)


@pytest.fixture
def gibbs_skewed3():
    """Gibbs β=2 on the skewed 3×3 instance, n = 3."""
    return make_instance("skewed", "gibbs:2", 3)


@pytest.fixture
def erm2():
    """Deterministic ERM (ε = 0) on the binary instance, n = 2."""
    return make_instance("binary", "erm:0", 2)


@pytest.fixture
def constant2():
    return make_instance("binary", "constant", 2)


@pytest.fixture
def cosine2():
    """Gibbs β=1 on the embedded cosine instance, n = 2."""
    return make_instance("cosine", "gibbs:1", 2)


@pytest.fixture
def home(tmp_path, monkeypatch):
    """Point every data path at a temporary directory."""
    import genbound.config as config
    import genbound.db as db
    import genbound.report as report

    monkeypatch.setattr(config, "DATA_DIR", tmp_path)
    monkeypatch.setattr(config, "CONFIG_PATH", tmp_path / "config.json")
    monkeypatch.setattr(config, "MANIFEST_DIR", tmp_path / "manifests")
    monkeypatch.setattr(config, "REPORT_DIR", tmp_path / "reports")
    monkeypatch.setattr(config, "DB_PATH", tmp_path / "genbound.db")
    monkeypatch.setattr(db, "DB_PATH", tmp_path / "genbound.db")
    monkeypatch.setattr(report, "MANIFEST_DIR", tmp_path / "manifests")
    monkeypatch.setenv("GENBOUND_HOME", str(tmp_path))
    return tmp_path
