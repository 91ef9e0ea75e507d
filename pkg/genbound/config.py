"""Configuration management."""

import copy
import hashlib
import json
import os
from pathlib import Path

from genbound.errors import ConfigError

# All data lives here
DATA_DIR = Path(os.environ.get("GENBOUND_HOME", Path.home() / ".genbound"))

DB_PATH = DATA_DIR / "genbound.db"
CONFIG_PATH = DATA_DIR / "config.json"
MANIFEST_DIR = DATA_DIR / "manifests"
REPORT_DIR = DATA_DIR / "reports"

# Enumeration guards
MAX_TUPLES = 10**6
MAX_ENTRIES = 10**7
MAX_GRID_POINTS = 5 * 10**6
MAX_OT_POINTS = 64
MAX_LP_SUPPORT = 12

DEFAULTS = {
    "potential": {
        "tol": 1e-9,
        "max_iters": 100_000,
        "tie_tol": 1e-8,
    },
    "quadrature": {
        "step_fraction": 0.02,
        "window": 8.0,
        "richardson_tol": 1e-6,
        "max_halvings": 6,
    },
    "monte_carlo": {
        "samples": 100_000,
    },
    "tolerances": {
        "identity": 1e-10,
        "inequality": 1e-9,
        "chain": 1e-7,
        "transport": 1e-6,
        "ftrl": 1e-8,
        "oracle": 1e-4,
    },
}

SCENARIO_KEYS = {
    "id", "description", "hypotheses", "instances", "loss", "algorithm",
    "n", "n_sweep", "divergences", "seed", "tolerances", "smoothing", "sgd",
}
HYPOTHESIS_KEYS = {"labels", "embedding"}
INSTANCE_KEYS = {"labels", "mu", "points"}
SMOOTHING_KEYS = {"sigma"}
SGD_KEYS = {
    "steps", "step_scale", "noise", "init", "mean", "variance",
    "scale", "sigma", "runs", "window_sd",
}


def ensure_data_dir():
    """Create data directory if it doesn't exist."""
    DATA_DIR.mkdir(parents=True, exist_ok=True)


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config() -> dict:
    """Load user configuration layered over the defaults."""
    if CONFIG_PATH.exists():
        try:
            user = json.loads(CONFIG_PATH.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{CONFIG_PATH}: {e}") from e
        return _merge(DEFAULTS, user)
    return copy.deepcopy(DEFAULTS)


def save_config(config: dict):
    """Save user configuration."""
    ensure_data_dir()
    CONFIG_PATH.write_text(json.dumps(config, indent=2, sort_keys=True))


def get_setting(key: str, overrides: dict | None = None):
    """Look up a dotted setting such as ``potential.tol``.

    Scenario-level ``overrides`` (flat dotted keys) win over the user config.
    """
    if overrides and key in overrides:
        return overrides[key]
    node = load_config()
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown setting: {key}")
        node = node[part]
    return node


def set_setting(key: str, value):
    """Persist a dotted setting in the user config."""
    get_setting(key)
    config = load_config()
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        node = node[part]
    node[parts[-1]] = value
    save_config(config)


def thread_count() -> int:
    """Parallelism cap from GENBOUND_THREADS (default 1)."""
    raw = os.environ.get("GENBOUND_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigError(f"GENBOUND_THREADS must be an integer, got {raw!r}") from e
    return max(1, threads)


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON form of a config."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _reject_unknown(section: str, data: dict, allowed: set):
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")


def validate_scenario_config(config: dict) -> dict:
    """Check a scenario config and return it unchanged.

    Unknown keys are rejected, registry ids must exist, and every
    tolerance override must name a real setting.
    """
    from genbound.algorithms import parse_algorithm
    from genbound.divergences import parse_divergence
    from genbound.losses import parse_loss

    _reject_unknown("config", config, SCENARIO_KEYS)
    for key in ("id", "algorithm"):
        if key not in config:
            raise ConfigError(f"config: missing required key '{key}'")

    algorithm = parse_algorithm(config["algorithm"])
    if algorithm.name == "sgd1d":
        _reject_unknown("sgd", config.get("sgd", {}), SGD_KEYS)
        if "n_sweep" not in config and "n" not in config:
            raise ConfigError("config: sgd1d needs 'n' or 'n_sweep'")
    else:
        for key in ("hypotheses", "instances", "loss"):
            if key not in config:
                raise ConfigError(f"config: missing required key '{key}'")
        _reject_unknown("hypotheses", config["hypotheses"], HYPOTHESIS_KEYS)
        _reject_unknown("instances", config["instances"], INSTANCE_KEYS)
        parse_loss(config["loss"])
        if "n" not in config and "n_sweep" not in config:
            raise ConfigError("config: one of 'n' or 'n_sweep' is required")

    if "n" in config and "n_sweep" in config:
        raise ConfigError("config: give either 'n' or 'n_sweep', not both")
    sizes = config.get("n_sweep", [config.get("n", 1)])
    if not sizes or any(not isinstance(n, int) or n < 1 for n in sizes):
        raise ConfigError("config: sample sizes must be positive integers")

    for name in config.get("divergences", []):
        # report columns beyond the registry: wasserstein, single-letter:<id>
        if name == "wasserstein":
            continue
        parse_divergence(name.removeprefix("single-letter:"))
    if "smoothing" in config:
        _reject_unknown("smoothing", config["smoothing"], SMOOTHING_KEYS)

    seed = config.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("config: seed must be a 64-bit nonnegative integer")

    for key in config.get("tolerances", {}):
        get_setting(key)
    return config


def load_scenario_config(path: str | Path) -> dict:
    """Read and validate a JSON scenario config."""
    path = Path(path)
    try:
        config = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return validate_scenario_config(config)
