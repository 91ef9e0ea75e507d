"""Scenario configs, their materialization per sample size, and the built-in battery."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from genbound.algorithms import AlgorithmId, build_kernel, parse_algorithm
from genbound.config import validate_scenario_config
from genbound.errors import ConfigError
from genbound.ghost import MixedBagFamily, build_family
from genbound.losses import LossId, derivative_bounds, loss_table, parse_loss
from genbound.norms import DerivativeBounds
from genbound.probability import (
    DatasetLaw,
    HypothesisSpace,
    InstanceSpace,
    JointDistribution,
    Kernel,
    LossTable,
    centered_loss,
    generalization_error,
    joint_from_kernel,
    product_measure,
)

DEFAULT_DIVERGENCES = ("kl", "chi2")

BATTERY_DIVERGENCES = (
    "kl", "chi2", "pnorm2:1.5", "pnormp:3", "hellinger:4",
    "tsallis:1.5:4", "itakura-saito", "squared-euclidean",
)
BATTERY_ALGORITHMS = ("gibbs:0.5", "gibbs:1", "gibbs:2", "gibbs:4", "erm:0.05", "erm:0.2", "constant")
BATTERY_SIZES = (1, 2, 3)


@dataclass(frozen=True, eq=False)
class Scenario:
    id: str
    algorithm: AlgorithmId
    sizes: tuple[int, ...]
    hypotheses: HypothesisSpace | None = None
    instances: InstanceSpace | None = None
    loss: LossId | None = None
    divergences: tuple[str, ...] = DEFAULT_DIVERGENCES
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    sigma: float | None = None
    sgd: dict = field(default_factory=dict)
    description: str = ""
    config: dict = field(default_factory=dict)

    @property
    def is_sgd(self) -> bool:
        return self.algorithm.name == "sgd1d"

    def tolerance(self, name: str) -> float:
        from genbound.config import get_setting

        return float(get_setting(f"tolerances.{name}", self.tolerances))


def scenario_from_config(config: dict) -> Scenario:
    """Validate a config dict and build the Scenario it describes."""
    config = validate_scenario_config(config)
    algorithm = parse_algorithm(config["algorithm"])
    sizes = tuple(config.get("n_sweep", [config.get("n", 1)]))
    common = dict(
        id=str(config["id"]),
        algorithm=algorithm,
        sizes=sizes,
        divergences=tuple(config.get("divergences", DEFAULT_DIVERGENCES)),
        seed=int(config.get("seed", 0)),
        tolerances=dict(config.get("tolerances", {})),
        sigma=config.get("smoothing", {}).get("sigma"),
        description=config.get("description", ""),
        config=config,
    )
    if algorithm.name == "sgd1d":
        return Scenario(sgd=dict(config.get("sgd", {})), **common)

    hyp = config["hypotheses"]
    inst = config["instances"]
    if "labels" not in hyp or "labels" not in inst or "mu" not in inst:
        raise ConfigError("config: hypotheses need labels; instances need labels and mu")
    hypotheses = HypothesisSpace(labels=tuple(hyp["labels"]), embedding=hyp.get("embedding"))
    instances = InstanceSpace(labels=tuple(inst["labels"]), mu=np.asarray(inst["mu"], dtype=float), points=inst.get("points"))
    return Scenario(hypotheses=hypotheses, instances=instances, loss=parse_loss(config["loss"]), **common)


@dataclass(frozen=True, eq=False)
class ScenarioInstance:
    """A scenario at one sample size, with every exact table built."""

    scenario: Scenario
    n: int
    law: DatasetLaw
    loss: LossTable
    centered: LossTable
    kernel: Kernel
    joint: JointDistribution

    @property
    def id(self) -> str:
        return self.scenario.id

    @property
    def embedding(self) -> np.ndarray | None:
        return self.scenario.hypotheses.embedding

    @cached_property
    def base(self) -> np.ndarray:
        """Q0 = P_{W_n}."""
        return self.joint.hypothesis_marginal()

    @cached_property
    def family(self) -> MixedBagFamily:
        return build_family(self.kernel, self.law)

    @cached_property
    def gen(self) -> float:
        return generalization_error(self.joint, self.centered)

    @cached_property
    def derivative_bounds(self) -> list[DerivativeBounds]:
        s = self.scenario
        return derivative_bounds(s.loss, s.hypotheses, s.instances)


def materialize(scenario: Scenario, n: int) -> ScenarioInstance:
    """Build μ^n, the loss tables, the kernel and P_n for sample size n."""
    if scenario.is_sgd:
        raise ConfigError(f"{scenario.id}: sgd1d scenarios are continuous and have no finite tables")
    law = product_measure(scenario.instances, n)
    loss = loss_table(scenario.loss, scenario.hypotheses, scenario.instances, n)
    centered = centered_loss(loss, scenario.instances)
    kernel = build_kernel(scenario.algorithm, loss, law)
    joint = joint_from_kernel(kernel, law)
    return ScenarioInstance(scenario=scenario, n=n, law=law, loss=loss, centered=centered, kernel=kernel, joint=joint)


INSTANCE_SPECS = {
    "binary": {
        "hypotheses": {"labels": ["0", "1"]},
        "instances": {"labels": ["0", "1"], "mu": [0.5, 0.5]},
        "loss": "zero-one",
    },
    "skewed": {
        "hypotheses": {"labels": ["0", "1", "2"]},
        "instances": {"labels": ["0", "1", "2"], "mu": [0.2, 0.3, 0.5]},
        "loss": "zero-one",
    },
    "cosine": {
        "hypotheses": {"labels": ["a", "b", "c"], "embedding": [[0.0], [1.0], [2.0]]},
        "instances": {"labels": ["x", "y"], "mu": [0.5, 0.5], "points": [[0.0], [1.5]]},
        "loss": "cosine:0.5",
    },
}


def builtin_config(instance: str, algorithm: str, sizes=BATTERY_SIZES, seed: int = 0) -> dict:
    spec = INSTANCE_SPECS[instance]
    return {
        "id": f"{instance}-{algorithm}",
        "algorithm": algorithm,
        "n_sweep": list(sizes),
        "divergences": list(BATTERY_DIVERGENCES),
        "seed": seed,
        **{key: value for key, value in spec.items()},
    }


def battery(seed: int = 0, sizes=BATTERY_SIZES) -> list[Scenario]:
    """Every built-in instance crossed with every battery algorithm."""
    return [
        scenario_from_config(builtin_config(instance, algorithm, sizes, seed))
        for instance in INSTANCE_SPECS
        for algorithm in BATTERY_ALGORITHMS
    ]


def sgd_scenario(sizes=(4, 8, 16, 32, 64), seed: int = 0, **overrides) -> Scenario:
    """The one-dimensional Gaussian SGD scenario with η_t = 1/n and σ = 1/2."""
    config = {
        "id": "sgd1d-gaussian",
        "algorithm": "sgd1d",
        "n_sweep": list(sizes),
        "seed": seed,
        "sgd": {"sigma": 0.5, **overrides},
    }
    return scenario_from_config(config)
