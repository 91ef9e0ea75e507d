"""Learning algorithms as kernels: gibbs:beta, erm:epsilon, constant, sgd1d."""

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from genbound.errors import ConfigError, UnknownFamilyError
from genbound.probability import DatasetLaw, Kernel, LossTable, enumerate_datasets

ALGORITHMS = ("gibbs", "erm", "constant", "sgd1d")

TIE_TOL = 1e-12


@dataclass(frozen=True)
class AlgorithmId:
    name: str
    param: float = 0.0

    def __str__(self):
        if self.name in ("constant", "sgd1d"):
            return self.name
        return f"{self.name}:{self.param:g}"


def parse_algorithm(text: str) -> AlgorithmId:
    """Parse ``gibbs:1.0``, ``erm:0.05``, ``erm``, ``constant`` or ``sgd1d``."""
    name, _, arg = str(text).partition(":")
    if name not in ALGORITHMS:
        raise UnknownFamilyError(f"unknown algorithm '{text}' (choose from {', '.join(ALGORITHMS)})")
    if name in ("constant", "sgd1d"):
        if arg:
            raise ConfigError(f"{name} takes no parameter")
        return AlgorithmId(name)
    try:
        param = float(arg) if arg else (1.0 if name == "gibbs" else 0.0)
    except ValueError as e:
        raise ConfigError(f"bad parameter in '{text}'") from e
    if name == "gibbs" and param < 0:
        raise ConfigError("gibbs inverse temperature must be nonnegative")
    if name == "erm" and not 0.0 <= param <= 1.0:
        raise ConfigError("erm epsilon-mix must lie in [0, 1]")
    return AlgorithmId(name, param)


def empirical_risks(loss: LossTable, law: DatasetLaw) -> np.ndarray:
    """Training losses Σ_i ℓ(w, z_i) as a (dataset, hypothesis) matrix."""
    tuples = enumerate_datasets(loss.values.shape[1], law.n)
    return loss.values[:, tuples].sum(axis=2).T


def gibbs_kernel(loss: LossTable, law: DatasetLaw, beta: float, prior=None) -> Kernel:
    """κ(w|s) ∝ prior(w)·exp(−β Σ_i ℓ(w, z_i)); the prior defaults to uniform."""
    k = loss.values.shape[0]
    prior = np.full(k, 1.0 / k) if prior is None else np.asarray(prior, dtype=float)
    with np.errstate(divide="ignore"):
        logits = np.log(prior)[None, :] - beta * empirical_risks(loss, law)
    return Kernel(rows=softmax(logits, axis=1), n=law.n)


def erm_kernel(loss: LossTable, law: DatasetLaw, epsilon: float = 0.0) -> Kernel:
    """(1−ε)·uniform over empirical minimizers + ε·uniform over W."""
    risks = empirical_risks(loss, law)
    best = risks.min(axis=1, keepdims=True)
    argmin = (risks <= best + TIE_TOL).astype(float)
    argmin /= argmin.sum(axis=1, keepdims=True)
    k = risks.shape[1]
    return Kernel(rows=(1.0 - epsilon) * argmin + epsilon / k, n=law.n)


def constant_kernel(Q, law: DatasetLaw) -> Kernel:
    """κ(·|s) = Q for every dataset."""
    Q = np.asarray(Q, dtype=float)
    return Kernel(rows=np.tile(Q, (law.size, 1)), n=law.n)


def build_kernel(algorithm: AlgorithmId | str, loss: LossTable, law: DatasetLaw) -> Kernel:
    if isinstance(algorithm, str):
        algorithm = parse_algorithm(algorithm)
    k = loss.values.shape[0]
    if algorithm.name == "gibbs":
        return gibbs_kernel(loss, law, algorithm.param)
    if algorithm.name == "erm":
        return erm_kernel(loss, law, algorithm.param)
    if algorithm.name == "constant":
        return constant_kernel(np.full(k, 1.0 / k), law)
    raise ConfigError("sgd1d is a continuous scenario and has no finite kernel")
