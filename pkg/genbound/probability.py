"""Exact finite probability substrate.

Spaces, product measures over datasets, kernels, joint distributions,
conditionals, centered losses and dual pairings. Joint tables are dense
arrays indexed by (hypothesis, mixed-radix dataset index); the first
coordinate of a dataset tuple is the most significant digit.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from genbound.config import MAX_ENTRIES, MAX_TUPLES
from genbound.errors import (
    ConfigError,
    EnumerationLimitError,
    IncompleteKernelError,
    IndexRangeError,
    NormalizationError,
    UndefinedConditionalError,
)
from genbound.utils.display import get_logger

logger = get_logger(__name__)

SUM_TOL = 1e-12
RESCALE_TOL = 1e-9


def normalized(values, what: str = "probability vector", axis: int | None = None) -> np.ndarray:
    """Validate a probability vector (or rows along ``axis``).

    Drift below 1e-9 is rescaled away, anything larger is an error.
    """
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NormalizationError(f"{what}: non-finite entries")
    if np.any(arr < -SUM_TOL):
        raise NormalizationError(f"{what}: negative entries")
    arr = np.clip(arr, 0.0, None)
    total = arr.sum(axis=axis, keepdims=axis is not None)
    drift = np.max(np.abs(total - 1.0))
    if drift > RESCALE_TOL:
        raise NormalizationError(f"{what}: sums to {np.ravel(total)[0]!r}, drift {drift:.3g}")
    if drift > SUM_TOL:
        logger.debug("rescaling %s (drift %.3g)", what, drift)
        arr = arr / total
    return arr


def _check_labels(labels: Sequence[str], what: str) -> tuple[str, ...]:
    labels = tuple(str(label) for label in labels)
    if len(set(labels)) != len(labels):
        raise ConfigError(f"{what} labels must be distinct")
    if not labels:
        raise ConfigError(f"{what} labels must be non-empty")
    return labels


@dataclass(frozen=True, eq=False)
class InstanceSpace:
    """Finite instance space with its data distribution μ.

    ``points`` optionally places instances on the real line (or R^d) for
    distance-based losses.
    """

    labels: tuple[str, ...]
    mu: np.ndarray
    points: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", _check_labels(self.labels, "instance"))
        mu = normalized(self.mu, "instance distribution mu")
        if mu.shape != (len(self.labels),):
            raise ConfigError("mu must have one entry per instance label")
        object.__setattr__(self, "mu", mu)
        if self.points is not None:
            points = np.asarray(self.points, dtype=float)
            if points.ndim == 1:
                points = points[:, None]
            if points.shape[0] != len(self.labels) or not np.all(np.isfinite(points)):
                raise ConfigError("instance points must be finite, one per label")
            object.__setattr__(self, "points", points)

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class HypothesisSpace:
    """Finite hypothesis class, optionally embedded in R^d."""

    labels: tuple[str, ...]
    embedding: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", _check_labels(self.labels, "hypothesis"))
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=float)
            if emb.ndim == 1:
                emb = emb[:, None]
            if emb.shape[0] != len(self.labels) or not np.all(np.isfinite(emb)):
                raise ConfigError("embedding needs one finite vector per hypothesis")
            object.__setattr__(self, "embedding", emb)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int | None:
        return None if self.embedding is None else self.embedding.shape[1]


@dataclass(frozen=True, eq=False)
class LossTable:
    """Loss ℓ(w, z) as a (hypothesis, instance) matrix for sample size n."""

    values: np.ndarray
    n: int
    centered: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ConfigError("loss table must be a (hypothesis, instance) matrix")
        if not np.all(np.isfinite(values)):
            raise ConfigError("loss entries must be finite")
        if not self.centered and np.any(values < 0):
            raise ConfigError("raw losses must be nonnegative")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError("n must be a positive integer")
        object.__setattr__(self, "values", values)


@lru_cache(maxsize=64)
def enumerate_datasets(m: int, n: int) -> np.ndarray:
    """All |Z|^n tuples as an (m^n, n) integer array in mixed-radix order."""
    count = m**n
    if count > MAX_TUPLES:
        raise EnumerationLimitError("dataset tuples |Z|^n", count, MAX_TUPLES)
    tuples = np.indices((m,) * n).reshape(n, -1).T
    tuples.setflags(write=False)
    return tuples


@dataclass(frozen=True, eq=False)
class DatasetLaw:
    """The product law μ^n over dataset tuples."""

    space: InstanceSpace
    n: int
    probs: np.ndarray

    @property
    def tuples(self) -> np.ndarray:
        return enumerate_datasets(self.space.size, self.n)

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    @property
    def positive(self) -> np.ndarray:
        return self.probs > 0

    def index(self, s) -> int:
        """Mixed-radix index of a dataset tuple (or pass an index through)."""
        if isinstance(s, (int, np.integer)):
            if not 0 <= s < self.size:
                raise IndexRangeError(f"dataset index {s} out of range")
            return int(s)
        s = tuple(int(z) for z in s)
        m = self.space.size
        if len(s) != self.n or any(not 0 <= z < m for z in s):
            raise IndexRangeError(f"invalid dataset tuple {s}")
        idx = 0
        for z in s:
            idx = idx * m + z
        return idx


def product_measure(space: InstanceSpace, n: int) -> DatasetLaw:
    """μ^n over all |Z|^n tuples."""
    if n < 1:
        raise IndexRangeError("n must be at least 1")
    count = space.size**n
    if count > MAX_TUPLES:
        raise EnumerationLimitError("dataset tuples |Z|^n", count, MAX_TUPLES)
    probs = space.mu
    for _ in range(n - 1):
        probs = np.outer(probs, space.mu).ravel()
    return DatasetLaw(space=space, n=n, probs=probs.copy())


def _check_entries(num_hypotheses: int, law: DatasetLaw):
    entries = num_hypotheses * law.size
    if entries > MAX_ENTRIES:
        raise EnumerationLimitError("joint table |W|*|Z|^n", entries, MAX_ENTRIES)


@dataclass(frozen=True, eq=False)
class Kernel:
    """Learning kernel κ(·|s) stored as a (dataset, hypothesis) row matrix.

    Rows of datasets the kernel does not cover are NaN.
    """

    rows: np.ndarray
    n: int

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        present = ~np.isnan(rows).any(axis=1)
        if present.any():
            rows[present] = normalized(rows[present], "kernel row", axis=1)
        object.__setattr__(self, "rows", rows)

    @property
    def num_hypotheses(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_mapping(cls, table: Mapping[tuple, Sequence[float]], law: DatasetLaw, num_hypotheses: int) -> "Kernel":
        rows = np.full((law.size, num_hypotheses), np.nan)
        for s, row in table.items():
            rows[law.index(s)] = row
        return cls(rows=rows, n=law.n)

    @classmethod
    def from_function(cls, fn: Callable[[tuple], Sequence[float]], law: DatasetLaw) -> "Kernel":
        rows = np.array([fn(tuple(s)) for s in law.tuples], dtype=float)
        return cls(rows=rows, n=law.n)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint law of (W, S) as a (hypothesis, dataset) table."""

    table: np.ndarray
    law: DatasetLaw

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 2 or table.shape[1] != self.law.size:
            raise ConfigError("joint table must be (hypothesis, dataset)")
        _check_entries(table.shape[0], self.law)
        flat = normalized(table.ravel(), "joint distribution")
        object.__setattr__(self, "table", flat.reshape(table.shape))

    @property
    def num_hypotheses(self) -> int:
        return self.table.shape[0]

    def hypothesis_marginal(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def dataset_marginal(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def marginal_defect(self) -> float:
        """Largest deviation of the dataset marginal from μ^n."""
        return float(np.max(np.abs(self.dataset_marginal() - self.law.probs)))

    def in_hull_domain(self, tol: float = SUM_TOL) -> bool:
        return self.marginal_defect() <= tol

    def conditionals(self) -> np.ndarray:
        """P_{|s} for every tuple as columns; zero-mass columns are NaN."""
        probs = self.law.probs
        out = np.full(self.table.shape, np.nan)
        pos = probs > 0
        out[:, pos] = self.table[:, pos] / probs[pos]
        return out


def independent_joint(Q, law: DatasetLaw) -> JointDistribution:
    """Q ⊗ μ^n."""
    Q = normalized(Q, "hypothesis distribution")
    return JointDistribution(table=np.outer(Q, law.probs), law=law)


def joint_from_kernel(kernel: Kernel, law: DatasetLaw) -> JointDistribution:
    """P(w, s) = μ^n(s)·κ(w|s)."""
    if kernel.n != law.n or kernel.rows.shape[0] != law.size:
        raise IncompleteKernelError("kernel does not match the dataset law")
    _check_entries(kernel.num_hypotheses, law)
    missing = np.isnan(kernel.rows).any(axis=1) & law.positive
    if missing.any():
        first = tuple(int(z) for z in law.tuples[np.argmax(missing)])
        raise IncompleteKernelError(f"kernel has no row for dataset {first} ({int(missing.sum())} missing)")
    rows = np.nan_to_num(kernel.rows, nan=0.0)
    return JointDistribution(table=(rows * law.probs[:, None]).T, law=law)


def conditional(P: JointDistribution, s) -> np.ndarray:
    """P_{|s}(w) = P(w, s)/μ^n(s)."""
    idx = P.law.index(s)
    mass = P.law.probs[idx]
    if mass <= 0:
        raise UndefinedConditionalError(f"dataset {s} has zero mass")
    return P.table[:, idx] / mass


def mixture(joints: Sequence[JointDistribution], weights) -> JointDistribution:
    """Σ_k weights_k·joints_k entrywise."""
    weights = normalized(weights, "mixture weights")
    table = np.tensordot(weights, np.stack([J.table for J in joints]), axes=1)
    return JointDistribution(table=table, law=joints[0].law)


def pairing(P: JointDistribution, f) -> float:
    """⟨P, f⟩ = E_P f(W, S) by exact summation over the support of P."""
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        f = np.full(P.table.shape, float(f))
    support = P.table > 0
    return float(np.sum(P.table[support] * f[support]))


def centered_loss(loss: LossTable, mu: InstanceSpace) -> LossTable:
    """ℓ̄(w, z) = ℓ(w, z) − E_μ ℓ(w, Z)."""
    values = loss.values - (loss.values @ mu.mu)[:, None]
    return LossTable(values=values, n=loss.n, centered=True)


def sample_loss(centered: LossTable, i: int) -> np.ndarray:
    """ℓ̄_i(w, s) = ℓ̄(w, s_i) as a (hypothesis, dataset) array (i is 1-based)."""
    if not 1 <= i <= centered.n:
        raise IndexRangeError(f"sample index {i} outside 1..{centered.n}")
    tuples = enumerate_datasets(centered.values.shape[1], centered.n)
    return centered.values[:, tuples[:, i - 1]]


def partial_average_loss(centered: LossTable, i: int) -> np.ndarray:
    """L̄_i = (1/n)·Σ_{j≤i} ℓ̄_j as a (hypothesis, dataset) array."""
    n = centered.n
    if not 0 <= i <= n:
        raise IndexRangeError(f"partial average index {i} outside 0..{n}")
    tuples = enumerate_datasets(centered.values.shape[1], n)
    total = np.zeros((centered.values.shape[0], tuples.shape[0]))
    for j in range(i):
        total += centered.values[:, tuples[:, j]]
    return total / n


def generalization_error(P_n: JointDistribution, centered: LossTable) -> float:
    """E gen(W_n, S_n) = ⟨P_n, L̄_n⟩ (training minus test error)."""
    return pairing(P_n, partial_average_loss(centered, centered.n))
