"""Mixed-bag family P_0..P_n and the hull Δ_n.

P_i is the law of (A(S^(i)), S_n) where S^(i) keeps the first i training
points and replaces the rest with an independent ghost suffix.
"""

from dataclasses import dataclass

import numpy as np

from genbound.divergences import DivergenceSpec, H_columns
from genbound.errors import IndexRangeError
from genbound.probability import (
    DatasetLaw,
    JointDistribution,
    Kernel,
    LossTable,
    joint_from_kernel,
    normalized,
    partial_average_loss,
    sample_loss,
)
from genbound.utils.display import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class HullPoint:
    """Mixture weights α over P_0..P_n."""

    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", normalized(self.alpha, "hull weights"))

    @classmethod
    def vertex(cls, k: int, n: int) -> "HullPoint":
        alpha = np.zeros(n + 1)
        alpha[k] = 1.0
        return cls(alpha)


@dataclass(frozen=True, eq=False)
class MixedBagFamily:
    members: tuple[JointDistribution, ...]
    kernel: Kernel
    law: DatasetLaw
    conditionals: np.ndarray

    @property
    def n(self) -> int:
        return self.law.n

    @property
    def mu(self):
        return self.law.space

    @property
    def base(self) -> np.ndarray:
        """Q0 = P_{W_n}, shared by every member."""
        return self.members[-1].hypothesis_marginal()

    @property
    def positive_probs(self) -> np.ndarray:
        return self.law.probs[self.law.positive]

    def tables(self) -> np.ndarray:
        """All member tables stacked as (n+1, |W|, D)."""
        return np.stack([P.table for P in self.members])


def build_family(kernel: Kernel, law: DatasetLaw) -> MixedBagFamily:
    """P_i(w, s) = μ^n(s)·Σ_tail μ^{n−i}(tail)·κ(w | s_{1:i}∘tail)."""
    P_n = joint_from_kernel(kernel, law)
    m, n = law.space.size, law.n
    k = kernel.num_hypotheses
    mu = law.space.mu
    shape = (m,) * n + (k,)

    current = np.nan_to_num(kernel.rows, nan=0.0).reshape(shape)
    conditionals = [None] * (n + 1)
    for i in range(n, -1, -1):
        lifted = current.reshape((m,) * i + (1,) * (n - i) + (k,))
        conditionals[i] = np.broadcast_to(lifted, shape).reshape(law.size, k).T
        if i > 0:
            current = np.tensordot(current, mu, axes=([i - 1], [0]))

    members = []
    for i, cond in enumerate(conditionals):
        if i == n:
            members.append(P_n)
        else:
            members.append(JointDistribution(table=cond * law.probs[None, :], law=law))
    stack = np.stack([c[:, law.positive] for c in conditionals])
    logger.debug("built mixed-bag family: n=%d, |W|=%d, %d datasets", n, k, law.size)
    return MixedBagFamily(members=tuple(members), kernel=kernel, law=law, conditionals=stack)


def _weights(alpha) -> np.ndarray:
    return alpha.alpha if isinstance(alpha, HullPoint) else normalized(alpha, "hull weights")


def hull_point(family: MixedBagFamily, alpha) -> JointDistribution:
    """Σ_k α_k P_k."""
    weights = _weights(alpha)
    return JointDistribution(table=np.tensordot(weights, family.tables(), axes=1), law=family.law)


def hull_conditionals(family: MixedBagFamily, alpha) -> np.ndarray:
    """Conditionals of Σ_k α_k P_k on positive-mass datasets, (|W|, D+)."""
    return np.tensordot(np.asarray(alpha, dtype=float), family.conditionals, axes=1)


def hull_H(family: MixedBagFamily, spec: DivergenceSpec, alpha) -> float:
    alpha = alpha.alpha if isinstance(alpha, HullPoint) else alpha
    return H_columns(spec, hull_conditionals(family, alpha), family.positive_probs)


def projection_plus(alpha, i: int) -> HullPoint:
    """Collapse every weight at index ≥ i−1 onto i−1 (P⁺ = Σ α_k P_{k∧(i−1)})."""
    weights = _weights(alpha).copy()
    n = len(weights) - 1
    if not 1 <= i <= n:
        raise IndexRangeError(f"projection index {i} outside 1..{n}")
    weights[i - 1] = weights[i - 1:].sum()
    weights[i:] = 0.0
    return HullPoint(weights)


def prefix_defect(family: MixedBagFamily) -> float:
    """Largest spread of P_{i|s} across datasets sharing the prefix s_{1:i}."""
    m, n = family.mu.size, family.n
    worst = 0.0
    for i, P in enumerate(family.members):
        cond = P.conditionals()
        shaped = cond.reshape(cond.shape[0], m**i, m ** (n - i))
        spread = np.nanmax(shaped, axis=2) - np.nanmin(shaped, axis=2)
        worst = max(worst, float(np.nanmax(spread)))
    return worst


@dataclass(frozen=True)
class ZeroPairingReport:
    """Signed ⟨P_k, ℓ̄_i⟩ with rows k = 0..n and columns i = 1..n."""

    pairings: np.ndarray

    @property
    def max_independent(self) -> float:
        """max |⟨P_k, ℓ̄_i⟩| over k < i."""
        rows, cols = np.indices(self.pairings.shape)
        mask = rows < cols + 1
        return float(np.abs(self.pairings[mask]).max(initial=0.0))


def verify_zero_pairing(family: MixedBagFamily, centered: LossTable) -> ZeroPairingReport:
    tables = family.tables()
    out = np.empty((family.n + 1, family.n))
    for i in range(1, family.n + 1):
        loss_i = sample_loss(centered, i)
        out[:, i - 1] = np.einsum("kwd,wd->k", tables, loss_i)
    return ZeroPairingReport(out)


def pairing_identity_defect(family: MixedBagFamily, centered: LossTable) -> float:
    """max |⟨P_k, L̄_{i−1}⟩ − ⟨P_{i−1}, L̄_{i−1}⟩| over k ≥ i−1."""
    tables = family.tables()
    worst = 0.0
    for i in range(1, family.n + 1):
        values = np.einsum("kwd,wd->k", tables, partial_average_loss(centered, i - 1))
        worst = max(worst, float(np.max(np.abs(values[i - 1:] - values[i - 1]))))
    return worst


@dataclass(frozen=True)
class ImprovementReport:
    slack: float
    pairing_gap: float
    jensen_gap: float

    def passed(self, inequality_tol: float = 1e-9, identity_tol: float = 1e-10) -> bool:
        return (
            self.slack >= -inequality_tol
            and abs(self.pairing_gap) <= identity_tol
            and self.jensen_gap <= identity_tol
        )


def verify_improvement(
    family: MixedBagFamily,
    spec: DivergenceSpec,
    centered: LossTable,
    alpha,
    i: int,
    eta: float,
) -> ImprovementReport:
    """Objective gain of P⁺ over P for η⟨·, L̄_{i−1}⟩ − H(·)."""
    alpha = _weights(alpha)
    plus = projection_plus(alpha, i).alpha
    loss = partial_average_loss(centered, i - 1)
    tables = family.tables()
    pair = float(np.einsum("k,kwd,wd->", alpha, tables, loss))
    pair_plus = float(np.einsum("k,kwd,wd->", plus, tables, loss))
    h = hull_H(family, spec, alpha)
    h_plus = hull_H(family, spec, plus)
    slack = (eta * pair_plus - h_plus) - (eta * pair - h)
    return ImprovementReport(slack=slack, pairing_gap=pair_plus - pair, jensen_gap=h_plus - h)
