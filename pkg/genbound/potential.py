"""The overfitting potential Φ(f) = sup_{P∈Δ_n} ⟨P, f⟩ − H(P).

Φ is maximized over mixture weights α on the (n+1)-simplex. SLSQP gets
close, then pairwise Frank–Wolfe with exact line search polishes the
point and certifies it with the Frank–Wolfe gap.
"""

import itertools
import math
from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import logsumexp

from genbound.config import MAX_GRID_POINTS, load_config
from genbound.divergences import (
    DivergenceSpec,
    certificate,
    certificate_norm,
    gradient_columns,
    h_columns,
)
from genbound.errors import EnumerationLimitError, IndexRangeError
from genbound.ghost import HullPoint, MixedBagFamily, projection_plus
from genbound.norms import DerivativeBounds, conjugate, dual_norm_eval, loss_dual_moment, make_norm, norm_eval
from genbound.probability import JointDistribution, LossTable, partial_average_loss, sample_loss
from genbound.utils.display import get_logger

logger = get_logger(__name__)

INFEASIBLE = 1e300
CHUNK_ENTRIES = 2_000_000


class SolverSettings(NamedTuple):
    tol: float
    max_iters: int
    tie_tol: float


def solver_settings(overrides: dict | None = None) -> SolverSettings:
    """potential.* settings, with dotted scenario overrides on top."""
    section = load_config()["potential"]
    overrides = overrides or {}
    return SolverSettings(
        tol=float(overrides.get("potential.tol", section["tol"])),
        max_iters=int(overrides.get("potential.max_iters", section["max_iters"])),
        tie_tol=float(overrides.get("potential.tie_tol", section["tie_tol"])),
    )


@dataclass(frozen=True, eq=False)
class PotentialResult:
    value: float
    maximizer: HullPoint
    maximizer_set: tuple[HullPoint, ...]
    iterations: int
    gap: float
    converged: bool
    face: tuple[int, ...] = field(default=())


class _Objective:
    """g(α) = Σ_k α_k⟨P_k, f⟩ − H(Σ_k α_k P_k)."""

    def __init__(self, family: MixedBagFamily, spec: DivergenceSpec, f):
        f = np.asarray(f, dtype=float)
        self.linear = np.einsum("kwd,wd->k", family.tables(), f)
        self.stack = family.conditionals
        self.probs = family.positive_probs
        self.spec = spec

    def H(self, alpha) -> float:
        cond = np.tensordot(alpha, self.stack, axes=1)
        return float(np.sum(self.probs * h_columns(self.spec, cond)))

    def value(self, alpha) -> float:
        return float(alpha @ self.linear) - self.H(alpha)

    def safe_value(self, alpha) -> float:
        value = self.value(alpha)
        return value if math.isfinite(value) else -INFEASIBLE

    def gradient(self, alpha) -> np.ndarray:
        cond = np.tensordot(alpha, self.stack, axes=1)
        grads = gradient_columns(self.spec, cond)
        return self.linear - np.einsum("kwd,wd,d->k", self.stack, grads, self.probs)

    def values(self, alphas: np.ndarray) -> np.ndarray:
        """g at a batch of weight vectors (rows)."""
        out = np.empty(len(alphas))
        per_row = self.stack[0].size
        if self.spec.grid is not None:
            per_row *= len(self.spec.grid.x)
        chunk = max(1, CHUNK_ENTRIES // per_row)
        for start in range(0, len(alphas), chunk):
            block = alphas[start:start + chunk]
            cond = np.tensordot(block, self.stack, axes=1)
            H = h_columns(self.spec, cond) @ self.probs
            out[start:start + chunk] = block @ self.linear - H
        return out


def _vertex(k: int, size: int) -> np.ndarray:
    e = np.zeros(size)
    e[k] = 1.0
    return e


def _slsqp(obj: _Objective, start: np.ndarray, active: np.ndarray) -> tuple[np.ndarray, int]:
    size = len(start)

    def embed(x):
        full = np.zeros(size)
        full[active] = x
        return full

    def cost(x):
        return -obj.safe_value(embed(x))

    def jac(x):
        return -obj.gradient(embed(x))[active]

    result = minimize(
        cost,
        start[active],
        jac=jac,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * len(active),
        constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0, "jac": lambda x: np.ones_like(x)}],
        options={"ftol": 1e-15, "maxiter": 500},
    )
    x = np.clip(result.x, 0.0, None)
    total = x.sum()
    if not np.all(np.isfinite(x)) or total <= 0:
        return start, int(result.nit)
    candidate = embed(x / total)
    if obj.safe_value(candidate) >= obj.safe_value(start):
        return candidate, int(result.nit)
    return start, int(result.nit)


def _frank_wolfe_gap(obj: _Objective, alpha: np.ndarray, active: np.ndarray) -> tuple[float, np.ndarray]:
    grad = obj.gradient(alpha)
    return float(grad[active].max() - grad @ alpha), grad


def _pairwise_polish(obj: _Objective, alpha: np.ndarray, active: np.ndarray, settings: SolverSettings):
    value = obj.safe_value(alpha)
    gap = math.inf
    iterations = 0
    for iterations in range(1, settings.max_iters + 1):
        gap, grad = _frank_wolfe_gap(obj, alpha, active)
        if gap <= settings.tol:
            break
        toward = active[np.argmax(grad[active])]
        held = active[alpha[active] > 0]
        away = held[np.argmin(grad[held])]
        if toward == away:
            break
        direction = _vertex(toward, len(alpha)) - _vertex(away, len(alpha))
        step_max = alpha[away]

        def cost(gamma):
            return -obj.safe_value(alpha + gamma * direction)

        search = minimize_scalar(cost, bounds=(0.0, step_max), method="bounded", options={"xatol": 1e-14})
        steps = [search.x, step_max]
        costs = [search.fun, cost(step_max)]
        best = int(np.argmin(costs))
        new_value = -costs[best]
        if new_value <= value:
            break
        alpha = np.clip(alpha + steps[best] * direction, 0.0, None)
        alpha /= alpha.sum()
        value = obj.safe_value(alpha)
    return alpha, value, gap, iterations


def phi_eval(
    family: MixedBagFamily,
    spec: DivergenceSpec,
    f,
    tol: float | None = None,
    *,
    top: int | None = None,
    warm_starts=(),
    settings: SolverSettings | None = None,
) -> PotentialResult:
    """Φ(f) over Δ_n, or over Δ_top = conv(P_0..P_top) when ``top`` is given."""
    settings = settings or solver_settings()
    if tol is not None:
        settings = settings._replace(tol=tol)
    size = family.n + 1
    top = family.n if top is None else top
    if not 0 <= top <= family.n:
        raise IndexRangeError(f"hull index {top} outside 0..{family.n}")
    active = np.arange(top + 1)
    obj = _Objective(family, spec, f)

    vertex_values = np.array([obj.value(_vertex(k, size)) for k in active])
    face = tuple(int(k) for k in active[np.isfinite(vertex_values)])
    start = _vertex(int(active[np.argmax(vertex_values)]), size)
    for warm in warm_starts:
        warm = warm.alpha if isinstance(warm, HullPoint) else np.asarray(warm, dtype=float)
        if np.all(warm[top + 1:] == 0) and obj.safe_value(warm) > obj.safe_value(start):
            start = warm

    alpha, iterations = start, 0
    if len(active) > 1:
        alpha, iterations = _slsqp(obj, start, active)
        alpha, value, gap, polish_iters = _pairwise_polish(obj, alpha, active, settings)
        iterations += polish_iters
    else:
        value, gap = obj.safe_value(alpha), 0.0

    # candidate maximizers: vertices, lower-face projections, warm starts
    candidates = [_vertex(k, size) for k in active]
    candidates += [projection_plus(alpha, j).alpha for j in range(1, top + 1)]
    candidates += [w.alpha if isinstance(w, HullPoint) else np.asarray(w, dtype=float) for w in warm_starts]
    ties = [alpha]
    for cand in candidates:
        if np.any(cand[top + 1:] > 0):
            continue
        cand_value = obj.safe_value(cand)
        if cand_value > value:
            alpha, value = cand, cand_value
            ties = [c for c in ties if obj.safe_value(c) >= value - settings.tie_tol]
            ties.insert(0, cand)
        elif cand_value >= value - settings.tie_tol:
            ties.append(cand)

    converged = gap <= settings.tol
    if not converged:
        logger.info("phi_eval stopped with gap %.3g after %d iterations", gap, iterations)
    return PotentialResult(
        value=value,
        maximizer=HullPoint(alpha),
        maximizer_set=tuple(HullPoint(t) for t in ties),
        iterations=iterations,
        gap=gap,
        converged=converged,
        face=face,
    )


def simplex_grid(parts: int, resolution: int) -> np.ndarray:
    """Every weight vector with entries in (1/resolution)·N summing to one."""
    count = comb(resolution + parts - 1, parts - 1)
    if count > MAX_GRID_POINTS:
        raise EnumerationLimitError("simplex grid points", count, MAX_GRID_POINTS)
    bars = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(resolution + parts - 1), parts - 1)),
        dtype=np.int64,
        count=count * (parts - 1),
    ).reshape(count, parts - 1)
    edges = np.concatenate([np.full((count, 1), -1), bars, np.full((count, 1), resolution + parts - 1)], axis=1)
    return (np.diff(edges, axis=1) - 1) / resolution


def phi_grid_oracle(family: MixedBagFamily, spec: DivergenceSpec, f, resolution: int = 200) -> float:
    """max of the Φ objective over the regular simplex grid."""
    obj = _Objective(family, spec, f)
    grid = simplex_grid(family.n + 1, resolution)
    values = obj.values(grid)
    return float(np.max(values[np.isfinite(values)]))


def hull_pairing(family: MixedBagFamily, alpha, f) -> float:
    alpha = alpha.alpha if isinstance(alpha, HullPoint) else np.asarray(alpha, dtype=float)
    return float(np.einsum("k,kwd,wd->", alpha, family.tables(), np.asarray(f, dtype=float)))


def _bregman(family, at_f: PotentialResult, at_prime: PotentialResult, f, f_prime) -> float:
    diff = np.asarray(f_prime, dtype=float) - np.asarray(f, dtype=float)
    linear = np.einsum("kwd,wd->k", family.tables(), diff)
    sup = max(float(h.alpha @ linear) for h in at_prime.maximizer_set)
    return at_f.value - at_prime.value + sup


def bregman_phi(
    family: MixedBagFamily,
    spec: DivergenceSpec,
    f,
    f_prime,
    tol: float | None = None,
    settings: SolverSettings | None = None,
) -> float:
    """B_Φ(f‖f') = Φ(f) − Φ(f') + sup over the maximizers P' at f' of ⟨P', f' − f⟩."""
    settings = settings or solver_settings()
    at_prime = phi_eval(family, spec, f_prime, tol, settings=settings)
    at_f = phi_eval(family, spec, f, tol, settings=settings, warm_starts=at_prime.maximizer_set)
    return _bregman(family, at_f, at_prime, f, f_prime)


def phi_path(family: MixedBagFamily, spec: DivergenceSpec, centered: LossTable, eta: float, settings=None) -> list[PotentialResult]:
    """Φ(ηL̄_i) for i = 0..n, each warm-started from its predecessor."""
    settings = settings or solver_settings()
    results = []
    for i in range(family.n + 1):
        f = eta * partial_average_loss(centered, i)
        warm = results[-1].maximizer_set if results else ()
        results.append(phi_eval(family, spec, f, settings=settings, warm_starts=warm))
    return results


@dataclass(frozen=True)
class PotentialChainReport:
    lhs: float
    terms: tuple[float, ...]
    max_gap: float

    @property
    def rhs(self) -> float:
        return float(sum(self.terms))

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def verify_theorem2(family: MixedBagFamily, spec: DivergenceSpec, centered: LossTable, eta: float, settings=None) -> PotentialChainReport:
    """Φ(ηL̄_n) against Σ_i B_Φ(ηL̄_i ‖ ηL̄_{i−1}), from one solve per i."""
    path = phi_path(family, spec, centered, eta, settings)
    losses = [eta * partial_average_loss(centered, i) for i in range(family.n + 1)]
    terms = tuple(
        _bregman(family, path[i], path[i - 1], losses[i], losses[i - 1]) for i in range(1, family.n + 1)
    )
    return PotentialChainReport(lhs=path[-1].value, terms=terms, max_gap=max(r.gap for r in path))


def certified_moment(spec: DivergenceSpec, centered: LossTable, mu, bounds: list[DerivativeBounds] | None = None) -> float:
    """E‖ℓ̄(·, Z)‖_*² (or the q-th moment in the p-uniform regime) in the certificate's dual norm."""
    cert = certificate(spec)
    power = 2.0 if cert.regime == "strong" else conjugate(cert.exponent)
    return loss_dual_moment(centered, mu, certificate_norm(spec), power=power, Q0=spec.base, bounds=bounds)


class PotentialStepReport(NamedTuple):
    bregman: float
    rhs: float
    slack: float


def step_rhs(spec: DivergenceSpec, eta: float, n: int, moment: float) -> float:
    cert = certificate(spec)
    if cert.regime == "strong":
        return eta**2 * moment / (cert.alpha * n**2)
    q = conjugate(cert.exponent)
    return (abs(eta) / n) ** q * moment / cert.alpha ** (q - 1.0)


def verify_lemma3(
    family: MixedBagFamily,
    spec: DivergenceSpec,
    centered: LossTable,
    eta: float,
    i: int,
    moment: float | None = None,
    settings=None,
) -> PotentialStepReport:
    """B_Φ(ηL̄_i ‖ ηL̄_{i−1}) ≤ η²M/(αn²), or the q-smooth form (|η|/n)^q M_q/α^{q−1}."""
    if not 1 <= i <= family.n:
        raise IndexRangeError(f"step {i} outside 1..{family.n}")
    if moment is None:
        moment = certified_moment(spec, centered, family.mu)
    f = eta * partial_average_loss(centered, i)
    f_prime = eta * partial_average_loss(centered, i - 1)
    bregman = bregman_phi(family, spec, f, f_prime, settings=settings)
    rhs = step_rhs(spec, eta, family.n, moment)
    return PotentialStepReport(bregman, rhs, rhs - bregman)


class DualityReport(NamedTuple):
    bregman: float
    rhs: float
    slack: float
    distance: float
    distance_rhs: float
    distance_slack: float
    distance_tol: float


def verify_lemma6(family: MixedBagFamily, spec: DivergenceSpec, f, f_prime, settings=None) -> DualityReport:
    """B_Φ(f‖f') ≤ (1/α)‖f − f'‖²_{μ,*} and ‖P − P'‖_μ^{p−1} ≤ (1/α)‖f − f'‖_{μ,*}.

    In the p-uniform regime the first bound reads ‖f − f'‖^q/α^{q−1}. The
    distance check compares solver maximizers, so its tolerance grows with
    the certified gaps.
    """
    settings = settings or solver_settings()
    cert = certificate(spec)
    at_prime = phi_eval(family, spec, f_prime, settings=settings)
    at_f = phi_eval(family, spec, f, settings=settings, warm_starts=at_prime.maximizer_set)
    bregman = _bregman(family, at_f, at_prime, f, f_prime)

    lifted = make_norm(f"lifted:{cert.norm}", embedding=spec.embedding, reference=spec.reference, power=cert.exponent)
    dual = dual_norm_eval(lifted, np.asarray(f, dtype=float) - np.asarray(f_prime, dtype=float), Q0=spec.base, law=family.law)
    if cert.regime == "strong":
        rhs = dual**2 / cert.alpha
    else:
        q = conjugate(cert.exponent)
        rhs = dual**q / cert.alpha ** (q - 1.0)

    tables = family.tables()
    P = np.tensordot(at_f.maximizer.alpha, tables, axes=1)
    P_prime = np.tensordot(at_prime.maximizer.alpha, tables, axes=1)
    distance = norm_eval(lifted, P - P_prime, Q0=spec.base, law=family.law) ** (cert.exponent - 1.0)
    distance_rhs = dual / cert.alpha
    gaps = max(at_f.gap, 0.0) + max(at_prime.gap, 0.0)
    distance_tol = 2.0 * math.sqrt(2.0 * gaps / cert.alpha) + 1e-7
    return DualityReport(bregman, rhs, rhs - bregman, distance, distance_rhs, distance_rhs - distance, distance_tol)


def dv_conjugate_closed_form(P0, f) -> float:
    """log E_{P_0} e^f, the conjugate of D(·‖P_0) over all joint distributions."""
    table = P0.table if isinstance(P0, JointDistribution) else np.asarray(P0, dtype=float)
    f = np.asarray(f, dtype=float)
    support = table > 0
    return float(logsumexp(f[support], b=table[support]))


@dataclass(frozen=True)
class FTRLStep:
    t: int
    weights: HullPoint
    pairing: float
    face_pairing: float
    face_deficit: float


@dataclass(frozen=True)
class FTRLReport:
    steps: tuple[FTRLStep, ...]
    regret: float
    gen: float

    @property
    def max_pairing(self) -> float:
        return max(max(abs(s.pairing), s.face_pairing) for s in self.steps)

    @property
    def max_face_deficit(self) -> float:
        return max(s.face_deficit for s in self.steps)

    @property
    def decomposition_defect(self) -> float:
        """|Regret_n − gen|, which is |Σ_t ⟨P̃_t, ℓ̄_t⟩/n|."""
        return abs(self.regret - self.gen)


def ftrl_trajectory(family: MixedBagFamily, spec: DivergenceSpec, centered: LossTable, eta: float, settings=None) -> FTRLReport:
    """P̃_t = argmax over Δ_n of η⟨P, L̄_{t−1}⟩ − H(P), and its pairings with ℓ̄_t.

    The predictions are the solver's maximizers as returned, so a maximizer
    with mass beyond P_{t−1} shows up as a nonzero pairing. ``face_deficit``
    is Φ minus the objective at the projection onto Δ_{t−1}.
    """
    settings = settings or solver_settings()
    n = family.n
    tables = family.tables()
    P_n = tables[-1]
    steps, regret = [], 0.0
    previous = ()
    for t in range(1, n + 1):
        f = eta * partial_average_loss(centered, t - 1)
        result = phi_eval(family, spec, f, settings=settings, warm_starts=previous)
        previous = result.maximizer_set
        loss_t = sample_loss(centered, t)
        P_t = np.tensordot(result.maximizer.alpha, tables, axes=1)
        pairing = float(np.sum(P_t * loss_t)) / n
        face_pairing = max(abs(hull_pairing(family, h, loss_t)) / n for h in result.maximizer_set)
        projected = projection_plus(result.maximizer, t)
        face_deficit = result.value - _Objective(family, spec, f).safe_value(projected.alpha)
        steps.append(FTRLStep(t=t, weights=result.maximizer, pairing=pairing, face_pairing=face_pairing, face_deficit=face_deficit))
        regret += float(np.sum((P_n - P_t) * loss_t)) / n
    gen = float(np.sum(P_n * partial_average_loss(centered, n)))
    return FTRLReport(steps=tuple(steps), regret=regret, gen=gen)
