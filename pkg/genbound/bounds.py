"""Bound calculators: the square-root dependence bound and its instantiations, as slack-audited reports."""

import math
from dataclasses import dataclass, field

import numpy as np

from genbound.divergences import (
    H_eval,
    certificate,
    make_divergence,
    parse_divergence,
    single_letter_H,
)
from genbound.errors import ConfigError
from genbound.losses import uniform_beta
from genbound.norms import conjugate, smoothed_dual_bound
from genbound.potential import certified_moment
from genbound.scenarios import ScenarioInstance
from genbound.transport import PointCloudDistribution, smoothed_kl, w2_exact
from genbound.utils.display import get_logger

logger = get_logger(__name__)

SOUNDNESS_TOL = 1e-7
ROUNDING = 1e-12


@dataclass(frozen=True)
class BoundReport:
    scenario: str
    n: int
    divergence: str
    gen_true: float
    H_value: float
    dual_moment: float
    bound: float
    tol: float = SOUNDNESS_TOL
    diagnostics: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.bound - abs(self.gen_true)

    @property
    def vacuous(self) -> bool:
        return not math.isfinite(self.bound)

    @property
    def sound(self) -> bool:
        return self.vacuous or self.slack >= -self.tol


def bound_theorem1(H_value: float, dual_moment: float, alpha: float, n: int) -> float:
    """√(4·H·E‖ℓ̄‖²_*/(αn)); an infinite H gives an infinite (vacuous) bound."""
    if H_value < -ROUNDING or dual_moment < -ROUNDING or alpha <= 0 or n < 1:
        raise ConfigError("bound needs H, moment ≥ 0, α > 0 and n ≥ 1")
    if math.isinf(H_value) or math.isinf(dual_moment):
        return math.inf
    return math.sqrt(4.0 * max(H_value, 0.0) * max(dual_moment, 0.0) / (alpha * n))


def bound_p_uniform(H_value: float, moment_q: float, alpha: float, n: int, p: float) -> float:
    """p·(q−1)^{1/q}·H^{1/p}·M_q^{1/q}/(αn)^{1/p}, the η-optimized p-uniform bound."""
    if math.isinf(H_value) or math.isinf(moment_q):
        return math.inf
    q = conjugate(p)
    H_value = max(H_value, 0.0)
    return p * (q - 1.0) ** (1.0 / q) * H_value ** (1.0 / p) * moment_q ** (1.0 / q) / (alpha * n) ** (1.0 / p)


def rate_factor(p: float, n: int) -> float:
    """n^{−1/p}, the sample-size factor of the p-uniform bound."""
    return n ** (-1.0 / p)


def eta_grid() -> np.ndarray:
    """±0.05·2^k for k = 0..12."""
    positive = 0.05 * 2.0 ** np.arange(13)
    return np.concatenate([-positive[::-1], positive])


def eta_grid_bound(H_value: float, dual_moment: float, alpha: float, n: int, grid=None) -> float:
    """min over the η grid of H/|η| + |η|·M/(αn)."""
    grid = eta_grid() if grid is None else np.asarray(grid, dtype=float)
    etas = np.abs(grid[grid != 0])
    return float(np.min(H_value / etas + etas * dual_moment / (alpha * n)))


def pipeline_slacks(inst: ScenarioInstance, name: str, grid=None) -> np.ndarray:
    """H(P_n) + η²M/(αn) − η·gen for every η on the grid."""
    grid = eta_grid() if grid is None else np.asarray(grid, dtype=float)
    spec = make_divergence(name, inst.base, embedding=inst.embedding)
    cert = certificate(spec)
    if cert.regime != "strong":
        raise ConfigError(f"{name}: the η pipeline is assembled for strongly convex divergences")
    H = H_eval(spec, inst.joint)
    M = certified_moment(spec, inst.centered, inst.scenario.instances)
    return H + grid**2 * M / (cert.alpha * inst.n) - grid * inst.gen


def _max_ratio(inst: ScenarioInstance) -> float:
    cond = inst.joint.conditionals()[:, inst.law.positive]
    support = inst.base > 0
    return float(np.max(cond[support] / inst.base[support, None]))


def bound_divergence(inst: ScenarioInstance, name: str) -> BoundReport:
    """The square-root bound (or its p-uniform form) for one registry divergence."""
    ident = parse_divergence(name)
    if ident.family == "smoothed-kl":
        return bound_smoothed(inst, ident.sigma)
    spec = make_divergence(ident, inst.base, embedding=inst.embedding)
    cert = certificate(spec)
    H = H_eval(spec, inst.joint)
    M = certified_moment(spec, inst.centered, inst.scenario.instances)
    diagnostics = {"alpha": cert.alpha, "norm": cert.norm, "regime": cert.regime}

    if spec.ratio_bound is not None:
        ratio = _max_ratio(inst)
        diagnostics["max_ratio"] = ratio
        if ratio > spec.ratio_bound:
            logger.info("%s/%s: density ratio %.3g exceeds M = %g", inst.id, name, ratio, spec.ratio_bound)
            return BoundReport(inst.id, inst.n, str(spec), inst.gen, H, M, math.inf, diagnostics=diagnostics)

    if cert.regime == "strong":
        bound = bound_theorem1(H, M, cert.alpha, inst.n)
    else:
        bound = bound_p_uniform(H, M, cert.alpha, inst.n, cert.exponent)
        diagnostics["rate_factor"] = rate_factor(cert.exponent, inst.n)
    return BoundReport(inst.id, inst.n, str(spec), inst.gen, H, M, bound, diagnostics=diagnostics)


def bound_mutual_information(inst: ScenarioInstance) -> BoundReport:
    """√(4·D(P_n‖P_0)·E‖ℓ̄(·,Z)‖²_∞/n)."""
    return bound_divergence(inst, "kl")


def bound_pnorm(inst: ScenarioInstance, p: float, regime: str | None = None) -> BoundReport:
    """Regime "a" (p ∈ (1,2], ‖·‖²_p with α = 2(p−1)) or "b" (p ≥ 2, p-uniform)."""
    if p <= 1:
        raise ConfigError("p-norm bounds need p > 1")
    regime = regime or ("a" if p <= 2 else "b")
    if regime == "a":
        if p > 2:
            raise ConfigError("regime a needs p in (1, 2]")
        return bound_divergence(inst, f"pnorm2:{p:g}")
    if regime == "b":
        if p < 2:
            raise ConfigError("regime b needs p >= 2")
        return bound_divergence(inst, f"pnormp:{p:g}")
    raise ConfigError(f"unknown p-norm regime '{regime}'")


def _clouds(inst: ScenarioInstance):
    embedding = inst.embedding
    if embedding is None:
        raise ConfigError(f"{inst.id}: transport bounds need a hypothesis embedding")
    base = PointCloudDistribution(points=embedding, weights=inst.base)
    cond = inst.joint.conditionals()[:, inst.law.positive]
    conditionals = [PointCloudDistribution(points=embedding, weights=cond[:, j]) for j in range(cond.shape[1])]
    return base, conditionals, inst.law.probs[inst.law.positive]


def expected_smoothed_kl(inst: ScenarioInstance, sigma: float) -> tuple[float, bool, float]:
    """E_S D_σ(P_{n|S}‖Q0) by quadrature, with convergence flag and worst error."""
    base, conditionals, probs = _clouds(inst)
    results = [smoothed_kl(c, base, sigma) for c in conditionals]
    value = float(sum(p * r.value for p, r in zip(probs, results)))
    return value, all(r.converged for r in results), max(r.error for r in results)


def expected_w2(inst: ScenarioInstance) -> float:
    """E_S W2²(P_{n|S}, Q0)."""
    base, conditionals, probs = _clouds(inst)
    return float(sum(p * w2_exact(c, base)[0] for p, c in zip(probs, conditionals)))


def smoothed_moment(inst: ScenarioInstance, sigma: float) -> float:
    """E_Z of the squared series bound on ‖ℓ̄(·,Z)‖_{σ,*}."""
    d = inst.embedding.shape[1]
    duals = np.array([smoothed_dual_bound(b, sigma, d) for b in inst.derivative_bounds])
    return float(inst.scenario.instances.mu @ duals**2)


def bound_smoothed(inst: ScenarioInstance, sigma: float) -> BoundReport:
    """√(4·E_S D_σ(P_{n|S}‖Q0)·E_Z‖ℓ̄(·,Z)‖²_{σ,*}/n) with the dual norm bounded by its series."""
    H, converged, error = expected_smoothed_kl(inst, sigma)
    M = smoothed_moment(inst, sigma)
    bound = bound_theorem1(H, M, 1.0, inst.n)
    diagnostics = {"alpha": 1.0, "norm": f"smoothed-tv:{sigma:g}", "quadrature_converged": converged, "quadrature_error": error}
    return BoundReport(inst.id, inst.n, f"smoothed-kl:{sigma:g}", inst.gen, H, M, bound, tol=max(SOUNDNESS_TOL, error), diagnostics=diagnostics)


def bound_wasserstein(inst: ScenarioInstance) -> BoundReport:
    """√(32·β²·d·E_S W2²(P_{n|S}, Q0)/n), the smoothed bound at σ = 1/(2√d) through W2."""
    beta = uniform_beta(inst.derivative_bounds)
    d = inst.embedding.shape[1]
    w2 = expected_w2(inst)
    bound = math.sqrt(32.0 * beta**2 * d * w2 / inst.n)
    diagnostics = {"beta": beta, "d": d, "sigma": 1.0 / (2.0 * math.sqrt(d))}
    return BoundReport(inst.id, inst.n, "wasserstein", inst.gen, w2, 4.0 * beta**2, bound, diagnostics=diagnostics)


def bound_single_letter(inst: ScenarioInstance, name: str) -> BoundReport:
    """(1/n)·Σ_i √(4·E h(P_{n|Z_i})·M/α)."""
    spec = make_divergence(name, inst.base, embedding=inst.embedding)
    cert = certificate(spec)
    if cert.regime != "strong":
        raise ConfigError(f"{name}: the single-letter bound needs a strongly convex divergence")
    letters = single_letter_H(spec, inst.joint)
    M = certified_moment(spec, inst.centered, inst.scenario.instances)
    terms = [bound_theorem1(h, M, cert.alpha, 1) for h in letters.per_coordinate]
    bound = float(np.mean(terms))
    diagnostics = {"alpha": cert.alpha, "per_coordinate": list(letters.per_coordinate)}
    return BoundReport(inst.id, inst.n, f"single-letter:{spec}", inst.gen, letters.average, M, bound, diagnostics=diagnostics)


def bound_for(inst: ScenarioInstance, name: str) -> BoundReport:
    """Dispatch a report column name: a divergence id, ``wasserstein`` or ``single-letter:<id>``."""
    if name == "wasserstein":
        return bound_wasserstein(inst)
    if name.startswith("single-letter:"):
        return bound_single_letter(inst, name.partition(":")[2])
    return bound_divergence(inst, name)
