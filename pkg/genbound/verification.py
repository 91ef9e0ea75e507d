"""Verification suites run over the built-in battery.

Every check produces a CheckResult whose slack is nonnegative when the
property holds; identities report the negated absolute defect. A check
passes when its slack is at least minus its tolerance.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from genbound.bounds import eta_grid
from genbound.divergences import make_divergence, verify_convexity
from genbound.errors import ConfigError
from genbound.ghost import (
    pairing_identity_defect,
    prefix_defect,
    verify_improvement,
    verify_zero_pairing,
)
from genbound.losses import loss_table, parse_loss
from genbound.norms import DerivativeBounds, dual_norm_exact, make_norm, smoothed_dual_bound
from genbound.potential import (
    certified_moment,
    dv_conjugate_closed_form,
    ftrl_trajectory,
    phi_eval,
    phi_grid_oracle,
    solver_settings,
    verify_lemma3,
    verify_lemma6,
    verify_theorem2,
)
from genbound.probability import HypothesisSpace, InstanceSpace, centered_loss, partial_average_loss
from genbound.scenarios import INSTANCE_SPECS, Scenario, ScenarioInstance, battery, materialize
from genbound.transport import (
    PointCloudDistribution,
    gaussian_quantile_cloud,
    point_mass,
    smoothed_tv,
    verify_lemma10,
    w2_exact,
    w2_gaussian,
    w2_permutation_oracle,
)
from genbound.utils.display import get_logger
from genbound.utils.parallel import ordered_map
from genbound.utils.rng import stream

logger = get_logger(__name__)

SUITES = ("thm2", "lemma3", "lemma6", "lemma7", "lemma10", "convexity", "ghost", "ftrl", "dv")

POTENTIAL_N = 2
FAMILY_N = 3
ORACLE_SIZES = (1, 2, 3)
POTENTIAL_DIVERGENCES = ("kl", "chi2")
FAMILY_ETAS = (-2.0, -0.5, 0.5, 2.0)
STEP_DIVERGENCES = ("kl", "chi2", "pnormp:3")
FTRL_ETAS = (-1.6, 0.2, 1.6, 12.8)
DV_ETAS = (-6.4, -0.4, 0.05, 0.8, 3.2, 25.6)
RANDOM_FUNCTIONS = 5
RANDOM_PAIRS = 200
RANDOM_BOUND = 10.0
IMPROVEMENT_DRAWS = 100

CONVEXITY_FAMILIES = (
    "kl", "chi2", "pnorm2:1.25", "pnorm2:1.5", "pnorm2:2",
    "pnormp:2", "pnormp:3", "pnormp:4", "hellinger:2", "itakura-saito",
    "tsallis:1.5:4", "squared-euclidean", "smoothed-kl:0.5",
)
CONVEXITY_BASES = ((0.2, 0.3, 0.5), (0.1, 0.2, 0.3, 0.4))
CONVEXITY_TRIALS = 1000

SERIES_SIGMAS = (0.25, 0.5, 0.75)
SERIES_SUPPORTS = (3, 5, 8, 12)
SMOOTHING_SIGMAS = (0.25, 0.5, 1.0)
CLOUD_PAIRS = 5
GAUSSIAN_CLOUD = 64
GAUSSIAN_TOL = 1e-3


@dataclass(frozen=True)
class CheckResult:
    suite: str
    instance: str
    parameters: str
    slack: float
    tolerance: float

    @property
    def passed(self) -> bool:
        # NaN slack fails
        return self.slack >= -self.tolerance

    def as_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def _check(suite: str, instance: str, parameters: str, slack: float, tolerance: float) -> CheckResult:
    return CheckResult(suite, instance, parameters, float(slack), float(tolerance))


def _spec(inst: ScenarioInstance, name: str):
    return make_divergence(name, inst.base, embedding=inst.embedding)


def _grid() -> list[float]:
    return [float(eta) for eta in eta_grid()]


# potential suites


def _thm2(scenario: Scenario, seed: int) -> list[CheckResult]:
    tol = scenario.tolerance("chain")
    out = []
    for n, etas in ((POTENTIAL_N, _grid()), (FAMILY_N, FAMILY_ETAS)):
        inst = materialize(scenario, n)
        for name in POTENTIAL_DIVERGENCES:
            spec = _spec(inst, name)
            for eta in etas:
                report = verify_theorem2(inst.family, spec, inst.centered, eta)
                out.append(_check("thm2", inst.id, f"n={inst.n} h={name} eta={eta:g}", report.slack, tol))
    return out


def _lemma3(scenario: Scenario, seed: int) -> list[CheckResult]:
    inst = materialize(scenario, POTENTIAL_N)
    tol = scenario.tolerance("chain")
    out = []
    for name in STEP_DIVERGENCES:
        spec = _spec(inst, name)
        moment = certified_moment(spec, inst.centered, scenario.instances)
        for eta in _grid():
            for i in range(1, inst.n + 1):
                report = verify_lemma3(inst.family, spec, inst.centered, eta, i, moment=moment)
                out.append(_check("lemma3", inst.id, f"n={inst.n} h={name} eta={eta:g} i={i}", report.slack, tol))
    return out


def _lemma6(scenario: Scenario, seed: int) -> list[CheckResult]:
    inst = materialize(scenario, POTENTIAL_N)
    tol = scenario.tolerance("chain")
    rng = stream(seed, scenario.id, "lemma6")
    shape = (scenario.hypotheses.size, inst.law.size)
    pairs = [
        (eta, f"eta={eta:g} i={i}", eta * partial_average_loss(inst.centered, i), eta * partial_average_loss(inst.centered, i - 1))
        for eta in _grid()
        for i in range(1, inst.n + 1)
    ]
    pairs += [
        (None, f"random={k}", rng.uniform(-RANDOM_BOUND, RANDOM_BOUND, size=shape), rng.uniform(-RANDOM_BOUND, RANDOM_BOUND, size=shape))
        for k in range(RANDOM_PAIRS)
    ]
    out = []
    for name in POTENTIAL_DIVERGENCES:
        spec = _spec(inst, name)
        for _, label, f, f_prime in pairs:
            report = verify_lemma6(inst.family, spec, f, f_prime)
            params = f"n={inst.n} h={name} {label}"
            out.append(_check("lemma6", inst.id, params, report.slack, tol))
            out.append(_check("lemma6", inst.id, params + " distance", report.distance_slack, max(tol, report.distance_tol)))
            out.append(_check("lemma6", inst.id, params + " bregman", report.bregman, tol))
    return out


def _ghost(scenario: Scenario, seed: int) -> list[CheckResult]:
    inst = materialize(scenario, FAMILY_N)
    family = inst.family
    identity = scenario.tolerance("identity")
    inequality = scenario.tolerance("inequality")
    label = f"n={inst.n}"
    out = [
        _check("ghost", inst.id, f"{label} zero-pairing", -verify_zero_pairing(family, inst.centered).max_independent, identity),
        _check("ghost", inst.id, f"{label} pairing-identity", -pairing_identity_defect(family, inst.centered), identity),
        _check("ghost", inst.id, f"{label} prefix", -prefix_defect(family), identity),
    ]
    grid = eta_grid()
    for name in POTENTIAL_DIVERGENCES:
        spec = _spec(inst, name)
        rng = stream(seed, scenario.id, f"improvement:{name}")
        slack = pairing = jensen = math.inf
        for _ in range(IMPROVEMENT_DRAWS):
            alpha = rng.dirichlet(np.ones(inst.n + 1))
            i = int(rng.integers(1, inst.n + 1))
            eta = float(rng.choice(grid))
            report = verify_improvement(family, spec, inst.centered, alpha, i, eta)
            slack = min(slack, report.slack)
            pairing = min(pairing, -abs(report.pairing_gap))
            jensen = min(jensen, -report.jensen_gap)
        params = f"{label} h={name} draws={IMPROVEMENT_DRAWS}"
        out.append(_check("ghost", inst.id, params + " improvement", slack, inequality))
        out.append(_check("ghost", inst.id, params + " pairing-gap", pairing, identity))
        out.append(_check("ghost", inst.id, params + " jensen-gap", jensen, inequality))
    return out


def _ftrl(scenario: Scenario, seed: int) -> list[CheckResult]:
    inst = materialize(scenario, FAMILY_N)
    tol = scenario.tolerance("ftrl")
    settings = solver_settings(scenario.tolerances)
    out = []
    for name in POTENTIAL_DIVERGENCES:
        spec = _spec(inst, name)
        for eta in FTRL_ETAS:
            report = ftrl_trajectory(inst.family, spec, inst.centered, eta, settings=settings)
            params = f"n={inst.n} h={name} eta={eta:g}"
            out.append(_check("ftrl", inst.id, params + " pairing", -report.max_pairing, tol))
            out.append(_check("ftrl", inst.id, params + " decomposition", -report.decomposition_defect, tol))
            out.append(_check("ftrl", inst.id, params + " gen", -abs(report.gen - inst.gen), tol))
            out.append(_check("ftrl", inst.id, params + " face", -report.max_face_deficit, max(tol, settings.tie_tol)))
    return out


def _dv(scenario: Scenario, seed: int) -> list[CheckResult]:
    inequality = scenario.tolerance("inequality")
    oracle = scenario.tolerance("oracle")
    rng = stream(seed, scenario.id, "dv")
    out = []
    for n in ORACLE_SIZES:
        inst = materialize(scenario, n)
        spec = _spec(inst, "kl")
        P0 = inst.family.members[0]
        loss = partial_average_loss(inst.centered, n)
        functions = [(f"eta={eta:g}", eta * loss) for eta in DV_ETAS]
        functions += [(f"random={k}", rng.normal(size=loss.shape)) for k in range(RANDOM_FUNCTIONS)]
        for label, f in functions:
            value = phi_eval(inst.family, spec, f).value
            upper = dv_conjugate_closed_form(P0, f)
            out.append(_check("dv", inst.id, f"n={n} {label} donsker-varadhan", upper - value, inequality))

        value = phi_eval(inst.family, spec, loss).value
        grid_value = phi_grid_oracle(inst.family, spec, loss)
        out.append(_check("dv", inst.id, f"n={n} grid-below", value - grid_value, inequality))
        out.append(_check("dv", inst.id, f"n={n} grid-match", -abs(value - grid_value), oracle))
    return out


# battery-free suites


def _cosine_space(size: int) -> tuple[HypothesisSpace, InstanceSpace]:
    spec = INSTANCE_SPECS["cosine"]
    embedding = np.linspace(0.0, 2.0, size)[:, None]
    hypotheses = HypothesisSpace(labels=tuple(f"w{k}" for k in range(size)), embedding=embedding)
    inst = spec["instances"]
    instances = InstanceSpace(labels=tuple(inst["labels"]), mu=np.asarray(inst["mu"]), points=inst["points"])
    return hypotheses, instances


def lemma7_checks(seed: int = 0, tolerance: float = 1e-6) -> list[CheckResult]:
    """Series bound against the discretized LP dual, plus the 2β identity."""
    loss_id = parse_loss(INSTANCE_SPECS["cosine"]["loss"])
    out = []
    for size in SERIES_SUPPORTS:
        hypotheses, instances = _cosine_space(size)
        centered = centered_loss(loss_table(loss_id, hypotheses, instances, 1), instances)
        beta = 2.0 * loss_id.scale
        for sigma in SERIES_SIGMAS:
            norm = make_norm(f"smoothed-tv:{sigma:g}", embedding=hypotheses.embedding)
            bound = smoothed_dual_bound(DerivativeBounds(uniform=beta), sigma, 1)
            for z, label in enumerate(instances.labels):
                exact = dual_norm_exact(norm, centered.values[:, z])
                out.append(_check("lemma7", f"cosine-{size}", f"sigma={sigma:g} z={label}", bound - exact, tolerance))
    for d in (1, 2, 4):
        for beta in (0.5, 1.0, 3.0):
            value = smoothed_dual_bound(DerivativeBounds(uniform=beta), 1.0 / (2.0 * math.sqrt(d)), d)
            out.append(_check("lemma7", "series", f"d={d} beta={beta:g} two-beta", -abs(value - 2.0 * beta), 1e-12))
    return out


def _random_cloud(rng: np.random.Generator, size: int, equal: bool = False) -> PointCloudDistribution:
    points = rng.normal(size=size) * 1.5
    weights = np.full(size, 1.0 / size) if equal else rng.dirichlet(np.ones(size))
    return PointCloudDistribution(points=points, weights=weights)


def lemma10_checks(seed: int = 0, tolerance: float = 1e-6) -> list[CheckResult]:
    """Smoothed KL against W2²/(2σ²), smoothed Pinsker, and the transport oracles."""
    out = []
    for sigma in SMOOTHING_SIGMAS:
        report = verify_lemma10(point_mass(0.0), point_mass(1.0), sigma)
        exact = 1.0 / (2.0 * sigma**2)
        out.append(_check("lemma10", "point-masses", f"sigma={sigma:g} equality", -abs(report.slack), tolerance))
        out.append(_check("lemma10", "point-masses", f"sigma={sigma:g} kl", -abs(report.smoothed_kl - exact), tolerance))

        rng = stream(seed, "lemma10", f"clouds:{sigma:g}")
        for k in range(CLOUD_PAIRS):
            Q, Qp = _random_cloud(rng, 4), _random_cloud(rng, 4)
            report = verify_lemma10(Q, Qp, sigma)
            out.append(_check("lemma10", f"clouds-{k}", f"sigma={sigma:g}", report.slack, tolerance))
            tv = smoothed_tv(Q, Qp, sigma).value
            out.append(_check("lemma10", f"clouds-{k}", f"sigma={sigma:g} pinsker", report.smoothed_kl - 0.5 * tv**2, tolerance))

    rng = stream(seed, "lemma10", "permutation")
    for size in range(2, 7):
        Q, Qp = _random_cloud(rng, size, equal=True), _random_cloud(rng, size, equal=True)
        defect = abs(w2_exact(Q, Qp)[0] - w2_permutation_oracle(Q, Qp))
        out.append(_check("lemma10", f"permutation-{size}", "w2", -defect, 1e-9))

    for m1, s1, m2, s2 in ((0.0, 1.0, 1.0, 2.0), (-0.5, 0.3, 0.5, 0.3), (2.0, 1.5, 0.0, 0.5)):
        discrete = w2_exact(gaussian_quantile_cloud(m1, s1, GAUSSIAN_CLOUD), gaussian_quantile_cloud(m2, s2, GAUSSIAN_CLOUD))[0]
        closed = w2_gaussian(m1, s1, m2, s2)
        out.append(_check("lemma10", "gaussian", f"m1={m1:g} s1={s1:g} m2={m2:g} s2={s2:g}", -abs(discrete - closed), GAUSSIAN_TOL))
    return out


def convexity_checks(seed: int = 0, trials: int = CONVEXITY_TRIALS) -> list[CheckResult]:
    """Certificate audits for every divergence family on skewed bases."""
    out = []
    for j, base in enumerate(CONVEXITY_BASES):
        embedding = np.arange(len(base), dtype=float)[:, None]
        for name in CONVEXITY_FAMILIES:
            spec = make_divergence(name, base, embedding=embedding)
            report = verify_convexity(spec, trials=trials, seed=seed, scenario_id=f"base-{j}")
            params = f"alpha={report.alpha:.6g} norm={report.norm} trials={report.trials}"
            out.append(_check("convexity", f"{name}@base-{j}", params, report.min_slack, report.tolerance))
    return out


SCENARIO_SUITES = {
    "thm2": _thm2,
    "lemma3": _lemma3,
    "lemma6": _lemma6,
    "ghost": _ghost,
    "ftrl": _ftrl,
    "dv": _dv,
}
GLOBAL_SUITES = {
    "lemma7": lemma7_checks,
    "lemma10": lemma10_checks,
    "convexity": convexity_checks,
}


def run_suite(name: str, seed: int = 0, scenarios: list[Scenario] | None = None, threads: int | None = None) -> list[CheckResult]:
    """Run one suite (or ``all``) and return its checks in a fixed order."""
    if name == "all":
        return [check for suite in SUITES for check in run_suite(suite, seed, scenarios, threads)]
    if name in GLOBAL_SUITES:
        results = GLOBAL_SUITES[name](seed)
    elif name in SCENARIO_SUITES:
        runner = SCENARIO_SUITES[name]
        scenarios = battery(seed) if scenarios is None else scenarios
        chunks = ordered_map(lambda s: runner(s, seed), scenarios, threads)
        results = [check for chunk in chunks for check in chunk]
    else:
        raise ConfigError(f"unknown suite '{name}' (choose from all, {', '.join(SUITES)})")
    failed = [r for r in results if not r.passed]
    for r in failed:
        logger.info("%s violation: %s %s slack=%.3g", r.suite, r.instance, r.parameters, r.slack)
    logger.info("suite %s: %d checks, %d violations", name, len(results), len(failed))
    return results
