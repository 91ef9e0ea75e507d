"""Conditional dependence measures h, their lift H(P) = E_S h(P_{|S}),
subgradients, Bregman gaps and strong-convexity certificates.

Every evaluator works on columns: a hypothesis distribution is a vector
of shape (|W|,), and a stack of them is an array whose second-to-last axis
indexes hypotheses. Infinite values are returned as ``inf``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, rel_entr
from scipy.stats import norm as gaussian

from genbound.errors import BoundarySubgradientError, ConfigError, UnknownFamilyError
from genbound.norms import NormSpec, column_norms, make_norm
from genbound.probability import JointDistribution, normalized
from genbound.utils.display import get_logger
from genbound.utils.rng import stream

logger = get_logger(__name__)

FAMILIES = (
    "kl", "chi2", "pnorm2", "pnormp", "hellinger", "tsallis",
    "itakura-saito", "squared-euclidean", "smoothed-kl",
)
PHI = {"kl": "x-log-x", "chi2": "pearson", "hellinger": "hellinger", "tsallis": "tsallis"}
PSI = {"itakura-saito": "neg-log", "squared-euclidean": "half-square"}

# families whose subgradient diverges at a zero density ratio
ZERO_RATIO_SINGULAR = {"kl", "hellinger", "itakura-saito"}
RATIO_CAPPED = {"hellinger", "tsallis"}
RATIO_FLOOR = 1e-300

VIOLATION_TOL = 1e-9
SMOOTHED_VIOLATION_TOL = 1e-6
MAX_REJECTION_ROUNDS = 1000


@dataclass(frozen=True)
class DivergenceId:
    """A parsed registry string, before a base distribution is attached."""

    family: str
    p: float | None = None
    ratio_bound: float | None = None
    sigma: float | None = None

    def __str__(self):
        if self.family == "pnorm2" or self.family == "pnormp":
            return f"{self.family}:{self.p:g}"
        if self.family == "hellinger":
            return f"hellinger:{self.ratio_bound:g}"
        if self.family == "tsallis":
            return f"tsallis:{self.p:g}:{self.ratio_bound:g}"
        if self.family == "smoothed-kl":
            return f"smoothed-kl:{self.sigma:g}"
        return self.family


def _number(text: str, what: str, original: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise ConfigError(f"bad {what} in '{original}'") from e


def parse_divergence(text: str) -> DivergenceId:
    """Parse ``kl``, ``chi2``, ``pnorm2:p``, ``pnormp:p``, ``hellinger:M``,
    ``tsallis:p:M``, ``itakura-saito``, ``squared-euclidean`` or ``smoothed-kl:sigma``."""
    family, *args = str(text).split(":")
    if family not in FAMILIES:
        raise UnknownFamilyError(f"unknown divergence '{text}' (choose from {', '.join(FAMILIES)})")
    expected = {"pnorm2": 1, "pnormp": 1, "hellinger": 1, "tsallis": 2, "smoothed-kl": 1}.get(family, 0)
    if len(args) != expected:
        raise ConfigError(f"'{family}' takes {expected} parameter(s), got '{text}'")

    if family == "pnorm2":
        p = _number(args[0], "exponent", text)
        if not 1 < p <= 2:
            raise ConfigError("pnorm2 needs p in (1, 2]")
        return DivergenceId(family, p=p)
    if family == "pnormp":
        p = _number(args[0], "exponent", text)
        if p < 2:
            raise ConfigError("pnormp needs p >= 2")
        return DivergenceId(family, p=p)
    if family == "hellinger":
        M = _number(args[0], "ratio bound", text)
        if M < 1:
            raise ConfigError("the density-ratio bound M must be at least 1")
        return DivergenceId(family, ratio_bound=M)
    if family == "tsallis":
        p = _number(args[0], "exponent", text)
        M = _number(args[1], "ratio bound", text)
        if not 1 < p <= 2:
            raise ConfigError("tsallis needs p in (1, 2]")
        if M < 1:
            raise ConfigError("the density-ratio bound M must be at least 1")
        return DivergenceId(family, p=p, ratio_bound=M)
    if family == "smoothed-kl":
        sigma = _number(args[0], "sigma", text)
        if sigma <= 0:
            raise ConfigError("sigma must be positive")
        return DivergenceId(family, sigma=sigma)
    return DivergenceId(family)


@dataclass(frozen=True, eq=False)
class SmoothingGrid:
    """Trapezoid grid carrying the Gaussian kernel of every hypothesis."""

    x: np.ndarray
    weights: np.ndarray
    log_kernel: np.ndarray
    kernel: np.ndarray


def smoothing_grid(embedding: np.ndarray, sigma: float) -> SmoothingGrid:
    from genbound.transport import grid_for

    x = grid_for(embedding, sigma)
    weights = np.full(len(x), x[1] - x[0])
    weights[[0, -1]] /= 2
    log_kernel = gaussian.logpdf(x[:, None], loc=embedding[:, 0][None, :], scale=sigma)
    return SmoothingGrid(x=x, weights=weights, log_kernel=log_kernel, kernel=np.exp(log_kernel))


@dataclass(frozen=True, eq=False)
class DivergenceSpec:
    """A dependence measure h relative to the base Q0 = P_{W_n}."""

    family: str
    base: np.ndarray
    p: float | None = None
    ratio_bound: float | None = None
    reference: np.ndarray | None = None
    sigma: float | None = None
    embedding: np.ndarray | None = None
    grid: SmoothingGrid | None = None
    name: str = ""

    def __str__(self):
        return self.name

    @property
    def phi(self) -> str | None:
        return PHI.get(self.family)

    @property
    def psi(self) -> str | None:
        return PSI.get(self.family)

    @property
    def nu(self) -> np.ndarray:
        """Reference measure of the Bregman families (counting by default)."""
        return np.ones(len(self.base)) if self.reference is None else self.reference


def make_divergence(text: str | DivergenceId, base, embedding=None, reference=None) -> DivergenceSpec:
    """Attach a base distribution (and embedding, for smoothed KL) to a registry id."""
    ident = parse_divergence(text) if isinstance(text, str) else text
    base = normalized(base, "divergence base Q0")
    ref = None
    if reference is not None:
        ref = np.asarray(reference, dtype=float)
        if ref.shape != base.shape or np.any(ref <= 0):
            raise ConfigError("reference measure must be positive, one entry per hypothesis")
    grid = emb = None
    if ident.family == "smoothed-kl":
        if embedding is None:
            raise ConfigError("smoothed-kl needs a hypothesis embedding")
        emb = np.asarray(embedding, dtype=float)
        if emb.ndim == 1:
            emb = emb[:, None]
        if emb.shape != (len(base), 1):
            raise ConfigError("smoothed-kl is evaluated by quadrature and needs a one-dimensional embedding")
        grid = smoothing_grid(emb, ident.sigma)
    return DivergenceSpec(
        family=ident.family,
        base=base,
        p=ident.p,
        ratio_bound=ident.ratio_bound,
        reference=ref,
        sigma=ident.sigma,
        embedding=emb,
        grid=grid,
        name=str(ident),
    )


@dataclass(frozen=True)
class ConvexityCertificate:
    alpha: float
    norm: str
    regime: str
    exponent: float = 2.0


def certificate(spec: DivergenceSpec) -> ConvexityCertificate:
    """(α, norm, regime) for which h is strongly (or p-uniformly) convex."""
    family = spec.family
    if family == "kl":
        return ConvexityCertificate(1.0, "tv", "strong")
    if family == "chi2":
        return ConvexityCertificate(2.0, "lp:2:q0", "strong")
    if family == "pnorm2":
        return ConvexityCertificate(2.0 * (spec.p - 1.0), f"lp:{spec.p:g}:q0", "strong")
    if family == "pnormp":
        # Lindqvist: |b|^p ≥ |a|^p + p|a|^{p−2}a(b−a) + |b−a|^p/(2^{p−1}−1)
        alpha = 2.0 / (2.0 ** (spec.p - 1.0) - 1.0)
        return ConvexityCertificate(alpha, f"lp:{spec.p:g}:q0", "p-uniform", spec.p)
    if family == "hellinger":
        return ConvexityCertificate(spec.ratio_bound**-1.5 / 2.0, "lp:2:q0", "strong")
    if family == "tsallis":
        return ConvexityCertificate(spec.p * spec.ratio_bound ** (spec.p - 2.0), "lp:2:q0", "strong")
    if family == "itakura-saito":
        # ψ''(x) = 1/x² on densities x ≤ 1/ν
        return ConvexityCertificate(min(1.0, float(spec.nu.min())) ** 2, "lp:2:nu", "strong")
    if family == "squared-euclidean":
        return ConvexityCertificate(1.0, "lp:2:nu", "strong")
    if family == "smoothed-kl":
        return ConvexityCertificate(1.0, f"smoothed-tv:{spec.sigma:g}", "strong")
    raise UnknownFamilyError(f"no certificate for '{family}'")


def certificate_norm(spec: DivergenceSpec) -> NormSpec:
    return make_norm(certificate(spec).norm, embedding=spec.embedding, reference=spec.reference)


def _smoothed_log_density(grid: SmoothingGrid, Q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logQ = np.log(Q)
    return logsumexp(grid.log_kernel[:, :, None] + logQ[..., None, :, :], axis=-2)


def _smoothed_terms(spec: DivergenceSpec, Q: np.ndarray):
    grid = spec.grid
    la = _smoothed_log_density(grid, Q)
    l0 = _smoothed_log_density(grid, spec.base[:, None])
    return grid, la, l0


def h_columns(spec: DivergenceSpec, Q) -> np.ndarray:
    """h of every column of Q (hypotheses on axis −2)."""
    Q = np.asarray(Q, dtype=float)
    family = spec.family
    if family == "smoothed-kl":
        grid, la, l0 = _smoothed_terms(spec, Q)
        integrand = np.where(np.isfinite(la), np.exp(la) * (la - l0), 0.0)
        return np.sum(grid.weights[:, None] * integrand, axis=-2)
    if family == "squared-euclidean":
        return np.sum((Q - spec.base[:, None]) ** 2 / (2.0 * spec.nu[:, None]), axis=-2)

    support = spec.base > 0
    q0 = spec.base[support][:, None]
    Qs = Q[..., support, :]
    off = np.any(Q[..., ~support, :] > 0, axis=-2)
    r = Qs / q0
    with np.errstate(divide="ignore", invalid="ignore"):
        if family == "kl":
            values = rel_entr(Qs, q0).sum(axis=-2)
        elif family == "chi2":
            values = np.sum(q0 * (r - 1.0) ** 2, axis=-2)
        elif family == "pnormp":
            values = np.sum(q0 * np.abs(r - 1.0) ** spec.p, axis=-2)
        elif family == "pnorm2":
            values = np.sum(q0 * np.abs(r - 1.0) ** spec.p, axis=-2) ** (2.0 / spec.p)
        elif family == "hellinger":
            values = np.sum((np.sqrt(Qs) - np.sqrt(q0)) ** 2, axis=-2)
        elif family == "tsallis":
            values = np.sum(q0 * (r**spec.p - 1.0), axis=-2) / (spec.p - 1.0)
        elif family == "itakura-saito":
            nu = spec.nu[support][:, None]
            values = np.sum(nu * (r - np.log(r) - 1.0), axis=-2)
        else:
            raise UnknownFamilyError(f"unknown divergence family '{family}'")
    return np.where(off, np.inf, values)


def h_eval(spec: DivergenceSpec, Q) -> float:
    """h(Q); +inf off the family's domain."""
    return float(h_columns(spec, np.asarray(Q, dtype=float)[:, None])[0])


def gradient_columns(spec: DivergenceSpec, Q) -> np.ndarray:
    """Raw gradient of h at every column of Q, same shape as Q.

    Zero ratios are floored at 1e-300 so the result stays finite; entries
    outside the base support are zero.
    """
    Q = np.asarray(Q, dtype=float)
    family = spec.family
    if family == "smoothed-kl":
        grid, la, l0 = _smoothed_terms(spec, Q)
        return np.einsum("g,gk,...gd->...kd", grid.weights, grid.kernel, la - l0 + 1.0)
    if family == "squared-euclidean":
        return (Q - spec.base[:, None]) / spec.nu[:, None]

    support = spec.base > 0
    q0 = spec.base[support][:, None]
    r = Q[..., support, :] / q0
    p = spec.p
    if family == "kl":
        g = np.log(np.maximum(r, RATIO_FLOOR)) + 1.0
    elif family == "chi2":
        g = 2.0 * (r - 1.0)
    elif family == "pnormp":
        g = p * np.abs(r - 1.0) ** (p - 1.0) * np.sign(r - 1.0)
    elif family == "pnorm2":
        N = np.sum(q0 * np.abs(r - 1.0) ** p, axis=-2, keepdims=True) ** (1.0 / p)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(N > 0, 2.0 * N ** (2.0 - p), 0.0)
        g = scale * np.abs(r - 1.0) ** (p - 1.0) * np.sign(r - 1.0)
    elif family == "hellinger":
        g = 1.0 - np.maximum(r, RATIO_FLOOR) ** -0.5
    elif family == "tsallis":
        g = p * r ** (p - 1.0) / (p - 1.0)
    elif family == "itakura-saito":
        nu = spec.nu[support][:, None]
        g = (nu / q0) * (1.0 - 1.0 / np.maximum(r, RATIO_FLOOR))
    else:
        raise UnknownFamilyError(f"unknown divergence family '{family}'")
    out = np.zeros(Q.shape)
    out[..., support, :] = g
    return out


def h_subgradient(spec: DivergenceSpec, Q) -> np.ndarray:
    """Canonical subgradient of h at Q: the gradient minus its Q0-mean."""
    Q = normalized(Q, "hypothesis distribution")
    if not math.isfinite(h_eval(spec, Q)):
        raise BoundarySubgradientError(f"{spec}: h is infinite at Q")
    if spec.family in ZERO_RATIO_SINGULAR:
        support = spec.base > 0
        if np.any(Q[support] == 0):
            raise BoundarySubgradientError(f"{spec}: subgradient diverges where dQ/dQ0 = 0")
    g = gradient_columns(spec, Q[:, None])[:, 0]
    return g - spec.base @ g


def bregman_h(spec: DivergenceSpec, Q, Q_prime) -> float:
    """D_h(Q‖Q') = h(Q) − h(Q') − ⟨Q − Q', g(Q')⟩."""
    Q = np.asarray(Q, dtype=float)
    Q_prime = np.asarray(Q_prime, dtype=float)
    g = h_subgradient(spec, Q_prime)
    value = h_eval(spec, Q)
    if math.isinf(value):
        return math.inf
    return value - h_eval(spec, Q_prime) - float((Q - Q_prime) @ g)


def H_columns(spec: DivergenceSpec, conditionals: np.ndarray, probs: np.ndarray) -> float:
    """Σ_s μ^n(s)·h(P_{|s}) over positive-mass columns."""
    return float(np.sum(probs * h_columns(spec, conditionals)))


def H_eval(spec: DivergenceSpec, P: JointDistribution) -> float:
    """H(P) = E_S h(P_{|S}); for KL this is D(P ‖ P_{W}⊗μ^n) when Q0 = P_W."""
    pos = P.law.positive
    conditionals = P.table[:, pos] / P.law.probs[pos]
    return H_columns(spec, conditionals, P.law.probs[pos])


def single_letter_conditionals(P: JointDistribution, i: int) -> tuple[np.ndarray, np.ndarray]:
    """P_{|Z_i=z} as (|W|, |Z|) columns, and the mask of positive-mass z."""
    space = P.law.space
    m, n = space.size, P.law.n
    shaped = P.table.reshape((P.num_hypotheses,) + (m,) * n)
    others = tuple(axis for axis in range(1, n + 1) if axis != i)
    marginal = shaped.sum(axis=others)
    pos = space.mu > 0
    out = np.full(marginal.shape, np.nan)
    out[:, pos] = marginal[:, pos] / space.mu[pos]
    return out, pos


@dataclass(frozen=True)
class SingleLetterH:
    per_coordinate: tuple[float, ...]

    @property
    def average(self) -> float:
        return float(np.mean(self.per_coordinate))

    @property
    def total(self) -> float:
        return float(np.sum(self.per_coordinate))


def single_letter_H(spec: DivergenceSpec, P: JointDistribution) -> SingleLetterH:
    """E_{Z_i} h(P_{|Z_i}) for every coordinate i = 1..n."""
    values = []
    mu = P.law.space.mu
    for i in range(1, P.law.n + 1):
        cond, pos = single_letter_conditionals(P, i)
        values.append(H_columns(spec, cond[:, pos], mu[pos]))
    return SingleLetterH(tuple(values))


@dataclass(frozen=True)
class ConvexityReport:
    divergence: str
    alpha: float
    norm: str
    regime: str
    trials: int
    rejected: int
    min_slack: float
    violations: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _sample_pairs(spec: DivergenceSpec, trials: int, rng: np.random.Generator):
    support = np.flatnonzero(spec.base > 0)
    k = len(spec.base)
    capped = spec.family in RATIO_CAPPED
    kept_a, kept_b = [], []
    rejected = 0
    for _ in range(MAX_REJECTION_ROUNDS):
        need = trials - sum(len(a) for a in kept_a)
        if need <= 0:
            break
        a = np.zeros((need, k))
        b = np.zeros((need, k))
        a[:, support] = rng.dirichlet(np.ones(len(support)), size=need)
        b[:, support] = rng.dirichlet(np.ones(len(support)), size=need)
        if capped:
            cap = spec.ratio_bound * spec.base
            ok = np.all(a <= cap, axis=1) & np.all(b <= cap, axis=1)
            rejected += int(np.sum(~ok))
            a, b = a[ok], b[ok]
        kept_a.append(a)
        kept_b.append(b)
    Q = np.concatenate(kept_a)[:trials]
    Qp = np.concatenate(kept_b)[:trials]
    if len(Q) < trials:
        logger.warning("%s: only %d of %d ratio-capped pairs accepted", spec, len(Q), trials)
    if rejected:
        logger.info("%s: rejected %d samples above the ratio cap", spec, rejected)
    return Q, Qp, rejected


def _certificate_norms(spec: DivergenceSpec, delta: np.ndarray) -> np.ndarray:
    if spec.family == "smoothed-kl":
        # same trapezoid grid as h itself
        return np.abs(spec.grid.kernel @ delta).T @ spec.grid.weights
    return column_norms(certificate_norm(spec), delta, spec.base)


def convexity_slacks(spec: DivergenceSpec, Q: np.ndarray, Q_prime: np.ndarray) -> np.ndarray:
    """Bregman gap minus (α/2)‖Q − Q'‖^exponent for stacked pairs (rows)."""
    cert = certificate(spec)
    A, B = Q.T, Q_prime.T
    gaps = h_columns(spec, A) - h_columns(spec, B) - np.sum((A - B) * gradient_columns(spec, B), axis=0)
    norms = _certificate_norms(spec, A - B)
    return gaps - cert.alpha / 2.0 * norms**cert.exponent


def verify_convexity(spec: DivergenceSpec, trials: int = 1000, seed: int = 0, scenario_id: str = "convexity") -> ConvexityReport:
    """Audit the certificate on seeded Dirichlet(1) pairs over the base support."""
    cert = certificate(spec)
    rng = stream(seed, scenario_id, f"convexity:{spec.name}")
    Q, Qp, rejected = _sample_pairs(spec, trials, rng)
    slacks = convexity_slacks(spec, Q, Qp)
    tol = SMOOTHED_VIOLATION_TOL if spec.family == "smoothed-kl" else VIOLATION_TOL
    return ConvexityReport(
        divergence=spec.name,
        alpha=cert.alpha,
        norm=cert.norm,
        regime=cert.regime,
        trials=len(Q),
        rejected=rejected,
        min_slack=float(slacks.min()) if len(slacks) else math.inf,
        violations=int(np.sum(slacks < -tol)),
        tolerance=tol,
    )


def mutual_information_chain(P: JointDistribution) -> tuple[float, float]:
    """(Σ_i I(W; Z_i), I(W; S)) for a joint with KL against its own W-marginal."""
    spec = make_divergence("kl", P.hypothesis_marginal())
    return single_letter_H(spec, P).total, H_eval(spec, P)

