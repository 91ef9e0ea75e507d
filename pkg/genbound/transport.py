"""Wasserstein-2 transport, Gaussian smoothing and smoothed divergences."""

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import ot
from scipy.integrate import trapezoid
from scipy.special import logsumexp
from scipy.stats import norm

from genbound.config import MAX_OT_POINTS, load_config
from genbound.errors import ConfigError, EnumerationLimitError, QuadratureError
from genbound.probability import normalized
from genbound.utils.display import get_logger

logger = get_logger(__name__)

PERMUTATION_ORACLE_POINTS = 6


@dataclass(frozen=True, eq=False)
class PointCloudDistribution:
    """Finitely supported distribution on R^d."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if not np.all(np.isfinite(points)):
            raise ConfigError("point cloud coordinates must be finite")
        weights = normalized(self.weights, "point cloud weights")
        if weights.shape != (points.shape[0],):
            raise ConfigError("one weight per point")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points


@dataclass(frozen=True, eq=False)
class TransportPlan:
    matrix: np.ndarray
    cost: float


class QuadratureResult(NamedTuple):
    value: float
    error: float
    converged: bool

    def __float__(self):
        return self.value


class MonteCarloResult(NamedTuple):
    value: float
    stderr: float
    samples: int


class SmoothedTransportReport(NamedTuple):
    w2_squared: float
    smoothed_kl: float
    bound: float
    slack: float


def point_mass(x) -> PointCloudDistribution:
    return PointCloudDistribution(points=np.atleast_2d(np.asarray(x, dtype=float)), weights=np.ones(1))


def _squared_costs(Q: PointCloudDistribution, Qp: PointCloudDistribution) -> np.ndarray:
    diff = Q.points[:, None, :] - Qp.points[None, :, :]
    return np.sum(diff**2, axis=-1)


def w2_exact(Q: PointCloudDistribution, Q_prime: PointCloudDistribution) -> tuple[float, TransportPlan]:
    """Exact squared W2 and an optimal plan (network simplex)."""
    for cloud in (Q, Q_prime):
        if cloud.points.shape[0] > MAX_OT_POINTS:
            raise EnumerationLimitError("transport support", cloud.points.shape[0], MAX_OT_POINTS)
    if Q.dimension != Q_prime.dimension:
        raise ConfigError("point clouds differ in dimension")
    costs = _squared_costs(Q, Q_prime)
    plan = ot.emd(Q.weights, Q_prime.weights, costs)
    cost = float(np.sum(plan * costs))
    return cost, TransportPlan(matrix=plan, cost=cost)


def w2_permutation_oracle(Q: PointCloudDistribution, Q_prime: PointCloudDistribution) -> float:
    """Brute-force minimum over permutation couplings of equal-weight clouds."""
    k = Q.points.shape[0]
    if k != Q_prime.points.shape[0] or k > PERMUTATION_ORACLE_POINTS:
        raise EnumerationLimitError("permutation oracle points", k, PERMUTATION_ORACLE_POINTS)
    costs = _squared_costs(Q, Q_prime)
    rows = np.arange(k)
    return min(float(costs[rows, list(perm)].mean()) for perm in itertools.permutations(range(k)))


def w2_sorted_1d(Q: PointCloudDistribution, Q_prime: PointCloudDistribution) -> float:
    """Squared W2 on the line via the monotone (quantile) coupling."""
    if Q.dimension != 1 or Q_prime.dimension != 1:
        raise ConfigError("monotone coupling needs one-dimensional clouds")
    order_a = np.argsort(Q.points[:, 0], kind="stable")
    order_b = np.argsort(Q_prime.points[:, 0], kind="stable")
    xa, wa = Q.points[order_a, 0], Q.weights[order_a]
    xb, wb = Q_prime.points[order_b, 0], Q_prime.weights[order_b]
    ca, cb = np.cumsum(wa), np.cumsum(wb)
    ca[-1] = cb[-1] = 1.0
    breaks = np.union1d(ca, cb)
    lengths = np.diff(np.concatenate([[0.0], breaks]))
    mids = breaks - lengths / 2
    ia = np.minimum(np.searchsorted(ca, mids), len(xa) - 1)
    ib = np.minimum(np.searchsorted(cb, mids), len(xb) - 1)
    return float(np.sum(lengths * (xa[ia] - xb[ib]) ** 2))


def w2_gaussian(m1: float, s1: float, m2: float, s2: float) -> float:
    """Squared W2 between N(m1, s1²) and N(m2, s2²)."""
    if s1 <= 0 or s2 <= 0:
        raise ConfigError("Gaussian scales must be positive")
    return (m1 - m2) ** 2 + (s1 - s2) ** 2


def gaussian_quantile_cloud(mean: float, scale: float, size: int) -> PointCloudDistribution:
    """Equal-weight midpoint-quantile discretization with matched variance."""
    z = norm.ppf((np.arange(size) + 0.5) / size)
    z /= np.sqrt(np.mean(z**2))
    return PointCloudDistribution(points=mean + scale * z, weights=np.full(size, 1.0 / size))


def gaussian_kl_1d(m1: float, v1: float, m2: float, v2: float) -> float:
    """KL(N(m1, v1) ‖ N(m2, v2)) for variances v1, v2."""
    return 0.5 * (math.log(v2 / v1) + (v1 + (m1 - m2) ** 2) / v2 - 1.0)


def _quadrature_settings() -> dict:
    return load_config()["quadrature"]


def grid_for(points: np.ndarray, sigma: float, halvings: int = 0, settings: dict | None = None) -> np.ndarray:
    """Uniform grid over [min − window·σ, max + window·σ] with step σ·fraction/2^halvings."""
    settings = settings or _quadrature_settings()
    lo = float(np.min(points)) - settings["window"] * sigma
    hi = float(np.max(points)) + settings["window"] * sigma
    step = sigma * settings["step_fraction"] / 2**halvings
    count = int(math.ceil((hi - lo) / step)) + 1
    return np.linspace(lo, lo + step * (count - 1), count)


def log_mixture_density(x: np.ndarray, points: np.ndarray, weights: np.ndarray, sigma: float) -> np.ndarray:
    """log G_σQ at 1-D grid points x."""
    keep = weights > 0
    logk = norm.logpdf(x[:, None], loc=points[keep, 0][None, :], scale=sigma)
    return logsumexp(logk, b=weights[keep][None, :], axis=1)


class SmoothedDensity:
    """Evaluable density of G_σQ = ∫ N(w, σ²I) dQ(w)."""

    def __init__(self, Q: PointCloudDistribution, sigma: float):
        if sigma <= 0:
            raise ConfigError("sigma must be positive")
        self.Q = Q
        self.sigma = sigma

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = self.Q.dimension
        pts = x.reshape(-1, d)
        sq = np.sum((pts[:, None, :] - self.Q.points[None, :, :]) ** 2, axis=-1)
        dens = np.exp(-sq / (2 * self.sigma**2)) / (2 * np.pi * self.sigma**2) ** (d / 2)
        values = dens @ self.Q.weights
        return values.reshape(x.shape[:-1] if d > 1 else x.shape)

    def mean(self) -> np.ndarray:
        return self.Q.mean()

    def integral(self) -> float:
        if self.Q.dimension != 1:
            raise ConfigError("quadrature is one-dimensional")
        x = grid_for(self.Q.points, self.sigma)
        return float(trapezoid(self(x), x))


def gaussian_smooth(Q: PointCloudDistribution, sigma: float) -> SmoothedDensity:
    return SmoothedDensity(Q, sigma)


def _refine(evaluate, points: np.ndarray, sigma: float, what: str) -> QuadratureResult:
    """Halve the step until two successive values agree to the tolerance."""
    settings = _quadrature_settings()
    tol = settings["richardson_tol"]
    previous = evaluate(grid_for(points, sigma, 0, settings))
    error = math.inf
    for halving in range(1, settings["max_halvings"] + 1):
        current = evaluate(grid_for(points, sigma, halving, settings))
        error = abs(current - previous)
        previous = current
        if error < tol:
            return QuadratureResult(current, error, True)
    logger.warning("%s quadrature stopped at achieved tolerance %.3g", what, error)
    return QuadratureResult(previous, error, False)


def _check_1d(*clouds):
    for cloud in clouds:
        if cloud.dimension != 1:
            raise QuadratureError("quadrature path is one-dimensional; use smoothed_kl_mc for d > 1")


def smoothed_kl(Q: PointCloudDistribution, Q_prime: PointCloudDistribution, sigma: float) -> QuadratureResult:
    """D_σ(Q‖Q') = KL(G_σQ ‖ G_σQ') by trapezoid quadrature."""
    _check_1d(Q, Q_prime)
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    points = np.concatenate([Q.points, Q_prime.points])

    def evaluate(x):
        la = log_mixture_density(x, Q.points, Q.weights, sigma)
        lb = log_mixture_density(x, Q_prime.points, Q_prime.weights, sigma)
        return float(trapezoid(np.exp(la) * (la - lb), x))

    result = _refine(evaluate, points, sigma, "smoothed KL")
    return result._replace(value=max(result.value, 0.0))


def abs_trapezoid(u: np.ndarray, x: np.ndarray, axis: int = 0) -> np.ndarray:
    """∫|u| on a uniform grid, exact for piecewise-linear u across sign changes."""
    u = np.moveaxis(u, axis, 0)
    step = x[1] - x[0]
    a, b = u[:-1], u[1:]
    plain = (np.abs(a) + np.abs(b)) / 2
    denom = np.abs(a) + np.abs(b)
    with np.errstate(invalid="ignore", divide="ignore"):
        crossing = np.where(denom > 0, (a**2 + b**2) / (2 * denom), 0.0)
    cells = np.where(a * b < 0, crossing, plain)
    return step * cells.sum(axis=0)


def smoothed_tv_signed(points: np.ndarray, delta: np.ndarray, sigma: float) -> QuadratureResult:
    """‖G_σ δ‖_TV for a signed measure δ on 1-D points."""
    points = np.asarray(points, dtype=float).reshape(len(delta), -1)
    if points.shape[1] != 1:
        raise QuadratureError("quadrature path is one-dimensional")
    delta = np.asarray(delta, dtype=float)

    def evaluate(x):
        dens = norm.pdf(x[:, None], loc=points[:, 0][None, :], scale=sigma)
        return float(abs_trapezoid(dens @ delta, x))

    return _refine(evaluate, points, sigma, "smoothed TV")


def smoothed_tv(Q: PointCloudDistribution, Q_prime: PointCloudDistribution, sigma: float) -> QuadratureResult:
    """‖Q − Q'‖_σ = ∫|G_σQ − G_σQ'|."""
    _check_1d(Q, Q_prime)
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    points = np.concatenate([Q.points, Q_prime.points])
    delta = np.concatenate([Q.weights, -Q_prime.weights])
    return smoothed_tv_signed(points, delta, sigma)


def smoothed_kl_mc(
    Q: PointCloudDistribution,
    Q_prime: PointCloudDistribution,
    sigma: float,
    rng: np.random.Generator,
    samples: int | None = None,
) -> MonteCarloResult:
    """Monte Carlo D_σ(Q‖Q') in any dimension, with its standard error."""
    if samples is None:
        samples = load_config()["monte_carlo"]["samples"]
    d = Q.dimension
    idx = rng.choice(len(Q.weights), size=samples, p=Q.weights)
    x = Q.points[idx] + sigma * rng.standard_normal((samples, d))

    def log_density(cloud):
        keep = cloud.weights > 0
        sq = np.sum((x[:, None, :] - cloud.points[keep][None, :, :]) ** 2, axis=-1)
        logk = -sq / (2 * sigma**2) - 0.5 * d * math.log(2 * math.pi * sigma**2)
        return logsumexp(logk, b=cloud.weights[keep][None, :], axis=1)

    ratios = log_density(Q) - log_density(Q_prime)
    return MonteCarloResult(float(ratios.mean()), float(ratios.std(ddof=1) / math.sqrt(samples)), samples)


def verify_lemma10(Q: PointCloudDistribution, Q_prime: PointCloudDistribution, sigma: float) -> SmoothedTransportReport:
    """Slack of D_σ(Q‖Q') ≤ W2²(Q, Q')/(2σ²)."""
    w2, _ = w2_exact(Q, Q_prime)
    kl = smoothed_kl(Q, Q_prime, sigma).value
    bound = w2 / (2 * sigma**2)
    return SmoothedTransportReport(w2_squared=w2, smoothed_kl=kl, bound=bound, slack=bound - kl)
