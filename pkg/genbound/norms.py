"""Norms on signed measures over hypotheses and their dual norms on functions.

Registry strings: ``tv``, ``lp:p:q0``, ``lp:p:nu``, ``smoothed-tv:sigma`` and
``lifted:<inner>``. TV follows the total-absolute-mass convention, so Pinsker
reads D ≥ ½‖·‖²_TV.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize_scalar
from scipy.stats import norm as gaussian

from genbound.config import MAX_LP_SUPPORT
from genbound.errors import (
    AbsoluteContinuityError,
    ConfigError,
    DivergentSeriesError,
    EnumerationLimitError,
    UnknownFamilyError,
)
from genbound.probability import DatasetLaw, LossTable
from genbound.utils.display import get_logger

logger = get_logger(__name__)

NORMS = ("tv", "lp", "smoothed-tv", "lifted")

LP_GRID_STEP = 0.05
LP_GRID_WINDOW = 8.0


@dataclass(frozen=True)
class DerivativeBounds:
    """β_0, β_1, ... bounds on directional derivatives, or one uniform β."""

    beta: tuple[float, ...] | None = None
    uniform: float | None = None

    def __post_init__(self):
        if (self.beta is None) == (self.uniform is None):
            raise ConfigError("give either a beta sequence or a uniform beta")
        if self.beta is not None:
            beta = tuple(float(b) for b in self.beta)
            if any(b < 0 or not math.isfinite(b) for b in beta):
                raise ConfigError("derivative bounds must be finite and nonnegative")
            object.__setattr__(self, "beta", beta)
        elif self.uniform < 0:
            raise ConfigError("derivative bounds must be nonnegative")


@dataclass(frozen=True, eq=False)
class NormSpec:
    family: str
    p: float | None = None
    base: str = "q0"
    sigma: float | None = None
    embedding: np.ndarray | None = None
    reference: np.ndarray | None = None
    inner: "NormSpec | None" = None
    power: float = 2.0
    name: str = ""

    def __str__(self):
        return self.name or self.family

    @property
    def q(self) -> float:
        """Exponent conjugate to p."""
        return conjugate(self.p)


def conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def make_norm(text: str, embedding=None, reference=None, power: float | None = None) -> NormSpec:
    """Build a NormSpec from its registry string."""
    family, _, rest = str(text).partition(":")
    if family not in NORMS:
        raise UnknownFamilyError(f"unknown norm '{text}' (choose from {', '.join(NORMS)})")
    if family == "tv":
        if rest:
            raise ConfigError("tv takes no parameter")
        return NormSpec(family="tv", name="tv")
    if family == "lifted":
        if not rest:
            raise ConfigError("lifted norm needs an inner norm, e.g. lifted:tv")
        inner = make_norm(rest, embedding=embedding, reference=reference)
        if inner.family == "lifted":
            raise ConfigError("lifted norms do not nest")
        power = 2.0 if power is None else float(power)
        if power < 1:
            raise ConfigError("lift power must be at least 1")
        return NormSpec(family="lifted", inner=inner, power=power, name=str(text))
    if family == "lp":
        p_text, _, base = rest.partition(":")
        try:
            p = float(p_text)
        except ValueError as e:
            raise ConfigError(f"bad exponent in '{text}'") from e
        base = base or "q0"
        if p < 1:
            raise ConfigError("lp exponent must be at least 1")
        if base not in ("q0", "nu"):
            raise ConfigError(f"lp base must be q0 or nu, got '{base}'")
        ref = None if reference is None else np.asarray(reference, dtype=float)
        return NormSpec(family="lp", p=p, base=base, reference=ref, name=f"lp:{p:g}:{base}")
    try:
        sigma = float(rest)
    except ValueError as e:
        raise ConfigError(f"bad sigma in '{text}'") from e
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    if embedding is None:
        raise ConfigError("smoothed-tv needs a hypothesis embedding")
    emb = np.asarray(embedding, dtype=float)
    if emb.ndim == 1:
        emb = emb[:, None]
    return NormSpec(family="smoothed-tv", sigma=sigma, embedding=emb, name=f"smoothed-tv:{sigma:g}")


def _lp_weights(spec: NormSpec, size: int, Q0) -> np.ndarray:
    if spec.base == "nu":
        return np.ones(size) if spec.reference is None else spec.reference
    if Q0 is None:
        raise ConfigError(f"{spec} needs the base distribution Q0")
    return np.asarray(Q0, dtype=float)


def column_norms(spec: NormSpec, delta: np.ndarray, Q0=None) -> np.ndarray:
    """Norms of the columns of a (hypothesis, ...) array of signed measures."""
    if spec.family == "tv":
        return np.abs(delta).sum(axis=0)
    if spec.family == "lp":
        weights = _lp_weights(spec, delta.shape[0], Q0).reshape((-1,) + (1,) * (delta.ndim - 1))
        off = (weights <= 0) & (np.abs(delta) > 0)
        if np.any(off):
            raise AbsoluteContinuityError(f"{spec}: signed measure puts mass outside the base support")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(weights > 0, delta / weights, 0.0)
        if math.isinf(spec.p):
            return np.abs(ratio).max(axis=0)
        return np.sum(weights * np.abs(ratio) ** spec.p, axis=0) ** (1.0 / spec.p)
    if spec.family == "smoothed-tv":
        from genbound.transport import smoothed_tv_signed

        flat = delta.reshape(delta.shape[0], -1)
        values = [smoothed_tv_signed(spec.embedding, flat[:, j], spec.sigma).value for j in range(flat.shape[1])]
        return np.array(values).reshape(delta.shape[1:])
    raise UnknownFamilyError(f"no column norm for {spec}")


def column_duals(spec: NormSpec, f: np.ndarray, Q0=None) -> np.ndarray:
    if spec.family == "tv":
        return np.abs(f).max(axis=0)
    if spec.family == "lp":
        weights = _lp_weights(spec, f.shape[0], Q0).reshape((-1,) + (1,) * (f.ndim - 1))
        if math.isinf(spec.q):
            return np.where(weights > 0, np.abs(f), 0.0).max(axis=0)
        return np.sum(weights * np.abs(f) ** spec.q, axis=0) ** (1.0 / spec.q)
    raise UnknownFamilyError(f"no closed-form dual for {spec}")


def _lift(spec: NormSpec, table: np.ndarray, law: DatasetLaw, column_fn, exponent: float, Q0) -> float:
    if law is None:
        raise ConfigError("lifted norms need the dataset law")
    pos = law.positive
    columns = table[:, pos]
    if column_fn is column_norms:
        columns = columns / law.probs[pos]
    values = column_fn(spec.inner, columns, Q0)
    if math.isinf(exponent):
        return float(values.max(initial=0.0))
    return float(np.sum(law.probs[pos] * values**exponent) ** (1.0 / exponent))


def norm_eval(spec: NormSpec, delta, Q0=None, law: DatasetLaw | None = None) -> float:
    """‖δ‖ for a signed measure over hypotheses, or over joints when lifted.

    The lifted norm is (E_S ‖δ_{|S}‖^power)^{1/power} with δ_{|s} = δ(·, s)/μ^n(s).
    """
    delta = np.asarray(delta, dtype=float)
    if spec.family == "lifted":
        return _lift(spec, delta, law, column_norms, spec.power, Q0)
    return float(column_norms(spec, delta, Q0))


def dual_norm_eval(spec: NormSpec, f, Q0=None, law: DatasetLaw | None = None, bounds: DerivativeBounds | None = None) -> float:
    """‖f‖_* of a function on hypotheses (or on joints when lifted).

    TV gives max|f| and L_p gives (Σ Q0|f|^q)^{1/q}, uncentered. For smoothed
    TV the derivative series bound is returned when derivative bounds are known,
    and otherwise the LP value on small supports.
    """
    f = np.asarray(f, dtype=float)
    if spec.family == "lifted":
        return _lift(spec, f, law, column_duals, conjugate(spec.power), Q0)
    if spec.family == "smoothed-tv":
        if bounds is not None:
            return smoothed_dual_bound(bounds, spec.sigma, spec.embedding.shape[1])
        return dual_norm_exact(spec, f)
    return float(column_duals(spec, f, Q0))


def _check_lp_support(size: int):
    if size > MAX_LP_SUPPORT:
        raise EnumerationLimitError("LP support", size, MAX_LP_SUPPORT)


def tv_dual_vertex(f) -> float:
    """Vertex enumeration: extreme zero-mass TV-unit measures are (e_i − e_j)/2."""
    f = np.asarray(f, dtype=float)
    return float((f.max() - f.min()) / 2)


def _tv_dual_lp(f: np.ndarray) -> float:
    k = len(f)
    # δ = u − v with u, v ≥ 0
    c = -np.concatenate([f, -f])
    result = linprog(
        c,
        A_ub=np.ones((1, 2 * k)),
        b_ub=[1.0],
        A_eq=np.concatenate([np.ones(k), -np.ones(k)])[None, :],
        b_eq=[0.0],
        bounds=[(0, None)] * (2 * k),
        method="highs",
    )
    return float(-result.fun)


def _smoothed_dual_lp(spec: NormSpec, f: np.ndarray) -> float:
    if spec.embedding.shape[1] != 1:
        raise ConfigError("the smoothed-TV LP is one-dimensional")
    x_pts = spec.embedding[:, 0]
    sigma = spec.sigma
    lo = x_pts.min() - LP_GRID_WINDOW * sigma
    hi = x_pts.max() + LP_GRID_WINDOW * sigma
    grid = np.arange(lo, hi + LP_GRID_STEP * sigma / 2, LP_GRID_STEP * sigma)
    weights = np.full(len(grid), grid[1] - grid[0])
    weights[[0, -1]] /= 2
    K = gaussian.pdf(grid[:, None], loc=x_pts[None, :], scale=sigma)
    k, g = len(f), len(grid)
    # variables: δ (free, k) then t (≥ 0, g)
    c = np.concatenate([-f, np.zeros(g)])
    A_ub = np.block([
        [K, -np.eye(g)],
        [-K, -np.eye(g)],
        [np.zeros((1, k)), weights[None, :]],
    ])
    b_ub = np.concatenate([np.zeros(2 * g), [1.0]])
    A_eq = np.concatenate([np.ones(k), np.zeros(g)])[None, :]
    result = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[0.0],
        bounds=[(None, None)] * k + [(0, None)] * g, method="highs",
    )
    if result.status != 0:
        logger.warning("smoothed-TV dual LP ended with status %d: %s", result.status, result.message)
    return float(-result.fun)


def dual_norm_exact(spec: NormSpec, f, Q0=None) -> float:
    """sup ⟨f, δ⟩ over zero-mass δ with ‖δ‖ ≤ 1, on supports of at most 12 points."""
    f = np.asarray(f, dtype=float)
    _check_lp_support(len(f))
    if spec.family == "tv":
        return _tv_dual_lp(f)
    if spec.family == "lp":
        weights = _lp_weights(spec, len(f), Q0)
        support = weights > 0
        fs, ws = f[support], weights[support]
        if fs.max() - fs.min() == 0:
            return 0.0
        if math.isinf(spec.q):
            return float((fs.max() - fs.min()) / 2)

        def objective(c):
            return np.sum(ws * np.abs(fs - c) ** spec.q) ** (1.0 / spec.q)

        best = minimize_scalar(objective, bounds=(fs.min(), fs.max()), method="bounded", options={"xatol": 1e-12})
        return float(best.fun)
    if spec.family == "smoothed-tv":
        return _smoothed_dual_lp(spec, f)
    raise UnknownFamilyError(f"no exact dual for {spec}")


def loss_dual_moment(
    centered: LossTable,
    mu,
    spec: NormSpec,
    power: float = 2.0,
    Q0=None,
    bounds: list[DerivativeBounds] | None = None,
) -> float:
    """E_Z ‖ℓ̄(·, Z)‖_*^power; power=q gives the moment of the p-uniform regime."""
    weights = mu.mu if hasattr(mu, "mu") else np.asarray(mu, dtype=float)
    values = centered.values
    if spec.family == "smoothed-tv":
        if bounds is None:
            duals = np.array([dual_norm_exact(spec, values[:, z]) for z in range(values.shape[1])])
        else:
            d = spec.embedding.shape[1]
            duals = np.array([smoothed_dual_bound(b, spec.sigma, d) for b in bounds])
    else:
        duals = column_duals(spec, values, Q0)
    return float(np.sum(weights * duals**power))


def smoothed_dual_bound(bounds: DerivativeBounds, sigma: float, d: int) -> float:
    """Σ_j (σ√d)^j β_j, closed form β/(1 − σ√d) for a uniform β."""
    ratio = sigma * math.sqrt(d)
    if bounds.uniform is not None:
        if ratio >= 1:
            raise DivergentSeriesError(ratio)
        return bounds.uniform / (1.0 - ratio)
    # finite sequences have a zero tail
    return float(sum(ratio**j * beta for j, beta in enumerate(bounds.beta)))

