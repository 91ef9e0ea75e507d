"""Loss registry: zero-one, quadratic:scale, cosine:scale."""

from dataclasses import dataclass

import numpy as np

from genbound.errors import ConfigError, UnknownFamilyError
from genbound.norms import DerivativeBounds
from genbound.probability import HypothesisSpace, InstanceSpace, LossTable

LOSSES = ("zero-one", "quadratic", "cosine")


@dataclass(frozen=True)
class LossId:
    name: str
    scale: float = 1.0

    def __str__(self):
        return self.name if self.name == "zero-one" else f"{self.name}:{self.scale:g}"


def parse_loss(text: str) -> LossId:
    """Parse a registry string such as ``cosine:0.5``."""
    name, _, arg = str(text).partition(":")
    if name not in LOSSES:
        raise UnknownFamilyError(f"unknown loss '{text}' (choose from {', '.join(LOSSES)})")
    if name == "zero-one":
        if arg:
            raise ConfigError("zero-one loss takes no parameter")
        return LossId(name)
    try:
        scale = float(arg) if arg else 1.0
    except ValueError as e:
        raise ConfigError(f"bad loss scale in '{text}'") from e
    if scale <= 0:
        raise ConfigError("loss scale must be positive")
    return LossId(name, scale)


def _coordinates(hypotheses: HypothesisSpace, instances: InstanceSpace):
    if hypotheses.embedding is None or instances.points is None:
        raise ConfigError("distance-based losses need a hypothesis embedding and instance points")
    if hypotheses.embedding.shape[1] != instances.points.shape[1]:
        raise ConfigError("embedding and instance points differ in dimension")
    return hypotheses.embedding, instances.points


def loss_table(loss: LossId | str, hypotheses: HypothesisSpace, instances: InstanceSpace, n: int) -> LossTable:
    """Raw loss matrix ℓ(w, z)."""
    if isinstance(loss, str):
        loss = parse_loss(loss)
    if loss.name == "zero-one":
        values = np.array([[float(w != z) for z in instances.labels] for w in hypotheses.labels])
        return LossTable(values=values, n=n)

    emb, pts = _coordinates(hypotheses, instances)
    diff = emb[:, None, :] - pts[None, :, :]
    if loss.name == "quadratic":
        values = loss.scale * np.sum(diff**2, axis=-1)
    else:
        if emb.shape[1] != 1:
            raise ConfigError("cosine loss is defined for one-dimensional embeddings")
        values = loss.scale * (1.0 + np.cos(diff[..., 0]))
    return LossTable(values=values, n=n)


def derivative_bounds(loss: LossId | str, hypotheses: HypothesisSpace, instances: InstanceSpace) -> list[DerivativeBounds]:
    """Bounds β_j on the derivatives of ℓ̄(·, z), one entry per instance z.

    Cosine losses are bounded globally by 2·scale in every order. Quadratic
    losses are affine in w after centering, so only β_0 and β_1 are nonzero;
    β_0 is taken over the window spanned by the embedding.
    """
    if isinstance(loss, str):
        loss = parse_loss(loss)
    if loss.name == "zero-one":
        raise ConfigError("zero-one loss has no smooth extension, so no derivative bounds")
    emb, pts = _coordinates(hypotheses, instances)
    if loss.name == "cosine":
        return [DerivativeBounds(uniform=2.0 * loss.scale) for _ in instances.labels]

    if emb.shape[1] != 1:
        raise ConfigError("quadratic derivative bounds are implemented for d = 1")
    x = pts[:, 0]
    mean = float(instances.mu @ x)
    second = float(instances.mu @ x**2)
    lo, hi = float(emb.min()), float(emb.max())
    bounds = []
    for xz in x:
        slope = -2.0 * loss.scale * (xz - mean)
        offset = loss.scale * (xz**2 - second)
        beta0 = max(abs(slope * lo + offset), abs(slope * hi + offset))
        bounds.append(DerivativeBounds(beta=(beta0, abs(slope))))
    return bounds


def uniform_beta(bounds: list[DerivativeBounds]) -> float:
    """A single β dominating every β_j of every instance."""
    values = []
    for b in bounds:
        values.append(b.uniform if b.uniform is not None else max(b.beta))
    return float(max(values))
