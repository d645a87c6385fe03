"""Training losses: per-stage classification with similarity-weighted
truncated smoothing, boundary BCE, segment/text contrastive alignment,
and the weighted total that also folds in the adjacent-segment
discrepancy term.

All logs are clamped at 1e-12, capping any single term near 27.6 instead
of letting a saturated probability produce an infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as tz
from .errors import ConfigError
from .tensor import Tensor

LOG_FLOOR = 1e-12


@dataclass
class LossWeights:
    lambda_boundary: float = 1.0     # lambda1
    lambda_contrastive: float = 0.8  # lambda2
    lambda_discrepancy: float = 1.0  # lambda3
    sigma: float = 1.0
    tau: float = 4.0

    def __post_init__(self):
        if min(self.lambda_boundary, self.lambda_contrastive,
               self.lambda_discrepancy) < 0:
            raise ConfigError("loss weights must be non-negative")


def _safe_log(x: Tensor) -> Tensor:
    return tz.log(tz.clamp_min(x, LOG_FLOOR))


def frame_similarity(x: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian similarity of consecutive input frames, length T-1.

    ``x`` is the raw C0 x T x V sequence; each frame is flattened before
    the squared-distance computation.
    """
    frames = x.reshape(x.shape[0], x.shape[1], -1).transpose(1, 0, 2)
    frames = frames.reshape(x.shape[1], -1)
    d2 = ((frames[1:] - frames[:-1]) ** 2).sum(axis=1)
    return np.exp(-d2 / (2.0 * sigma * sigma))


def segmentation_loss(
    probs: Tensor, labels: np.ndarray, similarity: np.ndarray, tau: float
) -> Tensor:
    """Cross-entropy plus similarity-weighted truncated squared log-ratio
    of consecutive frame probabilities (truncation at tau^2)."""
    q, t = probs.shape
    lp = _safe_log(probs)
    onehot = np.zeros((q, t))
    onehot[labels, np.arange(t)] = 1.0
    ce = tz.neg(tz.tsum(lp * Tensor(onehot))) * (1.0 / t)
    if t < 2:
        return ce
    diff = tz.narrow(lp, 1, 1, t - 1) - tz.narrow(lp, 1, 0, t - 1)
    truncated = tz.clamp_max(diff * diff, tau * tau)
    weighted = truncated * Tensor(similarity.reshape(1, t - 1))
    smooth = tz.tsum(weighted) * (1.0 / (t * q))
    return ce + smooth


def boundary_loss(probs: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross-entropy over frames."""
    t = probs.shape[-1]
    y = Tensor(targets.reshape(probs.shape).astype(float))
    pos = y * _safe_log(probs)
    neg = (1.0 - y) * _safe_log(1.0 - probs)
    return tz.neg(tz.tsum(pos + neg)) * (1.0 / t)


def boundary_targets(boundaries, t: int, halfwidth: int = 0) -> np.ndarray:
    """Binary per-frame boundary labels, optionally dilated by a few frames
    on each side (annotation tolerance for the sparse positive class)."""
    y = np.zeros(t)
    for b in boundaries:
        lo = max(0, b - halfwidth)
        hi = min(t, b + halfwidth + 1)
        y[lo:hi] = 1.0
    return y


def _row_normalize(m: Tensor) -> Tensor:
    sq = tz.tsum(m * m, axis=1, keepdims=True)
    return m / tz.sqrt(tz.clamp_min(sq, 1e-24))


def action_text_contrastive(
    f_r: Tensor,
    boundaries,
    class_ids,
    embeddings: np.ndarray,
    projection: Tensor,
) -> Tensor:
    """Symmetric KL between the softmax-normalized cosine-similarity
    matrix of segment visual features vs class text embeddings and the
    same-class indicator target.

    ``embeddings`` holds one row per segment (already looked up by class).
    """
    t = f_r.shape[1]
    cuts = [0] + list(boundaries) + [t]
    n = len(cuts) - 1
    if embeddings.shape[0] != n:
        raise ConfigError(
            f"{n} segments but {embeddings.shape[0]} embedding rows"
        )
    projected = tz.matmul(projection, f_r)       # C_t x T
    seg_means = [
        tz.tmean(tz.narrow(projected, 1, a, b - a), axis=1)
        for a, b in zip(cuts, cuts[1:])
    ]
    vis = tz.stack(seg_means, axis=0)            # N x C_t
    vis_n = _row_normalize(vis)
    txt_n = _row_normalize(Tensor(embeddings))
    sim = tz.matmul(vis_n, tz.transpose(txt_n, (1, 0)))   # N x N

    ids = np.asarray(class_ids)
    target = (ids.reshape(-1, 1) == ids.reshape(1, -1)).astype(float)

    rows = tz.softmax(sim, axis=1)
    cols = tz.softmax(sim, axis=0)

    def kl_from_indicator(w):
        return tz.neg(tz.tsum(Tensor(target) * _safe_log(w))) * (1.0 / (n * n))

    return (kl_from_indicator(rows) + kl_from_indicator(cols)) * 0.5


def total_loss(
    seg_losses: list[Tensor],
    bound_losses: list[Tensor],
    contrastive: Tensor,
    discrepancy: Tensor,
    weights: LossWeights,
) -> Tensor:
    total = seg_losses[0]
    for term in seg_losses[1:]:
        total = total + term
    for term in bound_losses:
        total = total + term * weights.lambda_boundary
    total = total + contrastive * weights.lambda_contrastive
    total = total + discrepancy * weights.lambda_discrepancy
    return total
