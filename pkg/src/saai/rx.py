"""Global RX anomaly detector with percentile thresholding.

Scores every pixel by its Mahalanobis distance to the image's own
mean under the image's own covariance:

    alpha(r) = (r - mu)^T K^-1 (r - mu)

K is the population covariance (divide by pixel count N, not N - 1);
that choice makes mean(alpha) = channel_count an exact identity, which
the test suite checks.  Thresholding keeps pixels whose score is
strictly above the t-th percentile of the score distribution, i.e. the
top (100 - t)% minus ties at the cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, SingularCovarianceError

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class RxScores:
    """Per-pixel anomaly scores plus the statistics that produced them."""

    scores: np.ndarray  # (H, W) alpha values >= 0
    channel_count: int
    mean: np.ndarray  # (n,)
    covariance: np.ndarray  # (n, n), includes any regularization
    regularization_used: float


@dataclass(frozen=True)
class AnomalyMask:
    """Binary detection raster with the threshold that produced it."""

    mask: np.ndarray  # (H, W) bool
    threshold_t: float  # percent in [0, 100]
    cutoff_score: float

    @property
    def count(self) -> int:
        return int(self.mask.sum())


def rx_score(image: np.ndarray, epsilon: float = 0.0) -> RxScores:
    """Score an n-channel raster; (H, W) arrays are treated as n = 1.

    ``epsilon`` regularizes the covariance as K + epsilon * (trace(K)/n) * I,
    i.e. relative to the data's own scale.  With epsilon = 0 a singular
    covariance (e.g. a constant image) raises instead of producing junk.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3:
        raise ValueError(f"image must be 2-D or 3-D, got ndim {img.ndim}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    h, w, n = img.shape
    count = h * w
    if count < n + 1:
        raise EmptyInputError(
            f"need at least {n + 1} pixels to estimate {n}-channel statistics, got {count}"
        )
    flat = img.reshape(count, n)
    mu = flat.mean(axis=0)
    centered = flat - mu
    cov = centered.T @ centered / count
    k = cov + epsilon * (np.trace(cov) / n) * np.eye(n)
    eig = np.linalg.eigvalsh(k)
    # variance below squared roundoff of the raw magnitudes is noise, not signal
    floor = max(float(np.mean(flat * flat)), np.finfo(np.float64).tiny) * 1e-24
    if eig[-1] <= floor or eig[0] <= eig[-1] * 1e-12:
        raise SingularCovarianceError(
            "covariance is singular (constant or degenerate image); "
            "use epsilon > 0 or provide varying data"
        )
    sol = np.linalg.solve(k, centered.T)
    alpha = np.einsum("ij,ji->i", centered, sol)
    np.maximum(alpha, 0.0, out=alpha)
    return RxScores(
        scores=alpha.reshape(h, w),
        channel_count=n,
        mean=mu,
        covariance=k,
        regularization_used=float(epsilon),
    )


def threshold_mask(scores: RxScores, t: float) -> AnomalyMask:
    """Flag pixels strictly above the t-th percentile of the scores.

    The cutoff is the linear-interpolated order statistic; ties at the
    cutoff are excluded, so t = 100 always yields an empty mask.
    """
    if not 0.0 <= t <= 100.0:
        raise ValueError(f"threshold t must be in [0, 100], got {t}")
    cutoff = float(np.percentile(scores.scores, t))
    return AnomalyMask(
        mask=scores.scores > cutoff, threshold_t=float(t), cutoff_score=cutoff
    )


def rx_detect(image: np.ndarray, t: float, epsilon: float = 0.0) -> AnomalyMask:
    """Score then threshold in one call."""
    return threshold_mask(rx_score(image, epsilon), t)
