"""Registration and averaging of frames onto the focal-plane grid.

Two pipelines share the machinery here:

  thermal integral  ->  register frames, average, then detect (baseline)
  anomaly integral  ->  detect per frame, register the binary masks,
                        average into a visibility map

Both are built from per-frame "warps" (the frame resampled onto the
plane grid) folded in ascending frame-index order.  The streaming
pipeline folds the very same warp arrays in the very same order, which
is what makes streamed and batch outputs bit-identical.

Thermal values are resampled bilinearly.  Binary masks use nearest-pixel
lookup instead: interpolating a mask would invent fractional detections,
and the visibility map's exact-count semantics (visibility * count is an
integer) requires each frame to contribute 0 or 1 per cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegeneratePlaneError, EmptyInputError, SingularCovarianceError
from .geometry import (
    CameraIntrinsics,
    FocalPlaneSpec,
    Frame,
    Pose,
    lookup_nearest_batch,
    project_points_batch,
    sample_bilinear_batch,
)
from .rx import AnomalyMask, rx_detect


@dataclass(frozen=True)
class IntegralImage:
    """Accumulated thermal sums and per-cell contribution counts."""

    values: np.ndarray  # (H, W) float64 sums
    counts: np.ndarray  # (H, W) int64
    plane: FocalPlaneSpec
    contrast: float = 1.0  # display-time gain only

    @property
    def covered(self) -> np.ndarray:
        return self.counts > 0

    def normalized(self) -> np.ndarray:
        """Per-cell mean of contributing samples; 0 where uncovered."""
        out = np.zeros_like(self.values)
        np.divide(self.values, self.counts, out=out, where=self.counts > 0)
        return out


@dataclass(frozen=True)
class SaaiImage:
    """Per-cell fraction of covering frames that flagged the cell."""

    visibility: np.ndarray  # (H, W) float64 in [0, 1]
    counts: np.ndarray  # (H, W) int64 covering frames
    plane: FocalPlaneSpec
    hits: np.ndarray = None  # (H, W) int64 flagged frames; visibility = hits/counts

    @property
    def covered(self) -> np.ndarray:
        return self.counts > 0


@dataclass(frozen=True)
class FrameWarp:
    """One frame resampled onto the plane grid.

    ``values`` is zero wherever ``valid`` is False, so folds can add the
    whole array without masking.
    """

    index: int
    values: np.ndarray  # float64 thermal samples, or uint8 mask hits
    valid: np.ndarray  # bool coverage


def _check_frame(frame: Frame, intrinsics: CameraIntrinsics):
    h, w = frame.image.shape[:2]
    if (h, w) != (intrinsics.height, intrinsics.width):
        raise ValueError(
            f"frame {frame.index} shape {(h, w)} does not match intrinsics "
            f"{(intrinsics.height, intrinsics.width)}"
        )


def _check_plane(plane: FocalPlaneSpec, pose: Pose, index: int):
    if abs(plane.camera_plane_distance(pose)) < 1e-9:
        raise DegeneratePlaneError(
            f"frame {index}: camera lies on the focal plane; registration undefined"
        )


def warp_frame(
    frame: Frame,
    intrinsics: CameraIntrinsics,
    plane: FocalPlaneSpec,
    world: Optional[np.ndarray] = None,
) -> FrameWarp:
    """Bilinearly resample a thermal frame onto the plane grid.

    ``world`` lets callers reuse a precomputed plane.world_points().
    """
    _check_frame(frame, intrinsics)
    _check_plane(plane, frame.pose, frame.index)
    if world is None:
        world = plane.world_points()
    pts = world.reshape(-1, 3)
    pixels, ok = project_points_batch(
        intrinsics, frame.pose, pts, compass_correction=plane.compass_correction
    )
    img = np.ascontiguousarray(frame.image, dtype=np.float64)
    vals, ok = sample_bilinear_batch(img, pixels, ok)
    vals = np.where(ok, vals, 0.0)
    shape = plane.shape
    return FrameWarp(index=frame.index, values=vals.reshape(shape), valid=ok.reshape(shape))


def warp_mask(
    mask: np.ndarray,
    pose: Pose,
    index: int,
    intrinsics: CameraIntrinsics,
    plane: FocalPlaneSpec,
    world: Optional[np.ndarray] = None,
) -> FrameWarp:
    """Register a binary mask onto the plane grid by nearest-pixel lookup."""
    if mask.shape != (intrinsics.height, intrinsics.width):
        raise ValueError(
            f"frame {index} mask shape {mask.shape} does not match intrinsics"
        )
    _check_plane(plane, pose, index)
    if world is None:
        world = plane.world_points()
    pts = world.reshape(-1, 3)
    pixels, ok = project_points_batch(
        intrinsics, pose, pts, compass_correction=plane.compass_correction
    )
    hits, ok = lookup_nearest_batch(np.asarray(mask, dtype=bool), pixels, ok)
    hits = hits & ok
    shape = plane.shape
    return FrameWarp(
        index=index, values=hits.reshape(shape).astype(np.uint8), valid=ok.reshape(shape)
    )


def fold_thermal(warps: Sequence[FrameWarp]) -> tuple[np.ndarray, np.ndarray]:
    """Sum thermal warps in ascending frame-index order.

    The sequential fold over sorted indices is the canonical summation
    order; every code path that claims bit-identical output uses it.
    """
    ordered = sorted(warps, key=lambda w: w.index)
    values = np.zeros_like(ordered[0].values, dtype=np.float64)
    counts = np.zeros(ordered[0].values.shape, dtype=np.int64)
    for w in ordered:
        values += w.values
        counts += w.valid
    return values, counts


def fold_masks(warps: Sequence[FrameWarp]) -> tuple[np.ndarray, np.ndarray]:
    """Sum mask warps (integer hits and coverage) in index order."""
    ordered = sorted(warps, key=lambda w: w.index)
    hits = np.zeros(ordered[0].values.shape, dtype=np.int64)
    counts = np.zeros_like(hits)
    for w in ordered:
        hits += w.values
        counts += w.valid
    return hits, counts


def saai_from_counts(
    hits: np.ndarray, counts: np.ndarray, plane: FocalPlaneSpec
) -> SaaiImage:
    visibility = np.zeros(hits.shape, dtype=np.float64)
    np.divide(hits, counts, out=visibility, where=counts > 0)
    return SaaiImage(visibility=visibility, counts=counts, plane=plane, hits=hits)


# ---------------------------------------------------------------------------
# batch operations


def integrate(
    frames: Sequence[Frame],
    intrinsics: CameraIntrinsics,
    plane: FocalPlaneSpec,
) -> IntegralImage:
    """Register and accumulate thermal frames on the plane grid."""
    if not frames:
        raise EmptyInputError("integrate needs at least one frame")
    world = plane.world_points()
    warps = [warp_frame(f, intrinsics, plane, world) for f in frames]
    values, counts = fold_thermal(warps)
    return IntegralImage(values=values, counts=counts, plane=plane)


def detect_frame_mask(frame: Frame, t: float, epsilon: float) -> np.ndarray:
    """Per-frame RX mask; singular statistics abort with the frame named."""
    try:
        return rx_detect(frame.image, t, epsilon).mask
    except SingularCovarianceError as e:
        raise SingularCovarianceError(f"frame {frame.index}: {e}") from e


def saai(
    frames: Sequence[Frame],
    intrinsics: CameraIntrinsics,
    plane: FocalPlaneSpec,
    t: float,
    epsilon: float = 0.0,
) -> SaaiImage:
    """Detect anomalies per frame, then integrate the binary masks."""
    if not frames:
        raise EmptyInputError("saai needs at least one frame")
    world = plane.world_points()
    warps = [
        warp_mask(
            detect_frame_mask(f, t, epsilon), f.pose, f.index, intrinsics, plane, world
        )
        for f in frames
    ]
    hits, counts = fold_masks(warps)
    return saai_from_counts(hits, counts, plane)


def ad_on_integral(
    frames: Sequence[Frame],
    intrinsics: CameraIntrinsics,
    plane: FocalPlaneSpec,
    t: float,
    epsilon: float = 0.0,
) -> AnomalyMask:
    """Integrate first, then detect on the normalized integral.

    RX statistics run over covered cells only; uncovered cells would
    poison the mean and covariance and are never flagged.
    """
    integral = integrate(frames, intrinsics, plane)
    return detect_on_integral(integral, t, epsilon)


def detect_on_integral(integral: IntegralImage, t: float, epsilon: float = 0.0) -> AnomalyMask:
    covered = integral.covered
    norm = integral.normalized()
    values = norm[covered]
    if values.size == 0:
        raise EmptyInputError("integral has no covered cells")
    sub = rx_detect(values.reshape(1, -1), t, epsilon)
    mask = np.zeros(integral.values.shape, dtype=bool)
    mask[covered] = sub.mask[0]
    return AnomalyMask(mask=mask, threshold_t=sub.threshold_t, cutoff_score=sub.cutoff_score)


def apply_contrast(source, c_n: float) -> np.ndarray:
    """Display raster: clamp(normalized value * C_n, 0, 1).

    Accepts an IntegralImage, a SaaiImage, or a plain raster; never
    mutates the underlying data.
    """
    if c_n < 0.0:
        raise ValueError(f"contrast C_n must be >= 0, got {c_n}")
    if isinstance(source, IntegralImage):
        base = source.normalized()
    elif isinstance(source, SaaiImage):
        base = source.visibility
    else:
        base = np.asarray(source, dtype=np.float64)
    return np.clip(base * c_n, 0.0, 1.0)
