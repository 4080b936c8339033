"""Pinhole camera model, pose conventions, and focal-plane projection.

Coordinate conventions (single source of truth for the whole package):

World frame
    Local east-north-up (ENU) meters, ground plane at z = 0.
    x = east, y = north, z = up.

Camera frame
    Standard computer-vision axes: x = right in the image, y = down in
    the image, z = forward along the optical axis.

Pose angles
    ``yaw`` is a compass heading: radians clockwise from north, about the
    world z axis.  ``gimbal_pitch`` = 0 means the camera looks straight
    down (nadir); positive pitch tilts the view toward the heading.
    ``gimbal_roll`` rotates about the optical axis.  Composition order:
    yaw (world z), then gimbal pitch, then gimbal roll, applied to the
    canonical nadir camera (image up = north at yaw 0).

Compass correction
    A positive correction turns the effective heading counter-clockwise,
    i.e. ``effective_yaw = yaw - correction``.  The sign follows the
    field application's stick mapping (left = counter-clockwise); it is a
    convention choice, not something the telemetry pins down.

Subpixel convention
    Pixel centers sit at integer coordinates.  An image of width w spans
    the continuous interval [-0.5, w - 0.5); the principal point defaults
    to the geometric image center ((w - 1) / 2, (h - 1) / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BoundsError, DegeneratePlaneError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Pose:
    """Camera position and orientation for one frame."""

    position: np.ndarray  # (3,) ENU meters
    yaw: float = 0.0  # radians, clockwise from north
    gimbal_pitch: float = 0.0  # radians, 0 = nadir
    gimbal_roll: float = 0.0  # radians

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        if pos.shape != (3,):
            raise ValueError(f"position must be a 3-vector, got shape {pos.shape}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "yaw", float(self.yaw) % TWO_PI)

    @property
    def altitude(self) -> float:
        return float(self.position[2])


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics with square pixels.

    ``fov`` is the full horizontal field of view; the vertical FOV follows
    from the aspect ratio.
    """

    fov: float  # radians, full horizontal FOV
    width: int
    height: int
    principal_point: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if not 0.0 < self.fov < math.pi:
            raise ValueError(f"fov must be in (0, pi), got {self.fov}")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1 pixel")
        if self.principal_point is None:
            pp = ((self.width - 1) / 2.0, (self.height - 1) / 2.0)
            object.__setattr__(self, "principal_point", pp)

    @property
    def focal_px(self) -> float:
        """Focal length in pixels (shared by both axes)."""
        return (self.width / 2.0) / math.tan(self.fov / 2.0)

    @property
    def vertical_fov(self) -> float:
        return 2.0 * math.atan((self.height / 2.0) / self.focal_px)

    def ground_sampling_distance(self, distance: float) -> float:
        """Footprint of one pixel on a plane ``distance`` meters away (nadir)."""
        return 2.0 * distance * math.tan(self.fov / 2.0) / self.width


@dataclass(frozen=True)
class FocalPlaneSpec:
    """Virtual focal plane plus the output grid laid out on it.

    The plane's base height above ground is ``ref_altitude - fp_distance``
    (e.g. ref_altitude 35 with fp_distance 35 focuses the ground).  With
    the default ref_altitude of 0, ``fp_distance = 0`` is the ground
    plane and negative values raise the plane.

    Tilt is a height graph over the grid: the plane's z at world (x, y) is
    base + tan(fp_pitch) * (y - cy) + tan(fp_roll) * (x - cx) with
    (cx, cy) the grid center, so tilting pivots about the grid center.

    Grid cells are squares of side ``grid_resolution``; cell (ix, iy) has
    its center at grid_origin + ((ix + 0.5), (iy + 0.5)) * resolution.
    """

    fp_distance: float  # meters below ref_altitude
    grid_origin: tuple[float, float]  # world (east, north) of grid corner
    grid_resolution: float  # meters per cell
    grid_width: int
    grid_height: int
    fp_pitch: float = 0.0
    fp_roll: float = 0.0
    compass_correction: float = 0.0
    ref_altitude: float = 0.0

    def __post_init__(self):
        if self.grid_resolution <= 0.0:
            raise ValueError("grid_resolution must be > 0")
        if self.grid_width < 1 or self.grid_height < 1:
            raise ValueError("grid dimensions must be >= 1")
        for name in ("fp_pitch", "fp_roll"):
            v = getattr(self, name)
            if not -math.pi / 2 < v < math.pi / 2:
                raise ValueError(f"{name} must lie in (-pi/2, pi/2), got {v}")

    @property
    def plane_height(self) -> float:
        """World z of the plane at the grid center."""
        return self.ref_altitude - self.fp_distance

    @property
    def grid_center(self) -> tuple[float, float]:
        ox, oy = self.grid_origin
        return (
            ox + self.grid_width * self.grid_resolution / 2.0,
            oy + self.grid_height * self.grid_resolution / 2.0,
        )

    @property
    def shape(self) -> tuple[int, int]:
        """Raster shape (rows, cols) = (grid_height, grid_width)."""
        return (self.grid_height, self.grid_width)

    def same_grid(self, other: "FocalPlaneSpec") -> bool:
        return (
            self.grid_origin == other.grid_origin
            and self.grid_resolution == other.grid_resolution
            and self.grid_width == other.grid_width
            and self.grid_height == other.grid_height
        )

    def cell_world_point(self, ix: float, iy: float) -> np.ndarray:
        """World point of cell (ix, iy)'s center on the (possibly tilted) plane."""
        ox, oy = self.grid_origin
        x = ox + (ix + 0.5) * self.grid_resolution
        y = oy + (iy + 0.5) * self.grid_resolution
        cx, cy = self.grid_center
        z = (
            self.plane_height
            + math.tan(self.fp_pitch) * (y - cy)
            + math.tan(self.fp_roll) * (x - cx)
        )
        return np.array([x, y, z])

    def world_points(self) -> np.ndarray:
        """(grid_height, grid_width, 3) array of all cell-center world points."""
        ox, oy = self.grid_origin
        xs = ox + (np.arange(self.grid_width) + 0.5) * self.grid_resolution
        ys = oy + (np.arange(self.grid_height) + 0.5) * self.grid_resolution
        xg, yg = np.meshgrid(xs, ys)
        cx, cy = self.grid_center
        zg = (
            self.plane_height
            + math.tan(self.fp_pitch) * (yg - cy)
            + math.tan(self.fp_roll) * (xg - cx)
        )
        return np.stack([xg, yg, zg], axis=-1)

    def camera_plane_distance(self, pose: Pose) -> float:
        """Perpendicular distance from the camera to the plane (signed, + above)."""
        tp = math.tan(self.fp_pitch)
        tr = math.tan(self.fp_roll)
        cx, cy = self.grid_center
        f = (
            pose.position[2]
            - self.plane_height
            - tp * (pose.position[1] - cy)
            - tr * (pose.position[0] - cx)
        )
        return float(f / math.sqrt(1.0 + tp * tp + tr * tr))


@dataclass(frozen=True)
class Frame:
    """One raster plus the pose it was captured from."""

    image: np.ndarray  # (H, W) scalar or (H, W, C)
    pose: Pose
    index: int = 0

    def __post_init__(self):
        img = np.asarray(self.image)
        if img.ndim not in (2, 3):
            raise ValueError(f"image must be 2-D or 3-D, got ndim {img.ndim}")
        object.__setattr__(self, "image", img)

    @property
    def channels(self) -> int:
        return 1 if self.image.ndim == 2 else self.image.shape[2]


# ---------------------------------------------------------------------------
# Rotations


def rotation_camera_to_world(pose: Pose, yaw_offset: float = 0.0) -> np.ndarray:
    """Camera-to-world rotation for a pose.

    ``yaw_offset`` is subtracted from the yaw before building the matrix;
    callers pass a focal plane's compass correction here.
    """
    psi = pose.yaw - yaw_offset
    c, s = math.cos(psi), math.sin(psi)
    # clockwise-positive rotation about world z
    rz = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    # canonical nadir camera: right=east, image-down=south, forward=down
    r0 = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    cp, sp = math.cos(pose.gimbal_pitch), math.sin(pose.gimbal_pitch)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    cr, sr = math.cos(pose.gimbal_roll), math.sin(pose.gimbal_roll)
    rr = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
    return rz @ r0 @ rx @ rr


# ---------------------------------------------------------------------------
# Projection operations


def pixel_ray(
    intrinsics: CameraIntrinsics, pose: Pose, pixel: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    """World ray (origin, unit direction) through a subpixel location.

    Any compass correction is the caller's concern: apply it by adjusting
    the pose yaw before calling.
    """
    px, py = float(pixel[0]), float(pixel[1])
    if not (0.0 <= px < intrinsics.width and 0.0 <= py < intrinsics.height):
        raise BoundsError(
            f"pixel ({px}, {py}) outside [0, {intrinsics.width}) x [0, {intrinsics.height})"
        )
    ppx, ppy = intrinsics.principal_point
    f = intrinsics.focal_px
    d_cam = np.array([(px - ppx) / f, (py - ppy) / f, 1.0])
    d_world = rotation_camera_to_world(pose) @ d_cam
    d_world /= np.linalg.norm(d_world)
    return pose.position.copy(), d_world


def project_world_point(
    intrinsics: CameraIntrinsics,
    pose: Pose,
    point: np.ndarray,
    compass_correction: float = 0.0,
) -> Optional[tuple[float, float]]:
    """Subpixel location where a world point lands in this camera.

    Returns None for points behind the camera or outside the image
    rectangle [0, width) x [0, height).
    """
    r = rotation_camera_to_world(pose, yaw_offset=compass_correction)
    q = r.T @ (np.asarray(point, dtype=np.float64) - pose.position)
    if q[2] <= 1e-12:
        return None
    f = intrinsics.focal_px
    ppx, ppy = intrinsics.principal_point
    px = ppx + f * q[0] / q[2]
    py = ppy + f * q[1] / q[2]
    if not (0.0 <= px < intrinsics.width and 0.0 <= py < intrinsics.height):
        return None
    return (float(px), float(py))


def plane_cell_to_pixel(
    intrinsics: CameraIntrinsics,
    pose: Pose,
    plane: FocalPlaneSpec,
    cell: Sequence[float],
) -> Optional[tuple[float, float]]:
    """Project a focal-plane grid cell into a camera.

    The plane's compass correction is applied to the pose yaw here.
    Returns None when the cell's world point is behind the camera or
    projects outside the image rectangle.
    """
    ix, iy = float(cell[0]), float(cell[1])
    if not (0 <= ix < plane.grid_width and 0 <= iy < plane.grid_height):
        raise BoundsError(f"cell ({ix}, {iy}) outside grid {plane.shape}")
    if abs(plane.camera_plane_distance(pose)) < 1e-9:
        raise DegeneratePlaneError(
            "camera lies on the focal plane; projection undefined"
        )
    point = plane.cell_world_point(ix, iy)
    return project_world_point(
        intrinsics, pose, point, compass_correction=plane.compass_correction
    )


def intersect_ray_plane(
    origin: np.ndarray, direction: np.ndarray, plane: FocalPlaneSpec
) -> Optional[np.ndarray]:
    """Intersection of a world ray with the (possibly tilted) plane."""
    tp = math.tan(plane.fp_pitch)
    tr = math.tan(plane.fp_roll)
    cx, cy = plane.grid_center
    # plane: z - base - tp*(y-cy) - tr*(x-cx) = 0, normal (-tr, -tp, 1)
    n = np.array([-tr, -tp, 1.0])
    denom = float(n @ direction)
    if abs(denom) < 1e-12:
        return None
    num = plane.plane_height + tp * (origin[1] - cy) + tr * (origin[0] - cx) - origin[2]
    t = num / denom
    if t <= 0.0:
        return None
    return origin + t * direction


def sample_bilinear(raster: np.ndarray, at: Sequence[float]) -> Optional[np.ndarray]:
    """Bilinear interpolation at a subpixel location.

    Valid domain is [0, W-1] x [0, H-1] (between outermost pixel
    centers); outside it returns None so callers can drop the sample.
    Returns a scalar 0-d array for 2-D rasters, a (C,) vector otherwise.
    """
    x, y = float(at[0]), float(at[1])
    h, w = raster.shape[:2]
    if not (0.0 <= x <= w - 1 and 0.0 <= y <= h - 1):
        return None
    x0 = min(int(math.floor(x)), w - 2) if w > 1 else 0
    y0 = min(int(math.floor(y)), h - 2) if h > 1 else 0
    fx = x - x0
    fy = y - y0
    if w == 1:
        fx = 0.0
    if h == 1:
        fy = 0.0
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    v = (
        raster[y0, x0] * (1 - fx) * (1 - fy)
        + raster[y0, x1] * fx * (1 - fy)
        + raster[y1, x0] * (1 - fx) * fy
        + raster[y1, x1] * fx * fy
    )
    return np.asarray(v, dtype=np.float64)


# ---------------------------------------------------------------------------
# Vectorized registration internals (same math as the scalar operations;
# tests cross-check the two against each other)


def project_points_batch(
    intrinsics: CameraIntrinsics,
    pose: Pose,
    points: np.ndarray,
    compass_correction: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``project_world_point`` over an (N, 3) array.

    Returns (pixels (N, 2), valid (N,) bool); pixels are undefined where
    invalid.
    """
    r = rotation_camera_to_world(pose, yaw_offset=compass_correction)
    q = (points.reshape(-1, 3) - pose.position) @ r  # row-vector form of R.T @ p
    valid = q[:, 2] > 1e-12
    z = np.where(valid, q[:, 2], 1.0)
    f = intrinsics.focal_px
    ppx, ppy = intrinsics.principal_point
    px = ppx + f * q[:, 0] / z
    py = ppy + f * q[:, 1] / z
    valid &= (px >= 0.0) & (px < intrinsics.width) & (py >= 0.0) & (py < intrinsics.height)
    return np.stack([px, py], axis=-1), valid


def sample_bilinear_batch(
    raster: np.ndarray, pixels: np.ndarray, valid: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``sample_bilinear``.

    ``pixels`` is (N, 2); rows where ``valid`` is False or the location
    leaves the interpolation domain come back invalid.  Returns
    (values (N,) or (N, C), ok (N,) bool).
    """
    h, w = raster.shape[:2]
    x = pixels[:, 0]
    y = pixels[:, 1]
    ok = valid & (x >= 0.0) & (x <= w - 1) & (y >= 0.0) & (y <= h - 1)
    xs = np.where(ok, x, 0.0)
    ys = np.where(ok, y, 0.0)
    x0 = np.minimum(np.floor(xs).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(ys).astype(np.intp), max(h - 2, 0))
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    if raster.ndim == 3:
        fx = fx[:, None]
        fy = fy[:, None]
    vals = (
        raster[y0, x0] * (1 - fx) * (1 - fy)
        + raster[y0, x1] * fx * (1 - fy)
        + raster[y1, x0] * (1 - fx) * fy
        + raster[y1, x1] * fx * fy
    )
    return np.asarray(vals, dtype=np.float64), ok


def lookup_nearest_batch(
    raster: np.ndarray, pixels: np.ndarray, valid: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-pixel lookup: the raster value at the rounded location.

    Used for registering binary masks, where interpolation would invent
    fractional detections.
    """
    h, w = raster.shape[:2]
    xi = np.rint(pixels[:, 0]).astype(np.intp)
    yi = np.rint(pixels[:, 1]).astype(np.intp)
    ok = valid & (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    xi = np.clip(xi, 0, w - 1)
    yi = np.clip(yi, 0, h - 1)
    return raster[yi, xi], ok


def camera_ray_grid(intrinsics: CameraIntrinsics) -> np.ndarray:
    """(H, W, 3) camera-frame ray directions (z = 1 plane, not normalized)."""
    ppx, ppy = intrinsics.principal_point
    f = intrinsics.focal_px
    xs = (np.arange(intrinsics.width) - ppx) / f
    ys = (np.arange(intrinsics.height) - ppy) / f
    xg, yg = np.meshgrid(xs, ys)
    return np.stack([xg, yg, np.ones_like(xg)], axis=-1)


def default_plane_for_flight(
    poses: Sequence[Pose],
    intrinsics: CameraIntrinsics,
    fp_distance: Optional[float] = None,
    grid_resolution: Optional[float] = None,
    margin: float = 0.0,
) -> FocalPlaneSpec:
    """Focal plane focused on the ground under a flight path.

    ref_altitude is the mean pose altitude; fp_distance defaults to that
    altitude (plane on the ground) and grid_resolution to the nadir
    ground sampling distance.  The grid covers the union of nadir
    footprints plus ``margin`` meters on each side.
    """
    if not poses:
        raise ValueError("need at least one pose")
    alts = [p.altitude for p in poses]
    ref = float(np.mean(alts))
    if fp_distance is None:
        fp_distance = ref
    dist = abs(fp_distance)
    if grid_resolution is None:
        grid_resolution = intrinsics.ground_sampling_distance(max(dist, 1e-6))
    half_x = max(dist, 1e-6) * math.tan(intrinsics.fov / 2.0)
    half_y = max(dist, 1e-6) * math.tan(intrinsics.vertical_fov / 2.0)
    xs = [p.position[0] for p in poses]
    ys = [p.position[1] for p in poses]
    x0 = min(xs) - half_x - margin
    x1 = max(xs) + half_x + margin
    y0 = min(ys) - half_y - margin
    y1 = max(ys) + half_y + margin
    gw = max(1, int(math.ceil((x1 - x0) / grid_resolution)))
    gh = max(1, int(math.ceil((y1 - y0) / grid_resolution)))
    return FocalPlaneSpec(
        fp_distance=fp_distance,
        grid_origin=(x0, y0),
        grid_resolution=grid_resolution,
        grid_width=gw,
        grid_height=gh,
        ref_altitude=ref,
    )
