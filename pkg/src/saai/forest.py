"""Seeded procedural-forest thermal renderer.

The simulator produces pose-tagged thermal frames of a forest with one
hidden person-sized target, plus exact ground-truth footprints, so the
two detection pipelines can be scored quantitatively.

Design notes that matter downstream:

Thermal values are normalized [0, 1] class levels, not kelvin.  Each
surface class renders an exact constant (or one of a few exact
constants), so a raw frame's value histogram is a handful of large tie
groups plus the rare hot classes.  The RX percentile cutoff then lands
inside a tie run and, with strict-above thresholding, per-frame
detections reduce to the genuinely hot classes.  Integrals, by
contrast, mix classes through visibility weighting and bilinear
resampling into a continuous distribution; that contrast between frame
and integral statistics is what separates the two pipelines.

The target-to-canopy contrast is deliberately modest (0.58 versus a
0.45 +- 0.03 crown dapple): a single unoccluded sighting is plenty
for per-frame detection, but in the integral a mostly-occluded target
cell stays below the brightest canopy mixtures.

Occlusion is stochastic but world-anchored: crowns are opaque
ellipsoids perforated by gap cells decided by a stateless lattice hash
at the ray's crown entry point.  Nearby viewpoints see correlated
gaps, distant viewpoints effectively independent ones.

Everything is deterministic given the scene seed: tree layout comes
from a PCG64 generator, textures from counter-based hashes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict, replace
from typing import Optional, Sequence

import numpy as np
import yaml

from .errors import ConfigError, CoverageError, InvalidPoseError
from .geometry import CameraIntrinsics, FocalPlaneSpec, Frame, Pose, camera_ray_grid, rotation_camera_to_world
from .noise import lattice01_3, sparse_patches, two_level

CONDITIONS = ("cloudy", "sunny")
POSTURES = ("lying", "sitting")
DEFAULT_FOOTPRINTS = {"lying": (1.8, 0.5), "sitting": (0.5, 0.5)}

# hash channels, so one seed yields independent textures
_SALT_GROUND = 1
_SALT_GROUND_PATCH = 2
_SALT_GAP = 3
_SALT_CROWN_PATCH = 4
_SALT_CROWN_TEX = 5

_RAY_EPS = 1e-6


@dataclass(frozen=True)
class ThermalParams:
    """Normalized surface temperatures and texture controls.

    Class levels are exact constants on purpose; see the module
    docstring for why the tie structure matters.  Foliage carries the
    two-level dapple (crown_value +- crown_amplitude) and the ground
    sits at the band center, so whichever crown level is the runner-up
    anomaly holds far more than 10% of any forested frame's pixels.
    That run swallows the 90th-percentile cutoff at every graded
    density, leaving only the genuinely hot classes strictly above it.
    In the integral the same dapple, re-rolled across viewpoints,
    turns into a continuous mix whose extremes set the anomaly cutoff,
    so a single clean sighting of the target stays below it.
    """

    ground_base: float = 0.45
    ground_amplitude: float = 0.0  # two-level checker half-spread
    ground_cell: float = 0.25  # meters
    ground_low_fraction: float = 0.5
    trunk_value: float = 0.45
    crown_value: float = 0.45
    crown_amplitude: float = 0.03  # foliage dapple half-spread
    crown_texture_cell: float = 0.45  # meters, at the crown entry point
    sky_value: float = 0.0
    # sunny hot patches: (levels) drawn at (probabilities) per lattice cell
    sunny_crown_levels: tuple[float, ...] = (0.46,)
    sunny_crown_probs: tuple[float, ...] = (0.0,)
    sunny_crown_cell: float = 0.5
    sunny_ground_levels: tuple[float, ...] = (1.0,)
    sunny_ground_probs: tuple[float, ...] = (0.005,)
    sunny_ground_cell: float = 0.8
    # crown perforation: gap cells of size gap_scale * leaf_size pass rays
    gap_probability: float = 0.25
    gap_scale: float = 4.0

    def __post_init__(self):
        if len(self.sunny_crown_levels) != len(self.sunny_crown_probs):
            raise ValueError("sunny_crown_levels and sunny_crown_probs must pair up")
        if len(self.sunny_ground_levels) != len(self.sunny_ground_probs):
            raise ValueError("sunny_ground_levels and sunny_ground_probs must pair up")
        if not 0.0 <= self.gap_probability <= 1.0:
            raise ValueError(f"gap_probability must be in [0, 1], got {self.gap_probability}")


@dataclass(frozen=True)
class TargetSpec:
    """The hidden person: a flat thermal rectangle on the ground."""

    posture: str = "lying"
    center: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0  # radians clockwise from north, long axis
    footprint: Optional[tuple[float, float]] = None  # (length, width) m
    emission: float = 0.58

    def __post_init__(self):
        if self.posture not in POSTURES:
            raise ValueError(f"posture must be one of {POSTURES}, got {self.posture!r}")
        if self.footprint is None:
            object.__setattr__(self, "footprint", DEFAULT_FOOTPRINTS[self.posture])
        length, width = self.footprint
        if length <= 0 or width <= 0:
            raise ValueError(f"footprint dimensions must be > 0, got {self.footprint}")
        if not 0.0 < self.emission <= 1.0:
            raise ValueError(f"emission must be in (0, 1], got {self.emission}")


@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to regenerate a scene bit-for-bit."""

    seed: int
    density: float  # trees per hectare
    condition: str = "cloudy"
    area: tuple[float, float] = (100.0, 100.0)  # meters, centered on origin
    tree_height_range: tuple[float, float] = (20.0, 25.0)
    trunk_length_range: tuple[float, float] = (4.0, 8.0)
    trunk_radius_range: tuple[float, float] = (0.20, 0.50)
    leaf_size_range: tuple[float, float] = (0.05, 0.20)
    crown_radius_factor_range: tuple[float, float] = (0.16, 0.24)  # x height
    variance_scale: float = 1.0  # 0 = identical trees, 1 = full ranges
    target: TargetSpec = field(default_factory=TargetSpec)
    thermal: ThermalParams = field(default_factory=ThermalParams)

    def __post_init__(self):
        if self.density < 0:
            raise ValueError(f"density must be >= 0, got {self.density}")
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.area[0] <= 0 or self.area[1] <= 0:
            raise ValueError(f"area dimensions must be > 0, got {self.area}")
        for name in (
            "tree_height_range",
            "trunk_length_range",
            "trunk_radius_range",
            "leaf_size_range",
            "crown_radius_factor_range",
        ):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < min <= max, got ({lo}, {hi})")
        if self.trunk_length_range[1] >= self.tree_height_range[0]:
            raise ValueError("trunk_length_range must lie strictly below tree_height_range")
        if not 0.0 <= self.variance_scale <= 1.0:
            raise ValueError(f"variance_scale must be in [0, 1], got {self.variance_scale}")
        ax, ay = self.area
        cx, cy = self.target.center
        if not (abs(cx) <= ax / 2 and abs(cy) <= ay / 2):
            raise ValueError(f"target center {self.target.center} outside area {self.area}")

    @property
    def area_hectares(self) -> float:
        return self.area[0] * self.area[1] / 10_000.0

    @property
    def tree_count(self) -> int:
        return int(round(self.density * self.area_hectares))


@dataclass(frozen=True)
class Tree:
    position: np.ndarray  # (2,) world xy of the trunk axis
    height: float
    trunk_length: float
    trunk_radius: float
    crown_semi_axes: tuple[float, float, float]  # (rx, ry, rz)
    leaf_size: float
    crown_seed: int

    @property
    def crown_center_z(self) -> float:
        return self.trunk_length + self.crown_semi_axes[2]


@dataclass(frozen=True)
class Scene:
    trees: tuple[Tree, ...]
    target: TargetSpec
    condition: str
    spec: SceneSpec

    @property
    def canopy_top(self) -> float:
        return max((t.height for t in self.trees), default=0.0)


@dataclass(frozen=True)
class GroundTruth:
    """Unoccluded target footprint rasterized on a plane grid."""

    footprint_mask: np.ndarray  # (H, W) bool
    footprint_area: int
    plane: FocalPlaneSpec


# ---------------------------------------------------------------------------
# scene generation


def _scaled(rng_range: tuple[float, float], scale: float) -> tuple[float, float]:
    lo, hi = rng_range
    mid = (lo + hi) / 2.0
    return (mid - (mid - lo) * scale, mid + (hi - mid) * scale)


def generate_scene(spec: SceneSpec) -> Scene:
    """Deterministically draw the tree population for a spec."""
    n = spec.tree_count
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    ax, ay = spec.area
    positions = rng.uniform([-ax / 2, -ay / 2], [ax / 2, ay / 2], size=(n, 2))
    vs = spec.variance_scale
    heights = rng.uniform(*_scaled(spec.tree_height_range, vs), size=n)
    trunks = rng.uniform(*_scaled(spec.trunk_length_range, vs), size=n)
    radii = rng.uniform(*_scaled(spec.trunk_radius_range, vs), size=n)
    leaves = rng.uniform(*_scaled(spec.leaf_size_range, vs), size=n)
    factors = rng.uniform(*_scaled(spec.crown_radius_factor_range, vs), size=n)
    crown_seeds = rng.integers(0, 2**62, size=n)
    trees = []
    for i in range(n):
        crown_r = factors[i] * heights[i]
        crown_sz = (heights[i] - trunks[i]) / 2.0
        trees.append(
            Tree(
                position=positions[i].copy(),
                height=float(heights[i]),
                trunk_length=float(trunks[i]),
                trunk_radius=float(radii[i]),
                crown_semi_axes=(float(crown_r), float(crown_r), float(crown_sz)),
                leaf_size=float(leaves[i]),
                crown_seed=int(crown_seeds[i]),
            )
        )
    return Scene(trees=tuple(trees), target=spec.target, condition=spec.condition, spec=spec)


# ---------------------------------------------------------------------------
# rendering


def _ground_values(x: np.ndarray, y: np.ndarray, spec: SceneSpec) -> np.ndarray:
    th = spec.thermal
    vals = two_level(
        x, y, th.ground_cell, spec.seed,
        th.ground_base - th.ground_amplitude,
        th.ground_base + th.ground_amplitude,
        salt=_SALT_GROUND,
        low_fraction=th.ground_low_fraction,
    )
    if spec.condition == "sunny":
        patch = sparse_patches(
            x, y, th.sunny_ground_cell, spec.seed,
            th.sunny_ground_probs, th.sunny_ground_levels,
            salt=_SALT_GROUND_PATCH,
        )
        vals = np.where(patch > 0.0, patch, vals)
    return vals


def _target_hit(x: np.ndarray, y: np.ndarray, target: TargetSpec) -> np.ndarray:
    cx, cy = target.center
    dx = x - cx
    dy = y - cy
    sh, ch = math.sin(target.heading), math.cos(target.heading)
    along = dx * sh + dy * ch  # long axis points along the heading
    across = dx * ch - dy * sh
    length, width = target.footprint
    return (np.abs(along) <= length / 2.0) & (np.abs(across) <= width / 2.0)


def _tree_pixel_bbox(
    tree: Tree, intrinsics: CameraIntrinsics, pose: Pose, r_cw: np.ndarray
) -> Optional[tuple[int, int, int, int]]:
    """Conservative image-space bbox of the tree's bounding box."""
    rx, ry, _ = tree.crown_semi_axes
    ex, ey = tree.position
    r = max(rx, ry, tree.trunk_radius)
    xs = np.array([ex - r, ex + r])
    ys = np.array([ey - r, ey + r])
    zs = np.array([0.0, tree.height])
    corners = np.array([[x, y, z] for x in xs for y in ys for z in zs])
    q = (corners - pose.position) @ r_cw
    if np.any(q[:, 2] <= _RAY_EPS):
        # tree partially behind the camera plane: give up on culling
        return (0, intrinsics.width, 0, intrinsics.height)
    f = intrinsics.focal_px
    ppx, ppy = intrinsics.principal_point
    px = ppx + f * q[:, 0] / q[:, 2]
    py = ppy + f * q[:, 1] / q[:, 2]
    x0 = max(int(math.floor(px.min())), 0)
    x1 = min(int(math.ceil(px.max())) + 1, intrinsics.width)
    y0 = max(int(math.floor(py.min())), 0)
    y1 = min(int(math.ceil(py.max())) + 1, intrinsics.height)
    if x0 >= x1 or y0 >= y1:
        return None
    return (x0, x1, y0, y1)


def render_frame(
    scene: Scene, intrinsics: CameraIntrinsics, pose: Pose, index: int = 0
) -> Frame:
    """First-hit ray cast of the scene into one thermal frame."""
    top = max(scene.canopy_top, 0.0)
    if pose.altitude <= top:
        raise InvalidPoseError(
            f"pose altitude {pose.altitude:.2f} m is not above the canopy top {top:.2f} m"
        )
    spec = scene.spec
    th = spec.thermal
    r_cw = rotation_camera_to_world(pose)
    d = camera_ray_grid(intrinsics) @ r_cw.T  # (H, W, 3) world ray directions
    o = pose.position

    img = np.full((intrinsics.height, intrinsics.width), th.sky_value, dtype=np.float64)
    depth = np.full(img.shape, np.inf)

    # ground and target pass
    dz = d[..., 2]
    hit = dz < -1e-12
    t_ground = np.where(hit, -o[2] / np.where(hit, dz, -1.0), np.inf)
    t_eval = np.where(hit, t_ground, 0.0)  # keep masked lanes finite
    gx = o[0] + t_eval * d[..., 0]
    gy = o[1] + t_eval * d[..., 1]
    if np.any(hit):
        vals = _ground_values(gx, gy, spec)
        on_target = _target_hit(gx, gy, scene.target)
        vals = np.where(on_target, scene.target.emission, vals)
        img[hit] = vals[hit]
        depth[hit] = t_ground[hit]

    # per-tree passes against the depth buffer
    for tree in scene.trees:
        bbox = _tree_pixel_bbox(tree, intrinsics, pose, r_cw)
        if bbox is None:
            continue
        x0, x1, y0, y1 = bbox
        sub = d[y0:y1, x0:x1]
        _render_tree(
            tree, spec, o, sub,
            img[y0:y1, x0:x1], depth[y0:y1, x0:x1],
        )
    return Frame(image=img, pose=pose, index=index)


def _render_tree(tree, spec, origin, d, img, depth):
    """Intersect rays with one tree; update img/depth in place."""
    th = spec.thermal
    ex, ey = tree.position
    rx, ry, rz = tree.crown_semi_axes
    zc = tree.crown_center_z

    # crown: ray-ellipsoid entry in the scaled frame
    scale = np.array([rx, ry, rz])
    op = (origin - np.array([ex, ey, zc])) / scale
    dp = d / scale
    a = np.einsum("...k,...k->...", dp, dp)
    b = 2.0 * np.einsum("k,...k->...", op, dp)
    c = float(op @ op) - 1.0
    disc = b * b - 4.0 * a * c
    has = disc > 0.0
    sq = np.sqrt(np.where(has, disc, 0.0))
    t_crown = (-b - sq) / (2.0 * a)  # finite everywhere, a > 0
    crown_ok = has & (t_crown > _RAY_EPS)
    if np.any(crown_ok):
        t_eval = np.where(crown_ok, t_crown, 0.0)
        px = origin[0] + t_eval * d[..., 0]
        py = origin[1] + t_eval * d[..., 1]
        pz = origin[2] + t_eval * d[..., 2]
        gap_cell = th.gap_scale * tree.leaf_size
        u = lattice01_3(px, py, pz, gap_cell, tree.crown_seed, salt=_SALT_GAP)
        crown_ok &= u >= th.gap_probability
        u_tex = lattice01_3(
            px, py, pz, th.crown_texture_cell, tree.crown_seed, salt=_SALT_CROWN_TEX
        )
        vals = np.where(
            u_tex < 0.5,
            th.crown_value - th.crown_amplitude,
            th.crown_value + th.crown_amplitude,
        )
        if spec.condition == "sunny" and any(p > 0.0 for p in th.sunny_crown_probs):
            # hot patches concentrate toward the crown top
            w = np.clip((pz - zc) / rz, 0.0, 1.0)
            up = lattice01_3(
                px, py, pz, th.sunny_crown_cell, tree.crown_seed, salt=_SALT_CROWN_PATCH
            )
            lo = 0.0
            for prob, level in zip(th.sunny_crown_probs, th.sunny_crown_levels):
                vals = np.where((up >= lo * w) & (up < (lo + prob) * w), level, vals)
                lo += prob
        closer = crown_ok & (t_crown < depth)
        img[closer] = vals[closer]
        depth[closer] = t_crown[closer]

    # trunk: finite vertical cylinder
    a2 = d[..., 0] ** 2 + d[..., 1] ** 2
    b2 = 2.0 * ((origin[0] - ex) * d[..., 0] + (origin[1] - ey) * d[..., 1])
    c2 = (origin[0] - ex) ** 2 + (origin[1] - ey) ** 2 - tree.trunk_radius**2
    disc2 = b2 * b2 - 4.0 * a2 * c2
    has2 = (disc2 > 0.0) & (a2 > 0.0)
    sq2 = np.sqrt(np.where(has2, disc2, 0.0))
    t_trunk = np.where(has2, (-b2 - sq2) / np.where(has2, 2.0 * a2, 1.0), np.inf)
    z_hit = origin[2] + np.where(has2, t_trunk, 0.0) * d[..., 2]
    trunk_ok = has2 & (t_trunk > _RAY_EPS) & (z_hit >= 0.0) & (z_hit <= tree.trunk_length)
    closer = trunk_ok & (t_trunk < depth)
    img[closer] = th.trunk_value
    depth[closer] = t_trunk[closer]


def simulate_flight(
    scene: Scene, intrinsics: CameraIntrinsics, path: Sequence[Pose]
) -> list[Frame]:
    """Render one frame per pose, indexed in path order."""
    if not path:
        raise ValueError("flight path must contain at least one pose")
    return [render_frame(scene, intrinsics, pose, index=k) for k, pose in enumerate(path)]


def linear_path(
    count: int,
    spacing: float,
    altitude: float,
    center: tuple[float, float] = (0.0, 0.0),
    heading: float = math.pi / 2,
) -> list[Pose]:
    """Straight nadir flight line centered on a ground point.

    ``heading`` is the flight direction (clockwise from north; the
    default flies east).  Cameras keep yaw 0, so image orientation is
    constant along the line.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    dx, dy = math.sin(heading), math.cos(heading)
    offsets = (np.arange(count) - (count - 1) / 2.0) * spacing
    return [
        Pose(position=[center[0] + dx * s, center[1] + dy * s, altitude])
        for s in offsets
    ]


# ---------------------------------------------------------------------------
# ground truth


def render_ground_truth(scene: Scene, plane: FocalPlaneSpec) -> GroundTruth:
    """Rasterize the target rectangle (occlusion ignored) on the grid.

    A cell is inside when its center satisfies the closed rectangle
    inequalities, which keeps the mask exactly symmetric under a
    half-turn of the heading.
    """
    target = scene.target
    length, width = target.footprint
    cx, cy = target.center
    sh, ch = math.sin(target.heading), math.cos(target.heading)
    half_l, half_w = length / 2.0, width / 2.0
    corners = []
    for sl in (-half_l, half_l):
        for sw in (-half_w, half_w):
            corners.append((cx + sl * sh + sw * ch, cy + sl * ch - sw * sh))
    ox, oy = plane.grid_origin
    x_max = ox + plane.grid_width * plane.grid_resolution
    y_max = oy + plane.grid_height * plane.grid_resolution
    for x, y in corners:
        if not (ox <= x <= x_max and oy <= y <= y_max):
            raise CoverageError(
                f"target footprint corner ({x:.2f}, {y:.2f}) outside grid "
                f"[{ox:.2f}, {x_max:.2f}] x [{oy:.2f}, {y_max:.2f}]"
            )
    world = plane.world_points()
    mask = _target_hit(world[..., 0], world[..., 1], target)
    area = int(mask.sum())
    if area == 0:
        raise CoverageError(
            "grid too coarse: no cell center falls inside the target footprint"
        )
    return GroundTruth(footprint_mask=mask, footprint_area=area, plane=plane)


# ---------------------------------------------------------------------------
# configuration documents


def _listify(obj):
    if isinstance(obj, (tuple, list)):
        return [_listify(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    return obj


def scene_spec_to_yaml(spec: SceneSpec) -> str:
    """Serialize a SceneSpec as a YAML document (schema in the README)."""
    doc = _listify(asdict(spec))
    return yaml.safe_dump(doc, sort_keys=True)


def _coerce(doc: dict, key: str, caster, location: str):
    try:
        return caster(doc[key])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value {doc[key]!r}: {e}", location=location) from e


def _pair(v, location: str) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(f"expected a 2-element list, got {v!r}", location=location)
    return (float(v[0]), float(v[1]))


def _floats(v, location: str) -> tuple[float, ...]:
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"expected a non-empty list, got {v!r}", location=location)
    try:
        return tuple(float(x) for x in v)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value {v!r}: {e}", location=location) from e


def scene_spec_from_yaml(text: str) -> SceneSpec:
    """Parse a SceneSpec document, reporting the offending key on errors."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        loc = f"line {mark.line + 1}" if mark is not None else "document"
        raise ConfigError(f"not valid YAML: {e}", location=loc) from e
    if not isinstance(doc, dict):
        raise ConfigError("document must be a mapping", location="document")
    for required in ("seed", "density"):
        if required not in doc:
            raise ConfigError("required key missing", location=required)
    kwargs = {
        "seed": _coerce(doc, "seed", int, "seed"),
        "density": _coerce(doc, "density", float, "density"),
    }
    simple = {"condition": str, "variance_scale": float}
    for key, caster in simple.items():
        if key in doc:
            kwargs[key] = _coerce(doc, key, caster, key)
    for key in (
        "area",
        "tree_height_range",
        "trunk_length_range",
        "trunk_radius_range",
        "leaf_size_range",
        "crown_radius_factor_range",
    ):
        if key in doc:
            kwargs[key] = _pair(doc[key], key)
    if "target" in doc:
        tdoc = doc["target"]
        if not isinstance(tdoc, dict):
            raise ConfigError("target must be a mapping", location="target")
        tkw = {}
        for key, caster in (
            ("posture", str), ("heading", float), ("emission", float),
        ):
            if key in tdoc:
                tkw[key] = _coerce(tdoc, key, caster, f"target.{key}")
        if "center" in tdoc:
            tkw["center"] = _pair(tdoc["center"], "target.center")
        if "footprint" in tdoc and tdoc["footprint"] is not None:
            tkw["footprint"] = _pair(tdoc["footprint"], "target.footprint")
        try:
            kwargs["target"] = TargetSpec(**tkw)
        except ValueError as e:
            raise ConfigError(str(e), location="target") from e
    if "thermal" in doc:
        hdoc = doc["thermal"]
        if not isinstance(hdoc, dict):
            raise ConfigError("thermal must be a mapping", location="thermal")
        defaults = ThermalParams()
        hkw = {}
        for key in hdoc:
            if not hasattr(defaults, key):
                raise ConfigError("unknown thermal parameter", location=f"thermal.{key}")
            current = getattr(defaults, key)
            if isinstance(current, tuple):
                hkw[key] = _floats(hdoc[key], f"thermal.{key}")
            else:
                hkw[key] = _coerce(hdoc, key, float, f"thermal.{key}")
        kwargs["thermal"] = ThermalParams(**hkw)
    known = {
        "seed", "density", "condition", "variance_scale", "area",
        "tree_height_range", "trunk_length_range", "trunk_radius_range",
        "leaf_size_range", "crown_radius_factor_range", "target", "thermal",
    }
    for key in doc:
        if key not in known:
            raise ConfigError("unknown key", location=key)
    try:
        return SceneSpec(**kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def with_density(spec: SceneSpec, density: float, seed: Optional[int] = None,
                 condition: Optional[str] = None) -> SceneSpec:
    """Convenience for sweep protocols: vary one knob, keep the rest."""
    changes = {"density": density}
    if seed is not None:
        changes["seed"] = seed
    if condition is not None:
        changes["condition"] = condition
    return replace(spec, **changes)
