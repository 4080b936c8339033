"""On-disk dataset format, image quantization, and pose import.

A dataset directory holds::

    manifest.txt      line-delimited records, documented below
    images/*.png      one file per frame

Thermal frames are stored as 16-bit grayscale PNG with the fixed scale
value = round(thermal * 65535); 8 bits would flatten the low-contrast
scenes the detector depends on.  RGB frames are 8-bit with scale 255.

Manifest format, one record per line, fields as ``key=value`` tokens
(floats written with ``repr`` so they parse back bit-exactly)::

    saai-dataset 1
    intrinsics fov=... width=... height=... ppx=... ppy=...
    channels thermal
    origin enu
    frame index=0 file=images/frame_000000.png x=... y=... z=... \
yaw=... pitch=... roll=...

Blank lines and ``#`` comments are ignored, records append cleanly
during capture, and every parse error carries its line number.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from PIL import Image

from .errors import EmptyInputError, GeodeticError, ManifestError
from .geometry import CameraIntrinsics, FocalPlaneSpec, Frame, Pose

MANIFEST_NAME = "manifest.txt"
MANIFEST_MAGIC = "saai-dataset"
MANIFEST_VERSION = 1
IMAGES_DIR = "images"
THERMAL_SCALE = 65535
RGB_SCALE = 255
EARTH_RADIUS = 6_371_000.0  # meters, spherical approximation
GEODETIC_MAX_SPAN = 5_000.0  # meters; beyond this the local tangent lies


@dataclass(frozen=True)
class FrameRecord:
    index: int
    file: str  # relative to the dataset directory
    pose: Pose


@dataclass(frozen=True)
class DatasetManifest:
    version: int
    intrinsics: CameraIntrinsics
    channels: str  # "thermal" or "rgb"
    records: tuple[FrameRecord, ...]
    directory: str


# ---------------------------------------------------------------------------
# quantization


def quantize_thermal(image: np.ndarray) -> np.ndarray:
    """[0, 1] float to uint16 with the documented scale; range-checked."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(
            f"thermal values must lie in [0, 1] before quantization, "
            f"got range [{arr.min()}, {arr.max()}]"
        )
    return np.round(arr * THERMAL_SCALE).astype(np.uint16)


def dequantize_thermal(arr: np.ndarray) -> np.ndarray:
    return np.asarray(arr, dtype=np.float64) / THERMAL_SCALE


def write_thermal_png(path, image: np.ndarray) -> None:
    """Store a [0, 1] raster as 16-bit grayscale PNG."""
    # uint16 input makes Pillow pick the 16-bit grayscale mode on its own
    Image.fromarray(quantize_thermal(image)).save(path, format="PNG")


def read_thermal_png(path) -> np.ndarray:
    with Image.open(path) as img:
        return dequantize_thermal(np.asarray(img, dtype=np.uint16))


def write_rgb_png(path, image: np.ndarray) -> None:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"rgb image must be (H, W, 3), got {arr.shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("rgb values must lie in [0, 1] before quantization")
    Image.fromarray(np.round(arr * RGB_SCALE).astype(np.uint8), mode="RGB").save(
        path, format="PNG"
    )


def read_rgb_png(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / RGB_SCALE


# ---------------------------------------------------------------------------
# manifest


def _format_pose(pose: Pose) -> str:
    x, y, z = (repr(float(v)) for v in pose.position)
    return (
        f"x={x} y={y} z={z} yaw={float(pose.yaw)!r} "
        f"pitch={float(pose.gimbal_pitch)!r} roll={float(pose.gimbal_roll)!r}"
    )


def _parse_fields(tokens: Sequence[str], line: int) -> dict[str, str]:
    fields = {}
    for token in tokens:
        if "=" not in token:
            raise ManifestError(f"malformed field {token!r}", line=line)
        key, value = token.split("=", 1)
        if key in fields:
            raise ManifestError(f"duplicate field {key!r}", line=line)
        fields[key] = value
    return fields


def _take(fields: Mapping[str, str], key: str, line: int, convert):
    if key not in fields:
        raise ManifestError(f"missing field {key!r}", line=line)
    try:
        return convert(fields[key])
    except ValueError as e:
        raise ManifestError(f"field {key!r}: {e}", line=line) from e


def write_dataset(
    frames: Sequence[Frame], intrinsics: CameraIntrinsics, directory
) -> DatasetManifest:
    """Store frames and a manifest; returns the manifest written."""
    if not frames:
        raise EmptyInputError("cannot write a dataset with no frames")
    channels = "thermal" if frames[0].image.ndim == 2 else "rgb"
    for f in frames:
        if ("thermal" if f.image.ndim == 2 else "rgb") != channels:
            raise ValueError("all frames in a dataset must share one channel layout")
    indices = [f.index for f in frames]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ValueError("frame indices must be strictly increasing")

    directory = str(directory)
    os.makedirs(os.path.join(directory, IMAGES_DIR), exist_ok=True)
    records = []
    lines = [
        f"{MANIFEST_MAGIC} {MANIFEST_VERSION}",
        f"intrinsics fov={intrinsics.fov!r} width={intrinsics.width} "
        f"height={intrinsics.height} ppx={intrinsics.principal_point[0]!r} "
        f"ppy={intrinsics.principal_point[1]!r}",
        f"channels {channels}",
        "origin enu",
    ]
    for f in frames:
        rel = os.path.join(IMAGES_DIR, f"frame_{f.index:06d}.png")
        path = os.path.join(directory, rel)
        if channels == "thermal":
            write_thermal_png(path, f.image)
        else:
            write_rgb_png(path, f.image)
        records.append(FrameRecord(index=f.index, file=rel, pose=f.pose))
        lines.append(f"frame index={f.index} file={rel} {_format_pose(f.pose)}")
    with open(os.path.join(directory, MANIFEST_NAME), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return DatasetManifest(
        version=MANIFEST_VERSION,
        intrinsics=intrinsics,
        channels=channels,
        records=tuple(records),
        directory=directory,
    )


def read_manifest(directory) -> DatasetManifest:
    """Parse manifest.txt; every complaint names its line."""
    directory = str(directory)
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        raise ManifestError(f"no {MANIFEST_NAME} in {directory}")
    with open(path) as fh:
        raw_lines = fh.read().splitlines()

    intrinsics = None
    channels = None
    records: list[FrameRecord] = []
    header_seen = False
    for line_no, raw in enumerate(raw_lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        tokens = text.split()
        if not header_seen:
            if tokens[0] != MANIFEST_MAGIC:
                raise ManifestError(
                    f"expected {MANIFEST_MAGIC!r} header, got {tokens[0]!r}",
                    line=line_no,
                )
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise ManifestError("malformed version header", line=line_no)
            if int(tokens[1]) != MANIFEST_VERSION:
                raise ManifestError(
                    f"unsupported version {tokens[1]} (this reader handles "
                    f"{MANIFEST_VERSION})",
                    line=line_no,
                )
            header_seen = True
            continue
        kind = tokens[0]
        if kind == "intrinsics":
            fields = _parse_fields(tokens[1:], line_no)
            intrinsics = CameraIntrinsics(
                fov=_take(fields, "fov", line_no, float),
                width=_take(fields, "width", line_no, int),
                height=_take(fields, "height", line_no, int),
                principal_point=(
                    _take(fields, "ppx", line_no, float),
                    _take(fields, "ppy", line_no, float),
                ),
            )
        elif kind == "channels":
            if len(tokens) != 2 or tokens[1] not in ("thermal", "rgb"):
                raise ManifestError("channels must be 'thermal' or 'rgb'", line=line_no)
            channels = tokens[1]
        elif kind == "origin":
            pass  # descriptive only
        elif kind == "frame":
            fields = _parse_fields(tokens[1:], line_no)
            index = _take(fields, "index", line_no, int)
            if records and index <= records[-1].index:
                raise ManifestError(
                    f"frame index {index} does not increase past "
                    f"{records[-1].index}",
                    line=line_no,
                )
            pose = Pose(
                position=[
                    _take(fields, "x", line_no, float),
                    _take(fields, "y", line_no, float),
                    _take(fields, "z", line_no, float),
                ],
                yaw=_take(fields, "yaw", line_no, float),
                gimbal_pitch=_take(fields, "pitch", line_no, float),
                gimbal_roll=_take(fields, "roll", line_no, float),
            )
            records.append(
                FrameRecord(index=index, file=_take(fields, "file", line_no, str),
                            pose=pose)
            )
        else:
            raise ManifestError(f"unknown record kind {kind!r}", line=line_no)
    if not header_seen:
        raise ManifestError("empty manifest")
    if intrinsics is None:
        raise ManifestError("manifest has no intrinsics record")
    if channels is None:
        raise ManifestError("manifest has no channels record")
    if not records:
        raise ManifestError("manifest has no frame records")
    return DatasetManifest(
        version=MANIFEST_VERSION,
        intrinsics=intrinsics,
        channels=channels,
        records=tuple(records),
        directory=directory,
    )


def read_dataset(directory) -> tuple[list[Frame], CameraIntrinsics]:
    """Load all frames (index order) and the shared intrinsics."""
    manifest = read_manifest(directory)
    frames = []
    for rec in manifest.records:
        path = os.path.join(manifest.directory, rec.file)
        if not os.path.exists(path):
            raise ManifestError(f"missing image file {rec.file}")
        image = (
            read_thermal_png(path)
            if manifest.channels == "thermal"
            else read_rgb_png(path)
        )
        frames.append(Frame(image=image, pose=rec.pose, index=rec.index))
    return frames, manifest.intrinsics


# ---------------------------------------------------------------------------
# focal plane files

_PLANE_FIELDS = (
    ("fp_distance", float),
    ("origin_x", float),
    ("origin_y", float),
    ("resolution", float),
    ("width", int),
    ("height", int),
    ("pitch", float),
    ("roll", float),
    ("cc", float),
    ("ref_altitude", float),
)


def write_plane(path, plane: FocalPlaneSpec) -> None:
    """Store a focal plane as key=value lines next to a dataset."""
    values = {
        "fp_distance": repr(float(plane.fp_distance)),
        "origin_x": repr(float(plane.grid_origin[0])),
        "origin_y": repr(float(plane.grid_origin[1])),
        "resolution": repr(float(plane.grid_resolution)),
        "width": str(plane.grid_width),
        "height": str(plane.grid_height),
        "pitch": repr(float(plane.fp_pitch)),
        "roll": repr(float(plane.fp_roll)),
        "cc": repr(float(plane.compass_correction)),
        "ref_altitude": repr(float(plane.ref_altitude)),
    }
    with open(path, "w") as fh:
        fh.write("\n".join(f"{k}={values[k]}" for k, _ in _PLANE_FIELDS) + "\n")


def read_plane(path) -> FocalPlaneSpec:
    with open(path) as fh:
        raw_lines = fh.read().splitlines()
    fields: dict[str, str] = {}
    for line_no, raw in enumerate(raw_lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ManifestError(f"malformed plane line {text!r}", line=line_no)
        key, value = text.split("=", 1)
        fields[key.strip()] = value.strip()
    parsed = {}
    for key, convert in _PLANE_FIELDS:
        if key not in fields:
            raise ManifestError(f"plane file is missing {key!r}")
        try:
            parsed[key] = convert(fields[key])
        except ValueError as e:
            raise ManifestError(f"plane field {key!r}: {e}") from e
    return FocalPlaneSpec(
        fp_distance=parsed["fp_distance"],
        grid_origin=(parsed["origin_x"], parsed["origin_y"]),
        grid_resolution=parsed["resolution"],
        grid_width=parsed["width"],
        grid_height=parsed["height"],
        fp_pitch=parsed["pitch"],
        fp_roll=parsed["roll"],
        compass_correction=parsed["cc"],
        ref_altitude=parsed["ref_altitude"],
    )


# ---------------------------------------------------------------------------
# display


def hot_colormap(v) -> np.ndarray:
    """Piecewise-linear black-red-yellow-white map; input clamped to [0, 1].

    Accepts scalars or arrays; returns shape ``v.shape + (3,)``.
    """
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    r = np.clip(3.0 * v, 0.0, 1.0)
    g = np.clip(3.0 * v - 1.0, 0.0, 1.0)
    b = np.clip(3.0 * v - 2.0, 0.0, 1.0)
    return np.stack([r, g, b], axis=-1)


def rgb_png_bytes(image: np.ndarray) -> bytes:
    """8-bit PNG of a [0, 1] RGB raster (out-of-range values clamped)."""
    arr = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    rgb = np.round(arr * RGB_SCALE).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def display_png_bytes(raster: np.ndarray) -> bytes:
    """Hot-colormapped 8-bit PNG of a [0, 1] raster, as bytes.

    The single encoder shared by every display output, so identical
    rasters produce identical files.
    """
    rgb = np.round(hot_colormap(raster) * RGB_SCALE).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# geodetic import


def import_geodetic(records: Sequence[Mapping]) -> list[Pose]:
    """Convert latitude/longitude/altitude records to ENU poses.

    The first record anchors the origin.  A local equirectangular
    approximation maps degrees to meters on a spherical earth; it is
    documented as approximate and refuses scenes wider than 5 km.
    Optional ``yaw``, ``gimbal_pitch``, ``gimbal_roll`` fields (radians)
    pass through.
    """
    if not records:
        raise EmptyInputError("no geodetic records")
    for i, rec in enumerate(records):
        for key in ("latitude", "longitude", "altitude"):
            if key not in rec:
                raise GeodeticError(f"record {i} is missing {key!r}")
    lat0 = math.radians(float(records[0]["latitude"]))
    lon0 = math.radians(float(records[0]["longitude"]))
    cos_lat0 = math.cos(lat0)
    poses = []
    easts, norths = [], []
    for rec in records:
        east = (math.radians(float(rec["longitude"])) - lon0) * cos_lat0 * EARTH_RADIUS
        north = (math.radians(float(rec["latitude"])) - lat0) * EARTH_RADIUS
        easts.append(east)
        norths.append(north)
        poses.append(
            Pose(
                position=[east, north, float(rec["altitude"])],
                yaw=float(rec.get("yaw", 0.0)),
                gimbal_pitch=float(rec.get("gimbal_pitch", 0.0)),
                gimbal_roll=float(rec.get("gimbal_roll", 0.0)),
            )
        )
    span = math.hypot(max(easts) - min(easts), max(norths) - min(norths))
    if span > GEODETIC_MAX_SPAN:
        raise GeodeticError(
            f"records span {span:.0f} m; the flat-earth approximation is only "
            f"trusted to {GEODETIC_MAX_SPAN:.0f} m"
        )
    return poses
