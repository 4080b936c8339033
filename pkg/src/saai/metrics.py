"""Evaluation metrics against simulator ground truth.

Two numbers summarize a detection result on the focal-plane grid:

  target visibility  fraction of the ground-truth footprint cells that
                     received a detection (any value > 0 counts)
  precision          intensity sum over true-positive cells divided by
                     the intensity sum over all detected cells

For a binary mask every detected cell contributes intensity 1, so
precision degenerates to a cell-count ratio.  For a visibility map the
contributions are the per-cell visibility values, which rewards results
that concentrate their mass on the target.

The sweep driver in this module runs the full density-by-condition
comparison grid for both pipelines and reduces it to per-cell means and
spreads, writable as CSV rows and a summary JSON document.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import GridMismatchError
from .forest import (
    GroundTruth,
    SceneSpec,
    generate_scene,
    linear_path,
    render_ground_truth,
    simulate_flight,
    with_density,
)
from .geometry import CameraIntrinsics, default_plane_for_flight
from .integrate import SaaiImage, ad_on_integral, saai
from .rx import AnomalyMask

METHODS = ("saai", "ad_on_integral")

ResultLike = Union[AnomalyMask, SaaiImage, np.ndarray]


@dataclass(frozen=True)
class EvalResult:
    """Metrics for one detection result against one ground truth."""

    target_visibility: float
    precision: float
    tp_intensity: float
    fp_intensity: float
    tp_cells: int
    fp_cells: int
    no_detection: bool  # nothing detected at all; precision forced to 0


def _result_values(result: ResultLike) -> np.ndarray:
    if isinstance(result, AnomalyMask):
        return result.mask.astype(np.float64)
    if isinstance(result, SaaiImage):
        return result.visibility
    return np.asarray(result, dtype=np.float64)


def evaluate(
    result: ResultLike, truth: GroundTruth, min_visibility: float = 0.0
) -> EvalResult:
    """Score a detection raster against the footprint mask.

    ``min_visibility`` raises the detection predicate from value > 0 to
    value > min_visibility; it defaults off so that a single unoccluded
    sighting counts toward visibility.
    """
    values = _result_values(result)
    footprint = truth.footprint_mask
    if values.shape != footprint.shape:
        raise GridMismatchError(
            f"result grid {values.shape} does not match truth grid {footprint.shape}"
        )
    plane = getattr(result, "plane", None)
    if plane is not None and not plane.same_grid(truth.plane):
        raise GridMismatchError("result and truth use different focal-plane grids")
    if min_visibility < 0.0:
        raise ValueError(f"min_visibility must be >= 0, got {min_visibility}")
    detected = values > min_visibility
    tp = detected & footprint
    fp = detected & ~footprint
    tp_cells = int(tp.sum())
    fp_cells = int(fp.sum())
    tp_intensity = float(values[tp].sum())
    fp_intensity = float(values[fp].sum())
    denom = tp_intensity + fp_intensity
    no_detection = not detected.any()
    precision = tp_intensity / denom if denom > 0.0 else 0.0
    return EvalResult(
        target_visibility=tp_cells / truth.footprint_area,
        precision=precision,
        tp_intensity=tp_intensity,
        fp_intensity=fp_intensity,
        tp_cells=tp_cells,
        fp_cells=fp_cells,
        no_detection=no_detection,
    )


# ---------------------------------------------------------------------------
# comparison sweep


def _default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(fov=math.radians(50.0), width=512, height=512)


@dataclass(frozen=True)
class SweepProtocol:
    """Flight and detection parameters for one comparison run."""

    frame_count: int = 10
    sampling_distance: float = 1.0  # meters between captures
    altitude: float = 35.0  # meters AGL
    t_saai: float = 90.0
    t_ad: float = 99.0
    epsilon: float = 0.0
    fp_distance: Optional[float] = None  # None: focus on the ground
    intrinsics: CameraIntrinsics = field(default_factory=_default_intrinsics)

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.sampling_distance < 0.0:
            raise ValueError("sampling_distance must be >= 0")
        if self.altitude <= 0.0:
            raise ValueError("altitude must be > 0")

    @property
    def aperture(self) -> float:
        """Synthetic aperture length a spanned by the captures."""
        return self.frame_count * self.sampling_distance


@dataclass(frozen=True)
class SweepRow:
    """One (method, density, condition, seed) measurement."""

    method: str
    density: float
    condition: str
    seed: int
    visibility: float
    precision: float
    tp_intensity: float
    fp_intensity: float
    tp_cells: int
    fp_cells: int


def run_protocol(spec: SceneSpec, protocol: SweepProtocol) -> dict[str, EvalResult]:
    """Render one flight and evaluate both pipelines on it."""
    scene = generate_scene(spec)
    path = linear_path(
        protocol.frame_count, protocol.sampling_distance, protocol.altitude
    )
    frames = simulate_flight(scene, protocol.intrinsics, path)
    fp_distance = (
        protocol.altitude if protocol.fp_distance is None else protocol.fp_distance
    )
    plane = default_plane_for_flight(path, protocol.intrinsics, fp_distance=fp_distance)
    truth = render_ground_truth(scene, plane)
    s = saai(frames, protocol.intrinsics, plane, t=protocol.t_saai,
             epsilon=protocol.epsilon)
    a = ad_on_integral(frames, protocol.intrinsics, plane, t=protocol.t_ad,
                       epsilon=protocol.epsilon)
    return {"saai": evaluate(s, truth), "ad_on_integral": evaluate(a, truth)}


def compare_conditions(
    densities: Sequence[float],
    conditions: Sequence[str],
    seeds: Sequence[int],
    protocol: SweepProtocol = SweepProtocol(),
    base: SceneSpec = SceneSpec(seed=0, density=0.0),
    workers: int = 1,
) -> list[SweepRow]:
    """Run the full comparison grid; rows come back in grid order.

    Each (density, condition, seed) run is independent, so ``workers``
    may fan the grid out over a thread pool without changing any output.
    """
    combos = [
        (density, condition, seed)
        for density in densities
        for condition in conditions
        for seed in seeds
    ]

    def one(combo):
        density, condition, seed = combo
        spec = with_density(base, density, seed=seed, condition=condition)
        results = run_protocol(spec, protocol)
        return [
            SweepRow(
                method=method,
                density=density,
                condition=condition,
                seed=seed,
                visibility=r.target_visibility,
                precision=r.precision,
                tp_intensity=r.tp_intensity,
                fp_intensity=r.fp_intensity,
                tp_cells=r.tp_cells,
                fp_cells=r.fp_cells,
            )
            for method, r in results.items()
        ]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_combo = list(pool.map(one, combos))
    else:
        per_combo = [one(c) for c in combos]
    return [row for rows in per_combo for row in rows]


def summarize(rows: Sequence[SweepRow]) -> list[dict]:
    """Per-(method, density, condition) means and spreads, in row order."""
    order: list[tuple] = []
    groups: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        key = (row.method, row.density, row.condition)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        method, density, condition = key
        group = groups[key]
        vis = np.array([r.visibility for r in group])
        prec = np.array([r.precision for r in group])
        fp = np.array([r.fp_intensity for r in group])
        out.append(
            {
                "method": method,
                "density": density,
                "condition": condition,
                "seeds": len(group),
                "mean_visibility": float(vis.mean()),
                "std_visibility": float(vis.std()),
                "mean_precision": float(prec.mean()),
                "std_precision": float(prec.std()),
                "mean_fp_intensity": float(fp.mean()),
            }
        )
    return out


CSV_HEADER = (
    "method",
    "density",
    "condition",
    "seed",
    "visibility",
    "precision",
    "tp_intensity",
    "fp_intensity",
    "tp_cells",
    "fp_cells",
)


def write_rows_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [r.method, r.density, r.condition, r.seed, repr(r.visibility),
                 repr(r.precision), repr(r.tp_intensity), repr(r.fp_intensity),
                 r.tp_cells, r.fp_cells]
            )


def read_rows_csv(path) -> list[SweepRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                SweepRow(
                    method=rec["method"],
                    density=float(rec["density"]),
                    condition=rec["condition"],
                    seed=int(rec["seed"]),
                    visibility=float(rec["visibility"]),
                    precision=float(rec["precision"]),
                    tp_intensity=float(rec["tp_intensity"]),
                    fp_intensity=float(rec["fp_intensity"]),
                    tp_cells=int(rec["tp_cells"]),
                    fp_cells=int(rec["fp_cells"]),
                )
            )
    return rows


def write_summary_json(rows: Sequence[SweepRow], protocol: SweepProtocol, path) -> None:
    """Plot-ready document: the summary table plus the protocol that made it."""
    doc = {
        "protocol": {
            "frame_count": protocol.frame_count,
            "sampling_distance": protocol.sampling_distance,
            "aperture": protocol.aperture,
            "altitude": protocol.altitude,
            "t_saai": protocol.t_saai,
            "t_ad": protocol.t_ad,
            "epsilon": protocol.epsilon,
        },
        "cells": summarize(rows),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
