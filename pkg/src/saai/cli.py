"""Command-line entry points.

Subcommands::

    simulate   generate a scene, fly it, write a dataset + ground truth
    process    run one pipeline mode over a dataset, write rasters
    evaluate   score both detection routes against stored ground truth
    sweep      density x condition comparison grid over many seeds
    bench      latency benchmark of the streaming pipeline
    serve      HTTP service for the interactive tuning session

Angles are degrees on the command line (operators think in degrees)
and converted to radians internally.  All outputs are deterministic
for fixed inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, replace
from typing import Optional

import numpy as np

from .dataset import (
    display_png_bytes,
    read_dataset,
    read_plane,
    write_dataset,
    write_plane,
    write_thermal_png,
    read_thermal_png,
)
from .errors import ManifestError, SaaiError
from .forest import (
    SceneSpec,
    generate_scene,
    linear_path,
    render_ground_truth,
    scene_spec_from_yaml,
    scene_spec_to_yaml,
    simulate_flight,
)
from .geometry import CameraIntrinsics, FocalPlaneSpec, default_plane_for_flight
from .integrate import ad_on_integral, saai
from .metrics import (
    GroundTruth,
    SweepProtocol,
    compare_conditions,
    evaluate,
    summarize,
    write_rows_csv,
    write_summary_json,
)
from .pipeline import (
    MODES,
    PipelineConfig,
    RenderParams,
    WindowIntegrator,
    collect_stats,
    detect_stage,
    run_pipeline,
)

TRUTH_NAME = "truth.png"
PLANE_NAME = "plane.txt"
SCENE_NAME = "scene.yaml"


# ---------------------------------------------------------------------------
# shared flag groups


def _add_intrinsics_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--width", type=int, default=512, help="image width in pixels")
    p.add_argument("--height", type=int, default=512, help="image height in pixels")
    p.add_argument("--fov", type=float, default=50.0,
                   help="horizontal field of view in degrees")


def _add_flight_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frames", type=int, default=10, help="poses along the line")
    p.add_argument("--spacing", type=float, default=1.0,
                   help="meters between captures")
    p.add_argument("--altitude", type=float, default=35.0, help="flight altitude m")


def _add_scene_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scene", help="scene spec YAML (defaults used when omitted)")
    p.add_argument("--seed", type=int, help="override the scene seed")
    p.add_argument("--density", type=float, help="override trees per hectare")
    p.add_argument("--condition", choices=("cloudy", "sunny"),
                   help="override the illumination condition")


def _add_plane_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fp", type=float, help="focal plane distance FP in meters")
    p.add_argument("--pi", type=float, help="plane pitch P_i in degrees")
    p.add_argument("--ro", type=float, help="plane roll R_o in degrees")
    p.add_argument("--cc", type=float, help="compass correction CC in degrees")


def _intrinsics_from(args) -> CameraIntrinsics:
    return CameraIntrinsics(fov=math.radians(args.fov), width=args.width,
                            height=args.height)


def _scene_spec_from(args) -> SceneSpec:
    if args.scene:
        with open(args.scene) as fh:
            spec = scene_spec_from_yaml(fh.read())
    else:
        spec = SceneSpec(seed=0, density=400.0)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.density is not None:
        changes["density"] = args.density
    if args.condition is not None:
        changes["condition"] = args.condition
    return replace(spec, **changes) if changes else spec


def _plane_with_overrides(plane: FocalPlaneSpec, args) -> FocalPlaneSpec:
    changes = {}
    if args.fp is not None:
        changes["fp_distance"] = args.fp
    if args.pi is not None:
        changes["fp_pitch"] = math.radians(args.pi)
    if args.ro is not None:
        changes["fp_roll"] = math.radians(args.ro)
    if args.cc is not None:
        changes["compass_correction"] = math.radians(args.cc)
    return replace(plane, **changes) if changes else plane


def _load_dataset(directory):
    frames, intrinsics = read_dataset(directory)
    plane_path = os.path.join(directory, PLANE_NAME)
    if os.path.exists(plane_path):
        plane = read_plane(plane_path)
    else:
        plane = default_plane_for_flight([f.pose for f in frames], intrinsics)
    return frames, intrinsics, plane


def _raw_raster(raw) -> np.ndarray:
    """The [0, 1] science raster behind a pipeline output."""
    if hasattr(raw, "visibility"):
        return raw.visibility
    if hasattr(raw, "mask"):
        return raw.mask.astype(np.float64)
    return raw.normalized()


def _echo_params(mode: str, plane: FocalPlaneSpec, t: float, c_n: float,
                 epsilon: float, window: int, frame_count: int) -> None:
    print(f"mode={mode} frames={frame_count} window={window} "
          f"grid={plane.grid_width}x{plane.grid_height}"
          f"@{plane.grid_resolution:g}m")
    print(f"FP={plane.fp_distance:g}m P_i={math.degrees(plane.fp_pitch):g}deg "
          f"R_o={math.degrees(plane.fp_roll):g}deg "
          f"CC={math.degrees(plane.compass_correction):g}deg "
          f"C_n={c_n:g} R_x={t:g} epsilon={epsilon:g}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    spec = _scene_spec_from(args)
    intrinsics = _intrinsics_from(args)
    scene = generate_scene(spec)
    path = linear_path(args.frames, args.spacing, args.altitude)
    frames = simulate_flight(scene, intrinsics, path)
    plane = default_plane_for_flight(path, intrinsics, fp_distance=args.fp)
    truth = render_ground_truth(scene, plane)

    write_dataset(frames, intrinsics, args.out)
    write_plane(os.path.join(args.out, PLANE_NAME), plane)
    write_thermal_png(os.path.join(args.out, TRUTH_NAME),
                      truth.footprint_mask.astype(np.float64))
    with open(os.path.join(args.out, SCENE_NAME), "w") as fh:
        fh.write(scene_spec_to_yaml(spec))
    print(f"wrote {len(frames)} frames to {args.out} "
          f"(seed={spec.seed} density={spec.density:g} "
          f"condition={spec.condition} trees={len(scene.trees)})")
    return 0


def cmd_process(args) -> int:
    frames, intrinsics, plane = _load_dataset(args.dataset)
    plane = _plane_with_overrides(plane, args)
    window = args.window if args.window is not None else len(frames)
    config = PipelineConfig(
        params=RenderParams(plane=plane, t=args.t, c_n=args.cn,
                            epsilon=args.epsilon),
        mode=args.mode,
        sampling_distance=0.0,  # a stored dataset was already distance-gated
        window_size=window,
    )
    integrator = WindowIntegrator(intrinsics, config)
    out = None
    for frame in frames:
        out = integrator.push(frame, detect_stage(frame, config))

    out_dir = args.out if args.out is not None else args.dataset
    os.makedirs(out_dir, exist_ok=True)
    raw_path = os.path.join(out_dir, f"{args.mode}_raw.png")
    display_path = os.path.join(out_dir, f"{args.mode}_display.png")
    write_thermal_png(raw_path, _raw_raster(out.raw))
    with open(display_path, "wb") as fh:
        fh.write(display_png_bytes(out.display))
    _echo_params(args.mode, plane, args.t, args.cn, args.epsilon, window,
                 len(frames))
    print(f"wrote {raw_path} and {display_path}")
    return 0


def _load_truth(directory, plane: FocalPlaneSpec) -> GroundTruth:
    path = os.path.join(directory, TRUTH_NAME)
    if not os.path.exists(path):
        raise ManifestError(
            f"dataset has no {TRUTH_NAME}; generate one with 'saai simulate'"
        )
    mask = read_thermal_png(path) > 0.5
    if mask.shape != plane.shape:
        raise ManifestError(
            f"{TRUTH_NAME} shape {mask.shape} does not match the plane grid "
            f"{plane.shape}"
        )
    return GroundTruth(footprint_mask=mask, footprint_area=int(mask.sum()),
                       plane=plane)


def cmd_evaluate(args) -> int:
    frames, intrinsics, plane = _load_dataset(args.dataset)
    truth = _load_truth(args.dataset, plane)
    results = {
        "saai": evaluate(
            saai(frames, intrinsics, plane, t=args.t_saai, epsilon=args.epsilon),
            truth,
        ),
        "ad_on_integral": evaluate(
            ad_on_integral(frames, intrinsics, plane, t=args.t_ad,
                           epsilon=args.epsilon),
            truth,
        ),
    }
    header = (f"{'method':<16}{'visibility':>11}{'precision':>11}"
              f"{'tp_int':>9}{'fp_int':>9}{'tp':>6}{'fp':>6}")
    print(header)
    for method, r in results.items():
        print(f"{method:<16}{r.target_visibility:>11.4f}{r.precision:>11.4f}"
              f"{r.tp_intensity:>9.2f}{r.fp_intensity:>9.2f}"
              f"{r.tp_cells:>6d}{r.fp_cells:>6d}")
    if args.json:
        doc = {m: asdict(r) for m, r in results.items()}
        with open(args.json, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.json}")
    return 0


def _csv_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args) -> int:
    densities = _csv_floats(args.densities)
    conditions = [c.strip() for c in args.conditions.split(",") if c.strip()]
    seeds = list(range(args.seeds))
    protocol = SweepProtocol(
        frame_count=args.frames,
        sampling_distance=args.spacing,
        altitude=args.altitude,
        t_saai=args.t_saai,
        t_ad=args.t_ad,
        epsilon=args.epsilon,
    )
    started = time.perf_counter()
    rows = compare_conditions(densities, conditions, seeds, protocol,
                              workers=args.workers)
    elapsed = time.perf_counter() - started
    os.makedirs(args.out, exist_ok=True)
    rows_path = os.path.join(args.out, "rows.csv")
    summary_path = os.path.join(args.out, "summary.json")
    write_rows_csv(rows, rows_path)
    write_summary_json(rows, protocol, summary_path)

    print(f"{'method':<16}{'density':>8}{'condition':>10}{'n':>4}"
          f"{'mean_vis':>10}{'mean_prec':>10}{'mean_fp':>9}")
    for cell in summarize(rows):
        print(f"{cell['method']:<16}{cell['density']:>8g}"
              f"{cell['condition']:>10}{cell['seeds']:>4d}"
              f"{cell['mean_visibility']:>10.4f}{cell['mean_precision']:>10.4f}"
              f"{cell['mean_fp_intensity']:>9.1f}")
    print(f"{len(rows)} rows in {elapsed:.1f}s -> {rows_path}, {summary_path}")
    return 0


def _paced(frames, fps: float):
    """Replay at a fixed cadence; fps 0 streams flat out."""
    if fps <= 0:
        yield from frames
        return
    interval = 1.0 / fps
    for frame in frames:
        t0 = time.perf_counter()
        yield frame
        rest = interval - (time.perf_counter() - t0)
        if rest > 0:
            time.sleep(rest)


def cmd_bench(args) -> int:
    frames, intrinsics, plane = _load_dataset(args.dataset)
    plane = _plane_with_overrides(plane, args)
    config = PipelineConfig(
        params=RenderParams(plane=plane, t=args.t, c_n=args.cn,
                            epsilon=args.epsilon),
        mode=args.mode,
        sampling_distance=args.sampling,
        window_size=args.window,
    )
    outputs = 0

    def sink(_):
        nonlocal outputs
        outputs += 1

    stats = run_pipeline(_paced(frames, args.fps), intrinsics, config, sink,
                         serial=args.serial)
    raw = collect_stats(stats)
    steady = collect_stats(stats, warmup=args.warmup)
    budget_ok = steady["end_to_end"]["p95_ms"] <= args.budget

    print(f"frames_in={raw['frames_in']} selected={raw['frames_selected']} "
          f"outputs={outputs} dropped={raw['frames_dropped']} "
          f"source_fps={args.fps:g} mode={args.mode} window={args.window} "
          f"{'serial' if args.serial else 'parallel'}")
    print(f"{'series':<22}{'p50_ms':>9}{'p95_ms':>9}")
    for name, doc in (("select", raw["stages"]["select"]),
                      ("detect", raw["stages"]["detect"]),
                      ("integrate", raw["stages"]["integrate"]),
                      ("end_to_end", raw["end_to_end"]),
                      ("end_to_end(steady)", steady["end_to_end"])):
        print(f"{name:<22}{doc['p50_ms']:>9.1f}{doc['p95_ms']:>9.1f}")
    print(f"budget {args.budget:g} ms p95: {'PASS' if budget_ok else 'FAIL'} "
          f"(steady p95 {steady['end_to_end']['p95_ms']:.1f} ms, "
          f"warmup={args.warmup})")
    if args.out:
        doc = {"raw": raw, "steady": steady, "warmup": args.warmup,
               "source_fps": args.fps, "budget_ms": args.budget,
               "pass": budget_ok}
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    return 0 if budget_ok else 1


def cmd_serve(args) -> int:
    if args.dataset:
        frames, intrinsics, plane = _load_dataset(args.dataset)
    else:
        spec = _scene_spec_from(args)
        intrinsics = _intrinsics_from(args)
        scene = generate_scene(spec)
        path = linear_path(args.frames, args.spacing, args.altitude)
        frames = simulate_flight(scene, intrinsics, path)
        plane = default_plane_for_flight(path, intrinsics)
    plane = _plane_with_overrides(plane, args)
    config = PipelineConfig(
        params=RenderParams(plane=plane, t=args.t, c_n=args.cn,
                            epsilon=args.epsilon),
        mode=args.mode,
        sampling_distance=args.sampling,
        window_size=args.window,
    )

    from .service import create_app

    app = create_app(frames, intrinsics, config, fps=args.fps,
                     multi_session=args.multi_session, static_dir=args.static)
    import uvicorn

    print(f"serving {len(frames)} frames on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saai",
        description="airborne synthetic-aperture anomaly imaging toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a simulated flight to a dataset")
    _add_scene_flags(p)
    _add_intrinsics_flags(p)
    _add_flight_flags(p)
    p.add_argument("--fp", type=float,
                   help="focal plane distance m (default: flight altitude)")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("process", help="run one pipeline mode over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", choices=MODES, default="saai")
    p.add_argument("--t", type=float, default=90.0,
                   help="RX threshold percentile R_x")
    p.add_argument("--cn", type=float, default=1.0, help="contrast gain C_n")
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="RX covariance regularization")
    p.add_argument("--window", type=int,
                   help="window size (default: the whole dataset)")
    _add_plane_flags(p)
    p.add_argument("--out", help="output directory (default: the dataset)")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("evaluate",
                       help="score both detection routes against ground truth")
    p.add_argument("--dataset", required=True)
    p.add_argument("--t-saai", type=float, default=90.0)
    p.add_argument("--t-ad", type=float, default=99.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--json", help="also write the metrics as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="density x condition comparison grid")
    p.add_argument("--densities", default="300,400,500",
                   help="comma-separated trees per hectare")
    p.add_argument("--conditions", default="cloudy,sunny")
    p.add_argument("--seeds", type=int, default=10, help="seeds 0..N-1 per cell")
    _add_flight_flags(p)
    p.add_argument("--t-saai", type=float, default=90.0)
    p.add_argument("--t-ad", type=float, default=99.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="latency benchmark over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", choices=MODES, default="saai")
    p.add_argument("--t", type=float, default=90.0)
    p.add_argument("--cn", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--window", type=int, default=30)
    p.add_argument("--sampling", type=float, default=0.5,
                   help="selection distance gate in meters")
    p.add_argument("--fps", type=float, default=10.0,
                   help="source cadence; 0 streams flat out")
    p.add_argument("--warmup", type=int, default=5,
                   help="leading samples excluded from steady-state stats")
    p.add_argument("--budget", type=float, default=100.0,
                   help="steady-state p95 budget in ms")
    p.add_argument("--serial", action="store_true",
                   help="single-threaded stage execution")
    _add_plane_flags(p)
    p.add_argument("--out", help="also write the stats as JSON")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="HTTP tuning service")
    p.add_argument("--dataset", help="replay this dataset directory")
    _add_scene_flags(p)
    _add_intrinsics_flags(p)
    _add_flight_flags(p)
    p.add_argument("--mode", choices=MODES, default="saai")
    p.add_argument("--t", type=float, default=90.0)
    p.add_argument("--cn", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--window", type=int, default=30)
    p.add_argument("--sampling", type=float, default=0.0,
                   help="selection gate; 0 replays every frame")
    _add_plane_flags(p)
    p.add_argument("--fps", type=float, default=10.0, help="playback cadence")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--multi-session", action="store_true")
    p.add_argument("--static", help="mount a built UI directory at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SaaiError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
