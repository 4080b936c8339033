#!/usr/bin/env python3
"""Benchmark the streaming pipeline on a synthetic full-scale stream.

No dataset needed: frames are random rasters on a straight flight line,
fed at a fixed cadence so queueing delay reflects real operation rather
than an infinitely fast source.  Prints per-stage latency percentiles
and the verdict against the end-to-end budget.
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from saai.geometry import CameraIntrinsics, Frame, Pose, default_plane_for_flight
from saai.pipeline import (
    MODES,
    PipelineConfig,
    RenderParams,
    collect_stats,
    run_pipeline,
)


def paced(frames, fps):
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


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=60)
    parser.add_argument("--width", type=int, default=512)
    parser.add_argument("--height", type=int, default=512)
    parser.add_argument("--spacing", type=float, default=0.6,
                        help="meters flown between frames")
    parser.add_argument("--altitude", type=float, default=35.0)
    parser.add_argument("--mode", choices=MODES, default="saai")
    parser.add_argument("--t", type=float, default=90.0)
    parser.add_argument("--window", type=int, default=30)
    parser.add_argument("--sampling", type=float, default=0.5)
    parser.add_argument("--fps", type=float, default=10.0,
                        help="source cadence; 0 streams flat out")
    parser.add_argument("--warmup", type=int, default=5)
    parser.add_argument("--budget", type=float, default=100.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--serial", action="store_true")
    parser.add_argument("--out", help="also write the stats as JSON")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    intrinsics = CameraIntrinsics(fov=math.radians(50.0), width=args.width,
                                  height=args.height)
    poses = [Pose(position=[args.spacing * i, 0.0, args.altitude])
             for i in range(args.frames)]
    frames = [
        Frame(image=rng.uniform(size=(args.height, args.width)), pose=p, index=i)
        for i, p in enumerate(poses)
    ]
    plane = default_plane_for_flight(poses, intrinsics)
    config = PipelineConfig(
        params=RenderParams(plane=plane, t=args.t),
        mode=args.mode,
        sampling_distance=args.sampling,
        window_size=args.window,
    )
    stats = run_pipeline(paced(frames, args.fps), intrinsics, config,
                         lambda out: None, serial=args.serial)
    raw = collect_stats(stats)
    steady = collect_stats(stats, warmup=args.warmup)
    ok = steady["end_to_end"]["p95_ms"] <= args.budget

    print(f"{args.width}x{args.height} x{args.frames} frames, window "
          f"{args.window}, mode {args.mode}, source {args.fps:g} fps, "
          f"grid {plane.grid_width}x{plane.grid_height}, "
          f"{'serial' if args.serial else 'parallel'}")
    print(f"{'series':<22}{'p50_ms':>9}{'p95_ms':>9}")
    for name, doc in (("select", raw["stages"]["select"]),
                      ("detect", raw["stages"]["detect"]),
                      ("integrate", raw["stages"]["integrate"]),
                      ("end_to_end", raw["end_to_end"]),
                      ("end_to_end(steady)", steady["end_to_end"])):
        print(f"{name:<22}{doc['p50_ms']:>9.1f}{doc['p95_ms']:>9.1f}")
    print(f"budget {args.budget:g} ms p95: {'PASS' if ok else 'FAIL'} "
          f"(steady p95 {steady['end_to_end']['p95_ms']:.1f} ms, "
          f"warmup={args.warmup})")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"raw": raw, "steady": steady, "warmup": args.warmup,
                       "source_fps": args.fps, "budget_ms": args.budget,
                       "pass": ok}, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
