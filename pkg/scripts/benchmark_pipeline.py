#!/usr/bin/env python3
"""Time the segmentation pipeline stage by stage, plus kernel scaling.

Runs the standard pipeline (subsample, seed, group, label, score) on a
synthetic room sized to --points and prints a wall-clock breakdown. With
--scaling it also times the exact linear-scan distance kernel at several
cloud sizes and fits cost = slope * N + intercept.

    python3 scripts/benchmark_pipeline.py --points 20000 --scaling
"""

import argparse
import time

import numpy as np

from cidseg import (PointCloud, SegmentDiscretization, SpatialIndex, cid_fps,
                    cid_p, group_points)
from cidseg.config import RunConfig
from cidseg.pipeline import run_segmentation
from cidseg.segmentation import subsample_cloud
from cidseg.synth import synth_scene

POINTS_PER_DENSITY = 59.9   # box_room surface area in square meters


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=20000,
                   help="working resolution of the benchmark scene")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--disc", type=int, default=100)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--scaling", action="store_true",
                   help="also fit linear-scan cost against cloud size")
    return p.parse_args()


def stage(label, fn):
    t0 = time.perf_counter()
    out = fn()
    dt = time.perf_counter() - t0
    print(f"  {label:<22s} {dt:8.2f}s")
    return out, dt


def main():
    args = parse_args()
    density = args.points * 1.01 / POINTS_PER_DENSITY
    cloud = synth_scene("box_room", density, rng_seed=0)
    print(f"scene: box_room, {cloud.n_points} points generated, "
          f"working resolution {args.points}")
    disc = SegmentDiscretization(args.disc)
    total = 0.0

    (sub, _), dt = stage("subsample", lambda: subsample_cloud(
        cloud, args.points, args.rng_seed))
    total += dt
    index, dt = stage("spatial index", lambda: SpatialIndex(sub))
    total += dt
    _, dt = stage("acceleration prep", index.enable_acceleration)
    total += dt
    proposal, dt = stage(f"seed selection (K={args.seeds})", lambda: cid_fps(
        sub, index, args.seeds, disc, rng_seed=args.rng_seed))
    total += dt
    _, dt = stage("grouping", lambda: group_points(proposal))
    total += dt
    print(f"  {'total':<22s} {total:8.2f}s")

    t0 = time.perf_counter()
    result = run_segmentation(cloud, RunConfig(
        subsample_size=args.points, k_seeds=args.seeds,
        m_discretization=args.disc, rng_seed=args.rng_seed))
    print(f"end-to-end run_segmentation: {time.perf_counter() - t0:.2f}s "
          f"(AP50 {result.ap_report.mean_ap[0.5]:.3f})")

    if args.scaling:
        sizes = [args.points // 4, args.points // 2, args.points]
        rng = np.random.default_rng(0)
        pairs = rng.integers(0, min(sizes), size=(30, 2))
        indexes = [SpatialIndex(PointCloud(cloud.points[:n]), backend="linear")
                   for n in sizes]
        best = [np.inf] * len(sizes)
        for _ in range(5):
            for pos, idx in enumerate(indexes):
                t0 = time.perf_counter()
                for a, b in pairs:
                    cid_p(idx.points[a], idx.points[b], idx, disc)
                best[pos] = min(best[pos], time.perf_counter() - t0)
        slope, intercept = np.polyfit(np.asarray(sizes, float),
                                      np.asarray(best), 1)
        fitted = slope * np.asarray(sizes, float) + intercept
        resid = np.asarray(best) - fitted
        r2 = 1.0 - float((resid ** 2).sum()) / \
            float(((best - np.mean(best)) ** 2).sum())
        print("linear-scan scaling (30 pair queries, best of 5):")
        for n, t in zip(sizes, best):
            print(f"  N={n:<7d} {t:6.3f}s")
        print(f"  fit: {slope:.3e} s/point, R^2 {r2:.4f}")


if __name__ == "__main__":
    main()
