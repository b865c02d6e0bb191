"""Command-line pipeline driver.

Subcommands: synth, cid, fps, segment, abstract, eval, sweep. Report files
are deterministic JSON: identical config + rng seed produce byte-identical
output. Errors print machine-readable JSON to stderr; exit code 2 flags
usage problems (bad flags, missing files), 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig
from .errors import CidsegError, UsageError
from .fileio import (SceneFile, read_label_sidecar, write_hulls,
                     write_json_report, write_label_sidecar, write_point_cloud)
from .geometry import (GroupSamplingPolicy, SegmentDiscretization,
                       SpatialIndex, cid_g, cid_p)
from .metrics import build_gt_instances, evaluate_ap, predictions_from_point_labels
from .pipeline import run_abstraction, run_segmentation
from .synth import SCENE_NAMES, synth_scene


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of printing its own usage blob."""

    def error(self, message):
        raise UsageError(message)


def _add_input_flags(p, labels=True):
    p.add_argument("--input", required=True, help="point cloud file")
    p.add_argument("--format", default=None,
                   choices=["ply-ascii", "ply-binary-le", "xyz-text"],
                   help="override format detection")
    if labels:
        p.add_argument("--labels", default=None,
                       help="sidecar label file (instance or semantic+instance)")


def _add_run_flags(p, seeds=True):
    p.add_argument("--subsample", type=int, default=20000,
                   help="working-resolution point cap")
    if seeds:
        p.add_argument("--seeds", type=int, default=100, help="seed count K")
    p.add_argument("--disc", type=int, default=100,
                   help="segment discretization M")
    p.add_argument("--group-cap", type=int, default=32,
                   help="group downsample cap for group distances")
    p.add_argument("--rng-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="cidseg",
                  description="concavity-induced distance segmentation toolkit")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled scene")
    p.add_argument("--scene", required=True, choices=list(SCENE_NAMES))
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output PLY path")

    p = sub.add_parser("cid", help="pairwise or group distance query")
    _add_input_flags(p, labels=False)
    p.add_argument("--a", type=int, default=None, help="first point index")
    p.add_argument("--b", type=int, default=None, help="second point index")
    p.add_argument("--group-a", default=None, help="comma-separated indices")
    p.add_argument("--group-b", default=None, help="comma-separated indices")
    p.add_argument("--disc", type=int, default=100)
    p.add_argument("--group-cap", type=int, default=32)

    p = sub.add_parser("fps", help="farthest-point seed proposal")
    _add_input_flags(p, labels=False)
    _add_run_flags(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("segment", help="seed, group, label, upsample")
    _add_input_flags(p)
    _add_run_flags(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("abstract", help="merge groups and export convex hulls")
    _add_input_flags(p)
    _add_run_flags(p)
    p.add_argument("--merge-iters", type=int, default=None,
                   help="fixed number of merges T")
    p.add_argument("--merge-thresh", type=float, default=None,
                   help="stop when the minimal group distance exceeds this")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("eval", help="score predicted labels against ground truth")
    _add_input_flags(p)
    p.add_argument("--pred-labels", required=True,
                   help="sidecar with predicted semantic+instance labels")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("sweep", help="seed-count sweep (k = 10..100 step 10)")
    _add_input_flags(p)
    _add_run_flags(p, seeds=False)
    p.add_argument("--k-list", default="10,20,30,40,50,60,70,80,90,100",
                   help="comma-separated seed counts")
    p.add_argument("--runs", type=int, default=1,
                   help="repeated runs with rng seeds rng_seed..rng_seed+runs-1")
    p.add_argument("--out-dir", required=True)
    return top


def _load_cloud(args):
    path = Path(args.input)
    if not path.exists():
        raise UsageError(f"input file not found: {path}")
    side = getattr(args, "labels", None)
    if side is not None:
        side = Path(side)
        if not side.exists():
            raise UsageError(f"label sidecar not found: {side}")
    return SceneFile(path, args.format, side).load()


def _config_from(args, merge_mode=None) -> RunConfig:
    return RunConfig(subsample_size=args.subsample,
                     k_seeds=getattr(args, "seeds", 100),
                     m_discretization=args.disc,
                     group_cap=args.group_cap,
                     merge_mode=merge_mode,
                     merge_iters=getattr(args, "merge_iters", None),
                     merge_thresh=getattr(args, "merge_thresh", None),
                     rng_seed=args.rng_seed)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_synth(args) -> int:
    cloud = synth_scene(args.scene, args.density, args.rng_seed)
    write_point_cloud(cloud, args.out, "ply-binary-le")
    print(json.dumps({"scene": args.scene, "points": cloud.n_points,
                      "out": str(args.out)}))
    return 0


def _parse_index_list(text, what):
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers, got {text!r}")


def _cmd_cid(args) -> int:
    pair_mode = args.a is not None or args.b is not None
    group_mode = args.group_a is not None or args.group_b is not None
    if pair_mode == group_mode:
        raise UsageError("pass either --a/--b or --group-a/--group-b")
    cloud = _load_cloud(args)
    index = SpatialIndex(cloud)
    disc = SegmentDiscretization(args.disc)
    if pair_mode:
        if args.a is None or args.b is None:
            raise UsageError("pair query needs both --a and --b")
        n = cloud.n_points
        if not (0 <= args.a < n and 0 <= args.b < n):
            raise UsageError(f"point indices must lie in [0, {n})")
        value = cid_p(cloud.points[args.a], cloud.points[args.b], index, disc)
        print(json.dumps({"cid_p": value, "a": args.a, "b": args.b}))
    else:
        if args.group_a is None or args.group_b is None:
            raise UsageError("group query needs both --group-a and --group-b")
        ga = _parse_index_list(args.group_a, "--group-a")
        gb = _parse_index_list(args.group_b, "--group-b")
        policy = GroupSamplingPolicy(args.group_cap)
        value = cid_g(ga, gb, index, disc, policy)
        print(json.dumps({"cid_g": value}))
    return 0


def _cmd_fps(args) -> int:
    cloud = _load_cloud(args)
    config = _config_from(args)
    result = run_segmentation(cloud, config)
    out = _out_dir(args)
    report = {
        "config": config.to_json_dict(),
        "rng_seed": config.rng_seed,
        "scene": Path(args.input).name,
        "seed_indices_subsample": [int(i) for i in result.seed_indices],
        "seed_indices_original": [int(result.subsample_indices[i])
                                  for i in result.seed_indices],
        "subsample_points": int(result.subsample.n_points),
    }
    write_json_report(report, out / "seeds.json")
    print(json.dumps({"out": str(out / "seeds.json")}))
    return 0


def _ap_json(result):
    return None if result.ap_report is None else result.ap_report.to_json_dict()


def _cmd_segment(args) -> int:
    cloud = _load_cloud(args)
    config = _config_from(args)
    result = run_segmentation(cloud, config)
    out = _out_dir(args)
    labeled = type(cloud)(cloud.points,
                          semantic_labels=result.semantic_labels,
                          instance_labels=result.instance_labels)
    write_point_cloud(labeled, out / "segmented.ply", "ply-binary-le")
    write_label_sidecar(out / "labels_pred.txt", result.instance_labels,
                        result.semantic_labels)
    report = {
        "config": config.to_json_dict(),
        "rng_seed": config.rng_seed,
        "scene": Path(args.input).name,
        "ap": _ap_json(result),
        "n_points": int(cloud.n_points),
        "n_groups": int(result.assignment.n_groups),
    }
    write_json_report(report, out / "ap_report.json")
    print(json.dumps({"out": str(out / "ap_report.json")}))
    return 0


def _cmd_abstract(args) -> int:
    if (args.merge_iters is None) == (args.merge_thresh is None):
        raise UsageError("pass exactly one of --merge-iters or --merge-thresh")
    mode = "fixed" if args.merge_iters is not None else "threshold"
    cloud = _load_cloud(args)
    config = _config_from(args, merge_mode=mode)
    result = run_abstraction(cloud, config)
    out = _out_dir(args)
    paths = write_hulls(result.parts, out)
    report = {
        "config": config.to_json_dict(),
        "rng_seed": config.rng_seed,
        "scene": Path(args.input).name,
        "n_parts": len(result.parts),
        "hull_files": [p.name for p in paths],
        "merge_history": [
            {"iteration": ev.iteration, "pair": [ev.group_a, ev.group_b],
             "cid_g": ev.value}
            for ev in result.schedule.history
        ],
        "abstraction": None if result.report is None
        else result.report.to_json_dict(),
    }
    write_json_report(report, out / "abstraction_report.json")
    print(json.dumps({"out": str(out / "abstraction_report.json"),
                      "parts": len(result.parts)}))
    return 0


def _cmd_eval(args) -> int:
    cloud = _load_cloud(args)
    if cloud.semantic_labels is None or cloud.instance_labels is None:
        raise UsageError("eval requires ground-truth labels on --input/--labels")
    pred_path = Path(args.pred_labels)
    if not pred_path.exists():
        raise UsageError(f"predicted label file not found: {pred_path}")
    sem, inst = read_label_sidecar(pred_path, cloud.n_points)
    if sem is None:
        sem = inst  # single-column predictions: instance id doubles as class
    preds = predictions_from_point_labels(sem, inst)
    gts = build_gt_instances(cloud)
    ap = evaluate_ap(preds, gts)
    out = _out_dir(args)
    report = {"scene": Path(args.input).name, "ap": ap.to_json_dict()}
    write_json_report(report, out / "eval_report.json")
    print(json.dumps({"out": str(out / "eval_report.json")}))
    return 0


def _cmd_sweep(args) -> int:
    cloud = _load_cloud(args)
    k_list = _parse_index_list(args.k_list, "--k-list")
    if not k_list or any(k < 1 for k in k_list):
        raise UsageError("--k-list needs positive seed counts")
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    out = _out_dir(args)
    entries = []
    for k in k_list:
        runs = []
        for r in range(args.runs):
            config = RunConfig(subsample_size=args.subsample, k_seeds=k,
                               m_discretization=args.disc,
                               group_cap=args.group_cap,
                               rng_seed=args.rng_seed + r)
            result = run_segmentation(cloud, config)
            ap = _ap_json(result)
            runs.append({"rng_seed": config.rng_seed,
                         "ap": ap,
                         "n_groups": int(result.assignment.n_groups)})
        entry = {"k": k, "runs": runs}
        ap50 = [r["ap"]["mean"]["ap50"] for r in runs if r["ap"] is not None]
        if ap50:
            entry["mean_ap50"] = sum(ap50) / len(ap50)
        entries.append(entry)
    report = {
        "scene": Path(args.input).name,
        "rng_seed": args.rng_seed,
        "runs_per_k": args.runs,
        "entries": entries,
    }
    write_json_report(report, out / "sweep.json")
    print(json.dumps({"out": str(out / "sweep.json"), "ks": k_list}))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "cid": _cmd_cid,
    "fps": _cmd_fps,
    "segment": _cmd_segment,
    "abstract": _cmd_abstract,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as e:
        sys.stderr.write(json.dumps(e.to_json_dict()) + "\n")
        return 2
    except CidsegError as e:
        sys.stderr.write(json.dumps(e.to_json_dict()) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
