"""Command-line interface: one subcommand per pipeline stage.

Exit codes: 0 success, 1 runtime failure (bad data, missing files),
2 usage error. The ARS_LOG environment variable (error, warn, info, debug)
sets the log level; all randomness sits behind --seed, so identical inputs
and flags produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .coverage import (
    coverage_histogram,
    histogram_to_dict,
    parse_bins,
    save_histogram_csv,
)
from .errors import BoxlabelError, ParseError
from .hull import (
    DEFAULT_NEAR_PLANE,
    DEFAULT_RESOLUTION,
    carve,
    hull_to_instance,
    load_masks,
    save_hull,
)
from .jsonio import dumps, dump_json, format_number
from .labeler import (
    DEFAULT_CONFIG,
    generate_dataset,
    load_annotations,
)
from .metrics import (
    DEFAULT_IOU_THRESHOLD,
    agreement_report_to_dict,
    compare_annotation_sets,
    eval_report_to_dict,
    evaluate_detections,
    load_predictions,
)
from .scene import InstanceSet, load_frames, load_instances, save_instances

log = logging.getLogger("boxlabel")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _configure_logging():
    raw = os.environ.get("ARS_LOG", "warn").lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        print(f"boxlabel: ignoring unknown ARS_LOG value {raw!r}", file=sys.stderr)
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _volume_arg(text: str):
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError(
            f"volume needs 6 comma-separated numbers x0,y0,z0,x1,y1,z1, got {text!r}"
        )
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"volume values must be numbers, got {text!r}")
    return vals[:3], vals[3:]


def _bins_arg(text: str):
    try:
        return parse_bins(text)
    except ParseError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxlabel",
        description="Generate, audit and serve 2D detection labels from "
        "posed camera frames and 3D virtual boxes.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser(
        "label",
        help="reproject instances into every frame and write a dataset",
        formatter_class=fmt,
    )
    p.add_argument("--frames", required=True, help="frame manifest JSON")
    p.add_argument("--instances", required=True, help="instances JSON")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--format", default="yolo", choices=("yolo", "json"),
                   help="label file format")
    p.add_argument("--split", action="store_true",
                   help="also write a train/val split")
    p.add_argument("--seed", type=int, default=42, help="split shuffle seed")
    p.add_argument("--train-fraction", type=float, default=0.8,
                   help="fraction of frames in the train split")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes")

    p = sub.add_parser(
        "carve",
        help="intersect silhouette masks into a voxel hull and a box",
        formatter_class=fmt,
    )
    p.add_argument("--frames", required=True, help="frame manifest JSON")
    p.add_argument("--masks", required=True, help="silhouette masks JSON")
    p.add_argument("--out", required=True, help="output hull voxel file")
    p.add_argument("--volume", type=_volume_arg, default=None,
                   help="carve volume x0,y0,z0,x1,y1,z1 "
                   "(default: bounding box of the camera positions)")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION,
                   help="voxel edge length in meters")
    p.add_argument("--near-plane", type=float, default=DEFAULT_NEAR_PLANE,
                   help="minimum camera-space depth")
    p.add_argument("--box-out", default=None,
                   help="also write the fitted box as an instances JSON")
    p.add_argument("--class-id", type=int, default=0, help="class id for --box-out")
    p.add_argument("--class-name", default="object", help="class name for --box-out")

    p = sub.add_parser(
        "coverage",
        help="histogram the viewpoints covering one instance",
        formatter_class=fmt,
    )
    p.add_argument("--frames", required=True, help="frame manifest JSON")
    p.add_argument("--instances", required=True, help="instances JSON")
    p.add_argument("--object", type=int, required=True, help="instance id")
    p.add_argument("--bins", type=_bins_arg, default="36x18",
                   help="theta x phi bin counts")
    p.add_argument("--visible-only", action="store_true",
                   help="count only frames whose label survives the size filters")
    p.add_argument("--out", default=None,
                   help="write histogram JSON here instead of stdout")
    p.add_argument("--csv", default=None, help="also write a CSV grid here")

    p = sub.add_parser(
        "eval",
        help="score detector predictions against ground-truth annotations",
        formatter_class=fmt,
    )
    p.add_argument("--preds", required=True, help="predictions JSON")
    p.add_argument("--gt", required=True, help="ground-truth annotations JSON")
    p.add_argument("--iou-th", type=float, default=DEFAULT_IOU_THRESHOLD,
                   help="overlap threshold for a match")
    p.add_argument("--eleven-point", action="store_true",
                   help="11-point interpolated AP instead of exact area")
    p.add_argument("--out", default=None, help="write the full report JSON here")

    p = sub.add_parser(
        "agree",
        help="compare two annotation sets of the same frames",
        formatter_class=fmt,
    )
    p.add_argument("--candidate", required=True, help="annotations JSON under test")
    p.add_argument("--reference", required=True, help="annotations JSON taken as truth")
    p.add_argument("--iou-th", type=float, default=DEFAULT_IOU_THRESHOLD,
                   help="overlap threshold for a match")
    p.add_argument("--out", default=None, help="write the full report JSON here")

    p = sub.add_parser(
        "serve",
        help="run the local annotation/refinement HTTP server",
        formatter_class=fmt,
    )
    p.add_argument("--frames", required=True, help="frame manifest JSON")
    p.add_argument("--instances", default=None,
                   help="instances JSON (default: start with an empty set)")
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8787, help="TCP port")

    return parser


def _cmd_label(args) -> int:
    frames = load_frames(args.frames)
    instances = load_instances(args.instances)
    stats = generate_dataset(
        frames,
        instances,
        DEFAULT_CONFIG,
        args.out,
        format=args.format,
        split_seed=args.seed if args.split else None,
        train_fraction=args.train_fraction,
        jobs=args.jobs,
    )
    print(f"frames {stats.frames_written}")
    print(f"annotations {stats.annotations_written}")
    for cid in sorted(stats.per_class):
        print(f"class {cid} {stats.per_class[cid]}")
    # timing goes to stderr: stdout stays byte-identical across reruns
    print(f"elapsed_seconds {stats.elapsed_seconds:.3f}", file=sys.stderr)
    return 0


def _cmd_carve(args) -> int:
    frames = load_frames(args.frames)
    masks = load_masks(args.masks)
    if args.volume is not None:
        volume = args.volume
    else:
        centers = np.array([f.world_T_cam.translation for f in frames])
        if centers.size == 0:
            raise ParseError("no frames to derive a carve volume from")
        volume = (centers.min(axis=0), centers.max(axis=0))
        log.info("carve volume from cameras: %s .. %s", volume[0], volume[1])
    hull = carve(
        masks, frames, volume=volume,
        resolution=args.resolution, near_plane=args.near_plane,
    )
    save_hull(hull, args.out)
    box = hull_to_instance(
        hull, class_id=args.class_id, instance_id=0, class_name=args.class_name
    )
    if args.box_out:
        iset = InstanceSet(class_table={args.class_id: args.class_name}, instances=[box])
        save_instances(iset, args.box_out)
    print(f"voxels {hull.voxel_count()}")
    print(f"size {' '.join(format_number(float(s)) for s in box.size)}")
    return 0


def _cmd_coverage(args) -> int:
    frames = load_frames(args.frames)
    instances = load_instances(args.instances)
    box = instances.get(args.object)
    theta_bins, phi_bins = args.bins if isinstance(args.bins, tuple) else parse_bins(args.bins)
    hist = coverage_histogram(
        frames, box,
        theta_bins=theta_bins, phi_bins=phi_bins,
        visible_only=args.visible_only,
    )
    doc = histogram_to_dict(hist)
    if args.out:
        dump_json(doc, args.out)
    else:
        sys.stdout.write(dumps(doc) + "\n")
    if args.csv:
        save_histogram_csv(hist, args.csv)
    return 0


def _cmd_eval(args) -> int:
    preds = load_predictions(args.preds)
    gt_frames = load_annotations(args.gt)
    gts = {lf.frame_id: list(lf.annotations) for lf in gt_frames}
    report = evaluate_detections(preds, gts, args.iou_th, eleven_point=args.eleven_point)
    print(f"precision {format_number(report.overall.precision)}")
    print(f"recall {format_number(report.overall.recall)}")
    print(f"mAP {format_number(report.mean_ap)}")
    print(f"avgIOU {format_number(report.overall.avg_iou)}")
    if args.out:
        dump_json(eval_report_to_dict(report), args.out)
    return 0


def _cmd_agree(args) -> int:
    candidate = load_annotations(args.candidate)
    reference = load_annotations(args.reference)
    report = compare_annotation_sets(candidate, reference, args.iou_th)
    print(f"precision {format_number(report.overall.precision)}")
    print(f"recall {format_number(report.overall.recall)}")
    print(f"avgIOU {format_number(report.overall.avg_iou)}")
    if args.out:
        dump_json(agreement_report_to_dict(report), args.out)
    return 0


def _cmd_serve(args) -> int:
    from .server import run_server

    frames = load_frames(args.frames)
    if args.instances:
        instances = load_instances(args.instances)
    else:
        instances = InstanceSet(class_table={}, instances=[])
    run_server(frames, instances, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "label": _cmd_label,
    "carve": _cmd_carve,
    "coverage": _cmd_coverage,
    "eval": _cmd_eval,
    "agree": _cmd_agree,
    "serve": _cmd_serve,
}


def run(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except BoxlabelError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
