"""Command-line entry point wiring the toolkit into an experiment pipeline.

Every command writes its artifacts under --out, together with a config.txt
echo of the effective options and a manifest.txt of artifact SHA-256 hashes,
so a rerun can be diffed byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import (
    cascade as cascade_mod,
    confidence_analysis,
    eval_metrics,
    kitti_io,
    label_transform,
    occlusion_synth,
    plots,
    synth_data,
)

LOGGER = logging.getLogger("occlubench")


class CliError(Exception):
    """User-facing error; printed as 'error: <kind>: <detail>' on stderr."""


def _write_config(out_dir: Path, options: Dict[str, object]) -> None:
    lines = [f"{k}={v}" for k, v in sorted(options.items())]
    (out_dir / "config.txt").write_text("\n".join(lines) + "\n",
                                        encoding="utf-8")


def _write_manifest(out_dir: Path) -> None:
    """Hash every artifact under out_dir (manifest.txt excluded)."""
    entries = []
    for path in sorted(out_dir.rglob("*")):
        if path.is_dir() or path.name == "manifest.txt":
            continue
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        entries.append(f"{digest}  {path.relative_to(out_dir).as_posix()}")
    (out_dir / "manifest.txt").write_text("\n".join(entries) + "\n",
                                          encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_detset(path: str) -> Dict[str, kitti_io.FrameAnnotations]:
    p = Path(path)
    if not p.is_dir():
        raise CliError(f"path: detection directory not found: {p}")
    return kitti_io.read_frame_dir(p)


def _load_gtset(path: str) -> Dict[str, kitti_io.FrameAnnotations]:
    p = Path(path)
    if not p.is_dir():
        raise CliError(f"path: label directory not found: {p}")
    return kitti_io.read_frame_dir(p)


def cmd_split_labels(args) -> int:
    out = _out_dir(args)
    part = label_transform.BodyPart(args.part)
    try:
        count = label_transform.transform_directory(
            args.src, out / "labels", part, target_class=args.target_class,
            force=args.force)
    except FileExistsError as exc:
        raise CliError(f"exists: {exc}") from None
    if count == 0:
        LOGGER.warning("no label files found under %s", args.src)
    _write_config(out, {"command": "split-labels", "part": args.part,
                        "class": args.target_class, "in": args.src})
    _write_manifest(out)
    print(f"wrote {count} derived label files to {out / 'labels'}")
    return 0


def cmd_make_split(args) -> int:
    out = _out_dir(args)
    label_dir = Path(args.labels)
    frames = kitti_io.read_frame_dir(label_dir)
    if not frames:
        raise CliError(f"empty: no label files under {label_dir}")
    ids = sorted(frames)
    if args.only_class:
        ids = kitti_io.frames_with_only_class(frames, args.only_class)
        if not ids:
            raise CliError(
                f"empty: no frames containing only {args.only_class!r}")
    ratios = tuple(float(x) for x in args.ratios.split(","))
    if len(ratios) != 3:
        raise CliError(f"ratios: expected three comma-separated values, "
                       f"got {args.ratios!r}")
    try:
        manifest = kitti_io.make_split(ids, ratios, args.seed)
    except ValueError as exc:
        raise CliError(f"ratios: {exc}") from None
    kitti_io.write_manifest(manifest, out / "split.txt")
    _write_config(out, {"command": "make-split", "labels": args.labels,
                        "ratios": args.ratios, "seed": args.seed,
                        "only_class": args.only_class or ""})
    _write_manifest(out)
    sizes = {b: len(manifest.bucket(b)) for b in kitti_io.BUCKETS}
    print(f"split {len(ids)} frames: {sizes}")
    return 0


def _load_texture(args) -> "occlusion_synth.np.ndarray":
    if args.texture:
        tex_path = Path(args.texture)
        if not tex_path.exists():
            raise CliError(f"path: texture file not found: {tex_path}")
        return occlusion_synth.load_image(tex_path)
    asset = Path(__file__).parent / "assets" / f"{args.kind}.png"
    if asset.exists():
        return occlusion_synth.load_image(asset)
    if args.kind == "box":
        return synth_data.box_texture()
    return synth_data.wall_texture()


def cmd_occlude(args) -> int:
    out = _out_dir(args)
    spec = occlusion_synth.OverlaySpec(
        kind=occlusion_synth.OverlayKind(args.kind),
        texture=_load_texture(args),
        width_factor=args.width_factor,
        resize_filter=occlusion_synth.ResizeFilter(args.filter),
        target_class=args.target_class)
    reports = occlusion_synth.occlude_directory(
        args.images, args.labels, out / "images", spec, grayscale=args.gray)
    for r in reports:
        if r.occluders_clipped:
            LOGGER.warning("frame %s: %d occluder(s) fully clipped",
                           r.frame_id, r.occluders_clipped)
    _write_config(out, {"command": "occlude", "kind": args.kind,
                        "width_factor": args.width_factor,
                        "filter": args.filter, "gray": args.gray,
                        "class": args.target_class,
                        "texture": args.texture or "builtin"})
    _write_manifest(out)
    applied = sum(r.occluders_applied for r in reports)
    print(f"occluded {len(reports)} frames ({applied} occluders) -> "
          f"{out / 'images'}")
    return 0


def cmd_grayscale(args) -> int:
    out = _out_dir(args)
    count = occlusion_synth.grayscale_directory(args.images, out / "images")
    _write_config(out, {"command": "grayscale", "images": args.images})
    _write_manifest(out)
    print(f"converted {count} frames -> {out / 'images'}")
    return 0


def cmd_eval(args) -> int:
    out = _out_dir(args)
    detset = _load_detset(args.dets)
    gtset = _load_gtset(args.gt)
    mode = (eval_metrics.CurveMode.IOU_SWEEP if args.mode == "iou"
            else eval_metrics.CurveMode.CONFIDENCE_SWEEP)
    report = eval_metrics.evaluate(detset, gtset, [args.target_class],
                                   iou_threshold=args.iou, mode=mode)
    eval_metrics.write_report_csv(report, out / "eval.csv")
    _write_config(out, {"command": "eval", "dets": args.dets, "gt": args.gt,
                        "class": args.target_class, "iou": args.iou,
                        "mode": args.mode})
    _write_manifest(out)
    mean_ap = "undefined" if report.mean_ap is None else f"{report.mean_ap:.4f}"
    print(f"mAP {mean_ap}")
    return 0


def _parse_tagged_dirs(pairs: Sequence[str]) -> Dict[str, str]:
    tagged = {}
    for pair in pairs:
        if "=" not in pair:
            raise CliError(f"dets: expected tag=path, got {pair!r}")
        tag, path = pair.split("=", 1)
        tagged[tag] = path
    return tagged


def cmd_confidence(args) -> int:
    out = _out_dir(args)
    tagged = _parse_tagged_dirs(args.dets)
    detsets = {tag: _load_detset(path) for tag, path in tagged.items()}
    gtset = _load_gtset(args.gt)
    series = confidence_analysis.build_series(
        detsets, gtset, class_name=args.target_class, iou_threshold=args.iou)
    confidence_analysis.write_series_csv(series, out / "confidence.csv")
    if series.frames:
        ref = args.sort_by if args.sort_by in series.values else sorted(series.values)[0]
        _, view = confidence_analysis.sorted_view(series, ref)
        plots.sorted_confidence_svg(
            view, out / "confidence.svg",
            title=f"Per-frame confidence (sorted by {ref})")
    _write_config(out, {"command": "confidence", "gt": args.gt,
                        "class": args.target_class, "iou": args.iou,
                        "dets": ",".join(sorted(tagged)),
                        "sort_by": args.sort_by})
    _write_manifest(out)
    for tag in sorted(series.values):
        mean = confidence_analysis.mean_confidence(series, tag)
        print(f"{tag}: mean confidence {mean:.4f} over {len(series.frames)} frames")
    return 0


def cmd_compare(args) -> int:
    out = _out_dir(args)
    detsets = {"baseline": _load_detset(args.baseline),
               "variant": _load_detset(args.variant)}
    gtset = _load_gtset(args.gt)
    series = confidence_analysis.build_series(
        detsets, gtset, class_name=args.target_class, iou_threshold=args.iou)
    if not series.frames:
        raise CliError(f"empty: no frames containing {args.target_class!r}")
    stats = confidence_analysis.diff_stats(
        series, "baseline", "variant", lost_threshold=args.lost_threshold)
    confidence_analysis.write_stats_csv(
        [("baseline", "variant", stats)], out / "diff_stats.csv")
    confidence_analysis.write_series_csv(series, out / "confidence.csv")
    plots.difference_svg(stats.decreases, out / "difference.svg",
                         lost_threshold=args.lost_threshold)
    _write_config(out, {"command": "compare", "baseline": args.baseline,
                        "variant": args.variant, "gt": args.gt,
                        "class": args.target_class, "iou": args.iou,
                        "lost_threshold": args.lost_threshold})
    _write_manifest(out)
    print(f"mean decrease {stats.mean_decrease:.4f}; "
          f"lost {stats.frac_lost:.1%}, improved {stats.frac_improved:.1%}")
    return 0


def _load_cascade_params(path: Optional[str]) -> cascade_mod.CascadeParams:
    if path is None:
        return cascade_mod.CascadeParams()
    values: Dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    kwargs: Dict[str, object] = {}
    for key in ("gate_threshold", "pairing_min_horizontal_overlap",
                "vertical_adjacency_tolerance", "duplicate_iou"):
        if key in values:
            kwargs[key] = float(values[key])
    if "fusion_weights" in values:
        kwargs["fusion_weights"] = tuple(
            float(x) for x in values["fusion_weights"].split(","))
    try:
        return cascade_mod.CascadeParams(**kwargs)
    except ValueError as exc:
        raise CliError(f"params: {exc}") from None


def cmd_cascade(args) -> int:
    out = _out_dir(args)
    params = _load_cascade_params(args.params)
    full = _load_detset(args.full)
    upper = _load_detset(args.upper)
    lower = _load_detset(args.lower)
    all_frames = sorted(set(full) | set(upper) | set(lower))

    def dets_of(dset, fid):
        if fid not in dset:
            return []
        return [o for o in dset[fid].objects
                if isinstance(o, kitti_io.Detection)]

    hypotheses = {
        fid: cascade_mod.cascade_decide(
            dets_of(full, fid), dets_of(upper, fid), dets_of(lower, fid),
            params)
        for fid in all_frames
    }
    cascade_mod.write_hypotheses(hypotheses, out,
                                 class_name=args.target_class)
    _write_config(out, {"command": "cascade", "full": args.full,
                        "upper": args.upper, "lower": args.lower,
                        "class": args.target_class,
                        "gate_threshold": params.gate_threshold,
                        "fusion_weights": ",".join(
                            str(w) for w in params.fusion_weights)})
    _write_manifest(out)
    total = sum(len(h) for h in hypotheses.values())
    gated = sum(1 for hs in hypotheses.values() for h in hs if h.gated)
    print(f"{total} hypotheses over {len(all_frames)} frames ({gated} gated)")
    return 0


def cmd_synth(args) -> int:
    out = _out_dir(args)
    frame_ids = synth_data.generate_dataset(out, num_frames=args.frames,
                                            seed=args.seed)
    synth_data.write_textures(out / "textures")
    if args.detections:
        synth_data.perturbed_detections(out / "labels", out / "detections",
                                        seed=args.seed + 1)
    _write_config(out, {"command": "synth", "frames": args.frames,
                        "seed": args.seed, "detections": args.detections})
    _write_manifest(out)
    print(f"generated {len(frame_ids)} synthetic frames under {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occlubench",
        description="Occlusion-robustness benchmarking for KITTI-style "
                    "pedestrian detection")
    parser.add_argument("--jobs", type=int,
                        default=int(os.environ.get("OCCLBENCH_JOBS", "1")),
                        help="max parallel frame workers (default: "
                             "OCCLBENCH_JOBS or 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split-labels", help="derive upper/lower label variant")
    p.add_argument("--part", choices=["upper", "lower"], required=True)
    p.add_argument("--class", dest="target_class", default="Pedestrian")
    p.add_argument("--in", dest="src", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_split_labels)

    p = sub.add_parser("make-split", help="deterministic dataset split manifest")
    p.add_argument("--labels", required=True)
    p.add_argument("--ratios", default="0.4,0.4,0.2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only-class", default=None,
                   help="restrict to frames containing only this class")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_split)

    p = sub.add_parser("occlude", help="insert synthetic occluders")
    p.add_argument("--kind", choices=["box", "wall"], required=True)
    p.add_argument("--texture", default=None,
                   help="occluder texture PNG (default: built-in)")
    p.add_argument("--width-factor", type=float, default=1.0)
    p.add_argument("--filter", choices=["nearest", "bilinear"],
                   default="bilinear")
    p.add_argument("--gray", action="store_true",
                   help="convert to grayscale after occluding")
    p.add_argument("--class", dest="target_class", default="Pedestrian")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_occlude)

    p = sub.add_parser("grayscale", help="three-channel grayscale variant")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grayscale)

    p = sub.add_parser("eval", help="AP / mAP evaluation")
    p.add_argument("--dets", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--class", dest="target_class", default="Pedestrian")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--mode", choices=["confidence", "iou"],
                   default="confidence")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("confidence", help="per-frame confidence table")
    p.add_argument("--dets", action="append", required=True,
                   metavar="TAG=DIR",
                   help="detection dir per model, e.g. full=runs/full")
    p.add_argument("--gt", required=True)
    p.add_argument("--class", dest="target_class", default="Pedestrian")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--sort-by", default="full")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_confidence)

    p = sub.add_parser("compare", help="confidence difference statistics")
    p.add_argument("--baseline", required=True)
    p.add_argument("--variant", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--class", dest="target_class", default="Pedestrian")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--lost-threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cascade", help="gated full/upper/lower fusion")
    p.add_argument("--full", required=True)
    p.add_argument("--upper", required=True)
    p.add_argument("--lower", required=True)
    p.add_argument("--params", default=None,
                   help="key=value parameter file")
    p.add_argument("--class", dest="target_class", default="Pedestrian")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("synth", help="generate the synthetic demo dataset")
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--detections", action="store_true",
                   help="also emit perturbed pseudo-detections")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (kitti_io.KittiFormatError, kitti_io.KittiGeometryError) as exc:
        print(f"error: format: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: path: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
