"""Detection evaluation: IoU, greedy matching, PR curves, AP/mAP, and
per-frame inherent confidence.

Two PR-curve modes exist. ConfidenceSweep (the default) fixes the IoU
threshold and sweeps the score cutoff, which is the convention behind
community mAP numbers. IouSweep keeps every detection and sweeps the IoU
threshold over a grid instead.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .kitti_io import BoundingBox, Detection, FrameAnnotations, ObjectLabel

DEFAULT_IOU_GRID = tuple(i / 20 for i in range(1, 20))  # 0.05 .. 0.95


class CurveMode(enum.Enum):
    CONFIDENCE_SWEEP = "confidence"
    IOU_SWEEP = "iou"


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area, real-valued, in [0, 1]."""
    ix = min(a.right, b.right) - max(a.left, b.left)
    iy = min(a.bottom, b.bottom) - max(a.top, b.top)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


@dataclass
class MatchResult:
    pairs: List[Tuple[int, int, float]]  # (det index, gt index, iou)
    unmatched_detections: List[int]
    unmatched_groundtruth: List[int]
    iou_threshold: float


def match_detections(dets: Sequence[Detection], gts: Sequence[ObjectLabel],
                     class_name: str, iou_threshold: float) -> MatchResult:
    """Greedy one-to-one matching within a class.

    Detections are processed in descending score (ties keep input order) and
    each takes the still-unmatched ground truth of maximal IoU, provided
    that IoU reaches the threshold. IoU ties go to the lower gt index.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold {iou_threshold} outside (0, 1]")
    det_idx = [i for i, d in enumerate(dets) if d.class_name == class_name]
    gt_idx = [i for i, g in enumerate(gts) if g.class_name == class_name]
    det_idx.sort(key=lambda i: -dets[i].score)

    taken = set()
    pairs = []
    unmatched_dets = []
    for di in det_idx:
        best_gi, best_iou = -1, 0.0
        for gi in gt_idx:
            if gi in taken:
                continue
            v = iou(dets[di].bbox, gts[gi].bbox)
            if v > best_iou:
                best_gi, best_iou = gi, v
        if best_gi >= 0 and best_iou >= iou_threshold:
            taken.add(best_gi)
            pairs.append((di, best_gi, best_iou))
        else:
            unmatched_dets.append(di)
    unmatched_gts = [gi for gi in gt_idx if gi not in taken]
    return MatchResult(pairs=pairs, unmatched_detections=unmatched_dets,
                       unmatched_groundtruth=unmatched_gts,
                       iou_threshold=iou_threshold)


@dataclass
class PrCurve:
    points: List[Tuple[float, float, float]]  # (threshold, precision, recall)
    mode: CurveMode
    num_gt: int
    undefined: bool = False  # no ground truth for the class


def _score_ranked_tp_flags(detset: Dict[str, FrameAnnotations],
                           gtset: Dict[str, FrameAnnotations],
                           class_name: str,
                           iou_threshold: float) -> Tuple[List[Tuple[float, bool]], int]:
    """Global (score, is_tp) list, descending score, plus total gt count.

    TP/FP status comes from per-frame greedy matching over all detections
    at once, so it does not depend on any score cutoff.
    """
    flags: List[Tuple[float, bool]] = []
    num_gt = 0
    for fid in sorted(gtset):
        gts = [o for o in gtset[fid].objects if o.class_name == class_name]
        num_gt += len(gts)
        dets = []
        if fid in detset:
            dets = [o for o in detset[fid].objects
                    if isinstance(o, Detection) and o.class_name == class_name]
        result = match_detections(dets, gts, class_name, iou_threshold)
        matched = {di for di, _, _ in result.pairs}
        for di, d in enumerate(dets):
            flags.append((d.score, di in matched))
    flags.sort(key=lambda t: -t[0])
    return flags, num_gt


def pr_curve(detset: Dict[str, FrameAnnotations],
             gtset: Dict[str, FrameAnnotations],
             class_name: str,
             iou_threshold: float = 0.5,
             mode: CurveMode = CurveMode.CONFIDENCE_SWEEP,
             iou_grid: Sequence[float] = DEFAULT_IOU_GRID) -> PrCurve:
    """Precision-recall curve with global accumulation across frames."""
    if mode is CurveMode.IOU_SWEEP:
        return _pr_curve_iou_sweep(detset, gtset, class_name, iou_grid)

    flags, num_gt = _score_ranked_tp_flags(detset, gtset, class_name,
                                           iou_threshold)
    if num_gt == 0:
        return PrCurve(points=[], mode=mode, num_gt=0, undefined=True)

    points = []
    tp = fp = 0
    i = 0
    while i < len(flags):
        cutoff = flags[i][0]
        # consume every detection tied at this score before emitting a point
        while i < len(flags) and flags[i][0] == cutoff:
            tp += flags[i][1]
            fp += not flags[i][1]
            i += 1
        points.append((cutoff, tp / (tp + fp), tp / num_gt))
    return PrCurve(points=points, mode=mode, num_gt=num_gt)


def _pr_curve_iou_sweep(detset, gtset, class_name, iou_grid) -> PrCurve:
    """Paper-literal mode: score cutoff 0, IoU threshold swept over a grid."""
    points = []
    num_gt = 0
    for thr in sorted(iou_grid, reverse=True):
        tp = fp = 0
        num_gt = 0
        for fid in sorted(gtset):
            gts = [o for o in gtset[fid].objects if o.class_name == class_name]
            num_gt += len(gts)
            dets = []
            if fid in detset:
                dets = [o for o in detset[fid].objects
                        if isinstance(o, Detection) and o.class_name == class_name]
            result = match_detections(dets, gts, class_name, thr)
            tp += len(result.pairs)
            fp += len(result.unmatched_detections)
        if num_gt == 0:
            return PrCurve(points=[], mode=CurveMode.IOU_SWEEP, num_gt=0,
                           undefined=True)
        precision = tp / (tp + fp) if tp + fp else 1.0
        points.append((thr, precision, tp / num_gt))
    return PrCurve(points=points, mode=CurveMode.IOU_SWEEP, num_gt=num_gt)


def average_precision(curve: PrCurve) -> Optional[float]:
    """All-points interpolated area under the PR curve.

    The precision envelope is made non-increasing in recall, then summed
    over recall increments from 0. Returns None for an undefined curve.
    """
    if curve.undefined or not curve.points:
        return None
    pts = sorted(((r, p) for _, p, r in curve.points), key=lambda t: t[0])
    # envelope: at each recall use the best precision at recall >= r
    envelope = []
    best = 0.0
    for r, p in reversed(pts):
        best = max(best, p)
        envelope.append((r, best))
    envelope.reverse()
    ap = 0.0
    prev_r = 0.0
    for r, p in envelope:
        ap += (r - prev_r) * p
        prev_r = r
    return ap


@dataclass
class ClassReport:
    ap: Optional[float]
    num_gt: int
    num_det: int
    num_matched: int


@dataclass
class EvalReport:
    per_class: Dict[str, ClassReport]
    mean_ap: Optional[float]
    iou_threshold: float
    mode: CurveMode


def evaluate(detset: Dict[str, FrameAnnotations],
             gtset: Dict[str, FrameAnnotations],
             class_names: Sequence[str],
             iou_threshold: float = 0.5,
             mode: CurveMode = CurveMode.CONFIDENCE_SWEEP) -> EvalReport:
    """AP per class and mAP over classes that have ground truth."""
    per_class = {}
    aps = []
    for cls in class_names:
        curve = pr_curve(detset, gtset, cls, iou_threshold, mode)
        ap = average_precision(curve)
        num_det = num_matched = 0
        for fid in sorted(gtset):
            gts = [o for o in gtset[fid].objects if o.class_name == cls]
            dets = []
            if fid in detset:
                dets = [o for o in detset[fid].objects
                        if isinstance(o, Detection) and o.class_name == cls]
            num_det += len(dets)
            num_matched += len(match_detections(dets, gts, cls, iou_threshold).pairs)
        per_class[cls] = ClassReport(ap=ap, num_gt=curve.num_gt,
                                     num_det=num_det, num_matched=num_matched)
        if ap is not None:
            aps.append(ap)
    mean_ap = sum(aps) / len(aps) if aps else None
    return EvalReport(per_class=per_class, mean_ap=mean_ap,
                      iou_threshold=iou_threshold, mode=mode)


def frame_confidence(dets: Sequence[Detection], gts: Sequence[ObjectLabel],
                     class_name: str, iou_threshold: float = 0.5,
                     aggregate: str = "max") -> float:
    """One confidence value per frame: max (or mean) score over detections
    matched to a ground truth of the class; 0 for a missed frame.
    """
    result = match_detections(dets, gts, class_name, iou_threshold)
    scores = [dets[di].score for di, _, _ in result.pairs]
    if not scores:
        return 0.0
    if aggregate == "mean":
        return sum(scores) / len(scores)
    return max(scores)


def write_report_csv(report: EvalReport, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"# mode={report.mode.value}",
                         f"iou_threshold={report.iou_threshold}"])
        writer.writerow(["class", "ap", "num_gt", "num_det", "num_matched"])
        for cls in sorted(report.per_class):
            r = report.per_class[cls]
            ap = "" if r.ap is None else f"{r.ap:.6f}"
            writer.writerow([cls, ap, r.num_gt, r.num_det, r.num_matched])
        mean_ap = "" if report.mean_ap is None else f"{report.mean_ap:.6f}"
        writer.writerow(["mAP", mean_ap, "", "", ""])


__all__ = [
    "CurveMode", "MatchResult", "PrCurve", "ClassReport", "EvalReport",
    "iou", "match_detections", "pr_curve", "average_precision",
    "evaluate", "frame_confidence", "write_report_csv", "DEFAULT_IOU_GRID",
]
