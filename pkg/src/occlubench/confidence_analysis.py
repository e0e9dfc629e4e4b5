"""Per-frame, per-model confidence tables and difference statistics.

A ConfidenceSeries is one row per model (full / upper / lower / baseline
tags) over the frames that contain the target class, aligned by frame id.
Difference statistics formalize "lost the prediction" as a confidence drop
greater than the lost threshold, or a variant confidence of exactly zero.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .eval_metrics import frame_confidence
from .kitti_io import Detection, FrameAnnotations, ObjectLabel

LOGGER = logging.getLogger(__name__)


@dataclass
class ConfidenceSeries:
    frames: List[str]                  # lexicographic frame ids
    values: Dict[str, List[float]]     # model tag -> aligned confidences

    def __post_init__(self):
        for tag, vals in self.values.items():
            if len(vals) != len(self.frames):
                raise ValueError(
                    f"row {tag!r} has {len(vals)} values for "
                    f"{len(self.frames)} frames")

    def row(self, tag: str) -> List[float]:
        if tag not in self.values:
            raise KeyError(f"unknown model tag {tag!r}")
        return self.values[tag]


@dataclass
class DiffStats:
    mean_decrease: float
    frac_lost: float
    frac_improved: float
    frac_degraded: float
    frac_unchanged: float
    lost_threshold: float
    decreases: List[float]  # per-frame baseline - variant, for plotting


def build_series(detsets: Dict[str, Dict[str, FrameAnnotations]],
                 gtset: Dict[str, FrameAnnotations],
                 class_name: str = "Pedestrian",
                 iou_threshold: float = 0.5,
                 aggregate: str = "max") -> ConfidenceSeries:
    """Confidence table over all frames containing the class.

    A model missing a frame's detection file counts as zero detections.
    """
    frames = sorted(
        fid for fid, f in gtset.items()
        if any(o.class_name == class_name for o in f.objects))
    values: Dict[str, List[float]] = {}
    for tag, detset in detsets.items():
        row = []
        for fid in frames:
            gts = [o for o in gtset[fid].objects
                   if isinstance(o, ObjectLabel)]
            if fid not in detset:
                LOGGER.warning("model %s: no detections for frame %s, "
                               "treating as empty", tag, fid)
                dets: List[Detection] = []
            else:
                dets = [o for o in detset[fid].objects
                        if isinstance(o, Detection)]
            row.append(frame_confidence(dets, gts, class_name,
                                        iou_threshold, aggregate))
        values[tag] = row
    return ConfidenceSeries(frames=frames, values=values)


def sorted_view(series: ConfidenceSeries, reference_tag: str,
                ascending: bool = True) -> Tuple[List[int], ConfidenceSeries]:
    """Stable sort of all rows by one reference row.

    Returns the permutation so other experiments can reuse the ordering.
    """
    ref = series.row(reference_tag)
    perm = sorted(range(len(ref)), key=lambda i: ref[i])
    if not ascending:
        perm = sorted(range(len(ref)), key=lambda i: -ref[i])
    reordered = ConfidenceSeries(
        frames=[series.frames[i] for i in perm],
        values={tag: [vals[i] for i in perm]
                for tag, vals in series.values.items()})
    return perm, reordered


def diff_stats(series: ConfidenceSeries, baseline_tag: str, variant_tag: str,
               lost_threshold: float = 0.5) -> DiffStats:
    """Per-frame decreases (baseline - variant) and their summary.

    A frame is "lost" when the decrease exceeds the threshold or the
    variant confidence is exactly zero while the baseline is not;
    "improved" means the variant beats the baseline; "unchanged" means an
    exactly zero difference.
    """
    baseline = series.row(baseline_tag)
    variant = series.row(variant_tag)
    n = len(baseline)
    if n == 0:
        raise ValueError("empty series")
    decreases = [b - v for b, v in zip(baseline, variant)]
    lost = sum(1 for d, v in zip(decreases, variant)
               if d > lost_threshold or (v == 0.0 and d > 0.0))
    improved = sum(1 for d in decreases if d < 0.0)
    unchanged = sum(1 for d in decreases if d == 0.0)
    degraded = n - lost - improved - unchanged
    return DiffStats(
        mean_decrease=sum(decreases) / n,
        frac_lost=lost / n,
        frac_improved=improved / n,
        frac_degraded=degraded / n,
        frac_unchanged=unchanged / n,
        lost_threshold=lost_threshold,
        decreases=decreases)


def improvement_fraction(series: ConfidenceSeries, tag_a: str,
                         tag_b: str) -> float:
    """Fraction of frames where tag_a's confidence strictly beats tag_b's."""
    a = series.row(tag_a)
    b = series.row(tag_b)
    if not a:
        raise ValueError("empty series")
    return sum(1 for x, y in zip(a, b) if x > y) / len(a)


def mean_confidence(series: ConfidenceSeries, tag: str) -> float:
    row = series.row(tag)
    if not row:
        raise ValueError("empty series")
    return sum(row) / len(row)


def write_series_csv(series: ConfidenceSeries, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tags = sorted(series.values)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_id"] + tags)
        for i, fid in enumerate(series.frames):
            writer.writerow([fid] + [f"{series.values[t][i]:.6f}" for t in tags])


def read_series_csv(path: Union[str, Path]) -> ConfidenceSeries:
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        tags = header[1:]
        frames = []
        values: Dict[str, List[float]] = {t: [] for t in tags}
        for row in reader:
            frames.append(row[0])
            for t, v in zip(tags, row[1:]):
                values[t].append(float(v))
    return ConfidenceSeries(frames=frames, values=values)


def write_stats_csv(rows: Sequence[Tuple[str, str, DiffStats]],
                    path: Union[str, Path]) -> None:
    """One row per (baseline, variant) pair."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["baseline", "variant", "mean_decrease", "frac_lost",
                         "frac_improved", "frac_degraded", "frac_unchanged",
                         "lost_threshold"])
        for baseline, variant, s in rows:
            writer.writerow([
                baseline, variant, f"{s.mean_decrease:.6f}",
                f"{s.frac_lost:.6f}", f"{s.frac_improved:.6f}",
                f"{s.frac_degraded:.6f}", f"{s.frac_unchanged:.6f}",
                f"{s.lost_threshold}"])


__all__ = [
    "ConfidenceSeries", "DiffStats", "build_series", "sorted_view",
    "diff_stats", "improvement_fraction", "mean_confidence",
    "write_series_csv", "read_series_csv", "write_stats_csv",
]
