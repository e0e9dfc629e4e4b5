"""Confidence-gated fusion of full / upper / lower body detections.

High-confidence full-body detections pass straight through. Below the gate
threshold, half-body detections are paired geometrically, a full-body box is
reconstructed from them, and scores are fused by weighted average. The
agreement value (max pairwise score difference among contributing sources)
flags possible partial occlusion: sources that disagree are suspect.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .eval_metrics import iou
from .kitti_io import BoundingBox, Detection

SOURCE_TAGS = ("full", "upper", "lower")


@dataclass
class CascadeParams:
    gate_threshold: float = 0.5
    pairing_min_horizontal_overlap: float = 0.3
    vertical_adjacency_tolerance: float = 0.5  # fraction of upper-box height
    fusion_weights: Tuple[float, float, float] = (0.5, 0.25, 0.25)  # full, upper, lower
    duplicate_iou: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.gate_threshold <= 1.0:
            raise ValueError(f"gate_threshold {self.gate_threshold} outside [0, 1]")
        if any(w < 0 for w in self.fusion_weights):
            raise ValueError("fusion weights must be non-negative")
        if abs(sum(self.fusion_weights) - 1.0) > 1e-9:
            raise ValueError(f"fusion weights {self.fusion_weights} do not sum to 1")

    def weight(self, tag: str) -> float:
        return self.fusion_weights[SOURCE_TAGS.index(tag)]


@dataclass
class CascadeHypothesis:
    bbox: BoundingBox
    fused_score: float
    agreement: float                       # max pairwise score difference
    sources: Dict[str, Tuple[float, BoundingBox]]  # tag -> (score, box)
    gated: bool                            # cascade activated for this one


def horizontal_overlap(a: BoundingBox, b: BoundingBox) -> float:
    """Overlap of the two horizontal spans over the shorter width."""
    overlap = min(a.right, b.right) - max(a.left, b.left)
    if overlap <= 0:
        return 0.0
    return overlap / min(a.width, b.width)


def _adjacency_ok(upper: BoundingBox, lower: BoundingBox,
                  params: CascadeParams) -> bool:
    tolerance = params.vertical_adjacency_tolerance * upper.height
    return abs(lower.top - upper.bottom) <= tolerance


def pair_halves(upper_dets: Sequence[Detection],
                lower_dets: Sequence[Detection],
                params: CascadeParams) -> List[Tuple[int, int]]:
    """Greedy upper/lower pairing by descending combined score.

    A pair is admissible when the horizontal spans overlap enough and the
    lower box's top sits near the upper box's bottom. Each detection is
    used at most once.
    """
    candidates = []
    for ui, u in enumerate(upper_dets):
        for li, l in enumerate(lower_dets):
            if horizontal_overlap(u.bbox, l.bbox) < params.pairing_min_horizontal_overlap:
                continue
            if not _adjacency_ok(u.bbox, l.bbox, params):
                continue
            candidates.append((u.score + l.score, ui, li))
    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))

    used_u, used_l = set(), set()
    pairs = []
    for _, ui, li in candidates:
        if ui in used_u or li in used_l:
            continue
        used_u.add(ui)
        used_l.add(li)
        pairs.append((ui, li))
    return pairs


def reconstruct_full(upper_box: Optional[BoundingBox],
                     lower_box: Optional[BoundingBox]) -> BoundingBox:
    """Bounding union of the two halves.

    With only one half present, the box is extended by its own height
    toward the missing half.
    """
    if upper_box is not None and lower_box is not None:
        return BoundingBox(
            min(upper_box.left, lower_box.left),
            upper_box.top,
            max(upper_box.right, lower_box.right),
            lower_box.bottom)
    if upper_box is not None:
        return BoundingBox(upper_box.left, upper_box.top, upper_box.right,
                           upper_box.bottom + upper_box.height)
    if lower_box is not None:
        return BoundingBox(lower_box.left, lower_box.top - lower_box.height,
                           lower_box.right, lower_box.bottom)
    raise ValueError("both halves missing")


def _fuse(sources: Dict[str, Tuple[float, BoundingBox]],
          params: CascadeParams) -> Tuple[float, float]:
    """Renormalized weighted score plus max pairwise score difference."""
    total_w = sum(params.weight(tag) for tag in sources)
    fused = sum(params.weight(tag) * score
                for tag, (score, _) in sources.items()) / total_w
    scores = [s for s, _ in sources.values()]
    agreement = max(scores) - min(scores) if len(scores) > 1 else 0.0
    return fused, agreement


def cascade_decide(full_dets: Sequence[Detection],
                   upper_dets: Sequence[Detection],
                   lower_dets: Sequence[Detection],
                   params: CascadeParams = CascadeParams()
                   ) -> List[CascadeHypothesis]:
    """Fuse one frame's three detection lists into scored hypotheses.

    Full detections at or above the gate pass through ungated. Every half
    pairing (and unpaired half) yields a reconstructed hypothesis; a
    reconstruction overlapping a passed-through full detection (IoU above
    the duplicate threshold) is merged into it instead of standing alone.
    Below-gate full detections that spatially match a reconstruction join
    it as an extra source.
    """
    passed = [d for d in full_dets if d.score >= params.gate_threshold]
    low_full = [d for d in full_dets if d.score < params.gate_threshold]

    hypotheses = [
        CascadeHypothesis(bbox=d.bbox, fused_score=d.score, agreement=0.0,
                          sources={"full": (d.score, d.bbox)}, gated=False)
        for d in passed
    ]

    pairs = pair_halves(upper_dets, lower_dets, params)
    paired_u = {ui for ui, _ in pairs}
    paired_l = {li for _, li in pairs}

    candidates: List[Dict[str, Tuple[float, BoundingBox]]] = []
    for ui, li in pairs:
        candidates.append({"upper": (upper_dets[ui].score, upper_dets[ui].bbox),
                           "lower": (lower_dets[li].score, lower_dets[li].bbox)})
    for ui, u in enumerate(upper_dets):
        if ui not in paired_u:
            candidates.append({"upper": (u.score, u.bbox)})
    for li, l in enumerate(lower_dets):
        if li not in paired_l:
            candidates.append({"lower": (l.score, l.bbox)})

    used_low_full = set()
    for sources in candidates:
        box = reconstruct_full(
            sources.get("upper", (0.0, None))[1],
            sources.get("lower", (0.0, None))[1])
        # attach the best-overlapping low-confidence full detection
        best_fi, best_iou = -1, 0.0
        for fi, f in enumerate(low_full):
            if fi in used_low_full:
                continue
            v = iou(box, f.bbox)
            if v > best_iou:
                best_fi, best_iou = fi, v
        if best_fi >= 0 and best_iou > params.duplicate_iou:
            used_low_full.add(best_fi)
            f = low_full[best_fi]
            sources["full"] = (f.score, f.bbox)

        # duplicate of an already-passed full detection: merge into it
        merged = False
        for hyp in hypotheses:
            if not hyp.gated and iou(box, hyp.bbox) > params.duplicate_iou:
                hyp.sources.update(sources)
                _, hyp.agreement = _fuse(hyp.sources, params)
                merged = True
                break
        if merged:
            continue

        # the gate also covers standalone halves: missing full evidence
        # counts as confidence 0, so halves only speak when 0 < threshold
        full_evidence = sources["full"][0] if "full" in sources else 0.0
        if full_evidence >= params.gate_threshold:
            continue

        fused, agreement = _fuse(sources, params)
        hypotheses.append(CascadeHypothesis(
            bbox=box, fused_score=fused, agreement=agreement,
            sources=sources, gated=True))

    # low-confidence full detections with no supporting halves still pass
    # through gated, carrying only their own evidence
    for fi, f in enumerate(low_full):
        if fi in used_low_full:
            continue
        hypotheses.append(CascadeHypothesis(
            bbox=f.bbox, fused_score=f.score, agreement=0.0,
            sources={"full": (f.score, f.bbox)}, gated=True))
    return hypotheses


def write_hypotheses(hypotheses: Dict[str, List[CascadeHypothesis]],
                     out_dir: Union[str, Path],
                     class_name: str = "Pedestrian") -> None:
    """Emit per-frame 16-field detection files plus a sidecar CSV."""
    out_dir = Path(out_dir)
    det_dir = out_dir / "detections"
    det_dir.mkdir(parents=True, exist_ok=True)
    from .kitti_io import FrameAnnotations, write_frame

    with open(out_dir / "cascade.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_id", "left", "top", "right", "bottom",
                         "fused_score", "agreement", "gated", "sources"])
        for fid in sorted(hypotheses):
            frame = FrameAnnotations(frame_id=fid)
            for h in hypotheses[fid]:
                frame.objects.append(Detection(
                    class_name=class_name, bbox=h.bbox,
                    score=min(max(h.fused_score, 0.0), 1.0)))
                writer.writerow([
                    fid, f"{h.bbox.left:.2f}", f"{h.bbox.top:.2f}",
                    f"{h.bbox.right:.2f}", f"{h.bbox.bottom:.2f}",
                    f"{h.fused_score:.6f}", f"{h.agreement:.6f}",
                    int(h.gated), "+".join(sorted(h.sources))])
            write_frame(frame, det_dir / f"{fid}.txt")


__all__ = [
    "CascadeParams", "CascadeHypothesis", "horizontal_overlap",
    "pair_halves", "reconstruct_full", "cascade_decide", "write_hypotheses",
    "SOURCE_TAGS",
]
