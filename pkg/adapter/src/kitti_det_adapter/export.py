"""Export detector output as KITTI-style 16-field detection files.

One file per image, named after the image stem. An image with no
detections above the confidence floor still gets an (empty) file, so
downstream tooling can tell "no detections" from "frame never processed".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable, List

import numpy as np
from PIL import Image, UnidentifiedImageError

if TYPE_CHECKING:
    from .config import AdapterConfig

LOGGER = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass
class RawDetection:
    """One detector prediction in the detector's own vocabulary."""

    label: str
    left: float
    top: float
    right: float
    bottom: float
    score: float


def format_detection_line(class_name: str, left: float, top: float,
                          right: float, bottom: float, score: float) -> str:
    """KITTI 15-field layout plus the trailing score; 3D fields zeroed."""
    return (f"{class_name} 0.00 0 0.00 "
            f"{left:.2f} {top:.2f} {right:.2f} {bottom:.2f} "
            f"0.00 0.00 0.00 0.00 0.00 0.00 0.00 {score:.2f}")


def _clamp_box(det: RawDetection, width: int, height: int):
    """Clamp to image bounds; None when nothing is left."""
    left = min(max(det.left, 0.0), float(width))
    top = min(max(det.top, 0.0), float(height))
    right = min(max(det.right, 0.0), float(width))
    bottom = min(max(det.bottom, 0.0), float(height))
    if left >= right or top >= bottom:
        return None
    return left, top, right, bottom


def export_frame(detections: List[RawDetection], width: int, height: int,
                 conf_floor: float, class_map: dict) -> List[str]:
    """Filter, map, and clamp one frame's detections into output lines."""
    lines = []
    for det in detections:
        if det.label not in class_map:
            continue
        if det.score < conf_floor:
            continue
        clamped = _clamp_box(det, width, height)
        if clamped is None:
            LOGGER.debug("dropping degenerate box %s", det)
            continue
        score = min(det.score, 1.0)
        lines.append(format_detection_line(class_map[det.label], *clamped,
                                           score))
    return lines


def export_detections(config: "AdapterConfig",
                      detector: Callable[[np.ndarray], List[RawDetection]]
                      ) -> int:
    """Run the detector over every image; returns the file count.

    Per-image failures are logged and skipped; the run continues.
    """
    config.output_dir.mkdir(parents=True, exist_ok=True)
    images = sorted(p for p in config.image_dir.iterdir()
                    if p.suffix.lower() in IMAGE_SUFFIXES)
    written = 0
    for path in images:
        try:
            with Image.open(path) as img:
                rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
        except (OSError, UnidentifiedImageError) as exc:
            LOGGER.warning("skipping unreadable image %s: %s", path, exc)
            continue
        height, width = rgb.shape[:2]
        try:
            detections = detector(rgb)
        except Exception as exc:
            LOGGER.warning("detector failed on %s: %s", path, exc)
            continue
        lines = export_frame(detections, width, height,
                             config.conf_floor, config.class_map)
        out_path = config.output_dir / f"{path.stem}.txt"
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line + "\n")
        written += 1
    return written
