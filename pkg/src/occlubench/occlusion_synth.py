"""Synthetic occlusion and grayscale variants of test images.

Occluders (a carried box covering the upper half, a wall covering the lower
half) are scaled to each pedestrian's labelled box and pasted opaquely, so
overlay size tracks apparent distance without needing depth data. Images are
8-bit RGB numpy arrays of shape (height, width, 3).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from PIL import Image as PilImage

from .kitti_io import BoundingBox, FrameAnnotations
from .label_transform import BodyPart, split_box

LOGGER = logging.getLogger(__name__)


class OverlayKind(enum.Enum):
    BOX = "box"    # carried box, covers the upper half
    WALL = "wall"  # wall, covers the lower half


class ResizeFilter(enum.Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"


_PIL_FILTER = {
    ResizeFilter.NEAREST: PilImage.Resampling.NEAREST,
    ResizeFilter.BILINEAR: PilImage.Resampling.BILINEAR,
}

_KIND_REGION = {
    OverlayKind.BOX: BodyPart.UPPER,
    OverlayKind.WALL: BodyPart.LOWER,
}


@dataclass
class OverlaySpec:
    """Recipe for one occlusion experiment."""

    kind: OverlayKind
    texture: np.ndarray
    width_factor: float = 1.0
    resize_filter: ResizeFilter = ResizeFilter.BILINEAR
    target_class: str = "Pedestrian"

    def __post_init__(self):
        if self.texture.size == 0:
            raise ValueError("empty overlay texture")
        if not self.width_factor > 0:
            raise ValueError(f"width_factor must be > 0, got {self.width_factor}")

    @property
    def region(self) -> BodyPart:
        return _KIND_REGION[self.kind]


def load_image(path: Union[str, Path]) -> np.ndarray:
    with PilImage.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()


def save_image(image: np.ndarray, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    PilImage.fromarray(image, mode="RGB").save(path, format="PNG")


def target_region(bbox: BoundingBox, spec: OverlaySpec,
                  image_size: Tuple[int, int]) -> Optional[BoundingBox]:
    """Occluder placement for one labelled box, clipped to image bounds.

    Vertical extent is the upper/lower half per the overlay kind; horizontal
    extent is the box center +/- width_factor * width / 2. Returns None when
    clipping eliminates the region.
    """
    width, height = image_size
    half = split_box(bbox, spec.region)
    extent = bbox.width * spec.width_factor / 2.0
    left = bbox.center_x - extent
    right = bbox.center_x + extent

    left = max(left, 0.0)
    top = max(half.top, 0.0)
    right = min(right, float(width))
    bottom = min(half.bottom, float(height))
    if left >= right or top >= bottom:
        return None
    return BoundingBox(left, top, right, bottom)


def round_region(region: BoundingBox) -> Tuple[int, int, int, int]:
    """Expand to whole pixels: floor(left/top), ceil(right/bottom)."""
    return (math.floor(region.left), math.floor(region.top),
            math.ceil(region.right), math.ceil(region.bottom))


def composite(image: np.ndarray, region: BoundingBox, texture: np.ndarray,
              resize_filter: ResizeFilter = ResizeFilter.BILINEAR) -> np.ndarray:
    """Paste the texture, resampled to the rounded region, opaquely.

    Pixels outside the region are bit-identical to the input. An empty
    rounded region is a warning, not an error.
    """
    h, w = image.shape[:2]
    left, top, right, bottom = round_region(region)
    left, top = max(left, 0), max(top, 0)
    right, bottom = min(right, w), min(bottom, h)
    if left >= right or top >= bottom:
        LOGGER.warning("empty occluder region after rounding, skipping")
        return image.copy()

    patch = PilImage.fromarray(texture, mode="RGB").resize(
        (right - left, bottom - top), resample=_PIL_FILTER[resize_filter])
    out = image.copy()
    out[top:bottom, left:right] = np.asarray(patch, dtype=np.uint8)
    return out


def occlude_frame(image: np.ndarray, labels: FrameAnnotations,
                  spec: OverlaySpec) -> np.ndarray:
    """Apply one occluder per target-class object, in label-file order.

    Later labels win where occluders overlap.
    """
    h, w = image.shape[:2]
    out = image
    for obj in labels.objects:
        if obj.class_name != spec.target_class:
            continue
        region = target_region(obj.bbox, spec, (w, h))
        if region is None:
            LOGGER.warning("frame %s: occluder for %s fully clipped",
                           labels.frame_id, obj.bbox)
            continue
        out = composite(out, region, spec.texture, spec.resize_filter)
    return out if out is not image else image.copy()


# ITU-R BT.601 luma weights; the round is half-up, not banker's.
_LUMA = (0.299, 0.587, 0.114)


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Convert to grayscale while keeping three identical channels.

    Y = round(0.299 R + 0.587 G + 0.114 B), round half away from zero.
    Idempotent bit-exactly.
    """
    rgb = image.astype(np.float64)
    y = _LUMA[0] * rgb[..., 0] + _LUMA[1] * rgb[..., 1] + _LUMA[2] * rgb[..., 2]
    y = np.floor(y + 0.5).astype(np.uint8)
    return np.repeat(y[..., None], 3, axis=2)


@dataclass
class FrameReport:
    frame_id: str
    occluders_applied: int
    occluders_clipped: int


def occlude_directory(image_dir: Union[str, Path], label_dir: Union[str, Path],
                      out_dir: Union[str, Path], spec: OverlaySpec,
                      grayscale: bool = False) -> List[FrameReport]:
    """Occlude every PNG in image_dir using its same-stem label file.

    With ``grayscale``, conversion happens after occlusion (the occluded
    grayscale variant is to_grayscale(occluded), not the reverse).
    """
    from .kitti_io import read_frame

    image_dir, label_dir, out_dir = Path(image_dir), Path(label_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for img_path in sorted(image_dir.glob("*.png")):
        label_path = label_dir / f"{img_path.stem}.txt"
        if not label_path.exists():
            LOGGER.warning("no label file for %s, copying unmodified", img_path.stem)
            labels = FrameAnnotations(frame_id=img_path.stem)
        else:
            labels = read_frame(label_path)
        image = load_image(img_path)
        h, w = image.shape[:2]
        targets = [o for o in labels.objects if o.class_name == spec.target_class]
        regions = [target_region(o.bbox, spec, (w, h)) for o in targets]
        occluded = occlude_frame(image, labels, spec)
        if grayscale:
            occluded = to_grayscale(occluded)
        save_image(occluded, out_dir / img_path.name)
        reports.append(FrameReport(
            frame_id=img_path.stem,
            occluders_applied=sum(r is not None for r in regions),
            occluders_clipped=sum(r is None for r in regions)))
    return reports


def grayscale_directory(image_dir: Union[str, Path],
                        out_dir: Union[str, Path]) -> int:
    image_dir, out_dir = Path(image_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for img_path in sorted(image_dir.glob("*.png")):
        save_image(to_grayscale(load_image(img_path)), out_dir / img_path.name)
        count += 1
    return count


__all__ = [
    "OverlayKind", "ResizeFilter", "OverlaySpec", "FrameReport",
    "load_image", "save_image", "target_region", "round_region",
    "composite", "occlude_frame", "to_grayscale",
    "occlude_directory", "grayscale_directory",
]
