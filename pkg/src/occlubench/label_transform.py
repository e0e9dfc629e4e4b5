"""Derive half-body label variants: cut pedestrian boxes at the vertical midpoint.

The upper/lower variants keep every non-target object untouched. Derived
label directories are materialized next to (never over) their source, with a
DERIVED.txt provenance file so a derived set is never halved twice.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
from pathlib import Path
from typing import Union

from .kitti_io import (
    BoundingBox,
    FrameAnnotations,
    format_label_line,
    read_frame,
    write_frame,
)

PROVENANCE_FILE = "DERIVED.txt"


class BodyPart(enum.Enum):
    FULL = "full"
    UPPER = "upper"
    LOWER = "lower"


def split_box(bbox: BoundingBox, part: BodyPart) -> BoundingBox:
    """Cut the box at its exact vertical midpoint (real coordinates).

    Upper and Lower partition the original box: their union is the original
    and their areas sum exactly to the original area.
    """
    if part is BodyPart.FULL:
        return bbox
    mid = bbox.top + (bbox.bottom - bbox.top) / 2.0
    if part is BodyPart.UPPER:
        return BoundingBox(bbox.left, bbox.top, bbox.right, mid)
    return BoundingBox(bbox.left, mid, bbox.right, bbox.bottom)


def transform_frame(frame: FrameAnnotations, part: BodyPart,
                    target_class: str = "Pedestrian") -> FrameAnnotations:
    """Halve the bbox of every target-class object; pass the rest through.

    Truncated/occluded flags are not adjusted after halving; they are
    carried over unchanged.
    """
    objects = []
    for obj in frame.objects:
        if obj.class_name == target_class:
            obj = dataclasses.replace(obj, bbox=split_box(obj.bbox, part))
        objects.append(obj)
    return FrameAnnotations(frame_id=frame.frame_id, objects=objects,
                            image_size=frame.image_size)


def _dir_content_hash(directory: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(directory.glob("*.txt")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def transform_directory(src: Union[str, Path], dst: Union[str, Path],
                        part: BodyPart, target_class: str = "Pedestrian",
                        force: bool = False) -> int:
    """Materialize a derived label directory. Returns the frame count.

    Refuses to run on a directory that already carries a provenance tag
    (prevents double application) and refuses a non-empty destination
    unless ``force``.
    """
    src = Path(src)
    dst = Path(dst)
    if (src / PROVENANCE_FILE).exists():
        raise ValueError(
            f"{src} is already a derived label directory; refusing to "
            "halve twice")
    if dst.exists() and any(dst.iterdir()) and not force:
        raise FileExistsError(f"{dst} exists and is not empty (use force)")
    dst.mkdir(parents=True, exist_ok=True)

    count = 0
    for path in sorted(src.glob("*.txt")):
        if path.name == PROVENANCE_FILE:
            continue
        frame = read_frame(path)
        write_frame(transform_frame(frame, part, target_class),
                    dst / path.name)
        count += 1

    provenance = (
        f"part={part.value}\n"
        f"target_class={target_class}\n"
        f"source={src}\n"
        f"source_sha256={_dir_content_hash(src)}\n"
    )
    (dst / PROVENANCE_FILE).write_text(provenance, encoding="utf-8")
    return count


__all__ = ["BodyPart", "split_box", "transform_frame", "transform_directory",
           "PROVENANCE_FILE"]
