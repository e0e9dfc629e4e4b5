"""KITTI 2D label / detection file parsing, serialization, and dataset splits.

Label files are UTF-8 text, one object per line, space-separated:
15 fields for ground truth, 16 for detections (the extra field is the
confidence score). Field order follows the KITTI devkit:

    type truncated occluded alpha left top right bottom
    height width length x y z rotation_y [score]
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union


class KittiFormatError(ValueError):
    """Line has the wrong number of fields or a non-numeric field."""


class KittiGeometryError(ValueError):
    """Bounding box violates left < right or top < bottom."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, origin top-left, sub-pixel precision."""

    left: float
    top: float
    right: float
    bottom: float

    def __post_init__(self):
        for v in (self.left, self.top, self.right, self.bottom):
            if not (v == v and abs(v) != float("inf")):
                raise KittiGeometryError(f"non-finite coordinate in {self}")
        if not self.left < self.right:
            raise KittiGeometryError(
                f"left ({self.left}) must be < right ({self.right})")
        if not self.top < self.bottom:
            raise KittiGeometryError(
                f"top ({self.top}) must be < bottom ({self.bottom})")

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def height(self) -> float:
        return self.bottom - self.top

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center_x(self) -> float:
        return (self.left + self.right) / 2.0


@dataclass(frozen=True)
class ObjectLabel:
    """One KITTI ground-truth record.

    3D fields (dimensions, location, rotation_y) are carried through for
    round-tripping but never interpreted by this toolkit.
    """

    class_name: str
    truncated: float
    occluded: int
    alpha: float
    bbox: BoundingBox
    dimensions: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    location: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation_y: float = 0.0

    def __post_init__(self):
        if not self.class_name:
            raise KittiFormatError("empty class name")
        if not 0.0 <= self.truncated <= 1.0:
            raise KittiFormatError(
                f"truncated {self.truncated} outside [0, 1]")


@dataclass(frozen=True)
class Detection:
    """A detector output: class, box, and confidence score in [0, 1]."""

    class_name: str
    bbox: BoundingBox
    score: float
    truncated: float = 0.0
    occluded: int = 0
    alpha: float = 0.0
    dimensions: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    location: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation_y: float = 0.0

    def __post_init__(self):
        if not self.class_name:
            raise KittiFormatError("empty class name")
        if not 0.0 <= self.score <= 1.0:
            raise KittiFormatError(f"score {self.score} outside [0, 1]")


AnyObject = Union[ObjectLabel, Detection]


@dataclass
class FrameAnnotations:
    """All objects of one frame, in file order."""

    frame_id: str
    objects: List[AnyObject] = field(default_factory=list)
    image_size: Optional[Tuple[int, int]] = None  # (width, height) if known


def parse_label_line(line: str, line_number: int = 0) -> AnyObject:
    """Parse one label (15 fields) or detection (16 fields) line.

    Numeric parsing is locale-independent (dot decimal separator).
    """
    fields = line.split()
    if len(fields) not in (15, 16):
        raise KittiFormatError(
            f"line {line_number}: expected 15 or 16 fields, got {len(fields)}")
    try:
        nums = [float(f) for f in fields[1:]]
    except ValueError as exc:
        raise KittiFormatError(f"line {line_number}: {exc}") from None

    try:
        bbox = BoundingBox(left=nums[3], top=nums[4], right=nums[5], bottom=nums[6])
    except KittiGeometryError as exc:
        raise KittiGeometryError(f"line {line_number}: {exc}") from None

    common = dict(
        class_name=fields[0],
        truncated=nums[0],
        occluded=int(nums[1]),
        alpha=nums[2],
        bbox=bbox,
        dimensions=(nums[7], nums[8], nums[9]),
        location=(nums[10], nums[11], nums[12]),
        rotation_y=nums[13],
    )
    if len(fields) == 16:
        return Detection(score=nums[14], **common)
    return ObjectLabel(**common)


def _fmt(value: float) -> str:
    """Serialize a float with at least 2 decimals, round-trip exact."""
    text = f"{value:.2f}"
    if float(text) == value:
        return text
    return repr(value)


def format_label_line(obj: AnyObject) -> str:
    fields = [
        obj.class_name,
        _fmt(obj.truncated),
        str(obj.occluded),
        _fmt(obj.alpha),
        _fmt(obj.bbox.left),
        _fmt(obj.bbox.top),
        _fmt(obj.bbox.right),
        _fmt(obj.bbox.bottom),
        _fmt(obj.dimensions[0]),
        _fmt(obj.dimensions[1]),
        _fmt(obj.dimensions[2]),
        _fmt(obj.location[0]),
        _fmt(obj.location[1]),
        _fmt(obj.location[2]),
        _fmt(obj.rotation_y),
    ]
    if isinstance(obj, Detection):
        fields.append(_fmt(obj.score))
    return " ".join(fields)


def read_frame(path: Union[str, Path]) -> FrameAnnotations:
    """Read one frame's label/detection file. frame_id is the file stem."""
    path = Path(path)
    objects: List[AnyObject] = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                objects.append(parse_label_line(line, line_number=i))
            except (KittiFormatError, KittiGeometryError) as exc:
                raise type(exc)(f"{path}: {exc}") from None
    return FrameAnnotations(frame_id=path.stem, objects=objects)


def write_frame(frame: FrameAnnotations, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [format_label_line(obj) for obj in frame.objects]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def read_frame_dir(directory: Union[str, Path],
                   suffix: str = ".txt") -> Dict[str, FrameAnnotations]:
    """Read every label file under a directory, keyed by frame_id."""
    directory = Path(directory)
    frames = {}
    for path in sorted(directory.glob(f"*{suffix}")):
        if path.name == "DERIVED.txt":  # provenance tag, not a frame
            continue
        frames[path.stem] = read_frame(path)
    return frames


BUCKETS = ("train", "test", "validation")


@dataclass
class SplitManifest:
    """Deterministic train/test/validation assignment of frame ids."""

    seed: int
    ratios: Tuple[float, float, float]
    assignment: Dict[str, str]

    def bucket(self, name: str) -> List[str]:
        return sorted(f for f, b in self.assignment.items() if b == name)


def make_split(frame_ids: Sequence[str],
               ratios: Tuple[float, float, float],
               seed: int) -> SplitManifest:
    """Shuffle frame ids with a seeded PRNG and cut at the ratio boundaries.

    The shuffle uses Python's ``random.Random`` (Mersenne Twister,
    Fisher-Yates shuffle) over the sorted id list, so the manifest is a pure
    function of (set of ids, ratios, seed). Earlier buckets get
    floor(ratio * n) ids; the last bucket takes the remainder.
    """
    if not frame_ids:
        raise ValueError("frame_ids is empty")
    if len(set(frame_ids)) != len(frame_ids):
        raise ValueError("frame_ids contains duplicates")
    if any(r < 0 for r in ratios):
        raise ValueError(f"negative ratio in {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios {ratios} do not sum to 1")

    ids = sorted(frame_ids)
    rng = random.Random(seed)
    rng.shuffle(ids)

    n = len(ids)
    n_train = int(ratios[0] * n)
    n_test = int(ratios[1] * n)
    assignment: Dict[str, str] = {}
    for fid in ids[:n_train]:
        assignment[fid] = "train"
    for fid in ids[n_train:n_train + n_test]:
        assignment[fid] = "test"
    for fid in ids[n_train + n_test:]:
        assignment[fid] = "validation"
    return SplitManifest(seed=seed, ratios=tuple(ratios), assignment=assignment)


def write_manifest(manifest: SplitManifest, path: Union[str, Path]) -> None:
    """Serialize as 'frame_id<TAB>bucket' lines under a header comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    a, b, c = manifest.ratios
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# seed={manifest.seed} ratios={a},{b},{c}\n")
        for fid in sorted(manifest.assignment):
            fh.write(f"{fid}\t{manifest.assignment[fid]}\n")


def read_manifest(path: Union[str, Path]) -> SplitManifest:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# seed="):
            raise KittiFormatError(f"{path}: missing manifest header")
        parts = header[2:].split()
        seed = int(parts[0].split("=")[1])
        ratios = tuple(float(x) for x in parts[1].split("=")[1].split(","))
        assignment = {}
        for line in fh:
            if not line.strip():
                continue
            fid, bucket = line.rstrip("\n").split("\t")
            if bucket not in BUCKETS:
                raise KittiFormatError(f"{path}: unknown bucket {bucket!r}")
            assignment[fid] = bucket
    return SplitManifest(seed=seed, ratios=ratios, assignment=assignment)


def frames_with_class(frames: Dict[str, FrameAnnotations],
                      class_name: str) -> List[str]:
    """Frame ids containing at least one object of the class, sorted."""
    return sorted(
        fid for fid, f in frames.items()
        if any(o.class_name == class_name for o in f.objects))


def frames_with_only_class(frames: Dict[str, FrameAnnotations],
                           class_name: str) -> List[str]:
    """Frame ids whose objects are exclusively the class (and non-empty)."""
    return sorted(
        fid for fid, f in frames.items()
        if f.objects and all(o.class_name == class_name for o in f.objects))


__all__ = [
    "BoundingBox", "ObjectLabel", "Detection", "FrameAnnotations",
    "SplitManifest", "KittiFormatError", "KittiGeometryError",
    "parse_label_line", "format_label_line", "read_frame", "write_frame",
    "read_frame_dir", "make_split", "write_manifest", "read_manifest",
    "frames_with_class", "frames_with_only_class", "replace",
]
