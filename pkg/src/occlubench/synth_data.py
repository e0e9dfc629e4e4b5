"""Deterministic synthetic dataset for tests, demos, and the acceptance run.

Generates KITTI-style frames with flat-color "pedestrians" and "cars" on a
gradient background, plus matching label files, and a noisy pseudo-detector
that perturbs ground truth into plausible detection files. Everything is a
pure function of the seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from .kitti_io import (
    BoundingBox,
    Detection,
    FrameAnnotations,
    ObjectLabel,
    write_frame,
)
from .occlusion_synth import save_image

IMAGE_WIDTH = 320
IMAGE_HEIGHT = 160


def _background(rng: random.Random) -> np.ndarray:
    sky = np.linspace(180, 120, IMAGE_HEIGHT, dtype=np.float64)
    img = np.zeros((IMAGE_HEIGHT, IMAGE_WIDTH, 3), dtype=np.uint8)
    img[..., 0] = sky[:, None]
    img[..., 1] = sky[:, None] + 10
    img[..., 2] = sky[:, None] + 30
    # road band
    img[IMAGE_HEIGHT * 2 // 3:, :] = (90 + rng.randrange(10),) * 3
    return img


def _draw_person(img: np.ndarray, bbox: BoundingBox,
                 rng: random.Random) -> None:
    l, t, r, b = (int(bbox.left), int(bbox.top),
                  int(bbox.right), int(bbox.bottom))
    mid = (t + b) // 2
    shirt = (rng.randrange(120, 255), rng.randrange(0, 120), rng.randrange(0, 120))
    pants = (rng.randrange(0, 90), rng.randrange(0, 90), rng.randrange(120, 255))
    img[t:mid, l:r] = shirt
    img[mid:b, l:r] = pants
    # head blob
    head_h = max((b - t) // 8, 2)
    cx = (l + r) // 2
    img[max(t - head_h, 0):t, max(cx - 2, 0):cx + 2] = (224, 172, 140)


def _draw_car(img: np.ndarray, bbox: BoundingBox, rng: random.Random) -> None:
    l, t, r, b = (int(bbox.left), int(bbox.top),
                  int(bbox.right), int(bbox.bottom))
    body = (rng.randrange(40, 220),) * 3
    img[t:b, l:r] = body
    img[t:(t + b) // 2, l + (r - l) // 4: r - (r - l) // 4] = (150, 200, 230)


def _random_pedestrian_box(rng: random.Random) -> BoundingBox:
    height = rng.uniform(30, 70)
    width = height * rng.uniform(0.3, 0.45)
    left = rng.uniform(5, IMAGE_WIDTH - width - 5)
    bottom = rng.uniform(IMAGE_HEIGHT * 0.65, IMAGE_HEIGHT - 5)
    return BoundingBox(round(left, 2), round(bottom - height, 2),
                       round(left + width, 2), round(bottom, 2))


def _random_car_box(rng: random.Random) -> BoundingBox:
    height = rng.uniform(20, 40)
    width = height * rng.uniform(1.5, 2.5)
    left = rng.uniform(5, IMAGE_WIDTH - width - 5)
    bottom = rng.uniform(IMAGE_HEIGHT * 0.7, IMAGE_HEIGHT - 5)
    return BoundingBox(round(left, 2), round(bottom - height, 2),
                       round(left + width, 2), round(bottom, 2))


def generate_dataset(root: Union[str, Path], num_frames: int = 20,
                     seed: int = 2024) -> List[str]:
    """Write images/ and labels/ under root; returns the frame ids.

    Every frame has 1-3 pedestrians; roughly half also carry a car.
    """
    root = Path(root)
    image_dir = root / "images"
    label_dir = root / "labels"
    image_dir.mkdir(parents=True, exist_ok=True)
    label_dir.mkdir(parents=True, exist_ok=True)

    rng = random.Random(seed)
    frame_ids = []
    for i in range(num_frames):
        fid = f"{i:06d}"
        frame_ids.append(fid)
        img = _background(rng)
        frame = FrameAnnotations(frame_id=fid,
                                 image_size=(IMAGE_WIDTH, IMAGE_HEIGHT))
        if rng.random() < 0.5:
            car_box = _random_car_box(rng)
            _draw_car(img, car_box, rng)
            frame.objects.append(ObjectLabel(
                class_name="Car", truncated=0.0, occluded=0, alpha=0.0,
                bbox=car_box))
        for _ in range(rng.randrange(1, 4)):
            box = _random_pedestrian_box(rng)
            _draw_person(img, box, rng)
            frame.objects.append(ObjectLabel(
                class_name="Pedestrian", truncated=0.0, occluded=0,
                alpha=0.0, bbox=box))
        save_image(img, image_dir / f"{fid}.png")
        write_frame(frame, label_dir / f"{fid}.txt")
    return frame_ids


def perturbed_detections(label_dir: Union[str, Path],
                         out_dir: Union[str, Path],
                         seed: int = 7,
                         jitter: float = 2.0,
                         score_floor: float = 0.55,
                         miss_rate: float = 0.0) -> int:
    """A deterministic pseudo-detector: ground truth with jittered boxes
    and pseudo-random scores. Returns the frame count.
    """
    from .kitti_io import read_frame

    label_dir, out_dir = Path(label_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    count = 0
    for path in sorted(label_dir.glob("*.txt")):
        if path.name == "DERIVED.txt":
            continue
        frame = read_frame(path)
        dets = FrameAnnotations(frame_id=frame.frame_id)
        for obj in frame.objects:
            if rng.random() < miss_rate:
                continue
            b = obj.bbox
            jittered = BoundingBox(
                round(b.left + rng.uniform(-jitter, jitter), 2),
                round(b.top + rng.uniform(-jitter, jitter), 2),
                round(b.right + rng.uniform(-jitter, jitter), 2),
                round(b.bottom + rng.uniform(-jitter, jitter), 2))
            score = round(rng.uniform(score_floor, 0.99), 2)
            dets.objects.append(Detection(
                class_name=obj.class_name, bbox=jittered, score=score))
        write_frame(dets, out_dir / path.name)
        count += 1
    return count


def box_texture() -> np.ndarray:
    """Cardboard-box texture: brown panels with darker fold lines."""
    tex = np.full((48, 48, 3), (168, 126, 78), dtype=np.uint8)
    tex[22:26, :] = (120, 86, 50)
    tex[:, 22:26] = (120, 86, 50)
    tex[0:3, :] = (140, 102, 60)
    tex[-3:, :] = (140, 102, 60)
    return tex


def wall_texture() -> np.ndarray:
    """Brick-wall texture: red courses with mortar joints."""
    tex = np.full((48, 64, 3), (150, 60, 48), dtype=np.uint8)
    for row in range(0, 48, 8):
        tex[row:row + 2, :] = (200, 196, 188)
        offset = 0 if (row // 8) % 2 == 0 else 8
        for col in range(offset, 64, 16):
            tex[row:row + 8, col:col + 2] = (200, 196, 188)
    return tex


def write_textures(asset_dir: Union[str, Path]) -> Tuple[Path, Path]:
    asset_dir = Path(asset_dir)
    asset_dir.mkdir(parents=True, exist_ok=True)
    box_path = asset_dir / "box.png"
    wall_path = asset_dir / "wall.png"
    save_image(box_texture(), box_path)
    save_image(wall_texture(), wall_path)
    return box_path, wall_path


__all__ = [
    "IMAGE_WIDTH", "IMAGE_HEIGHT", "generate_dataset",
    "perturbed_detections", "box_texture", "wall_texture", "write_textures",
]
