"""Adapter configuration: model selection, confidence floor, class mapping."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict

DEFAULT_CLASS_MAP = {"person": "Pedestrian", "car": "Car"}


@dataclass
class AdapterConfig:
    model: str                       # "torchvision:<name>" or a weights path
    image_dir: Path
    output_dir: Path
    conf_floor: float = 0.25
    class_map: Dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_CLASS_MAP))

    def __post_init__(self):
        self.image_dir = Path(self.image_dir)
        self.output_dir = Path(self.output_dir)
        if not 0.0 <= self.conf_floor <= 1.0:
            raise ValueError(f"conf_floor {self.conf_floor} outside [0, 1]")
        if not self.class_map:
            raise ValueError("class_map is empty; nothing would be exported")


def parse_class_map(text: str) -> Dict[str, str]:
    """Parse 'person=Pedestrian,car=Car' into a mapping."""
    mapping = {}
    for pair in text.split(","):
        pair = pair.strip()
        if not pair:
            continue
        if "=" not in pair:
            raise ValueError(f"expected detector=KITTI pair, got {pair!r}")
        src, dst = pair.split("=", 1)
        mapping[src.strip()] = dst.strip()
    return mapping
