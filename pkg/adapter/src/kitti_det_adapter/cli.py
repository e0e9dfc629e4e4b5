"""adapter: export pretrained-detector detections in KITTI 16-field format."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .backends import ModelLoadError, load_detector
from .config import DEFAULT_CLASS_MAP, AdapterConfig, parse_class_map
from .export import export_detections


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter",
        description="Run a pretrained detector over an image directory and "
                    "write one KITTI-style 16-field detection file per image")
    parser.add_argument("--model", required=True,
                        help="model spec, e.g. torchvision:fasterrcnn_resnet50_fpn")
    parser.add_argument("--images", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--conf-floor", type=float, default=0.25)
    parser.add_argument("--class-map",
                        default=",".join(f"{k}={v}"
                                         for k, v in DEFAULT_CLASS_MAP.items()),
                        help="detector=KITTI pairs, comma separated")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = AdapterConfig(
            model=args.model, image_dir=args.images, output_dir=args.out,
            conf_floor=args.conf_floor,
            class_map=parse_class_map(args.class_map))
    except ValueError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    if not config.image_dir.is_dir():
        print(f"error: path: image directory not found: {config.image_dir}",
              file=sys.stderr)
        return 2
    try:
        detector = load_detector(config.model)
    except ModelLoadError as exc:
        print(f"error: model: {exc}", file=sys.stderr)
        return 1
    count = export_detections(config, detector)
    print(f"exported detections for {count} images to {config.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
