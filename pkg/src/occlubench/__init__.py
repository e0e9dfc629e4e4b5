"""Occlusion-robustness benchmarking toolkit for KITTI-style pedestrian
detection: label variants, synthetic occlusions, mAP and confidence
evaluation, and a confidence-gated detection cascade."""

__version__ = "0.1.0"

from .kitti_io import BoundingBox, Detection, FrameAnnotations, ObjectLabel

__all__ = ["BoundingBox", "Detection", "FrameAnnotations", "ObjectLabel",
           "__version__"]
