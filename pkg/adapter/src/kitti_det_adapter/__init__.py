"""Run a pretrained object detector over an image directory and export
per-frame detections as KITTI-style 16-field text files."""

__version__ = "0.1.0"

from .config import AdapterConfig
from .export import RawDetection, export_detections

__all__ = ["AdapterConfig", "RawDetection", "export_detections",
           "__version__"]
