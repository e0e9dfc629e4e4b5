"""Detector backends.

A detector is any callable taking an RGB uint8 array (H, W, 3) and
returning a list of RawDetection. The torchvision backend wraps the
library's detection models ("torchvision:<model_name>", COCO-pretrained);
torch is imported lazily so the adapter stays usable without it.
"""

from __future__ import annotations

import logging
from typing import Callable, List

import numpy as np

from .export import RawDetection

LOGGER = logging.getLogger(__name__)

Detector = Callable[[np.ndarray], List[RawDetection]]


class ModelLoadError(RuntimeError):
    pass


def load_detector(model_spec: str) -> Detector:
    if model_spec.startswith("torchvision:"):
        return _torchvision_detector(model_spec.split(":", 1)[1])
    raise ModelLoadError(
        f"unsupported model spec {model_spec!r}; expected "
        "'torchvision:<model_name>' (e.g. torchvision:fasterrcnn_resnet50_fpn)")


def _torchvision_detector(name: str) -> Detector:
    try:
        import torch
        from torchvision.models import detection as tvd
    except ImportError as exc:
        raise ModelLoadError(f"torchvision backend unavailable: {exc}") from exc

    try:
        builder = getattr(tvd, name)
    except AttributeError:
        raise ModelLoadError(
            f"unknown torchvision detection model {name!r}") from None
    try:
        model = builder(weights="DEFAULT")
    except Exception as exc:  # weight download failure included
        raise ModelLoadError(f"could not load weights for {name}: {exc}") from exc
    model.eval()

    categories = _coco_categories(name)

    @torch.no_grad()
    def run(image: np.ndarray) -> List[RawDetection]:
        tensor = torch.from_numpy(image).permute(2, 0, 1).float() / 255.0
        output = model([tensor])[0]
        detections = []
        for box, label, score in zip(output["boxes"], output["labels"],
                                     output["scores"]):
            idx = int(label)
            name_ = categories[idx] if idx < len(categories) else str(idx)
            l, t, r, b = (float(v) for v in box)
            detections.append(RawDetection(
                label=name_, left=l, top=t, right=r, bottom=b,
                score=float(score)))
        return detections

    return run


def _weights_enum_name(model_name: str) -> str:
    return "".join(part.capitalize() for part in model_name.split("_")) + "_Weights"


def _coco_categories(model_name: str) -> List[str]:
    from torchvision.models import detection as tvd

    enum_name = _weights_enum_name(model_name)
    weights_enum = getattr(tvd, enum_name, None)
    if weights_enum is not None:
        try:
            return list(weights_enum.DEFAULT.meta["categories"])
        except Exception:
            pass
    LOGGER.warning("no category metadata for %s; using label indices",
                   model_name)
    return []
