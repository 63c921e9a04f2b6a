"""Model wrappers behind one tiny interface.

Each wrapper turns (image path, prompt list) into wire-schema detections:
``{"bbox": [x, y, w, h], "score": float, "prompt_index": int}``. Real
models import their frameworks lazily so the package works without them;
the fixture model fabricates deterministic detections for tests and dry
runs.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .config import AdapterConfig


class DetectorModel:
    """Interface: ``load()`` once, then ``predict`` per request."""

    name = "base"

    def __init__(self, config: AdapterConfig):
        self.config = config

    def load(self) -> None:  # pragma: no cover - trivial default
        pass

    def predict(self, image_path: Path, prompts: list[str]) -> list[dict]:
        raise NotImplementedError


def _unit(*parts) -> float:
    key = "|".join(map(str, parts))
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class FixtureModel(DetectorModel):
    """Deterministic stand-in: detections are a pure hash of the request.

    Uses the path string only (no pixels), so any placeholder file works.
    """

    name = "fixture"
    _canvas = 640.0

    def predict(self, image_path: Path, prompts: list[str]) -> list[dict]:
        out = []
        for index, prompt in enumerate(prompts):
            if prompt == "":
                continue
            n_boxes = 1 + int(_unit("n", image_path.name, prompt) * 3)
            for i in range(n_boxes):
                w = 30.0 + 50.0 * _unit("w", image_path.name, prompt, i)
                h = 30.0 + 50.0 * _unit("h", image_path.name, prompt, i)
                x = _unit("x", image_path.name, prompt, i) * (self._canvas - w)
                y = _unit("y", image_path.name, prompt, i) * (self._canvas - h)
                score = round(0.05 + 0.9 * _unit("s", image_path.name, prompt, i), 6)
                out.append(
                    {
                        "bbox": [round(x, 2), round(y, 2), round(w, 2), round(h, 2)],
                        "score": score,
                        "prompt_index": index,
                    }
                )
        return out


class YoloWorldModel(DetectorModel):
    """Open-vocabulary YOLO variant; classes are set per request."""

    name = "yolo-world"

    def load(self) -> None:
        try:
            from ultralytics import YOLO
        except ImportError as e:  # pragma: no cover - framework not installed
            raise RuntimeError(
                "yolo-world needs the 'ultralytics' package installed"
            ) from e
        self._model = YOLO("yolov8x-worldv2.pt")

    def predict(self, image_path: Path, prompts: list[str]) -> list[dict]:
        # the empty background entry participates as a class slot, so index
        # mapping back to the request list is the identity
        self._model.set_classes(list(prompts))
        results = self._model.predict(
            str(image_path), device=self.config.device, verbose=False
        )
        out = []
        for result in results:
            for box in result.boxes:
                x1, y1, x2, y2 = [float(v) for v in box.xyxy[0].tolist()]
                out.append(
                    {
                        "bbox": [x1, y1, x2 - x1, y2 - y1],
                        "score": float(box.conf[0]),
                        "prompt_index": int(box.cls[0]),
                    }
                )
        return out


class _HFGroundedModel(DetectorModel):
    """Shared plumbing for transformers zero-shot detection checkpoints."""

    checkpoint = ""

    def load(self) -> None:
        try:
            import torch  # noqa: F401
            from transformers import pipeline
        except ImportError as e:  # pragma: no cover - framework not installed
            raise RuntimeError(
                f"{self.name} needs 'torch' and 'transformers' installed"
            ) from e
        self._pipe = pipeline(
            "zero-shot-object-detection",
            model=self.checkpoint,
            device=self.config.device,
        )

    def predict(self, image_path: Path, prompts: list[str]) -> list[dict]:
        from PIL import Image

        labels = [p for p in prompts if p != ""]
        index_of = {p: i for i, p in enumerate(prompts)}
        image = Image.open(image_path).convert("RGB")
        out = []
        for hit in self._pipe(image, candidate_labels=labels):
            box = hit["box"]
            out.append(
                {
                    "bbox": [
                        float(box["xmin"]),
                        float(box["ymin"]),
                        float(box["xmax"] - box["xmin"]),
                        float(box["ymax"] - box["ymin"]),
                    ],
                    "score": float(hit["score"]),
                    "prompt_index": index_of[hit["label"]],
                }
            )
        return out


class GroundingDinoModel(_HFGroundedModel):
    name = "grounding-dino"
    checkpoint = "IDEA-Research/grounding-dino-base"


class Owlv2Model(_HFGroundedModel):
    name = "owlv2"
    checkpoint = "google/owlv2-base-patch16-ensemble"


class Sam3Model(DetectorModel):
    """Concept segmentation wrapper; boxes are tight bounds of each mask."""

    name = "sam3"

    def load(self) -> None:
        try:
            import numpy  # noqa: F401
            import torch  # noqa: F401
            from transformers import pipeline
        except ImportError as e:  # pragma: no cover - framework not installed
            raise RuntimeError("sam3 needs 'torch' and 'transformers' installed") from e
        self._pipe = pipeline(
            "mask-generation", model="facebook/sam3", device=self.config.device
        )

    def predict(self, image_path: Path, prompts: list[str]) -> list[dict]:
        import numpy as np
        from PIL import Image

        image = Image.open(image_path).convert("RGB")
        out = []
        for index, prompt in enumerate(prompts):
            if prompt == "":
                continue
            result = self._pipe(image, prompt=prompt)
            for mask, score in zip(result["masks"], result["scores"]):
                ys, xs = np.nonzero(np.asarray(mask))
                if len(xs) == 0:
                    continue
                x1, x2 = float(xs.min()), float(xs.max()) + 1.0
                y1, y2 = float(ys.min()), float(ys.max()) + 1.0
                out.append(
                    {
                        "bbox": [x1, y1, x2 - x1, y2 - y1],
                        "score": float(score),
                        "prompt_index": index,
                    }
                )
        return out


_REGISTRY = {
    "fixture": FixtureModel,
    "yolo-world": YoloWorldModel,
    "grounding-dino": GroundingDinoModel,
    "owlv2": Owlv2Model,
    "sam3": Sam3Model,
}


def build_model(config: AdapterConfig) -> DetectorModel:
    return _REGISTRY[config.model](config)
