"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

SUPPORTED_MODELS = ("fixture", "yolo-world", "grounding-dino", "owlv2", "sam3")

#: Models whose prompt list should carry a trailing empty-string background
#: class; advertised through /v1/model so the engine applies it.
BACKGROUND_CLASS_MODELS = ("yolo-world",)


@dataclass(frozen=True)
class AdapterConfig:
    """Launch-time settings for one adapter process.

    ``score_floor`` defaults to 0 so every detection is forwarded and the
    evaluation side stays free to sweep thresholds.
    """

    model: str
    dataset_root: str | Path = "."
    device: str = "cpu"
    score_floor: float = 0.0

    def __post_init__(self):
        if self.model not in SUPPORTED_MODELS:
            raise ValueError(
                f"unknown model {self.model!r}; supported: {', '.join(SUPPORTED_MODELS)}"
            )
        if not 0.0 <= self.score_floor < 1.0:
            raise ValueError("score_floor must be in [0, 1)")

    @property
    def supports_background_class(self) -> bool:
        return self.model in BACKGROUND_CLASS_MODELS

    def resolve_image(self, image_path: str) -> Path:
        return Path(self.dataset_root) / image_path
