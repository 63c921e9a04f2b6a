"""Ground-truth and prediction containers plus their file formats.

Two formats are supported: a COCO-style annotation subset (single category,
boxes as ``[x, y, w, h]`` in absolute pixels) and a JSON Lines prediction
cache keyed by ``(image_id, prompt text)`` that freezes detector output for
offline evaluation.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DanglingAnnotationError,
    ParseError,
    ScoreOutOfRangeError,
    ZeroAreaBoxError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner plus width and height, in pixels."""

    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


def _bbox_from_raw(raw, where: str) -> BBox:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise ParseError(f"{where}: bbox must be a list of 4 numbers, got {raw!r}")
    vals = []
    for v in raw:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise ParseError(f"{where}: bbox entries must be finite numbers, got {raw!r}")
        vals.append(float(v))
    return BBox(*vals)


@dataclass(frozen=True)
class ImageInfo:
    id: int
    file_name: str
    width: float
    height: float


@dataclass(frozen=True)
class Annotation:
    id: int
    image_id: int
    bbox: BBox


@dataclass(frozen=True)
class GroundTruthSet:
    """Images and single-category box annotations, ordered deterministically."""

    images: tuple[ImageInfo, ...]
    annotations: tuple[Annotation, ...]
    category_name: str
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def image_ids(self) -> list[int]:
        return [img.id for img in self.images]

    def image(self, image_id: int) -> ImageInfo:
        for img in self.images:
            if img.id == image_id:
                return img
        raise KeyError(image_id)

    def annotations_for(self, image_id: int) -> tuple[Annotation, ...]:
        return tuple(a for a in self.annotations if a.image_id == image_id)

    def annotations_by_image(self) -> dict[int, tuple[Annotation, ...]]:
        out: dict[int, list[Annotation]] = {img.id: [] for img in self.images}
        for ann in self.annotations:
            out[ann.image_id].append(ann)
        return {k: tuple(v) for k, v in out.items()}


def _clamp_gt_box(box: BBox, img: ImageInfo, ann_id: int) -> tuple[BBox, str | None]:
    x2_raw = box.x + box.w
    y2_raw = box.y + box.h
    x1 = min(max(box.x, 0.0), img.width)
    y1 = min(max(box.y, 0.0), img.height)
    x2 = min(max(x2_raw, 0.0), img.width)
    y2 = min(max(y2_raw, 0.0), img.height)
    # compare corners, not a recomposed box: (x + w) - x need not equal w
    if (x1, y1, x2, y2) == (box.x, box.y, x2_raw, y2_raw):
        return box, None
    clamped = BBox(x1, y1, x2 - x1, y2 - y1)
    if clamped.w <= 0 or clamped.h <= 0:
        raise ZeroAreaBoxError(
            f"annotation {ann_id}: box {box.to_list()} lies entirely outside "
            f"image {img.id} ({img.width}x{img.height})"
        )
    warning = (
        f"annotation {ann_id}: box {box.to_list()} exceeds image {img.id} "
        f"bounds ({img.width}x{img.height}); clamped to {clamped.to_list()}"
    )
    return clamped, warning


def load_coco(path: str | Path) -> GroundTruthSet:
    """Load the COCO annotation subset.

    Recognized keys: ``images`` (id, file_name, width, height),
    ``annotations`` (id, image_id, bbox, category_id) and ``categories``
    (id, name). Extra keys are ignored. Exactly one category is required.
    Boxes exceeding image bounds are clamped with a recorded warning;
    degenerate boxes raise :class:`ZeroAreaBoxError`.
    """
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise ParseError(f"cannot read annotation file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"annotation file {path} is not valid JSON: {e}") from e

    for key in ("images", "annotations", "categories"):
        if key not in doc or not isinstance(doc[key], list):
            raise ParseError(f"annotation file needs a {key!r} list")
    if len(doc["categories"]) != 1:
        raise ParseError(
            f"expected exactly one category, got {len(doc['categories'])} "
            "(multi-category evaluation is unsupported)"
        )
    category = doc["categories"][0]
    category_id = category.get("id")
    category_name = category.get("name")
    if not isinstance(category_name, str):
        raise ParseError("category needs a 'name' string")

    images: list[ImageInfo] = []
    seen_ids: set[int] = set()
    for raw in doc["images"]:
        try:
            img = ImageInfo(
                id=int(raw["id"]),
                file_name=str(raw["file_name"]),
                width=float(raw["width"]),
                height=float(raw["height"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"malformed image entry {raw!r}: {e}") from e
        if img.id in seen_ids:
            raise ParseError(f"duplicate image id {img.id}")
        if img.width <= 0 or img.height <= 0:
            raise ParseError(f"image {img.id}: non-positive dimensions")
        seen_ids.add(img.id)
        images.append(img)
    images.sort(key=lambda im: im.id)
    by_id = {img.id: img for img in images}

    annotations: list[Annotation] = []
    warnings: list[str] = []
    seen_ann: set[int] = set()
    for raw in doc["annotations"]:
        try:
            ann_id = int(raw["id"])
            image_id = int(raw["image_id"])
            raw_bbox = raw["bbox"]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"malformed annotation entry {raw!r}: {e}") from e
        if raw.get("category_id", category_id) != category_id:
            raise ParseError(
                f"annotation {ann_id}: category_id {raw['category_id']} does not "
                f"match the single category {category_id}"
            )
        if ann_id in seen_ann:
            raise ParseError(f"duplicate annotation id {ann_id}")
        seen_ann.add(ann_id)
        if image_id not in by_id:
            raise DanglingAnnotationError(
                f"annotation {ann_id} references unknown image {image_id}"
            )
        box = _bbox_from_raw(raw_bbox, f"annotation {ann_id}")
        if box.w <= 0 or box.h <= 0:
            raise ZeroAreaBoxError(
                f"annotation {ann_id}: zero-area box {box.to_list()}"
            )
        box, warning = _clamp_gt_box(box, by_id[image_id], ann_id)
        if warning:
            warnings.append(warning)
            logger.warning("%s", warning)
        annotations.append(Annotation(id=ann_id, image_id=image_id, bbox=box))
    annotations.sort(key=lambda a: (a.image_id, a.id))

    return GroundTruthSet(
        images=tuple(images),
        annotations=tuple(annotations),
        category_name=category_name,
        warnings=tuple(warnings),
    )


def save_coco(gt: GroundTruthSet, path: str | Path) -> None:
    """Write a ground-truth set back out in the COCO subset format."""
    doc = {
        "images": [
            {
                "id": img.id,
                "file_name": img.file_name,
                "width": img.width,
                "height": img.height,
            }
            for img in gt.images
        ],
        "annotations": [
            {
                "id": ann.id,
                "image_id": ann.image_id,
                "bbox": ann.bbox.to_list(),
                "category_id": 1,
            }
            for ann in gt.annotations
        ],
        "categories": [{"id": 1, "name": gt.category_name}],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False, indent=2)
        f.write("\n")


@dataclass(frozen=True)
class Detection:
    """One scored box prediction."""

    bbox: BBox
    score: float


@dataclass(frozen=True)
class DetectionSet:
    """Predictions keyed by ``(image_id, rendered prompt text)``.

    Within one key, detection order is ingestion order; it is the tie order
    for equal scores during matching. Equality ignores recorded warnings.
    """

    entries: dict[tuple[int, str], tuple[Detection, ...]]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def prompts(self) -> set[str]:
        return {prompt for _, prompt in self.entries}

    def has_prompt(self, prompt: str) -> bool:
        return any(p == prompt for _, p in self.entries)

    def for_prompt(self, prompt: str) -> dict[int, tuple[Detection, ...]]:
        return {
            image_id: dets
            for (image_id, p), dets in self.entries.items()
            if p == prompt
        }

    def merged_with(self, other: "DetectionSet") -> "DetectionSet":
        entries = dict(self.entries)
        entries.update(other.entries)
        return DetectionSet(entries=entries, warnings=self.warnings + other.warnings)


def _detection_from_raw(raw, where: str) -> Detection | None:
    """Parse one detection; returns None for degenerate boxes (caller warns)."""
    if not isinstance(raw, Mapping) or "bbox" not in raw or "score" not in raw:
        raise ParseError(f"{where}: detection needs 'bbox' and 'score'")
    box = _bbox_from_raw(raw["bbox"], where)
    score = raw["score"]
    if (
        not isinstance(score, (int, float))
        or isinstance(score, bool)
        or not math.isfinite(score)
        or not 0.0 <= score <= 1.0
    ):
        raise ScoreOutOfRangeError(f"{where}: score {score!r} outside [0, 1]")
    if box.w <= 0 or box.h <= 0:
        return None
    return Detection(bbox=box, score=float(score))


def load_prediction_cache(
    path: str | Path, known_image_ids: Iterable[int] | None = None
) -> DetectionSet:
    """Load a JSON Lines prediction cache.

    Each line is ``{"image_id": int, "prompt": str, "detections":
    [{"bbox": [x, y, w, h], "score": float}, ...]}``. Duplicate
    ``(image, prompt)`` lines keep the last occurrence with a recorded
    warning; degenerate prediction boxes are dropped with a recorded
    warning. When ``known_image_ids`` is given, lines for other images are
    rejected.
    """
    known = set(known_image_ids) if known_image_ids is not None else None
    entries: dict[tuple[int, str], tuple[Detection, ...]] = {}
    warnings: list[str] = []
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise ParseError(f"cannot read prediction cache {path}: {e}") from e

    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"{where}: invalid JSON: {e}") from e
        if not isinstance(raw, Mapping):
            raise ParseError(f"{where}: line must be a JSON object")
        try:
            image_id = int(raw["image_id"])
            prompt = raw["prompt"]
            raw_dets = raw["detections"]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"{where}: needs image_id, prompt, detections: {e}") from e
        if not isinstance(prompt, str):
            raise ParseError(f"{where}: prompt must be a string")
        if not isinstance(raw_dets, list):
            raise ParseError(f"{where}: detections must be a list")
        if known is not None and image_id not in known:
            raise ParseError(f"{where}: unknown image_id {image_id}")
        dets: list[Detection] = []
        for i, raw_det in enumerate(raw_dets):
            det = _detection_from_raw(raw_det, f"{where} detection {i}")
            if det is None:
                warnings.append(
                    f"{where}: dropped zero-area prediction box {raw_det['bbox']}"
                )
                continue
            dets.append(det)
        key = (image_id, prompt)
        if key in entries:
            warnings.append(
                f"{where}: duplicate entry for image {image_id} prompt "
                f"{prompt!r}; last occurrence wins"
            )
        entries[key] = tuple(dets)

    for w in warnings:
        logger.warning("%s", w)
    return DetectionSet(entries=entries, warnings=tuple(warnings))


def save_prediction_cache(det: DetectionSet, path: str | Path) -> None:
    """Write a detection set as a prediction cache, sorted for determinism."""
    with open(path, "w", encoding="utf-8") as f:
        for (image_id, prompt) in sorted(det.entries):
            dets = det.entries[(image_id, prompt)]
            line = {
                "image_id": image_id,
                "prompt": prompt,
                "detections": [
                    {"bbox": d.bbox.to_list(), "score": d.score} for d in dets
                ],
            }
            f.write(json.dumps(line, ensure_ascii=False) + "\n")


def detection_set_from_mapping(
    per_image: Mapping[int, Sequence[tuple[Sequence[float], float]]], prompt: str
) -> DetectionSet:
    """Convenience builder from ``{image_id: [(bbox, score), ...]}``."""
    entries = {
        (image_id, prompt): tuple(
            Detection(bbox=BBox(*map(float, b)), score=float(s)) for b, s in dets
        )
        for image_id, dets in per_image.items()
    }
    return DetectionSet(entries=entries)
