"""Deterministic synthetic ground truth for demos and fixtures."""

from __future__ import annotations

import hashlib

from .data import Annotation, BBox, GroundTruthSet, ImageInfo


def _unit(seed: int, *parts) -> float:
    """Uniform [0, 1) derived from a stable hash; independent of process salt."""
    key = "|".join([str(seed), *map(str, parts)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def make_synthetic_gt(
    n_images: int = 6,
    boxes_per_image: int = 3,
    width: int = 640,
    height: int = 480,
    seed: int = 7,
    category: str = "flower",
) -> GroundTruthSet:
    """Build a small ground-truth set with well-separated boxes.

    Boxes are laid out on a jittered grid so they never overlap, which keeps
    greedy matching unambiguous in fixtures.
    """
    images = []
    annotations = []
    ann_id = 1
    cols = max(1, int(boxes_per_image**0.5 + 0.999))
    rows = (boxes_per_image + cols - 1) // cols
    cell_w = width / cols
    cell_h = height / rows
    for i in range(1, n_images + 1):
        images.append(
            ImageInfo(id=i, file_name=f"img_{i:04d}.jpg", width=width, height=height)
        )
        for k in range(boxes_per_image):
            cx = (k % cols + 0.5) * cell_w
            cy = (k // cols + 0.5) * cell_h
            w = cell_w * (0.25 + 0.15 * _unit(seed, "w", i, k))
            h = cell_h * (0.25 + 0.15 * _unit(seed, "h", i, k))
            x = cx - w / 2 + cell_w * 0.1 * (2 * _unit(seed, "x", i, k) - 1)
            y = cy - h / 2 + cell_h * 0.1 * (2 * _unit(seed, "y", i, k) - 1)
            annotations.append(
                Annotation(
                    id=ann_id,
                    image_id=i,
                    bbox=BBox(round(x, 2), round(y, 2), round(w, 2), round(h, 2)),
                )
            )
            ann_id += 1
    return GroundTruthSet(
        images=tuple(images), annotations=tuple(annotations), category_name=category
    )
