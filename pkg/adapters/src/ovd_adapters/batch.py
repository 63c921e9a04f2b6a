"""Offline batch prediction into the engine's cache format.

One JSON line per (image, prompt) pair. Lines are written atomically (a
single ``os.write`` per line), so an interrupted run always leaves a valid
JSONL prefix; rerunning skips pairs already present.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

from .config import AdapterConfig
from .models import build_model

logger = logging.getLogger(__name__)


def read_gt_images(gt_path: str | Path) -> list[tuple[int, str]]:
    """(image_id, file_name) pairs from a COCO-style annotation file."""
    with open(gt_path, encoding="utf-8") as f:
        doc = json.load(f)
    images = doc.get("images")
    if not isinstance(images, list):
        raise ValueError(f"{gt_path} has no 'images' list")
    out = [(int(img["id"]), str(img["file_name"])) for img in images]
    out.sort()
    return out


def read_prompt_list(path: str | Path) -> list[str]:
    """Prompts from a text file (one per line) or a JSON array."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        doc = json.loads(text)
        if not isinstance(doc, list) or not all(isinstance(p, str) for p in doc):
            raise ValueError(f"{path} must hold a JSON array of strings")
        return doc
    return [line.strip() for line in text.splitlines() if line.strip()]


def existing_pairs(out_path: str | Path) -> set[tuple[int, str]]:
    """Pairs already present; a torn trailing line is skipped with a warning."""
    pairs: set[tuple[int, str]] = set()
    path = Path(out_path)
    if not path.exists():
        return pairs
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                pairs.add((int(doc["image_id"]), str(doc["prompt"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                logger.warning("%s:%d: skipping malformed line", out_path, lineno)
    return pairs


def batch_predict(
    config: AdapterConfig,
    gt_path: str | Path,
    prompts_path: str | Path,
    out_path: str | Path,
) -> int:
    """Predict every missing (image, prompt) pair; returns lines written."""
    images = read_gt_images(gt_path)
    prompts = read_prompt_list(prompts_path)
    done = existing_pairs(out_path)

    model = build_model(config)
    model.load()

    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    written = 0
    fd = os.open(str(out_path), os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o644)
    try:
        for image_id, file_name in images:
            resolved = config.resolve_image(file_name)
            for prompt in prompts:
                if (image_id, prompt) in done:
                    continue
                detections = model.predict(resolved, [prompt])
                line = {
                    "image_id": image_id,
                    "prompt": prompt,
                    "detections": [
                        {"bbox": d["bbox"], "score": d["score"]}
                        for d in detections
                        if d["score"] >= config.score_floor
                    ],
                }
                payload = json.dumps(line, ensure_ascii=False) + "\n"
                os.write(fd, payload.encode("utf-8"))
                written += 1
    finally:
        os.close(fd)
    logger.info("wrote %d new lines to %s", written, out_path)
    return written
