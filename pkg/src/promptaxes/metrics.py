"""Detection metrics: box overlap, greedy matching, interpolated AP, F1 sweeps.

Single-category evaluation with the match threshold fixed per call (0.5 by
default), so the dataset-level score is the average precision of the one
class. AP uses 101-point interpolation: the precision envelope is sampled at
recalls 0.00, 0.01, ..., 1.00 and averaged.

Pooling order is canonical and image-permutation invariant: predictions are
sorted by descending score, with ties broken by ascending image id and then
per-image ingestion order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import Annotation, BBox, Detection, DetectionSet, GroundTruthSet
from .errors import UnknownPromptError

#: Recall sample points for interpolated average precision. Built by
#: element-wise division so each point is the correctly rounded double of
#: i/100, keeping threshold comparisons reproducible.
RECALL_GRID = np.arange(101, dtype=float) / 100.0


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def iou_matrix(boxes_a: Sequence[BBox], boxes_b: Sequence[BBox]) -> np.ndarray:
    """Pairwise IoU, shape ``(len(boxes_a), len(boxes_b))``."""
    if not boxes_a or not boxes_b:
        return np.zeros((len(boxes_a), len(boxes_b)))
    a = np.array([[b.x, b.y, b.x + b.w, b.y + b.h] for b in boxes_a])
    b = np.array([[c.x, c.y, c.x + c.w, c.y + c.h] for c in boxes_b])
    ix = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    iy = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(ix, 0, None) * np.clip(iy, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(union > 0, inter / union, 0.0)
    return out


@dataclass(frozen=True)
class PredictionMatch:
    """Outcome for one prediction after greedy matching."""

    score: float
    is_tp: bool
    ann_id: int | None


@dataclass(frozen=True)
class MatchResult:
    """Per-image matching outcome.

    ``matches`` is ordered by descending score (ties keep ingestion order);
    ``fn_count`` is the number of ground-truth boxes left unmatched.
    """

    matches: tuple[PredictionMatch, ...]
    fn_count: int

    @property
    def tp_count(self) -> int:
        return sum(1 for m in self.matches if m.is_tp)

    @property
    def fp_count(self) -> int:
        return len(self.matches) - self.tp_count

    @property
    def gt_count(self) -> int:
        return self.tp_count + self.fn_count


def match_at_iou(
    preds: Sequence[Detection],
    gts: Sequence[Annotation],
    iou_thresh: float = 0.5,
) -> MatchResult:
    """Greedy per-image matching.

    Predictions are visited in descending score order (equal scores keep
    ingestion order); each claims the still-unmatched ground-truth box with
    the highest IoU at or above the threshold, first box winning IoU ties.
    Unclaimed predictions are false positives; unclaimed ground truth counts
    as false negatives.
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].score)
    gt_boxes = [g.bbox for g in gts]
    ious = iou_matrix([preds[i].bbox for i in order], gt_boxes)
    taken = [False] * len(gts)
    matches: list[PredictionMatch] = []
    for row, i in enumerate(order):
        best_j = -1
        best_iou = 0.0
        for j in range(len(gts)):
            if taken[j] or ious[row, j] < iou_thresh:
                continue
            # strict > keeps the first (lowest-index) box on IoU ties
            if best_j < 0 or ious[row, j] > best_iou:
                best_j = j
                best_iou = ious[row, j]
        if best_j >= 0:
            taken[best_j] = True
            matches.append(
                PredictionMatch(score=preds[i].score, is_tp=True, ann_id=gts[best_j].id)
            )
        else:
            matches.append(PredictionMatch(score=preds[i].score, is_tp=False, ann_id=None))
    fn_count = taken.count(False)
    return MatchResult(matches=tuple(matches), fn_count=fn_count)


def _pool(matches_by_image: Mapping[int, MatchResult]) -> tuple[np.ndarray, np.ndarray, int]:
    """Pool per-image matches into canonical order; returns (scores, tp, n_gt)."""
    rows: list[tuple[float, int, int, bool]] = []
    n_gt = 0
    for image_id in sorted(matches_by_image):
        result = matches_by_image[image_id]
        n_gt += result.gt_count
        for k, m in enumerate(result.matches):
            rows.append((m.score, image_id, k, m.is_tp))
    rows.sort(key=lambda r: (-r[0], r[1], r[2]))
    scores = np.array([r[0] for r in rows], dtype=float)
    is_tp = np.array([r[3] for r in rows], dtype=bool)
    return scores, is_tp, n_gt


def _interpolated_ap(is_tp: np.ndarray, n_gt: int) -> float:
    if n_gt == 0:
        # degenerate by convention: perfect when nothing was predicted either
        return 0.0 if len(is_tp) else 1.0
    if len(is_tp) == 0:
        return 0.0
    tp_cum = np.cumsum(is_tp)
    ranks = np.arange(1, len(is_tp) + 1)
    recall = tp_cum / n_gt
    precision = tp_cum / ranks
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    sampled = np.where(idx < len(recall), envelope[np.minimum(idx, len(recall) - 1)], 0.0)
    return float(sampled.mean())


def average_precision(matches_by_image: Mapping[int, MatchResult]) -> float:
    """Dataset-level interpolated average precision over pooled matches."""
    scores, is_tp, n_gt = _pool(matches_by_image)
    del scores
    return _interpolated_ap(is_tp, n_gt)


@dataclass(frozen=True)
class EvalResult:
    """Evaluation of one prompt on one dataset."""

    map_at_50: float
    pr_points: tuple[tuple[float, float], ...]
    f1_curve: tuple[tuple[float, float, float, float], ...]
    tp: int
    fp: int
    fn: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "map_at_50": self.map_at_50,
            "pr_points": [list(p) for p in self.pr_points],
            "f1_curve": [list(p) for p in self.f1_curve],
            "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn},
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "EvalResult":
        counts = doc.get("counts", {})
        return cls(
            map_at_50=float(doc["map_at_50"]),
            pr_points=tuple(tuple(p) for p in doc.get("pr_points", [])),
            f1_curve=tuple(tuple(p) for p in doc.get("f1_curve", [])),
            tp=int(counts.get("tp", 0)),
            fp=int(counts.get("fp", 0)),
            fn=int(counts.get("fn", 0)),
            degenerate=bool(doc.get("degenerate", False)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


@dataclass(frozen=True)
class CalibrationResult:
    """F1-maximizing confidence threshold with its operating point."""

    threshold: float
    precision: float
    recall: float
    f1: float
    no_detections: bool = False

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "no_detections": self.no_detections,
        }


def _micro_f1(
    preds_by_image: Mapping[int, Sequence[Detection]],
    gts_by_image: Mapping[int, Sequence[Annotation]],
    iou_thresh: float,
    threshold: float,
) -> tuple[float, float, float]:
    tp = fp = n_gt = 0
    for image_id, gts in gts_by_image.items():
        kept = [d for d in preds_by_image.get(image_id, ()) if d.score >= threshold]
        result = match_at_iou(kept, gts, iou_thresh)
        tp += result.tp_count
        fp += result.fp_count
        n_gt += len(gts)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / n_gt if n_gt else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _f1_sweep(
    preds_by_image: Mapping[int, Sequence[Detection]],
    gts_by_image: Mapping[int, Sequence[Annotation]],
    iou_thresh: float,
) -> tuple[tuple[float, float, float, float], ...]:
    """(threshold, precision, recall, f1) at every unique score, descending."""
    candidates = sorted(
        {d.score for dets in preds_by_image.values() for d in dets}, reverse=True
    )
    curve = []
    for t in candidates:
        p, r, f1 = _micro_f1(preds_by_image, gts_by_image, iou_thresh, t)
        curve.append((t, p, r, f1))
    return tuple(curve)


def _prompt_detections(
    det: DetectionSet,
    gt: GroundTruthSet,
    prompt: str,
    strict: bool,
    max_dets: int | None,
) -> dict[int, tuple[Detection, ...]]:
    if strict and not det.has_prompt(prompt):
        raise UnknownPromptError(f"no detections recorded for prompt {prompt!r}")
    per_image = det.for_prompt(prompt)
    out = {img.id: per_image.get(img.id, ()) for img in gt.images}
    if max_dets is not None:
        # keep the top-scored boxes per image; stable, so equal scores keep
        # ingestion order
        for image_id, dets in out.items():
            if len(dets) > max_dets:
                keep = sorted(range(len(dets)), key=lambda i: -dets[i].score)[:max_dets]
                out[image_id] = tuple(dets[i] for i in sorted(keep))
    return out


def map_at_50(
    det: DetectionSet,
    gt: GroundTruthSet,
    prompt: str,
    iou_thresh: float = 0.5,
    strict: bool = False,
    max_dets: int | None = None,
) -> EvalResult:
    """Evaluate one prompt: AP at the given IoU threshold plus PR/F1 curves.

    Detections for images missing from the set count as empty. With
    ``strict`` on, a prompt absent from the whole set raises
    :class:`UnknownPromptError` instead. ``max_dets`` caps detections per
    image (top scores kept); there is no cap by default since crowded frames
    can legitimately exceed the usual 100.
    """
    preds_by_image = _prompt_detections(det, gt, prompt, strict, max_dets)
    gts_by_image = gt.annotations_by_image()
    matches = {
        image_id: match_at_iou(preds_by_image[image_id], gts_by_image[image_id], iou_thresh)
        for image_id in gts_by_image
    }
    scores, is_tp, n_gt = _pool(matches)
    ap = _interpolated_ap(is_tp, n_gt)
    degenerate = n_gt == 0 and len(is_tp) == 0

    if n_gt > 0 and len(is_tp) > 0:
        tp_cum = np.cumsum(is_tp)
        ranks = np.arange(1, len(is_tp) + 1)
        pr_points = tuple(zip((tp_cum / n_gt).tolist(), (tp_cum / ranks).tolist()))
    else:
        pr_points = ()
    tp = int(is_tp.sum())
    return EvalResult(
        map_at_50=ap,
        pr_points=pr_points,
        f1_curve=_f1_sweep(preds_by_image, gts_by_image, iou_thresh),
        tp=tp,
        fp=len(is_tp) - tp,
        fn=n_gt - tp,
        degenerate=degenerate,
    )


def best_f1_point(curve: Sequence[tuple[float, float, float, float]]) -> CalibrationResult:
    """Pick the F1-maximizing entry; ties keep the highest threshold."""
    if not curve:
        return CalibrationResult(
            threshold=1.0, precision=0.0, recall=0.0, f1=0.0, no_detections=True
        )
    best = None
    for t, p, r, f1 in curve:  # descending thresholds: strict > keeps the highest
        if best is None or f1 > best[3]:
            best = (t, p, r, f1)
    return CalibrationResult(
        threshold=best[0], precision=best[1], recall=best[2], f1=best[3]
    )


def f1_max_threshold(
    det: DetectionSet,
    gt: GroundTruthSet,
    prompt: str,
    iou_thresh: float = 0.5,
    strict: bool = False,
    max_dets: int | None = None,
) -> CalibrationResult:
    """F1-maximizing confidence threshold for one prompt.

    Candidate thresholds are the unique detection scores. With no detections
    at all the sentinel threshold 1.0 is returned, flagged via
    ``no_detections``.
    """
    preds_by_image = _prompt_detections(det, gt, prompt, strict, max_dets)
    gts_by_image = gt.annotations_by_image()
    return best_f1_point(_f1_sweep(preds_by_image, gts_by_image, iou_thresh))


def write_pr_csv(result: EvalResult, path: str | Path) -> None:
    """Export the raw PR operating points (columns: recall, precision)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["recall", "precision"])
        for recall, precision in result.pr_points:
            writer.writerow([repr(recall), repr(precision)])


def write_f1_csv(result: EvalResult, path: str | Path) -> None:
    """Export the F1 sweep (columns: threshold, precision, recall, f1)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["threshold", "precision", "recall", "f1"])
        for threshold, precision, recall, f1 in result.f1_curve:
            writer.writerow([repr(threshold), repr(precision), repr(recall), repr(f1)])
