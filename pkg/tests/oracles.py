"""Independent brute-force implementations used as test oracles.

Everything here is written with plain loops and no shared code with the
package under test, so agreement between the two is meaningful. The
conventions mirrored on purpose (they are part of the metric definition):
boxes are (x, y, w, h); predictions pool sorted by descending score with
ties broken by ascending image id then per-image input order; greedy
matching visits predictions in that order and claims the unmatched
ground-truth box with the highest overlap at or above the threshold (first
box on ties); average precision samples the precision envelope at recalls
i/100 for i in 0..100.
"""

from __future__ import annotations


def naive_iou(a, b) -> float:
    ax1, ay1, aw, ah = a
    bx1, by1, bw, bh = b
    ax2, ay2 = ax1 + aw, ay1 + ah
    bx2, by2 = bx1 + bw, by1 + bh
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 0.0
    return inter / union


def naive_greedy_match(preds, gts, iou_thresh):
    """preds: [(box, score)] in input order; gts: [box]. Returns tp flag list
    aligned with preds sorted by descending score (input order on ties)."""
    order = sorted(range(len(preds)), key=lambda i: -preds[i][1])
    taken = [False] * len(gts)
    flags = []
    for i in order:
        box = preds[i][0]
        best_j = -1
        best_o = -1.0
        for j, gt_box in enumerate(gts):
            if taken[j]:
                continue
            o = naive_iou(box, gt_box)
            if o >= iou_thresh and o > best_o:
                best_j = j
                best_o = o
        if best_j >= 0:
            taken[best_j] = True
            flags.append((preds[i][1], True))
        else:
            flags.append((preds[i][1], False))
    return flags


def naive_map_at_50(preds_by_image, gts_by_image, iou_thresh=0.5) -> float:
    """Brute-force dataset score.

    preds_by_image: {image_id: [(box, score), ...]} in input order.
    gts_by_image: {image_id: [box, ...]}.
    """
    pooled = []  # (score, image_id, per-image rank, is_tp)
    n_gt = 0
    for image_id in sorted(gts_by_image):
        gts = gts_by_image[image_id]
        n_gt += len(gts)
        flags = naive_greedy_match(preds_by_image.get(image_id, []), gts, iou_thresh)
        for k, (score, is_tp) in enumerate(flags):
            pooled.append((score, image_id, k, is_tp))
    pooled.sort(key=lambda r: (-r[0], r[1], r[2]))

    if n_gt == 0:
        return 0.0 if pooled else 1.0
    if not pooled:
        return 0.0

    recalls = []
    precisions = []
    tp = 0
    for rank, row in enumerate(pooled, start=1):
        if row[3]:
            tp += 1
        recalls.append(tp / n_gt)
        precisions.append(tp / rank)

    # precision envelope: best precision at any recall >= r
    envelope = list(precisions)
    for i in range(len(envelope) - 2, -1, -1):
        if envelope[i + 1] > envelope[i]:
            envelope[i] = envelope[i + 1]

    total = 0.0
    for i in range(101):
        level = i / 100.0
        value = 0.0
        for r, e in zip(recalls, envelope):
            if r >= level:
                value = e
                break
        total += value
    return total / 101.0


def naive_f1_at(preds_by_image, gts_by_image, iou_thresh, threshold):
    """Micro-averaged precision/recall/F1 keeping scores >= threshold."""
    tp = fp = n_gt = 0
    for image_id, gts in gts_by_image.items():
        kept = [p for p in preds_by_image.get(image_id, []) if p[1] >= threshold]
        flags = naive_greedy_match(kept, gts, iou_thresh)
        tp += sum(1 for _, f in flags if f)
        fp += sum(1 for _, f in flags if not f)
        n_gt += len(gts)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / n_gt if n_gt else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def count_phase2_base(n_colors, n_sizes, n_grammar_values, n_anatomy) -> int:
    """Expected base sweep size before dedup, from the generation rules.

    Sweep 1 crosses colors with sizes; sweep 2 crosses all grammar levels
    (values plus the baseline) minus the single best with colors; sweep 3
    emits one spec per anatomy value.
    """
    sweep1 = n_colors * n_sizes
    sweep2 = (n_grammar_values + 1 - 1) * n_colors
    sweep3 = n_anatomy
    return sweep1 + sweep2 + sweep3
