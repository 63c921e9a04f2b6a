"""
Detection metrics from the ground up
====================================

Box overlap, greedy matching, interpolated average precision and the
F1-maximizing confidence threshold, all on a scene small enough to verify
by hand.
"""

from promptaxes import (
    Annotation,
    BBox,
    Detection,
    DetectionSet,
    GroundTruthSet,
    ImageInfo,
    f1_max_threshold,
    iou,
    map_at_50,
    match_at_iou,
)

# overlap of two 10x10 squares shifted by half a side
a = BBox(0, 0, 10, 10)
b = BBox(5, 0, 10, 10)
print(f"iou = {iou(a, b):.4f} (intersection 50 over union 150)")

# one image, two ground-truth boxes
gts = [
    Annotation(id=1, image_id=1, bbox=BBox(0, 0, 10, 10)),
    Annotation(id=2, image_id=1, bbox=BBox(50, 50, 10, 10)),
]
preds = [
    Detection(BBox(1, 0, 10, 10), score=0.9),     # good hit on box 1
    Detection(BBox(2, 1, 10, 10), score=0.7),     # duplicate, becomes FP
    Detection(BBox(200, 200, 10, 10), score=0.6), # far away, FP
]
result = match_at_iou(preds, gts)
print(f"matching: tp={result.tp_count} fp={result.fp_count} fn={result.fn_count}")
for m in result.matches:
    print(f"  score {m.score:.1f}  {'TP -> ann ' + str(m.ann_id) if m.is_tp else 'FP'}")

# dataset-level evaluation pools every image's predictions by score
gt = GroundTruthSet(
    images=(ImageInfo(id=1, file_name="one.jpg", width=500, height=500),),
    annotations=tuple(gts),
    category_name="flower",
)
det = DetectionSet(entries={(1, "a flower"): tuple(preds)})
evaluation = map_at_50(det, gt, "a flower")
print(f"\nscore: {evaluation.map_at_50:.4f}")
print("pr points (recall, precision):")
for recall, precision in evaluation.pr_points:
    print(f"  {recall:.2f}  {precision:.3f}")

calibration = f1_max_threshold(det, gt, "a flower")
print(
    f"\nF1-max threshold {calibration.threshold:.2f}: "
    f"p={calibration.precision:.2f} r={calibration.recall:.2f} f1={calibration.f1:.2f}"
)
print("keeping only the 0.9 detection trades the duplicate for precision")
