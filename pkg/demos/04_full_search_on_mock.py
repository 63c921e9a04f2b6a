"""
End-to-end search on the mock detector
======================================

The mock backend fabricates deterministic detections from a scoring rule,
which lets the whole two-phase search run in under a second with no model.
This fixture plants an optimum: prompts mentioning "yellow" find more boxes
and negation clauses suppress false positives, so the search should dig out
a prompt carrying both.
"""

import json
from pathlib import Path

from promptaxes import (
    RunConfig,
    cowpea_flower_axes,
    load_ledger,
    make_synthetic_gt,
    run,
    save_axis_set,
    save_coco,
    write_report,
)

out = Path(__file__).parent / "demo_output" / "mock_search"
out.mkdir(parents=True, exist_ok=True)

# a small synthetic scene set and the axis definitions
save_coco(make_synthetic_gt(n_images=6, boxes_per_image=3, seed=7), out / "gt.json")
save_axis_set(cowpea_flower_axes(), out / "axes.json")

# the planted scoring rule for the mock detector
fixture = {
    "tp": {
        "score_base": 0.32, "score_jitter": 0.08, "box_jitter": 0.04,
        "recall_base": 0.65,
        "recall_bonuses": {"yellow": 0.3},
        "score_bonuses": {"yellow": 0.1},
    },
    "fp": {
        "per_image": 3, "rate_bonuses": {"not": -2.0},
        "score_base": 0.08, "score_jitter": 0.37,
        "background_absorb_below": 0.3,
    },
}
with open(out / "fixture.json", "w", encoding="utf-8") as f:
    json.dump(fixture, f, indent=2)

ledger_path = out / "run" / "ledger.jsonl"
if ledger_path.exists():
    ledger_path.unlink()

config = RunConfig(
    axes_path=str(out / "axes.json"),
    gt_path=str(out / "gt.json"),
    backend_spec=f"mock:{out / 'fixture.json'}",
    out_dir=str(out / "run"),
    seed=0,
)
summary = run(config)

print("baseline   :", summary.baseline.prompt, f"-> {summary.baseline.map_at_50:.4f}")
print("phase-1 best:", summary.phase1_best.prompt, f"-> {summary.phase1_best.map_at_50:.4f}")
print("phase-2 best:", summary.phase2_best.prompt, f"-> {summary.phase2_best.map_at_50:.4f}")
print(f"gain over baseline: {summary.phase2_best.delta_vs_baseline:+.4f}")
print(f"calibrated threshold: {summary.calibration.threshold:.3f} "
      f"(f1 {summary.calibration.f1:.3f})")

records = load_ledger(ledger_path)
print(f"\nledger: {len(records)} trials across phases",
      sorted({r.phase for r in records}))

write_report(records, out / "report", formats=("csv", "svg"))
print(f"report written under {out / 'report'}")
