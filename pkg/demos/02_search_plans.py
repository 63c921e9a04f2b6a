"""
Search plans: one factor at a time, then staged combinations
============================================================

Phase 1 perturbs a single axis per prompt against the all-baseline anchor.
Phase 2 takes the best levels from phase 1 and crosses them through three
base sweeps; negation and emoji variants are then attached to the top
performers only, so the search stays far below the full grid.
"""

from promptaxes import (
    CANONICAL_AXES,
    PromptSpec,
    cowpea_flower_axes,
    generate_ofat,
    generate_phase2_base,
    render_prompt,
)

axes = cowpea_flower_axes()

plan = generate_ofat(axes)
print(f"phase-1 plan: {len(plan)} prompts "
      f"(1 baseline + {len(plan) - 1} single-axis variants)")
for entry in plan.entries[:6]:
    print(f"  [{entry.label:<9}] {render_prompt(entry.spec, axes).text!r}")
print("  ...")

# pretend phase 1 scored these prompts; normally scores come from a backend
scores = {PromptSpec.baseline(): 0.20}
for name in CANONICAL_AXES:
    for idx in range(axes.value_count(name)):
        spec = PromptSpec.baseline().with_level(name, idx)
        scores[spec] = 0.20
scores[PromptSpec.baseline().with_level("color", 0)] = 0.45      # yellow
scores[PromptSpec.baseline().with_level("grammar", 0)] = 0.31    # a single
scores[PromptSpec.baseline().with_level("taxonomy", 0)] = 0.28   # cowpea flower

phase2 = generate_phase2_base(axes, scores)
by_sweep = {}
for entry in phase2.base:
    by_sweep.setdefault(entry.label, []).append(entry)
print(f"\nphase-2 base sweeps: {len(phase2.base)} prompts")
for label, entries in by_sweep.items():
    example = render_prompt(entries[0].spec, axes).text
    print(f"  {label:<16} {len(entries):>2} prompts, e.g. {example!r}")

full = 1
for name in CANONICAL_AXES:
    full *= 1 + axes.value_count(name)
staged = len(plan) + len(phase2.base) + 3 * axes.value_count("negation") + axes.value_count("emoji")
print(f"\nthe full grid over all eight axes would hold {full} prompts;")
print(f"the staged search evaluates {staged}.")
