"""
Prompt axes and rendering
=========================

A detection prompt is decomposed into eight component slots. Each slot has
a baseline and alternative values; picking one level per slot and rendering
gives the final prompt text.
"""

from promptaxes import PromptSpec, cowpea_flower_axes, render_prompt

axes = cowpea_flower_axes()
print(f"target: {axes.target}")
for axis in axes.axes:
    shown = ", ".join(repr(v) for v in axis.values[:3])
    more = "..." if len(axis.values) > 3 else ""
    print(f"  {axis.name:<10} baseline={axis.baseline!r:<10} values: {shown}{more}")

# the all-baseline spec is the generic prompt
baseline = PromptSpec.baseline()
print("\nbaseline prompt:", repr(render_prompt(baseline, axes).text))

# pick individual levels to build richer prompts
spec = (
    baseline
    .with_level("grammar", 0)   # "a single"
    .with_level("color", 0)     # "yellow"
    .with_level("taxonomy", 0)  # "cowpea flower"
    .with_level("anatomy", 0)   # "with open petals"
)
print("combined prompt:", repr(render_prompt(spec, axes).text))

# the negation slot attaches with ", ", the emoji slot with a space
spec = spec.with_level("negation", 0).with_level("emoji", 4)
print("fully loaded:   ", repr(render_prompt(spec, axes).text))

# an empty-rendering grammar level models a bare-noun prompt
bare = baseline.with_level("grammar", 1)
print("bare noun:      ", repr(render_prompt(bare, axes).text))

# every spec has a canonical fingerprint used for dedup and provenance
print("\nfingerprint:", spec.fingerprint)
print("round trip ok:", PromptSpec.from_fingerprint(spec.fingerprint) == spec)
