"""Plan generators for the two search phases.

Phase 1 perturbs one axis at a time against the all-baseline anchor.
Phase 2 crosses the strongest levels found in phase 1 through three base
sweeps, then staged negation and emoji expansions, so the search never
enumerates the full eight-axis grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .axes import CANONICAL_AXES, AxisSet, PromptSpec, render_prompt
from .errors import ConfigError, InvalidSpecError, MissingScoreError

BASELINE_LABEL = "baseline"

SWEEP_COLOR_X_SIZE = "color_x_size"
SWEEP_GRAMMAR_X_COLOR = "grammar_x_color"
SWEEP_ANATOMY = "anatomy"
SWEEP_LABELS = (SWEEP_COLOR_X_SIZE, SWEEP_GRAMMAR_X_COLOR, SWEEP_ANATOMY)


@dataclass(frozen=True)
class PlanEntry:
    """One spec scheduled for evaluation, tagged with where it came from."""

    spec: PromptSpec
    label: str


@dataclass(frozen=True)
class Phase1Plan:
    """Ordered one-factor-at-a-time plan: baseline first, then each axis."""

    entries: tuple[PlanEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Phase2Config:
    """Knobs for the staged phase-2 expansion."""

    top_n_for_negation: int = 3
    include_emoji_stage: bool = True

    def __post_init__(self):
        if self.top_n_for_negation < 1:
            raise ConfigError("top_n_for_negation must be >= 1")


@dataclass(frozen=True)
class Phase2Plan:
    """Base sweep specs plus the config driving the deferred stages.

    The negation stage attaches each negation value to the top-N base
    results; the emoji stage attaches each emoji value to the single top
    result over base and negation together. Both are expanded only once
    scores exist, via :func:`expand_negation` and :func:`expand_emoji`.
    """

    base: tuple[PlanEntry, ...]
    config: Phase2Config = field(default_factory=Phase2Config)

    def __len__(self) -> int:
        return len(self.base)


def generate_ofat(axes: AxisSet) -> Phase1Plan:
    """Generate the phase-1 plan: one spec per (axis, value) plus the baseline.

    The plan holds exactly ``1 + sum(len(axis.values))`` specs, ordered
    baseline first, then axes in canonical slot order with values in
    definition order.
    """
    baseline = PromptSpec.baseline()
    entries = [PlanEntry(spec=baseline, label=BASELINE_LABEL)]
    for name in CANONICAL_AXES:
        for idx in range(axes.value_count(name)):
            entries.append(PlanEntry(spec=baseline.with_level(name, idx), label=name))
    return Phase1Plan(entries=tuple(entries))


def best_level(
    scores: Mapping[PromptSpec, float], axes: AxisSet, axis_name: str
) -> int | None:
    """Pick the level of one axis whose single-axis spec scored highest.

    The baseline competes too, scored by the all-baseline run. Ties prefer
    the baseline, then the lowest value index. Raises
    :class:`MissingScoreError` when a required spec is absent.
    """
    baseline = PromptSpec.baseline()
    candidates: list[tuple[int | None, PromptSpec]] = [(None, baseline)]
    for idx in range(axes.value_count(axis_name)):
        candidates.append((idx, baseline.with_level(axis_name, idx)))
    best: int | None = None
    best_score: float | None = None
    for level, spec in candidates:
        if spec not in scores:
            raise MissingScoreError(
                f"no score for axis {axis_name!r} spec {spec.fingerprint!r}"
            )
        score = scores[spec]
        if best_score is None or score > best_score:
            best, best_score = level, score
    return best


def generate_phase2_base(
    axes: AxisSet,
    phase1_scores: Mapping[PromptSpec, float],
    config: Phase2Config | None = None,
) -> Phase2Plan:
    """Generate the three phase-2 base sweeps from phase-1 scores.

    Sweep 1 crosses every non-baseline color with every non-baseline size at
    the best grammar and taxonomy. Sweep 2 crosses every grammar level except
    the phase-1 best with every non-baseline color at the best taxonomy.
    Sweep 3 attaches each non-baseline anatomy value to the best grammar,
    color and taxonomy. Duplicate fingerprints keep their first occurrence.
    """
    config = config or Phase2Config()
    g_best = best_level(phase1_scores, axes, "grammar")
    t_best = best_level(phase1_scores, axes, "taxonomy")
    c_best = best_level(phase1_scores, axes, "color")

    baseline = PromptSpec.baseline()
    entries: list[PlanEntry] = []
    seen: set[str] = set()

    def add(spec: PromptSpec, label: str) -> None:
        if spec.fingerprint not in seen:
            seen.add(spec.fingerprint)
            entries.append(PlanEntry(spec=spec, label=label))

    anchor = baseline.with_level("grammar", g_best).with_level("taxonomy", t_best)
    for ci in range(axes.value_count("color")):
        for si in range(axes.value_count("size")):
            add(
                anchor.with_level("color", ci).with_level("size", si),
                SWEEP_COLOR_X_SIZE,
            )

    grammar_levels: list[int | None] = [None]
    grammar_levels += list(range(axes.value_count("grammar")))
    for gl in grammar_levels:
        if gl == g_best:
            continue
        for ci in range(axes.value_count("color")):
            add(
                baseline.with_level("grammar", gl)
                .with_level("taxonomy", t_best)
                .with_level("color", ci),
                SWEEP_GRAMMAR_X_COLOR,
            )

    for ai in range(axes.value_count("anatomy")):
        add(
            anchor.with_level("color", c_best).with_level("anatomy", ai),
            SWEEP_ANATOMY,
        )

    return Phase2Plan(base=tuple(entries), config=config)


def expand_negation(
    top_results: Sequence[PromptSpec], axes: AxisSet, top_n: int = 3
) -> list[PromptSpec]:
    """Attach each negation value to the first ``min(top_n, len)`` results.

    ``top_results`` must already be ranked (best first) and carry the
    negation slot at baseline.
    """
    out: list[PromptSpec] = []
    for spec in top_results[: min(top_n, len(top_results))]:
        if spec.level("negation") is not None:
            raise InvalidSpecError(
                f"spec {spec.fingerprint!r} already carries a negation level"
            )
        for idx in range(axes.value_count("negation")):
            out.append(spec.with_level("negation", idx))
    return out


def expand_emoji(best_result: PromptSpec, axes: AxisSet) -> list[PromptSpec]:
    """Attach each emoji value to the single top-scoring spec."""
    if best_result.level("emoji") is not None:
        raise InvalidSpecError(
            f"spec {best_result.fingerprint!r} already carries an emoji level"
        )
    return [
        best_result.with_level("emoji", idx)
        for idx in range(axes.value_count("emoji"))
    ]


def write_plan_jsonl(
    entries: Iterable[PlanEntry], axes: AxisSet, path: str | Path
) -> None:
    """Dump plan entries as JSON Lines (label, fingerprint, rendered prompt)."""
    with open(path, "w", encoding="utf-8") as f:
        for entry in entries:
            rendered = render_prompt(entry.spec, axes)
            line = {
                "label": entry.label,
                "fingerprint": entry.spec.fingerprint,
                "prompt": rendered.text,
            }
            f.write(json.dumps(line, ensure_ascii=False) + "\n")
