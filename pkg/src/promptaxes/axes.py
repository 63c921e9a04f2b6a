"""Prompt axis model and deterministic prompt rendering.

A prompt is decomposed into eight named component axes. Each axis has a
baseline string (possibly empty, meaning the slot is absent) and an ordered
list of alternative values. A :class:`PromptSpec` picks one level per axis;
:func:`render_prompt` turns it into the final prompt text by filling a fixed
slot template.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import AxisValidationError, EmptyRenderError, InvalidSpecError

#: Canonical axis names in slot order. Rendering concatenates the slots in
#: this order; the negation slot is attached with ", " and the emoji slot
#: with a plain space.
CANONICAL_AXES = (
    "grammar",
    "size",
    "color",
    "taxonomy",
    "anatomy",
    "phenology",
    "negation",
    "emoji",
)

_AXIS_INDEX = {name: i for i, name in enumerate(CANONICAL_AXES)}

#: Slots joined with single spaces before the negation/emoji suffixes.
_MAIN_SLOTS = ("grammar", "size", "color", "taxonomy", "anatomy", "phenology")


@dataclass(frozen=True)
class Axis:
    """One prompt component axis: a baseline plus alternative values."""

    name: str
    baseline: str
    values: tuple[str, ...]

    def __post_init__(self):
        if self.name not in _AXIS_INDEX:
            raise AxisValidationError(f"unknown axis name {self.name!r}")
        if not isinstance(self.baseline, str):
            raise AxisValidationError(f"axis {self.name!r}: baseline must be a string")
        object.__setattr__(self, "values", tuple(self.values))
        for v in self.values:
            if not isinstance(v, str):
                raise AxisValidationError(f"axis {self.name!r}: values must be strings")
        levels = (self.baseline, *self.values)
        if len(set(levels)) != len(levels):
            raise AxisValidationError(
                f"axis {self.name!r}: baseline and values must be pairwise distinct"
            )

    def level_text(self, level: int | None) -> str:
        """Resolve a level (None = baseline, int = value index) to its string."""
        if level is None:
            return self.baseline
        if not 0 <= level < len(self.values):
            raise InvalidSpecError(
                f"axis {self.name!r}: value index {level} out of range "
                f"(axis has {len(self.values)} values)"
            )
        return self.values[level]


@dataclass(frozen=True)
class AxisSet:
    """The eight prompt axes for one target object.

    ``axes`` is always stored in canonical slot order regardless of the
    order passed in. Instances are immutable and safe to share across
    threads.
    """

    target: str
    axes: tuple[Axis, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        names = [a.name for a in axes]
        missing = [n for n in CANONICAL_AXES if n not in names]
        if missing:
            raise AxisValidationError(f"missing axes: {', '.join(missing)}")
        extra = [n for n in names if n not in _AXIS_INDEX]
        if extra:
            raise AxisValidationError(f"unknown axes: {', '.join(extra)}")
        if len(names) != len(set(names)):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise AxisValidationError(f"duplicate axes: {', '.join(dupes)}")
        axes = tuple(sorted(axes, key=lambda a: _AXIS_INDEX[a.name]))
        object.__setattr__(self, "axes", axes)
        if not self.axis("taxonomy").baseline:
            raise AxisValidationError("taxonomy baseline must be non-empty")

    def axis(self, name: str) -> Axis:
        try:
            return self.axes[_AXIS_INDEX[name]]
        except KeyError:
            raise AxisValidationError(f"unknown axis name {name!r}") from None

    def level_text(self, name: str, level: int | None) -> str:
        return self.axis(name).level_text(level)

    def value_count(self, name: str) -> int:
        return len(self.axis(name).values)

    def to_dict(self) -> dict:
        """Serialize to the axis-file document shape."""
        return {
            "target": self.target,
            "axes": {
                a.name: {"baseline": a.baseline, "values": list(a.values)}
                for a in self.axes
            },
        }


def axis_set_from_dict(doc: Mapping) -> AxisSet:
    """Build a validated :class:`AxisSet` from an axis-file document.

    The document shape is ``{"target": str, "axes": {name: {"baseline": str,
    "values": [str, ...]}}}`` with exactly the eight canonical axis names.
    """
    if not isinstance(doc, Mapping):
        raise AxisValidationError("axis document must be a JSON object")
    target = doc.get("target")
    if not isinstance(target, str) or not target.strip():
        raise AxisValidationError("axis document needs a non-empty 'target' string")
    axes_doc = doc.get("axes")
    if not isinstance(axes_doc, Mapping):
        raise AxisValidationError("axis document needs an 'axes' object")
    missing = [n for n in CANONICAL_AXES if n not in axes_doc]
    if missing:
        raise AxisValidationError(f"missing axes: {', '.join(missing)}")
    extra = [n for n in axes_doc if n not in _AXIS_INDEX]
    if extra:
        raise AxisValidationError(f"unknown axes: {', '.join(sorted(extra))}")
    axes = []
    for name in CANONICAL_AXES:
        entry = axes_doc[name]
        if not isinstance(entry, Mapping):
            raise AxisValidationError(f"axis {name!r}: entry must be an object")
        if "baseline" not in entry or "values" not in entry:
            raise AxisValidationError(f"axis {name!r}: needs 'baseline' and 'values'")
        values = entry["values"]
        if not isinstance(values, (list, tuple)):
            raise AxisValidationError(f"axis {name!r}: 'values' must be a list")
        axes.append(Axis(name=name, baseline=entry["baseline"], values=tuple(values)))
    return AxisSet(target=target, axes=tuple(axes))


def load_axis_set(path: str | Path) -> AxisSet:
    """Load an axis definition file (UTF-8 JSON)."""
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise AxisValidationError(f"cannot read axis file {path}: {e}") from e
    return axis_set_from_dict(doc)


def save_axis_set(axes: AxisSet, path: str | Path) -> None:
    """Write an axis definition file. Emoji are stored as literal codepoints."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(axes.to_dict(), f, ensure_ascii=False, indent=2)
        f.write("\n")


_BASELINE_MARK = "-"


@dataclass(frozen=True)
class PromptSpec:
    """One level assignment per axis.

    ``levels`` is aligned with :data:`CANONICAL_AXES`; ``None`` selects the
    baseline, an integer indexes into that axis's value list.
    """

    levels: tuple[int | None, ...]

    def __post_init__(self):
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) != len(CANONICAL_AXES):
            raise InvalidSpecError(
                f"spec must assign all {len(CANONICAL_AXES)} axes, got {len(levels)}"
            )
        for name, lvl in zip(CANONICAL_AXES, levels):
            if lvl is not None and (not isinstance(lvl, int) or lvl < 0):
                raise InvalidSpecError(f"axis {name!r}: level must be None or int >= 0")

    @classmethod
    def baseline(cls) -> "PromptSpec":
        return cls(levels=(None,) * len(CANONICAL_AXES))

    def level(self, axis_name: str) -> int | None:
        return self.levels[_AXIS_INDEX[axis_name]]

    def with_level(self, axis_name: str, level: int | None) -> "PromptSpec":
        """Return a copy with one axis reassigned."""
        levels = list(self.levels)
        levels[_AXIS_INDEX[axis_name]] = level
        return PromptSpec(levels=tuple(levels))

    def perturbed_axes(self) -> tuple[str, ...]:
        """Names of axes not at their baseline."""
        return tuple(
            name for name, lvl in zip(CANONICAL_AXES, self.levels) if lvl is not None
        )

    @property
    def fingerprint(self) -> str:
        """Canonical serialization; the dedup and tie-break key for specs."""
        return ";".join(
            f"{name}={_BASELINE_MARK if lvl is None else lvl}"
            for name, lvl in zip(CANONICAL_AXES, self.levels)
        )

    @classmethod
    def from_fingerprint(cls, fingerprint: str) -> "PromptSpec":
        parts = fingerprint.split(";")
        if len(parts) != len(CANONICAL_AXES):
            raise InvalidSpecError(f"malformed fingerprint {fingerprint!r}")
        levels: list[int | None] = []
        for name, part in zip(CANONICAL_AXES, parts):
            prefix = f"{name}="
            if not part.startswith(prefix):
                raise InvalidSpecError(f"malformed fingerprint {fingerprint!r}")
            mark = part[len(prefix):]
            if mark == _BASELINE_MARK:
                levels.append(None)
            else:
                try:
                    levels.append(int(mark))
                except ValueError:
                    raise InvalidSpecError(
                        f"malformed fingerprint {fingerprint!r}"
                    ) from None
        return cls(levels=tuple(levels))

    def validate(self, axes: AxisSet) -> None:
        """Check every value index is in range for its axis."""
        for name, lvl in zip(CANONICAL_AXES, self.levels):
            if lvl is not None and lvl >= axes.value_count(name):
                raise InvalidSpecError(
                    f"axis {name!r}: value index {lvl} out of range "
                    f"(axis has {axes.value_count(name)} values)"
                )


@dataclass(frozen=True)
class RenderedPrompt:
    """A prompt string together with the spec that produced it."""

    text: str
    spec: PromptSpec
    fingerprint: str


def render_prompt(spec: PromptSpec, axes: AxisSet) -> RenderedPrompt:
    """Render a spec into prompt text using the fixed slot template.

    Slots are concatenated with single spaces in canonical order; empty
    levels contribute nothing. A non-empty negation slot is attached with
    ", ", the emoji slot with a single space. The result carries no leading
    or trailing whitespace and no double spaces, and rendering is a pure
    function of (spec, axes).
    """
    spec.validate(axes)
    text_for = {name: axes.level_text(name, spec.level(name)) for name in CANONICAL_AXES}
    out = " ".join(t for t in (text_for[n] for n in _MAIN_SLOTS) if t)
    negation = text_for["negation"]
    if negation:
        out = f"{out}, {negation}" if out else negation
    emoji = text_for["emoji"]
    if emoji:
        out = f"{out} {emoji}" if out else emoji
    out = " ".join(out.split())
    if not out:
        raise EmptyRenderError(
            f"spec {spec.fingerprint!r} rendered to an empty prompt"
        )
    return RenderedPrompt(text=out, spec=spec, fingerprint=spec.fingerprint)


def render_many(specs: Iterable[PromptSpec], axes: AxisSet) -> list[RenderedPrompt]:
    return [render_prompt(s, axes) for s in specs]
