"""Built-in axis sets used by the demos and tests."""

from __future__ import annotations

from .axes import Axis, AxisSet


def cowpea_flower_axes() -> AxisSet:
    """Axis set for cowpea flower detection.

    The grammar value "" models a bare-noun prompt (the article slot renders
    empty). Negation levels are full literal clauses; emoji levels are
    literal codepoints.
    """
    return AxisSet(
        target="cowpea flower",
        axes=(
            Axis(
                "grammar",
                baseline="a",
                values=("a single", "", "a photo of a", "one", "close-up of a"),
            ),
            Axis("size", baseline="", values=("large", "small", "tiny")),
            Axis("color", baseline="", values=("yellow", "white", "cream", "purple")),
            Axis(
                "taxonomy",
                baseline="flower",
                values=(
                    "cowpea flower",
                    "bean flower",
                    "pea flower",
                    "legume flower",
                    "black-eyed pea flower",
                    "vigna unguiculata flower",
                    "crop flower",
                ),
            ),
            Axis(
                "anatomy",
                baseline="",
                values=(
                    "with open petals",
                    "with visible petals",
                    "with petals and stamens",
                    "corolla",
                ),
            ),
            Axis(
                "phenology",
                baseline="",
                values=("bud", "open", "closed bud", "blooming", "in bloom"),
            ),
            Axis(
                "negation",
                baseline="",
                values=(
                    "not a bud, not the green calyx, not a leaf",
                    "not a bud",
                    "not a leaf",
                    "not the green calyx",
                    "not a leaf, not a stem",
                ),
            ),
            Axis(
                "emoji",
                baseline="",
                values=("\U0001f338", "\U0001f33a", "\U0001f33b", "\U0001f33c", "\U0001f490", "\U0001f337"),
            ),
        ),
    )
