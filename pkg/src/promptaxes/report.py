"""Report bundles derived from a trial ledger.

Everything here is a pure projection of ledger records: per-axis gain
tables (the radar-plot data), best-prompt summaries per phase, exported
PR/F1 curves for the highlighted prompts, a failure listing, and optional
static SVG charts.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .axes import CANONICAL_AXES
from .errors import EmptyLedgerError
from .ledger import (
    PHASE_1,
    PHASE_2_BASE,
    PHASE_2_EMOJI,
    PHASE_2_NEGATION,
    TrialRecord,
    rank_records,
)
from .metrics import EvalResult, write_f1_csv, write_pr_csv
from .plans import BASELINE_LABEL

REPORT_SCHEMA_VERSION = 1


def _record_row(record: TrialRecord) -> dict:
    return {
        "trial_id": record.trial_id,
        "phase": record.phase,
        "sweep_label": record.sweep_label,
        "axis_label": record.axis_label,
        "level_value": record.level_value,
        "prompt": record.prompt,
        "fingerprint": record.fingerprint,
        "map_at_50": record.map_at_50,
        "delta_vs_baseline": record.delta_vs_baseline,
        "f1_threshold": record.f1_threshold,
    }


def _group_key(record: TrialRecord) -> tuple[str, str]:
    return (record.backend, record.dataset)


def build_report(records: Sequence[TrialRecord]) -> dict:
    """Aggregate ledger records into the report bundle.

    Records are grouped by (backend, dataset); each group reports its
    baseline, the per-axis phase-1 gain table, best prompts per phase and
    a failure listing. Failed trials never enter any argmax.
    """
    if not records:
        raise EmptyLedgerError("ledger holds no trial records")
    groups_order: list[tuple[str, str]] = []
    by_group: dict[tuple[str, str], list[TrialRecord]] = {}
    for record in records:
        key = _group_key(record)
        if key not in by_group:
            by_group[key] = []
            groups_order.append(key)
        by_group[key].append(record)

    groups = []
    comparison = []
    for key in groups_order:
        backend, dataset = key
        group_records = by_group[key]
        phase1 = [r for r in group_records if r.phase == PHASE_1]
        phase2 = [
            r
            for r in group_records
            if r.phase in (PHASE_2_BASE, PHASE_2_NEGATION, PHASE_2_EMOJI)
        ]
        baseline = next(
            (r for r in phase1 if r.axis_label == BASELINE_LABEL and r.ok), None
        )
        axis_table = [
            _record_row(r)
            for r in phase1
            if r.ok and r.axis_label in CANONICAL_AXES
        ]
        phase1_ranked = rank_records(phase1)
        phase2_ranked = rank_records(phase2)
        stage_bests = {}
        for phase in (PHASE_2_BASE, PHASE_2_NEGATION, PHASE_2_EMOJI):
            ranked = rank_records([r for r in phase2 if r.phase == phase])
            if ranked:
                stage_bests[phase] = _record_row(ranked[0])
        failures = [
            {**_record_row(r), "error": r.error} for r in group_records if not r.ok
        ]
        group = {
            "backend": backend,
            "dataset": dataset,
            "baseline": _record_row(baseline) if baseline else None,
            "phase1": {
                "axis_table": axis_table,
                "best": _record_row(phase1_ranked[0]) if phase1_ranked else None,
            },
            "phase2": {
                "best": _record_row(phase2_ranked[0]) if phase2_ranked else None,
                "stage_bests": stage_bests,
            },
            "failures": failures,
        }
        groups.append(group)
        overall = rank_records(group_records)
        if overall:
            comparison.append(
                {
                    "backend": backend,
                    "dataset": dataset,
                    "best_prompt": overall[0].prompt,
                    "map_at_50": overall[0].map_at_50,
                    "delta_vs_baseline": overall[0].delta_vs_baseline,
                }
            )

    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "groups": groups,
        "comparison": comparison,
    }


def _write_axis_csv(bundle: dict, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["backend", "dataset", "axis", "level", "prompt", "map_at_50", "delta"]
        )
        for group in bundle["groups"]:
            for row in group["phase1"]["axis_table"]:
                writer.writerow(
                    [
                        group["backend"],
                        group["dataset"],
                        row["axis_label"],
                        row["level_value"],
                        row["prompt"],
                        row["map_at_50"],
                        row["delta_vs_baseline"],
                    ]
                )


def _write_best_csv(bundle: dict, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["backend", "dataset", "phase", "prompt", "map_at_50", "delta"]
        )
        for group in bundle["groups"]:
            rows = [("baseline", group["baseline"]), ("phase1", group["phase1"]["best"])]
            rows += [("phase2", group["phase2"]["best"])]
            rows += list(group["phase2"]["stage_bests"].items())
            for phase, row in rows:
                if row is None:
                    continue
                writer.writerow(
                    [
                        group["backend"],
                        group["dataset"],
                        phase,
                        row["prompt"],
                        row["map_at_50"],
                        row["delta_vs_baseline"],
                    ]
                )


def _curve_records(records: Sequence[TrialRecord]) -> list[TrialRecord]:
    """Baseline plus best record per group, where curves were stored."""
    out = []
    seen = set()
    groups: dict[tuple[str, str], list[TrialRecord]] = {}
    for record in records:
        groups.setdefault(_group_key(record), []).append(record)
    for group_records in groups.values():
        picks = []
        baseline = next(
            (
                r
                for r in group_records
                if r.phase == PHASE_1 and r.axis_label == BASELINE_LABEL and r.ok
            ),
            None,
        )
        if baseline:
            picks.append(baseline)
        ranked = rank_records(group_records)
        if ranked:
            picks.append(ranked[0])
        for record in picks:
            if record.trial_id not in seen and record.eval_detail:
                seen.add(record.trial_id)
                out.append(record)
    return out


def _write_curves(records: Sequence[TrialRecord], out_dir: Path) -> list[Path]:
    paths = []
    curve_dir = out_dir / "curves"
    curve_dir.mkdir(parents=True, exist_ok=True)
    for record in _curve_records(records):
        result = EvalResult.from_dict(record.eval_detail)
        stem = f"trial_{record.trial_id:04d}"
        pr_path = curve_dir / f"{stem}_pr.csv"
        f1_path = curve_dir / f"{stem}_f1.csv"
        write_pr_csv(result, pr_path)
        write_f1_csv(result, f1_path)
        paths += [pr_path, f1_path]
    return paths


def render_charts(bundle: dict, out_dir: Path) -> list[Path]:
    """Static SVG charts: per-axis gain radar and top-prompt bars per group."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    matplotlib.rcParams["svg.hashsalt"] = "promptaxes"
    paths = []
    for group in bundle["groups"]:
        slug = f"{group['backend']}_{group['dataset']}".replace("/", "_").replace(":", "_")
        axis_best = {name: 0.0 for name in CANONICAL_AXES}
        for row in group["phase1"]["axis_table"]:
            axis = row["axis_label"]
            delta = row["delta_vs_baseline"] or 0.0
            axis_best[axis] = max(axis_best[axis], delta)

        angles = np.linspace(0, 2 * np.pi, len(CANONICAL_AXES), endpoint=False)
        values = np.array([axis_best[name] for name in CANONICAL_AXES])
        fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(5, 5))
        closed_angles = np.concatenate([angles, angles[:1]])
        closed_values = np.concatenate([values, values[:1]])
        ax.plot(closed_angles, closed_values, marker="o")
        ax.fill(closed_angles, closed_values, alpha=0.2)
        ax.set_xticks(angles)
        ax.set_xticklabels(CANONICAL_AXES)
        ax.set_title(f"best per-axis gain: {group['backend']} / {group['dataset']}")
        radar_path = out_dir / f"{slug}_axis_radar.svg"
        fig.savefig(radar_path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(radar_path)

        rows = sorted(
            group["phase1"]["axis_table"], key=lambda r: -(r["map_at_50"] or 0)
        )[:10]
        if rows:
            fig, ax = plt.subplots(figsize=(8, 4))
            # bundled fonts lack emoji glyphs; keep labels ascii
            labels = [
                r["prompt"][:40].encode("ascii", "replace").decode() for r in rows
            ][::-1]
            scores = [r["map_at_50"] for r in rows][::-1]
            ax.barh(range(len(rows)), scores)
            ax.set_yticks(range(len(rows)))
            ax.set_yticklabels(labels, fontsize=7)
            ax.set_xlabel("score")
            ax.set_title(f"top single-axis prompts: {group['backend']}")
            fig.tight_layout()
            bar_path = out_dir / f"{slug}_top_prompts.svg"
            fig.savefig(bar_path, format="svg", metadata={"Date": None})
            plt.close(fig)
            paths.append(bar_path)
    return paths


def write_report(
    records: Sequence[TrialRecord],
    out_dir: str | Path,
    formats: Iterable[str] = ("json",),
) -> dict:
    """Write the report bundle; returns it.

    ``json`` writes report.json; ``csv`` additionally writes the axis and
    best-prompt tables plus PR/F1 curves; ``svg`` additionally renders
    charts.
    """
    formats = set(formats)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = build_report(records)
    with open(out_dir / "report.json", "w", encoding="utf-8") as f:
        json.dump(bundle, f, ensure_ascii=False, indent=2)
        f.write("\n")
    if formats & {"csv", "svg"}:
        _write_axis_csv(bundle, out_dir / "axis_deltas.csv")
        _write_best_csv(bundle, out_dir / "best_prompts.csv")
        _write_curves(records, out_dir)
    if "svg" in formats:
        render_charts(bundle, out_dir)
    return bundle
