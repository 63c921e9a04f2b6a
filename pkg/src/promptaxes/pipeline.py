"""End-to-end orchestration: phase 1, phase 2, calibration, provenance.

A run evaluates prompts against one (backend, dataset, axes) triple. Every
evaluated prompt becomes a ledger record with its score and the gain over
the all-baseline prompt. Failed trials are recorded and excluded from
ranking; the run only aborts when the baseline itself cannot be scored.
Reruns with ``resume`` skip prompts already scored under the same semantic
configuration.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .axes import AxisSet, PromptSpec, load_axis_set, render_prompt
from .backends import (
    CachedBackend,
    DetectorBackend,
    MockBackend,
    RemoteBackend,
    collect_detections,
)
from .data import DetectionSet, GroundTruthSet, load_coco, save_prediction_cache
from .errors import (
    BackgroundUnsupportedError,
    ConfigError,
    MissingScoreError,
    PipelineError,
    PromptAxesError,
)
from .ledger import (
    PHASE_1,
    PHASE_2_BASE,
    PHASE_2_EMOJI,
    PHASE_2_NEGATION,
    STATUS_FAILED,
    STATUS_OK,
    LedgerWriter,
    TrialRecord,
    load_ledger,
    rank_records,
)
from .metrics import CalibrationResult, EvalResult, best_f1_point, f1_max_threshold, map_at_50
from .plans import (
    BASELINE_LABEL,
    Phase2Config,
    PlanEntry,
    expand_emoji,
    expand_negation,
    generate_ofat,
    generate_phase2_base,
    write_plan_jsonl,
)

logger = logging.getLogger(__name__)

LEDGER_FILENAME = "ledger.jsonl"
PREDICTIONS_FILENAME = "predictions.jsonl"

BACKGROUND_MODES = ("auto", "on", "off")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; mirrors the JSON config file."""

    axes_path: str
    gt_path: str
    backend_spec: str
    out_dir: str
    top_n: int = 3
    include_emoji_stage: bool = True
    iou_thresh: float = 0.5
    seed: int = 0
    background: str = "auto"
    strict: bool = False
    resume: bool = False
    dataset_id: str | None = None
    record_predictions: bool = True
    store_curves: bool = True

    def __post_init__(self):
        if self.top_n < 1:
            raise ConfigError("top_n must be >= 1")
        if self.background not in BACKGROUND_MODES:
            raise ConfigError(f"background must be one of {BACKGROUND_MODES}")
        if not 0 < self.iou_thresh <= 1:
            raise ConfigError("iou_thresh must be in (0, 1]")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(doc)

    @property
    def dataset(self) -> str:
        return self.dataset_id or Path(self.gt_path).stem


def parse_backend_spec(spec: str) -> tuple[str, str]:
    """Split ``kind:argument`` strings like ``mock:fixture.json``."""
    kind, sep, arg = spec.partition(":")
    if not sep or kind not in ("mock", "cached", "remote") or not arg:
        raise ConfigError(
            f"backend spec {spec!r} must look like mock:<fixture>, "
            "cached:<predictions> or remote:<url>"
        )
    return kind, arg


def build_backend(spec: str, gt: GroundTruthSet, seed: int) -> DetectorBackend:
    kind, arg = parse_backend_spec(spec)
    if kind == "mock":
        if not Path(arg).exists():
            raise ConfigError(f"mock fixture {arg} does not exist")
        return MockBackend(arg, gt, seed=seed)
    if kind == "cached":
        if not Path(arg).exists():
            raise ConfigError(f"prediction cache {arg} does not exist")
        return CachedBackend.from_file(arg, gt=gt)
    return RemoteBackend(arg)


def _file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class _Run:
    """Mutable state shared by the phase drivers of one run."""

    def __init__(self, config: RunConfig):
        self.config = config
        for path, what in ((config.axes_path, "axes"), (config.gt_path, "ground truth")):
            if not Path(path).exists():
                raise ConfigError(f"{what} file {path} does not exist")
        self.axes: AxisSet = load_axis_set(config.axes_path)
        self.gt: GroundTruthSet = load_coco(config.gt_path)
        self.backend = build_backend(config.backend_spec, self.gt, config.seed)
        self.use_background = self._resolve_background()
        self.config_hash = self._config_hash()
        self.out_dir = Path(config.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.ledger_path = self.out_dir / LEDGER_FILENAME
        if self.ledger_path.exists() and not config.resume:
            raise ConfigError(
                f"{self.ledger_path} already exists; pass resume=True to continue "
                "it or choose a fresh output directory"
            )
        self.writer = LedgerWriter(self.ledger_path)
        self.records: list[TrialRecord] = (
            load_ledger(self.ledger_path) if self.ledger_path.exists() else []
        )
        self._next_trial_id = len(self.records)
        self._scored: dict[str, TrialRecord] = {
            r.fingerprint: r
            for r in self.records
            if r.ok and r.config_hash == self.config_hash
        }
        self.recorded = DetectionSet(entries={})

    def _resolve_background(self) -> bool:
        mode = self.config.background
        supported = self.backend.descriptor.supports_background_class
        if mode == "on" and not supported:
            raise BackgroundUnsupportedError(
                f"backend {self.backend.descriptor.name} does not support the "
                "background class but background='on' was requested"
            )
        return (mode == "on") or (mode == "auto" and supported)

    def _config_hash(self) -> str:
        kind, arg = parse_backend_spec(self.config.backend_spec)
        backend_id = f"{kind}:{arg if kind == 'remote' else _file_digest(arg)}"
        payload = {
            "axes": self.axes.to_dict(),
            "backend": backend_id,
            "dataset": _file_digest(self.config.gt_path),
            "dataset_id": self.config.dataset,
            "iou": self.config.iou_thresh,
            "seed": self.config.seed,
            "background": self.use_background,
        }
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    # -- trial evaluation ---------------------------------------------------

    def _evaluate(self, spec: PromptSpec) -> tuple[EvalResult | None, DetectionSet | None, str | None]:
        try:
            rendered = render_prompt(spec, self.axes)
            detections = collect_detections(
                self.backend, self.gt, rendered.text, use_background=self.use_background
            )
            result = map_at_50(
                detections,
                self.gt,
                rendered.text,
                iou_thresh=self.config.iou_thresh,
                strict=self.config.strict,
            )
            return result, detections, None
        except PromptAxesError as e:
            return None, None, f"{type(e).__name__}: {e}"

    def _record(
        self,
        spec: PromptSpec,
        phase: str,
        sweep_label: str | None,
        axis_label: str | None,
        result: EvalResult | None,
        error: str | None,
        baseline_map: float | None,
    ) -> TrialRecord:
        rendered = render_prompt(spec, self.axes)
        level_value = None
        if axis_label and axis_label != BASELINE_LABEL:
            level_value = self.axes.level_text(axis_label, spec.level(axis_label))
        if result is not None:
            f1_point = best_f1_point(result.f1_curve)
            record = TrialRecord(
                trial_id=self._next_trial_id,
                phase=phase,
                sweep_label=sweep_label,
                axis_label=axis_label,
                level_value=level_value,
                fingerprint=spec.fingerprint,
                prompt=rendered.text,
                backend=self.backend.descriptor.name,
                dataset=self.config.dataset,
                map_at_50=result.map_at_50,
                delta_vs_baseline=(
                    None if baseline_map is None else result.map_at_50 - baseline_map
                ),
                f1_threshold=f1_point.threshold if not f1_point.no_detections else None,
                status=STATUS_OK,
                error=None,
                config_hash=self.config_hash,
                timestamp=_utcnow(),
                eval_detail=result.to_dict() if self.config.store_curves else None,
            )
        else:
            record = TrialRecord(
                trial_id=self._next_trial_id,
                phase=phase,
                sweep_label=sweep_label,
                axis_label=axis_label,
                level_value=level_value,
                fingerprint=spec.fingerprint,
                prompt=rendered.text,
                backend=self.backend.descriptor.name,
                dataset=self.config.dataset,
                map_at_50=None,
                delta_vs_baseline=None,
                f1_threshold=None,
                status=STATUS_FAILED,
                error=error,
                config_hash=self.config_hash,
                timestamp=_utcnow(),
                eval_detail=None,
            )
        self.writer.append(record)
        self.records.append(record)
        self._next_trial_id += 1
        if record.ok:
            self._scored[record.fingerprint] = record
        return record

    def _run_stage(
        self,
        entries: Sequence[PlanEntry],
        phase: str,
        baseline_map: float | None,
        label_kind: str,
    ) -> list[TrialRecord]:
        """Evaluate a stage; resumed fingerprints are reused, not re-appended."""
        pending = [e for e in entries if e.spec.fingerprint not in self._scored]
        workers = self.backend.descriptor.max_concurrency
        if workers > 1 and len(pending) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(lambda e: self._evaluate(e.spec), pending))
        else:
            outcomes = [self._evaluate(e.spec) for e in pending]
        outcome_by_fp = {
            e.spec.fingerprint: o for e, o in zip(pending, outcomes)
        }
        stage_records = []
        for entry in entries:
            fp = entry.spec.fingerprint
            if fp in self._scored and fp not in outcome_by_fp:
                stage_records.append(self._scored[fp])
                continue
            result, detections, error = outcome_by_fp[fp]
            if detections is not None and self.config.record_predictions:
                self.recorded = self.recorded.merged_with(detections)
            record = self._record(
                entry.spec,
                phase,
                sweep_label=entry.label if label_kind == "sweep" else None,
                axis_label=entry.label if label_kind == "axis" else None,
                result=result,
                error=error,
                baseline_map=baseline_map,
            )
            stage_records.append(record)
        return stage_records

    def flush_predictions(self) -> None:
        if self.config.record_predictions and self.recorded.entries:
            save_prediction_cache(self.recorded, self.out_dir / PREDICTIONS_FILENAME)

    # -- phase drivers ------------------------------------------------------

    def baseline_record(self) -> TrialRecord | None:
        fp = PromptSpec.baseline().fingerprint
        return self._scored.get(fp)

    def phase1(self) -> list[TrialRecord]:
        plan = generate_ofat(self.axes)
        write_plan_jsonl(plan.entries, self.axes, self.out_dir / "phase1_plan.jsonl")
        baseline_entry, rest = plan.entries[0], plan.entries[1:]

        existing = self.baseline_record()
        if existing is not None:
            baseline_map = existing.map_at_50
            records = [existing]
        else:
            result, detections, error = self._evaluate(baseline_entry.spec)
            if result is None:
                self._record(
                    baseline_entry.spec, PHASE_1, None, BASELINE_LABEL, None, error, None
                )
                raise PipelineError(f"baseline trial failed: {error}")
            if detections is not None and self.config.record_predictions:
                self.recorded = self.recorded.merged_with(detections)
            records = [
                self._record(
                    baseline_entry.spec,
                    PHASE_1,
                    None,
                    BASELINE_LABEL,
                    result,
                    None,
                    baseline_map=result.map_at_50,
                )
            ]
            baseline_map = result.map_at_50
        records += self._run_stage(rest, PHASE_1, baseline_map, label_kind="axis")
        return records

    def phase1_scores(self) -> dict[PromptSpec, float]:
        """Scores of this configuration's phase-1 records, keyed by spec."""
        out = {}
        for record in self.records:
            if record.phase == PHASE_1 and record.ok and record.config_hash == self.config_hash:
                out[PromptSpec.from_fingerprint(record.fingerprint)] = record.map_at_50
        return out

    def phase2(self) -> tuple[list[TrialRecord], TrialRecord]:
        scores = self.phase1_scores()
        if not scores:
            raise PipelineError(
                "phase 2 needs a completed phase-1 segment for this configuration"
            )
        baseline = self.baseline_record()
        if baseline is None:
            raise PipelineError("phase-1 segment lacks the baseline trial")
        baseline_map = baseline.map_at_50

        config = Phase2Config(
            top_n_for_negation=self.config.top_n,
            include_emoji_stage=self.config.include_emoji_stage,
        )
        try:
            plan = generate_phase2_base(self.axes, scores, config)
        except MissingScoreError as e:
            raise PipelineError(f"phase-1 segment incomplete: {e}") from e
        write_plan_jsonl(plan.base, self.axes, self.out_dir / "phase2_base_plan.jsonl")

        base_records = self._run_stage(plan.base, PHASE_2_BASE, baseline_map, "sweep")
        ranked = rank_records(base_records)
        top_specs = [PromptSpec.from_fingerprint(r.fingerprint) for r in ranked]
        negation_specs = expand_negation(top_specs, self.axes, top_n=self.config.top_n)
        negation_entries = [PlanEntry(spec=s, label="negation") for s in negation_specs]
        negation_records = self._run_stage(
            negation_entries, PHASE_2_NEGATION, baseline_map, "axis"
        )

        pool = rank_records(base_records + negation_records)
        if not pool:
            raise PipelineError("every phase-2 trial failed; nothing to rank")
        emoji_records: list[TrialRecord] = []
        if config.include_emoji_stage and self.axes.value_count("emoji") > 0:
            top1 = PromptSpec.from_fingerprint(pool[0].fingerprint)
            emoji_specs = expand_emoji(top1, self.axes)
            emoji_entries = [PlanEntry(spec=s, label="emoji") for s in emoji_specs]
            emoji_records = self._run_stage(
                emoji_entries, PHASE_2_EMOJI, baseline_map, "axis"
            )

        stage_records = base_records + negation_records + emoji_records
        best = rank_records(stage_records)[0]
        ledger_best = verify_ledger_consistency(
            [r for r in self.records if r.config_hash == self.config_hash]
        )
        if best.fingerprint != ledger_best.fingerprint:
            raise PipelineError(
                "selected best prompt disagrees with the ledger argmax "
                f"({best.fingerprint} vs {ledger_best.fingerprint})"
            )
        return stage_records, best


@dataclass(frozen=True)
class RunSummary:
    """What a full run produced, beyond the ledger itself."""

    config_hash: str
    baseline: TrialRecord
    phase1_best: TrialRecord
    phase2_best: TrialRecord
    calibration: CalibrationResult | None

    def to_dict(self) -> dict:
        def strip(record: TrialRecord) -> dict:
            doc = record.to_dict()
            doc.pop("eval_detail", None)
            return doc

        return {
            "config_hash": self.config_hash,
            "baseline": strip(self.baseline),
            "phase1_best": strip(self.phase1_best),
            "phase2_best": strip(self.phase2_best),
            "calibration": None if self.calibration is None else self.calibration.to_dict(),
        }


def run_phase1(config: RunConfig) -> list[TrialRecord]:
    """Evaluate the one-factor-at-a-time plan; baseline first."""
    run = _Run(config)
    try:
        return run.phase1()
    finally:
        run.flush_predictions()


def run_phase2(config: RunConfig) -> tuple[list[TrialRecord], TrialRecord]:
    """Evaluate the staged combinatorial plan against an existing ledger."""
    if not (Path(config.out_dir) / LEDGER_FILENAME).exists():
        raise PipelineError(
            f"no ledger found under {config.out_dir}; run phase 1 first"
        )
    run = _Run(replace(config, resume=True))
    try:
        return run.phase2()
    finally:
        run.flush_predictions()


def run(config: RunConfig, calibrate_best: bool = True) -> RunSummary:
    """Both phases plus calibration of the final best prompt."""
    runner = _Run(config)
    try:
        phase1_records = runner.phase1()
        phase2_records, best = runner.phase2()
    finally:
        runner.flush_predictions()
    baseline = runner.baseline_record()
    phase1_best = rank_records(phase1_records)[0]
    calibration = None
    if calibrate_best:
        detections = collect_detections(
            runner.backend, runner.gt, best.prompt, use_background=runner.use_background
        )
        calibration = f1_max_threshold(
            detections, runner.gt, best.prompt, iou_thresh=config.iou_thresh
        )
    summary = RunSummary(
        config_hash=runner.config_hash,
        baseline=baseline,
        phase1_best=phase1_best,
        phase2_best=best,
        calibration=calibration,
    )
    with open(Path(config.out_dir) / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary.to_dict(), f, ensure_ascii=False, indent=2)
        f.write("\n")
    return summary


def evaluate_prompt(
    prompt: str,
    gt_path: str | Path,
    backend_spec: str,
    iou_thresh: float = 0.5,
    seed: int = 0,
    background: str = "auto",
) -> EvalResult:
    """Score one prompt text outside any run (the ``eval`` subcommand)."""
    gt = load_coco(gt_path)
    backend = build_backend(backend_spec, gt, seed)
    use_background = background == "on" or (
        background == "auto" and backend.descriptor.supports_background_class
    )
    if background == "on" and not backend.descriptor.supports_background_class:
        raise BackgroundUnsupportedError(
            f"backend {backend.descriptor.name} does not support the background class"
        )
    detections = collect_detections(backend, gt, prompt, use_background=use_background)
    return map_at_50(detections, gt, prompt, iou_thresh=iou_thresh)


def calibrate(
    prompt: str,
    gt_path: str | Path,
    backend_spec: str,
    iou_thresh: float = 0.5,
    seed: int = 0,
    background: str = "auto",
) -> CalibrationResult:
    """F1-max threshold for one prompt on a calibration dataset."""
    gt = load_coco(gt_path)
    backend = build_backend(backend_spec, gt, seed)
    use_background = background == "on" or (
        background == "auto" and backend.descriptor.supports_background_class
    )
    detections = collect_detections(backend, gt, prompt, use_background=use_background)
    return f1_max_threshold(detections, gt, prompt, iou_thresh=iou_thresh)


def verify_ledger_consistency(records: Sequence[TrialRecord]) -> TrialRecord:
    """Recompute the best phase-2 prompt from raw records (self-check)."""
    phase2 = [r for r in records if r.phase in (PHASE_2_BASE, PHASE_2_NEGATION, PHASE_2_EMOJI)]
    ranked = rank_records(phase2)
    if not ranked:
        raise PipelineError("ledger holds no successful phase-2 records")
    return ranked[0]
