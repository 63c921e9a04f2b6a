"""Prompt discovery engine for zero-shot open-vocabulary object detectors.

The package decomposes detection prompts into eight component axes, sweeps
them one factor at a time, then combines the strongest levels through staged
sweeps with negation and emoji expansions, scoring every candidate with
COCO-style average precision at IoU 0.5. Detectors plug in behind a small
backend interface (prediction caches, a JSON wire protocol, or a
deterministic mock), and the whole search is reproducible from an
append-only trial ledger.
"""

from .axes import (
    CANONICAL_AXES,
    Axis,
    AxisSet,
    PromptSpec,
    RenderedPrompt,
    axis_set_from_dict,
    load_axis_set,
    render_prompt,
    save_axis_set,
)
from .backends import (
    BackendDescriptor,
    CachedBackend,
    DetectResponse,
    DetectorBackend,
    MockBackend,
    MockFixture,
    RemoteBackend,
    WireDetection,
    apply_background_class,
    collect_detections,
    record_backend,
)
from .data import (
    Annotation,
    BBox,
    Detection,
    DetectionSet,
    GroundTruthSet,
    ImageInfo,
    load_coco,
    load_prediction_cache,
    save_coco,
    save_prediction_cache,
)
from .ledger import TrialRecord, canonical_projection, load_ledger, rank_records
from .metrics import (
    CalibrationResult,
    EvalResult,
    MatchResult,
    average_precision,
    f1_max_threshold,
    iou,
    iou_matrix,
    map_at_50,
    match_at_iou,
)
from .pipeline import (
    RunConfig,
    RunSummary,
    calibrate,
    evaluate_prompt,
    run,
    run_phase1,
    run_phase2,
    verify_ledger_consistency,
)
from .plans import (
    Phase1Plan,
    Phase2Config,
    Phase2Plan,
    best_level,
    expand_emoji,
    expand_negation,
    generate_ofat,
    generate_phase2_base,
)
from .presets import cowpea_flower_axes
from .report import build_report, write_report
from .synth import make_synthetic_gt
from .translate import (
    LLMEndpoint,
    TranslationRequest,
    TranslationResult,
    build_translation_prompt,
    translate_axes,
)

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_AXES",
    "Axis",
    "AxisSet",
    "PromptSpec",
    "RenderedPrompt",
    "axis_set_from_dict",
    "load_axis_set",
    "render_prompt",
    "save_axis_set",
    "BackendDescriptor",
    "CachedBackend",
    "DetectResponse",
    "DetectorBackend",
    "MockBackend",
    "MockFixture",
    "RemoteBackend",
    "WireDetection",
    "apply_background_class",
    "collect_detections",
    "record_backend",
    "Annotation",
    "BBox",
    "Detection",
    "DetectionSet",
    "GroundTruthSet",
    "ImageInfo",
    "load_coco",
    "load_prediction_cache",
    "save_coco",
    "save_prediction_cache",
    "TrialRecord",
    "canonical_projection",
    "load_ledger",
    "rank_records",
    "CalibrationResult",
    "EvalResult",
    "MatchResult",
    "average_precision",
    "f1_max_threshold",
    "iou",
    "iou_matrix",
    "map_at_50",
    "match_at_iou",
    "RunConfig",
    "RunSummary",
    "calibrate",
    "evaluate_prompt",
    "run",
    "run_phase1",
    "run_phase2",
    "verify_ledger_consistency",
    "Phase1Plan",
    "Phase2Config",
    "Phase2Plan",
    "best_level",
    "expand_emoji",
    "expand_negation",
    "generate_ofat",
    "generate_phase2_base",
    "cowpea_flower_axes",
    "build_report",
    "write_report",
    "make_synthetic_gt",
    "LLMEndpoint",
    "TranslationRequest",
    "TranslationResult",
    "build_translation_prompt",
    "translate_axes",
]
