"""Command-line entry points.

Subcommands: phase1, phase2, run, translate, calibrate, eval, report.
Run settings can come from a JSON config file mirroring RunConfig; explicit
command-line flags override file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline, report
from .axes import load_axis_set, save_axis_set
from .errors import PromptAxesError
from .ledger import load_ledger
from .pipeline import RunConfig
from .translate import LLMEndpoint, TranslationRequest, translate_axes


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--axes", help="axis definition file")
    p.add_argument("--gt", help="COCO-style ground-truth annotations")
    p.add_argument(
        "--backend",
        help="cached:<predictions.jsonl> | remote:<url> | mock:<fixture.json>",
    )
    p.add_argument("--out", help="output directory (ledger, plans, summary)")
    p.add_argument("--top-n", type=int, dest="top_n", help="negation stage width")
    p.add_argument("--iou", type=float, dest="iou", help="match threshold")
    p.add_argument("--seed", type=int, help="seed for the mock backend")
    p.add_argument(
        "--background",
        choices=("auto", "on", "off"),
        help="background absorber class handling",
    )
    p.add_argument(
        "--resume", action="store_true", default=None, help="skip already-scored prompts"
    )
    p.add_argument(
        "--no-emoji",
        action="store_true",
        default=None,
        help="skip the emoji expansion stage",
    )
    p.add_argument("--dataset-id", dest="dataset_id", help="dataset label in records")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    doc = {}
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            doc = json.load(f)
    overrides = {
        "axes_path": args.axes,
        "gt_path": args.gt,
        "backend_spec": args.backend,
        "out_dir": args.out,
        "top_n": args.top_n,
        "iou_thresh": args.iou,
        "seed": args.seed,
        "background": args.background,
        "resume": args.resume,
        "dataset_id": args.dataset_id,
    }
    if args.no_emoji:
        overrides["include_emoji_stage"] = False
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(doc)


def _cmd_phase1(args) -> int:
    records = pipeline.run_phase1(_config_from_args(args))
    ok = [r for r in records if r.ok]
    print(f"phase 1: {len(ok)} ok / {len(records) - len(ok)} failed trials")
    if ok:
        best = max(ok, key=lambda r: r.map_at_50)
        print(f"best: {best.prompt!r}  score {best.map_at_50:.4f}  gain {best.delta_vs_baseline:+.4f}")
    return 0


def _cmd_phase2(args) -> int:
    records, best = pipeline.run_phase2(_config_from_args(args))
    ok = [r for r in records if r.ok]
    print(f"phase 2: {len(ok)} ok / {len(records) - len(ok)} failed trials")
    print(f"best: {best.prompt!r}  score {best.map_at_50:.4f}  gain {best.delta_vs_baseline:+.4f}")
    return 0


def _cmd_run(args) -> int:
    summary = pipeline.run(_config_from_args(args))
    print(f"baseline: {summary.baseline.prompt!r}  score {summary.baseline.map_at_50:.4f}")
    print(
        f"phase-1 best: {summary.phase1_best.prompt!r}  "
        f"score {summary.phase1_best.map_at_50:.4f}  "
        f"gain {summary.phase1_best.delta_vs_baseline:+.4f}"
    )
    print(
        f"phase-2 best: {summary.phase2_best.prompt!r}  "
        f"score {summary.phase2_best.map_at_50:.4f}  "
        f"gain {summary.phase2_best.delta_vs_baseline:+.4f}"
    )
    if summary.calibration is not None:
        c = summary.calibration
        print(f"calibrated threshold: {c.threshold:.4f} (f1 {c.f1:.4f})")
    return 0


def _cmd_translate(args) -> int:
    source = load_axis_set(args.axes)
    endpoint = LLMEndpoint(
        url=args.endpoint_url,
        model_name=args.model,
        api_key_env=args.api_key_env,
        max_attempts=args.attempts,
        stub_file=args.stub,
    )
    request = TranslationRequest(
        source=source, target_description=args.target, endpoint=endpoint
    )
    result = translate_axes(request)
    save_axis_set(result.axes, args.out)
    print(
        f"translated axes for {args.target!r} written to {args.out} "
        f"(attempts {result.attempts}, template v{result.template_version})"
    )
    return 0


def _cmd_calibrate(args) -> int:
    result = pipeline.calibrate(
        args.prompt,
        args.gt,
        args.backend,
        iou_thresh=args.iou,
        seed=args.seed,
        background=args.background,
    )
    print(json.dumps(result.to_dict(), indent=2))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(result.to_dict(), f, ensure_ascii=False, indent=2)
            f.write("\n")
    return 0


def _cmd_eval(args) -> int:
    result = pipeline.evaluate_prompt(
        args.prompt,
        args.gt,
        args.backend,
        iou_thresh=args.iou,
        seed=args.seed,
        background=args.background,
    )
    print(f"score: {result.map_at_50:.6f}  (tp {result.tp}, fp {result.fp}, fn {result.fn})")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(result.to_json() + "\n")
    return 0


def _cmd_report(args) -> int:
    records = load_ledger(args.ledger)
    formats = {"json"}
    if args.format in ("csv", "svg"):
        formats.add("csv")
    if args.format == "svg":
        formats.add("svg")
    bundle = report.write_report(records, args.out, formats=formats)
    print(f"report for {len(records)} trials written to {args.out}")
    for entry in bundle["comparison"]:
        print(
            f"  {entry['backend']} / {entry['dataset']}: {entry['best_prompt']!r} "
            f"score {entry['map_at_50']:.4f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptaxes",
        description="Discover detector-specific text prompts for open-vocabulary detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, doc in (
        ("phase1", _cmd_phase1, "run the one-factor-at-a-time sweep"),
        ("phase2", _cmd_phase2, "run the staged combinatorial sweep"),
        ("run", _cmd_run, "run both phases plus calibration"),
    ):
        p = sub.add_parser(name, help=doc)
        _add_run_flags(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("translate", help="translate axes to a new target object")
    p.add_argument("--axes", required=True, help="source axis definition file")
    p.add_argument("--target", required=True, help="new target object description")
    p.add_argument("--out", required=True, help="output axis file")
    p.add_argument("--stub", help="stub reply file instead of a live endpoint")
    p.add_argument("--endpoint-url", dest="endpoint_url", help="chat-completions URL")
    p.add_argument("--model", help="model name passed to the endpoint")
    p.add_argument("--api-key-env", dest="api_key_env", help="env var holding the API key")
    p.add_argument("--attempts", type=int, default=3, help="validation retry budget")
    p.set_defaults(fn=_cmd_translate)

    for name, fn, doc in (
        ("calibrate", _cmd_calibrate, "F1-max confidence threshold for one prompt"),
        ("eval", _cmd_eval, "score a single prompt"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--prompt", required=True, help="exact prompt text")
        p.add_argument("--gt", required=True, help="ground-truth annotations")
        p.add_argument("--backend", required=True, help="backend spec")
        p.add_argument("--iou", type=float, default=0.5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--background", choices=("auto", "on", "off"), default="auto")
        p.add_argument("--out", help="write the result JSON here")
        p.set_defaults(fn=fn)

    p = sub.add_parser("report", help="derive tables, curves and charts from a ledger")
    p.add_argument("--ledger", required=True, help="ledger JSONL file")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--format", choices=("json", "csv", "svg"), default="json")
    p.set_defaults(fn=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PromptAxesError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
