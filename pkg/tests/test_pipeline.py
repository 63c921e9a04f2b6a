import dataclasses
import json
from pathlib import Path

import pytest

from promptaxes import (
    MockBackend,
    PromptSpec,
    RunConfig,
    canonical_projection,
    cowpea_flower_axes,
    generate_ofat,
    load_ledger,
    make_synthetic_gt,
    record_backend,
    render_prompt,
    run,
    run_phase1,
    run_phase2,
    save_axis_set,
    save_coco,
    save_prediction_cache,
    verify_ledger_consistency,
)
from promptaxes.errors import (
    BackgroundUnsupportedError,
    ConfigError,
    PipelineError,
)
from promptaxes.ledger import PHASE_1, PHASE_2_BASE, PHASE_2_EMOJI, PHASE_2_NEGATION

FIXTURE = Path(__file__).parent / "fixtures" / "mock_planted.json"


@pytest.fixture()
def workdir(tmp_path, small_gt, flower_axes):
    save_coco(small_gt, tmp_path / "gt.json")
    save_axis_set(flower_axes, tmp_path / "axes.json")
    return tmp_path


def _config(workdir, out="out", **kw):
    defaults = dict(
        axes_path=str(workdir / "axes.json"),
        gt_path=str(workdir / "gt.json"),
        backend_spec=f"mock:{FIXTURE}",
        out_dir=str(workdir / out),
        seed=0,
    )
    defaults.update(kw)
    return RunConfig(**defaults)


def test_phase1_produces_40_ok_trials(workdir):
    records = run_phase1(_config(workdir))
    assert len(records) == 40
    assert all(r.ok for r in records)
    assert records[0].axis_label == "baseline"
    assert records[0].prompt == "a flower"
    assert records[0].delta_vs_baseline == 0.0
    # every trial carries the gain over the baseline
    baseline_map = records[0].map_at_50
    for r in records[1:]:
        assert r.delta_vs_baseline == pytest.approx(r.map_at_50 - baseline_map)
        assert r.f1_threshold is not None


def test_phase1_ledger_written_and_loadable(workdir):
    records = run_phase1(_config(workdir))
    loaded = load_ledger(workdir / "out" / "ledger.jsonl")
    assert [r.fingerprint for r in loaded] == [r.fingerprint for r in records]
    assert (workdir / "out" / "phase1_plan.jsonl").exists()
    assert (workdir / "out" / "predictions.jsonl").exists()


def test_phase1_baseline_failure_aborts(workdir, small_gt, flower_axes):
    backend = MockBackend(json.load(open(FIXTURE)), small_gt, seed=0)
    plan = generate_ofat(flower_axes)
    prompts = [render_prompt(e.spec, flower_axes).text for e in plan.entries[1:]]
    cache = record_backend(backend, small_gt, prompts)  # baseline missing
    save_prediction_cache(cache, workdir / "partial.jsonl")
    config = _config(workdir, backend_spec=f"cached:{workdir / 'partial.jsonl'}")
    with pytest.raises(PipelineError, match="baseline"):
        run_phase1(config)
    loaded = load_ledger(workdir / "out" / "ledger.jsonl")
    assert len(loaded) == 1 and not loaded[0].ok


def test_phase1_missing_prompt_fails_only_that_trial(workdir, small_gt, flower_axes):
    backend = MockBackend(json.load(open(FIXTURE)), small_gt, seed=0)
    plan = generate_ofat(flower_axes)
    prompts = [render_prompt(e.spec, flower_axes).text for e in plan.entries]
    dropped = prompts.pop()  # last emoji variant
    cache = record_backend(backend, small_gt, prompts)
    save_prediction_cache(cache, workdir / "partial.jsonl")
    config = _config(workdir, backend_spec=f"cached:{workdir / 'partial.jsonl'}")
    records = run_phase1(config)
    ok = [r for r in records if r.ok]
    failed = [r for r in records if not r.ok]
    assert len(ok) == 39 and len(failed) == 1
    assert failed[0].prompt == dropped
    assert "MissingPrediction" in failed[0].error


def test_full_run_recovers_planted_optimum(workdir):
    summary = run(_config(workdir))
    best = summary.phase2_best
    assert "yellow" in best.prompt
    assert "not" in best.prompt
    records = load_ledger(workdir / "out" / "ledger.jsonl")
    assert verify_ledger_consistency(records).fingerprint == best.fingerprint
    phases = {r.phase for r in records}
    assert phases == {PHASE_1, PHASE_2_BASE, PHASE_2_NEGATION, PHASE_2_EMOJI}
    counts = {p: sum(1 for r in records if r.phase == p) for p in phases}
    assert counts == {PHASE_1: 40, PHASE_2_BASE: 36, PHASE_2_NEGATION: 15, PHASE_2_EMOJI: 6}
    assert summary.calibration is not None and summary.calibration.f1 > 0


def test_full_run_is_deterministic(workdir):
    run(_config(workdir, "out_a"))
    run(_config(workdir, "out_b"))
    a = canonical_projection(load_ledger(workdir / "out_a" / "ledger.jsonl"))
    b = canonical_projection(load_ledger(workdir / "out_b" / "ledger.jsonl"))
    assert a == b
    # the recorded prediction caches agree byte for byte
    assert (workdir / "out_a" / "predictions.jsonl").read_bytes() == (
        workdir / "out_b" / "predictions.jsonl"
    ).read_bytes()


def test_seed_changes_results(workdir):
    run(_config(workdir, "out_a"))
    run(_config(workdir, "out_b", seed=5))
    a = canonical_projection(load_ledger(workdir / "out_a" / "ledger.jsonl"))
    b = canonical_projection(load_ledger(workdir / "out_b" / "ledger.jsonl"))
    assert a != b


def test_phase2_requires_phase1(workdir):
    with pytest.raises(PipelineError, match="ledger"):
        run_phase2(_config(workdir, "fresh"))


def test_phase2_standalone_after_phase1(workdir):
    config = _config(workdir)
    run_phase1(config)
    records, best = run_phase2(config)
    assert len(records) == 36 + 15 + 6
    assert best.map_at_50 == max(r.map_at_50 for r in records if r.ok)


def test_resume_skips_scored_prompts(workdir):
    config = _config(workdir)
    summary = run(config)
    before = load_ledger(workdir / "out" / "ledger.jsonl")
    resumed = run(dataclasses.replace(config, resume=True))
    after = load_ledger(workdir / "out" / "ledger.jsonl")
    assert len(after) == len(before)
    assert resumed.phase2_best.fingerprint == summary.phase2_best.fingerprint


def test_existing_ledger_without_resume_refused(workdir):
    config = _config(workdir)
    run_phase1(config)
    with pytest.raises(ConfigError, match="resume"):
        run_phase1(config)


def test_emoji_stage_disabled(workdir):
    config = _config(workdir, include_emoji_stage=False)
    summary = run(config)
    records = load_ledger(workdir / "out" / "ledger.jsonl")
    assert not any(r.phase == PHASE_2_EMOJI for r in records)
    assert summary.phase2_best.phase in (PHASE_2_BASE, PHASE_2_NEGATION)


def test_top_n_zero_rejected(workdir):
    with pytest.raises(ConfigError):
        _config(workdir, top_n=0)


def test_background_on_with_cached_backend_rejected(workdir, small_gt):
    backend = MockBackend(json.load(open(FIXTURE)), small_gt, seed=0)
    cache = record_backend(backend, small_gt, ["a flower"])
    save_prediction_cache(cache, workdir / "cache.jsonl")
    config = _config(
        workdir, backend_spec=f"cached:{workdir / 'cache.jsonl'}", background="on"
    )
    with pytest.raises(BackgroundUnsupportedError):
        run_phase1(config)


def test_background_improves_score_on_fixture(workdir):
    on = run_phase1(_config(workdir, "out_on", background="on"))
    off = run_phase1(_config(workdir, "out_off", background="off"))
    assert on[0].map_at_50 >= off[0].map_at_50
    assert on[0].map_at_50 > off[0].map_at_50  # strict on this fixture


def test_cached_rerun_of_recorded_predictions_matches(workdir):
    summary = run(_config(workdir))
    config = _config(
        workdir,
        "out_cached",
        backend_spec=f"cached:{workdir / 'out' / 'predictions.jsonl'}",
        background="off",
    )
    cached_summary = run(config)
    assert cached_summary.phase2_best.fingerprint == summary.phase2_best.fingerprint
    assert cached_summary.phase2_best.map_at_50 == summary.phase2_best.map_at_50
    a = [r for r in load_ledger(workdir / "out" / "ledger.jsonl")]
    b = [r for r in load_ledger(workdir / "out_cached" / "ledger.jsonl")]
    assert [(r.fingerprint, r.map_at_50) for r in a] == [
        (r.fingerprint, r.map_at_50) for r in b
    ]


def test_config_file_round_trip(workdir):
    config = _config(workdir)
    path = workdir / "config.json"
    path.write_text(json.dumps(dataclasses.asdict(config)), encoding="utf-8")
    assert RunConfig.from_file(path) == config


def test_unknown_config_key_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        RunConfig.from_dict({"axes_path": "a", "gt_path": "g", "backend_spec": "m",
                             "out_dir": "o", "bogus": 1})


def test_wire_requests_end_with_background_slot(workdir, small_gt, planted_fixture):
    seen = []

    class Spy(MockBackend):
        def detect(self, image, prompts):
            seen.append(tuple(prompts))
            return super().detect(image, prompts)

    from promptaxes import collect_detections

    spy = Spy(planted_fixture, small_gt, seed=0)
    collect_detections(spy, small_gt, "a flower", use_background=True)
    assert seen and all(p[-1] == "" for p in seen)
    seen.clear()
    collect_detections(spy, small_gt, "a flower", use_background=False)
    assert seen and all(p == ("a flower",) for p in seen)
