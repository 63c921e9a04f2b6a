import json

import pytest

from promptaxes import (
    LLMEndpoint,
    TranslationRequest,
    build_translation_prompt,
    translate_axes,
)
from promptaxes.errors import ConfigError, SchemaViolationError
from promptaxes.translate import TEMPLATE_VERSION


@pytest.fixture()
def request_for(flower_axes, pod_stub_path):
    def make(stub_file, target="cowpea pods", max_attempts=3):
        return TranslationRequest(
            source=flower_axes,
            target_description=target,
            endpoint=LLMEndpoint(stub_file=stub_file, max_attempts=max_attempts),
        )

    return make


def test_stub_round_trip(request_for, pod_stub_path):
    result = translate_axes(request_for(pod_stub_path))
    assert result.axes.axis("taxonomy").baseline == "pod"
    assert result.attempts == 1
    assert result.template_version == TEMPLATE_VERSION


def test_stub_missing_axis_names_it(request_for, pod_stub_path, tmp_path):
    doc = json.loads(pod_stub_path.read_text(encoding="utf-8"))
    del doc["axes"]["emoji"]
    bad = tmp_path / "bad_stub.json"
    bad.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(SchemaViolationError, match="emoji"):
        translate_axes(request_for(bad))


def test_retry_recovers_from_invalid_first_reply(request_for, pod_stub_path, tmp_path):
    good = json.loads(pod_stub_path.read_text(encoding="utf-8"))
    bad = dict(good)
    bad["axes"] = {k: v for k, v in good["axes"].items() if k != "size"}
    stub = tmp_path / "seq_stub.json"
    stub.write_text(json.dumps([bad, good]), encoding="utf-8")
    result = translate_axes(request_for(stub))
    assert result.attempts == 2
    assert result.axes.axis("taxonomy").baseline == "pod"


def test_never_returns_partial_set(request_for, pod_stub_path, tmp_path):
    doc = json.loads(pod_stub_path.read_text(encoding="utf-8"))
    doc["axes"]["color"] = {"baseline": "", "values": ["green", "green"]}
    bad = tmp_path / "dup_stub.json"
    bad.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(SchemaViolationError) as excinfo:
        translate_axes(request_for(bad, max_attempts=2))
    assert excinfo.value.attempts == 2


def test_stub_may_reply_with_fenced_text(request_for, pod_stub_path, tmp_path):
    doc = pod_stub_path.read_text(encoding="utf-8")
    stub = tmp_path / "text_stub.json"
    stub.write_text(json.dumps([f"```json\n{doc}\n```"]), encoding="utf-8")
    result = translate_axes(request_for(stub))
    assert result.axes.axis("taxonomy").baseline == "pod"


def test_prompt_is_deterministic(request_for, pod_stub_path):
    req = request_for(pod_stub_path)
    assert build_translation_prompt(req) == build_translation_prompt(req)
    assert f"[template v{TEMPLATE_VERSION}]" in build_translation_prompt(req)


def test_prompt_embeds_errors_on_retry(request_for, pod_stub_path):
    req = request_for(pod_stub_path)
    text = build_translation_prompt(req, validation_errors=("missing axes: size",))
    assert "missing axes: size" in text
    assert "rejected" in text


def test_empty_target_rejected(flower_axes, pod_stub_path):
    with pytest.raises(ConfigError):
        TranslationRequest(
            source=flower_axes,
            target_description="   ",
            endpoint=LLMEndpoint(stub_file=pod_stub_path),
        )


def test_endpoint_needs_url_or_stub():
    with pytest.raises(ConfigError):
        LLMEndpoint()


def test_translated_axes_drive_a_plan(request_for, pod_stub_path):
    from promptaxes import PromptSpec, generate_ofat, render_prompt

    result = translate_axes(request_for(pod_stub_path))
    plan = generate_ofat(result.axes)
    expected = 1 + sum(result.axes.value_count(n) for n in
                       ("grammar", "size", "color", "taxonomy", "anatomy",
                        "phenology", "negation", "emoji"))
    assert len(plan) == expected
    baseline = render_prompt(PromptSpec.baseline(), result.axes)
    assert baseline.text == "a pod"
