"""
Translating the axis structure to a new target object
======================================================

The axis structure carries over between targets; only the vocabulary
changes. A language model rewrites baselines and values for the new object
(here through a canned stub so the demo runs offline), the reply is
validated against the axis schema, and the translated set immediately
drives the same search plans.
"""

import json
from pathlib import Path

from promptaxes import (
    LLMEndpoint,
    PromptSpec,
    TranslationRequest,
    build_translation_prompt,
    cowpea_flower_axes,
    generate_ofat,
    render_prompt,
    translate_axes,
)

out = Path(__file__).parent / "demo_output"
out.mkdir(parents=True, exist_ok=True)

source = cowpea_flower_axes()

# the stub stands in for a live endpoint; with a real one you would pass
# LLMEndpoint(url=..., model_name=..., api_key_env=...) instead
stub_reply = {
    "target": "cowpea pod",
    "axes": {
        "grammar": {"baseline": "a", "values": ["a single", "", "one"]},
        "size": {"baseline": "", "values": ["long", "slender"]},
        "color": {"baseline": "", "values": ["green", "mottled", "brown"]},
        "taxonomy": {"baseline": "pod", "values": ["cowpea pod", "pea pod", "bean pod"]},
        "anatomy": {"baseline": "", "values": ["with visible peas", "with seeds"]},
        "phenology": {"baseline": "", "values": ["immature", "mature"]},
        "negation": {"baseline": "", "values": ["not a leaf, not a stem", "not a flower"]},
        "emoji": {"baseline": "", "values": ["\U0001fadb"]},
    },
}
stub_path = out / "pod_stub.json"
stub_path.write_text(json.dumps(stub_reply, ensure_ascii=False), encoding="utf-8")

request = TranslationRequest(
    source=source,
    target_description="cowpea pods",
    endpoint=LLMEndpoint(stub_file=stub_path),
)

print("instruction sent to the model (first lines):")
for line in build_translation_prompt(request).splitlines()[:6]:
    print("  " + line)
print("  ...")

result = translate_axes(request)
print(f"\ntranslation accepted after {result.attempts} attempt(s), "
      f"template v{result.template_version}")

pods = result.axes
print("new baseline prompt:", repr(render_prompt(PromptSpec.baseline(), pods).text))
spec = (
    PromptSpec.baseline()
    .with_level("grammar", 0)
    .with_level("color", 1)
    .with_level("negation", 0)
)
print("a translated combination:", repr(render_prompt(spec, pods).text))

plan = generate_ofat(pods)
print(f"\nthe translated axes drive the same machinery: {len(plan)}-prompt plan")
