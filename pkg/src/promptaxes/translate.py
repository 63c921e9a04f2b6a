"""Axis translation to new target objects through a pluggable language model.

The source axis set is embedded in a deterministic instruction template; the
model must answer with a complete axis document for the new target. Replies
are validated against the axis-file schema and invalid ones are retried with
the validation errors quoted back, up to the attempt limit. A file-backed
stub stands in for the endpoint in tests and offline runs.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path

import requests

from .axes import AxisSet, axis_set_from_dict
from .errors import (
    AxisValidationError,
    ConfigError,
    EndpointUnavailableError,
    ParseError,
    SchemaViolationError,
)

#: Bumped whenever the instruction template changes, so ledger entries can
#: tell which template produced a translation.
TEMPLATE_VERSION = "1"

_SCHEMA_HINT = (
    '{"target": "<target name>", "axes": {"grammar": {"baseline": str, '
    '"values": [str, ...]}, "size": {...}, "color": {...}, "taxonomy": {...}, '
    '"anatomy": {...}, "phenology": {...}, "negation": {...}, "emoji": {...}}}'
)


@dataclass(frozen=True)
class LLMEndpoint:
    """Where translations come from: a chat-completions URL or a stub file."""

    url: str | None = None
    model_name: str | None = None
    api_key_env: str | None = None
    max_attempts: int = 3
    timeout: float = 120.0
    stub_file: str | Path | None = None

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        if self.url is None and self.stub_file is None:
            raise ConfigError("endpoint needs either a url or a stub_file")


@dataclass(frozen=True)
class TranslationRequest:
    source: AxisSet
    target_description: str
    endpoint: LLMEndpoint

    def __post_init__(self):
        if not self.target_description.strip():
            raise ConfigError("target_description must be non-empty")


@dataclass(frozen=True)
class TranslationResult:
    axes: AxisSet
    attempts: int
    template_version: str


def build_translation_prompt(
    req: TranslationRequest, validation_errors: tuple[str, ...] = ()
) -> str:
    """Deterministic instruction text for one translation attempt."""
    source_json = json.dumps(req.source.to_dict(), ensure_ascii=False, indent=2)
    lines = [
        f"[template v{TEMPLATE_VERSION}]",
        "You adapt a structured prompt-axis definition to a new detection target.",
        "",
        "Here is the current axis definition:",
        source_json,
        "",
        f"New target object: {req.target_description.strip()}",
        "",
        "Rewrite every baseline and value so it describes the new target.",
        "Keep the same eight axes with the same names. Populate the negation",
        "axis with clauses naming the structures most likely to be confused",
        "with the new target. Keep emoji values as literal emoji characters.",
        "Answer with a single JSON document of this exact shape and nothing",
        "else:",
        _SCHEMA_HINT,
    ]
    if validation_errors:
        lines += [
            "",
            "Your previous answer was rejected for these reasons; fix them:",
            *[f"- {e}" for e in validation_errors],
        ]
    return "\n".join(lines)


_FENCE_RE = re.compile(r"^```[a-zA-Z0-9]*\s*|\s*```$")


def _parse_payload(raw: object) -> dict:
    """Accept either a parsed document or model text possibly wrapped in fences."""
    if isinstance(raw, dict):
        return raw
    if not isinstance(raw, str):
        raise ParseError(f"reply must be a JSON object or text, got {type(raw).__name__}")
    text = raw.strip()
    text = _FENCE_RE.sub("", text).strip()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"reply is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError("reply JSON must be an object")
    return doc


class _StubCompleter:
    """Serves canned replies from a file: one document, or a list per attempt."""

    def __init__(self, path: str | Path):
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        self._replies = doc if isinstance(doc, list) else [doc]

    def complete(self, prompt: str, attempt: int) -> object:
        del prompt
        return self._replies[min(attempt, len(self._replies) - 1)]


class _HTTPCompleter:
    """Minimal chat-completions client with temperature pinned to 0."""

    def __init__(self, endpoint: LLMEndpoint):
        self._endpoint = endpoint

    def complete(self, prompt: str, attempt: int) -> object:
        del attempt
        ep = self._endpoint
        headers = {}
        if ep.api_key_env:
            key = os.environ.get(ep.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": ep.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        try:
            resp = requests.post(ep.url, json=body, headers=headers, timeout=ep.timeout)
        except requests.RequestException as e:
            raise EndpointUnavailableError(f"cannot reach {ep.url}: {e}") from e
        if resp.status_code >= 400:
            raise EndpointUnavailableError(
                f"{ep.url} replied {resp.status_code}: {resp.text[:200]}"
            )
        try:
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise EndpointUnavailableError(
                f"{ep.url} replied an unexpected payload: {e}"
            ) from e


def translate_axes(req: TranslationRequest) -> TranslationResult:
    """Translate the source axes to the new target, validating each reply.

    Returns a fully valid axis set or raises :class:`SchemaViolationError`
    carrying the last validation messages once attempts are exhausted. The
    output is never a partially valid set.
    """
    endpoint = req.endpoint
    completer = (
        _StubCompleter(endpoint.stub_file)
        if endpoint.stub_file is not None
        else _HTTPCompleter(endpoint)
    )
    errors: tuple[str, ...] = ()
    for attempt in range(endpoint.max_attempts):
        prompt = build_translation_prompt(req, errors)
        raw = completer.complete(prompt, attempt)
        try:
            doc = _parse_payload(raw)
            axes = axis_set_from_dict(doc)
        except (ParseError, AxisValidationError) as e:
            errors = (str(e),)
            continue
        return TranslationResult(
            axes=axes, attempts=attempt + 1, template_version=TEMPLATE_VERSION
        )
    raise SchemaViolationError(
        "translated axes stayed invalid after "
        f"{endpoint.max_attempts} attempts: {'; '.join(errors)}",
        attempts=endpoint.max_attempts,
    )
