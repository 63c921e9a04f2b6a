"""Detector backends behind one interface: cached files, remote HTTP, mock.

Every backend answers :meth:`DetectorBackend.detect` with detections tagged
by the index of the prompt that produced them. The cached backend replays a
prediction cache; the remote backend speaks the JSON wire protocol
(``POST /v1/detect``, ``GET /v1/health``, ``GET /v1/model``); the mock
backend fabricates deterministic detections from a fixture config, enabling
full runs without any model.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import requests

from .data import (
    BBox,
    Detection,
    DetectionSet,
    GroundTruthSet,
    ImageInfo,
    load_prediction_cache,
)
from .errors import (
    MissingPredictionError,
    RemoteSchemaError,
    RemoteUnavailableError,
)
from .metrics import iou

logger = logging.getLogger(__name__)

BACKEND_KINDS = ("cached", "remote", "mock")


@dataclass(frozen=True)
class BackendDescriptor:
    """Static facts about a backend the engine needs for planning calls."""

    name: str
    kind: str
    supports_background_class: bool = False
    max_concurrency: int = 1
    base_url: str | None = None

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "remote" and not self.base_url:
            raise ValueError("remote backends must declare a base URL")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")


@dataclass(frozen=True)
class WireDetection:
    """One detection as it travels over the backend interface."""

    bbox: BBox
    score: float
    prompt_index: int


@dataclass(frozen=True)
class DetectResponse:
    detections: tuple[WireDetection, ...]


class DetectorBackend:
    """Interface shared by all backends."""

    descriptor: BackendDescriptor

    def detect(self, image: ImageInfo, prompts: Sequence[str]) -> DetectResponse:
        raise NotImplementedError


class CachedBackend(DetectorBackend):
    """Replays a frozen prediction cache; read-only and fully deterministic."""

    def __init__(self, detections: DetectionSet, name: str = "cached"):
        self._detections = detections
        self.descriptor = BackendDescriptor(name=name, kind="cached")

    @classmethod
    def from_file(
        cls, path: str | Path, gt: GroundTruthSet | None = None, name: str | None = None
    ) -> "CachedBackend":
        known = gt.image_ids() if gt is not None else None
        detections = load_prediction_cache(path, known_image_ids=known)
        return cls(detections, name=name or f"cached:{Path(path).name}")

    def detect(self, image: ImageInfo, prompts: Sequence[str]) -> DetectResponse:
        out: list[WireDetection] = []
        for idx, prompt in enumerate(prompts):
            if prompt == "":
                continue  # background slot never has cache entries
            key = (image.id, prompt)
            if key not in self._detections.entries:
                raise MissingPredictionError(
                    f"prediction cache has no entry for image {image.id} "
                    f"prompt {prompt!r}"
                )
            for det in self._detections.entries[key]:
                out.append(WireDetection(bbox=det.bbox, score=det.score, prompt_index=idx))
        return DetectResponse(detections=tuple(out))


def _check_wire_payload(payload, n_prompts: int) -> list[WireDetection]:
    """Validate a /v1/detect reply against the wire schema."""
    if not isinstance(payload, Mapping) or not isinstance(payload.get("detections"), list):
        raise RemoteSchemaError("reply must be an object with a 'detections' list")
    out = []
    for i, det in enumerate(payload["detections"]):
        where = f"detection {i}"
        if not isinstance(det, Mapping):
            raise RemoteSchemaError(f"{where}: must be an object")
        bbox = det.get("bbox")
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise RemoteSchemaError(f"{where}: bbox must be a list of 4 numbers")
        try:
            box = BBox(*[float(v) for v in bbox])
        except (TypeError, ValueError):
            raise RemoteSchemaError(f"{where}: bbox entries must be numbers") from None
        score = det.get("score")
        if not isinstance(score, (int, float)) or not 0.0 <= score <= 1.0:
            raise RemoteSchemaError(f"{where}: score must be a number in [0, 1]")
        prompt_index = det.get("prompt_index")
        if not isinstance(prompt_index, int) or not 0 <= prompt_index < n_prompts:
            raise RemoteSchemaError(
                f"{where}: prompt_index must be an int below {n_prompts}"
            )
        out.append(WireDetection(bbox=box, score=float(score), prompt_index=prompt_index))
    return out


class RemoteBackend(DetectorBackend):
    """Client for a detector served over HTTP.

    Transport failures are retried with exponential backoff
    (``retries`` attempts total) before raising
    :class:`RemoteUnavailableError`. Schema violations are never retried.
    Adapter processes run inference serially, hence the default concurrency
    of 1; raise it when fanning out across several processes.
    """

    def __init__(
        self,
        base_url: str,
        max_concurrency: int = 1,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 0.5,
        session: requests.Session | None = None,
    ):
        self._base = base_url.rstrip("/")
        self._timeout = timeout
        self._retries = max(1, retries)
        self._backoff = backoff
        self._session = session or requests.Session()
        info = self._model_info()
        self.descriptor = BackendDescriptor(
            name=str(info.get("name", "remote")),
            kind="remote",
            supports_background_class=bool(info.get("supports_background_class", False)),
            max_concurrency=max_concurrency,
            base_url=self._base,
        )

    def _model_info(self) -> Mapping:
        payload = self._request("GET", "/v1/model")
        if not isinstance(payload, Mapping) or "name" not in payload:
            raise RemoteSchemaError("/v1/model reply must carry a 'name'")
        return payload

    def health(self) -> bool:
        try:
            payload = self._request("GET", "/v1/health")
        except RemoteUnavailableError:
            return False
        return isinstance(payload, Mapping) and payload.get("ok") is True

    def _request(self, method: str, route: str, body: Mapping | None = None):
        url = self._base + route
        last_error: Exception | None = None
        for attempt in range(self._retries):
            if attempt:
                time.sleep(self._backoff * 2 ** (attempt - 1))
            try:
                resp = self._session.request(
                    method, url, json=body, timeout=self._timeout
                )
            except requests.RequestException as e:
                last_error = e
                continue
            if resp.status_code >= 500:
                last_error = RemoteUnavailableError(
                    f"{url} replied {resp.status_code}"
                )
                continue
            if resp.status_code >= 400:
                raise RemoteSchemaError(
                    f"{url} rejected the request: {resp.status_code} {resp.text[:200]}"
                )
            try:
                return resp.json()
            except ValueError as e:
                raise RemoteSchemaError(f"{url} replied non-JSON: {e}") from e
        raise RemoteUnavailableError(
            f"{url} unreachable after {self._retries} attempts: {last_error}"
        )

    def detect(self, image: ImageInfo, prompts: Sequence[str]) -> DetectResponse:
        payload = self._request(
            "POST",
            "/v1/detect",
            {"image_path": image.file_name, "prompts": list(prompts)},
        )
        return DetectResponse(
            detections=tuple(_check_wire_payload(payload, len(prompts)))
        )


@dataclass(frozen=True)
class MockFixture:
    """Scoring rules driving the mock backend.

    Token bonuses are case-insensitive substring matches against the prompt.
    True positives are ground-truth boxes re-emitted with seeded positional
    jitter whenever a seeded recall roll passes; false positives are seeded
    random boxes kept clear of the ground truth. When the request carries a
    background slot (an empty prompt), false positives scoring below
    ``background_absorb_below`` are emitted against that slot instead of the
    target prompt.
    """

    tp_score_base: float = 0.5
    tp_score_jitter: float = 0.2
    tp_box_jitter: float = 0.05
    recall_base: float = 0.8
    recall_bonuses: Mapping[str, float] = field(default_factory=dict)
    score_bonuses: Mapping[str, float] = field(default_factory=dict)
    fp_per_image: float = 2.0
    fp_rate_bonuses: Mapping[str, float] = field(default_factory=dict)
    fp_score_base: float = 0.1
    fp_score_jitter: float = 0.35
    background_absorb_below: float = 0.0

    @classmethod
    def from_dict(cls, doc: Mapping) -> "MockFixture":
        tp = doc.get("tp", {})
        fp = doc.get("fp", {})
        return cls(
            tp_score_base=float(tp.get("score_base", 0.5)),
            tp_score_jitter=float(tp.get("score_jitter", 0.2)),
            tp_box_jitter=float(tp.get("box_jitter", 0.05)),
            recall_base=float(tp.get("recall_base", 0.8)),
            recall_bonuses=dict(tp.get("recall_bonuses", {})),
            score_bonuses=dict(tp.get("score_bonuses", {})),
            fp_per_image=float(fp.get("per_image", 2.0)),
            fp_rate_bonuses=dict(fp.get("rate_bonuses", {})),
            fp_score_base=float(fp.get("score_base", 0.1)),
            fp_score_jitter=float(fp.get("score_jitter", 0.35)),
            background_absorb_below=float(fp.get("background_absorb_below", 0.0)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "MockFixture":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def _unit(seed: int, *parts) -> float:
    """Uniform [0, 1) from a stable hash, independent of interpreter salt."""
    key = "|".join([str(seed), *map(str, parts)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def _token_total(bonuses: Mapping[str, float], prompt: str) -> float:
    lowered = prompt.lower()
    return sum(delta for token, delta in bonuses.items() if token.lower() in lowered)


class MockBackend(DetectorBackend):
    """Deterministic fake detector.

    All output is a pure function of (fixture, seed, request), so repeated
    calls are byte-identical and runs against it reproduce exactly.
    """

    def __init__(
        self,
        fixture: MockFixture | Mapping | str | Path,
        gt: GroundTruthSet,
        seed: int = 0,
        name: str = "mock",
    ):
        if isinstance(fixture, (str, Path)):
            fixture = MockFixture.from_file(fixture)
        elif isinstance(fixture, Mapping):
            fixture = MockFixture.from_dict(fixture)
        self._fixture = fixture
        self._gt = gt
        self._seed = seed
        self.descriptor = BackendDescriptor(
            name=name, kind="mock", supports_background_class=True
        )

    def detect(self, image: ImageInfo, prompts: Sequence[str]) -> DetectResponse:
        background = None
        for idx, p in enumerate(prompts):
            if p == "":
                background = idx
                break
        out: list[WireDetection] = []
        for idx, prompt in enumerate(prompts):
            if prompt == "":
                continue
            out.extend(self._detections_for_prompt(image, prompt, idx, background))
        return DetectResponse(detections=tuple(out))

    def _detections_for_prompt(
        self, image: ImageInfo, prompt: str, prompt_index: int, background: int | None
    ) -> list[WireDetection]:
        fx = self._fixture
        seed = self._seed
        recall = _clamp01(fx.recall_base + _token_total(fx.recall_bonuses, prompt))
        score_bonus = _token_total(fx.score_bonuses, prompt)
        anns = self._gt.annotations_for(image.id)
        out: list[WireDetection] = []
        for ann in anns:
            if _unit(seed, "tp-roll", image.id, ann.id, prompt) >= recall:
                continue
            box = ann.bbox
            dx = (2 * _unit(seed, "tp-dx", image.id, ann.id, prompt) - 1) * fx.tp_box_jitter * box.w
            dy = (2 * _unit(seed, "tp-dy", image.id, ann.id, prompt) - 1) * fx.tp_box_jitter * box.h
            score = _clamp01(
                fx.tp_score_base
                + score_bonus
                - fx.tp_score_jitter * _unit(seed, "tp-score", image.id, ann.id, prompt)
            )
            out.append(
                WireDetection(
                    bbox=BBox(box.x + dx, box.y + dy, box.w, box.h),
                    score=score,
                    prompt_index=prompt_index,
                )
            )
        fp_rate = fx.fp_per_image + _token_total(fx.fp_rate_bonuses, prompt)
        n_fp = max(0, round(fp_rate))
        gt_boxes = [a.bbox for a in anns]
        for i in range(n_fp):
            box = self._place_fp(image, prompt, i, gt_boxes)
            if box is None:
                continue
            score = _clamp01(
                fx.fp_score_base
                + fx.fp_score_jitter * _unit(seed, "fp-score", image.id, i, prompt)
            )
            idx = prompt_index
            if background is not None and score < fx.background_absorb_below:
                idx = background
            out.append(WireDetection(bbox=box, score=score, prompt_index=idx))
        return out

    def _place_fp(
        self, image: ImageInfo, prompt: str, i: int, gt_boxes: Sequence[BBox]
    ) -> BBox | None:
        """Seeded box placement, re-rolled while it overlaps the ground truth."""
        seed = self._seed
        for attempt in range(8):
            w = (0.05 + 0.05 * _unit(seed, "fp-w", image.id, i, attempt, prompt)) * image.width
            h = (0.05 + 0.05 * _unit(seed, "fp-h", image.id, i, attempt, prompt)) * image.height
            x = _unit(seed, "fp-x", image.id, i, attempt, prompt) * (image.width - w)
            y = _unit(seed, "fp-y", image.id, i, attempt, prompt) * (image.height - h)
            box = BBox(x, y, w, h)
            if all(iou(box, g) < 0.25 for g in gt_boxes):
                return box
        return None


def apply_background_class(
    prompts: Sequence[str], descriptor: BackendDescriptor
) -> tuple[tuple[str, ...], Callable[[DetectResponse], DetectResponse]]:
    """Append the background absorber slot and build its post-filter.

    The wire prompt list gains a trailing empty string; the returned filter
    drops every detection assigned to that slot and leaves detections on
    real prompts untouched. Backends without the capability get the prompts
    passed through with an identity filter, recorded via a warning.
    """
    prompts = tuple(prompts)
    if not prompts:
        raise ValueError("prompts must be non-empty")
    if any(p == "" for p in prompts):
        raise ValueError("prompt list already contains an empty background entry")
    if not descriptor.supports_background_class:
        logger.warning(
            "backend %s does not support a background class; prompts unchanged",
            descriptor.name,
        )
        return prompts, lambda resp: resp
    background = len(prompts)
    wire = (*prompts, "")

    def postfilter(resp: DetectResponse) -> DetectResponse:
        return DetectResponse(
            detections=tuple(
                d for d in resp.detections if d.prompt_index != background
            )
        )

    return wire, postfilter


def collect_detections(
    backend: DetectorBackend,
    gt: GroundTruthSet,
    prompt: str,
    use_background: bool = True,
) -> DetectionSet:
    """Run one prompt over every image and bundle the results.

    Background regularization is applied when requested and supported.
    Degenerate boxes coming back from a backend are dropped with a recorded
    warning; responses keep backend order, which becomes the tie order for
    equal scores.
    """
    warnings: list[str] = []
    if use_background and backend.descriptor.supports_background_class:
        wire, postfilter = apply_background_class([prompt], backend.descriptor)
    else:
        wire, postfilter = (prompt,), (lambda resp: resp)
    entries: dict[tuple[int, str], tuple[Detection, ...]] = {}
    for image in gt.images:
        resp = postfilter(backend.detect(image, wire))
        dets: list[Detection] = []
        for d in resp.detections:
            if d.prompt_index != 0:
                continue
            if d.bbox.w <= 0 or d.bbox.h <= 0:
                warnings.append(
                    f"image {image.id}: dropped zero-area box {d.bbox.to_list()} "
                    f"for prompt {prompt!r}"
                )
                continue
            dets.append(Detection(bbox=d.bbox, score=d.score))
        entries[(image.id, prompt)] = tuple(dets)
    for w in warnings:
        logger.warning("%s", w)
    return DetectionSet(entries=entries, warnings=tuple(warnings))


def record_backend(
    backend: DetectorBackend,
    gt: GroundTruthSet,
    prompts: Sequence[str],
    use_background: bool = True,
) -> DetectionSet:
    """Record a backend's responses for many prompts into one detection set.

    The result can be saved as a prediction cache; a :class:`CachedBackend`
    replaying it reproduces the original evaluation results exactly.
    """
    out = DetectionSet(entries={})
    for prompt in prompts:
        out = out.merged_with(collect_detections(backend, gt, prompt, use_background))
    return out
