"""Append-only trial ledger stored as JSON Lines, one record per line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError

LEDGER_SCHEMA_VERSION = 1

PHASE_1 = "phase1"
PHASE_2_BASE = "phase2_base"
PHASE_2_NEGATION = "phase2_negation"
PHASE_2_EMOJI = "phase2_emoji"
PHASES = (PHASE_1, PHASE_2_BASE, PHASE_2_NEGATION, PHASE_2_EMOJI)

STATUS_OK = "ok"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class TrialRecord:
    """Provenance of one evaluated prompt."""

    trial_id: int
    phase: str
    sweep_label: str | None
    axis_label: str | None
    level_value: str | None
    fingerprint: str
    prompt: str
    backend: str
    dataset: str
    map_at_50: float | None
    delta_vs_baseline: float | None
    f1_threshold: float | None
    status: str
    error: str | None
    config_hash: str
    timestamp: str
    eval_detail: dict | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["schema_version"] = LEDGER_SCHEMA_VERSION
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TrialRecord":
        doc = dict(doc)
        version = doc.pop("schema_version", LEDGER_SCHEMA_VERSION)
        if version != LEDGER_SCHEMA_VERSION:
            raise ParseError(f"unsupported ledger schema version {version}")
        return cls(**doc)

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


class LedgerWriter:
    """Serialized appender; never rewrites existing lines."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: TrialRecord) -> None:
        line = json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
            f.flush()

    def count(self) -> int:
        if not self.path.exists():
            return 0
        with open(self.path, encoding="utf-8") as f:
            return sum(1 for line in f if line.strip())


def load_ledger(path: str | Path) -> list[TrialRecord]:
    """Read every trial record, preserving file order."""
    records = []
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise ParseError(f"cannot read ledger {path}: {e}") from e
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
            records.append(TrialRecord.from_dict(doc))
        except (json.JSONDecodeError, TypeError, KeyError) as e:
            raise ParseError(f"{path}:{lineno}: malformed trial record: {e}") from e
    return records


def canonical_projection(records: Iterable[TrialRecord]) -> list[dict]:
    """Ledger content with volatile fields (timestamps) removed.

    Two runs of the same configuration against a deterministic backend
    produce equal projections.
    """
    out = []
    for record in records:
        doc = record.to_dict()
        doc.pop("timestamp", None)
        out.append(doc)
    return out


def ok_records(records: Iterable[TrialRecord]) -> list[TrialRecord]:
    return [r for r in records if r.ok]


def rank_records(records: Sequence[TrialRecord]) -> list[TrialRecord]:
    """Successful records best-first; score ties break on the fingerprint."""
    return sorted(ok_records(records), key=lambda r: (-r.map_at_50, r.fingerprint))
