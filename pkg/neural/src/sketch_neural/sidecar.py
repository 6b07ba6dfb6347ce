"""Score sidecar JSONL: the only channel from neural scorers into the primary toolkit."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import SchemaError

_SCORE_FIELDS = ("clip_i2i", "clip_i2t", "lpips")


@dataclass
class ScoreRecord:
    sample_id: str
    scorer: str
    clip_i2i: float | None = None
    clip_i2t: float | None = None
    lpips: float | None = None

    def to_dict(self) -> dict:
        out: dict = {"sample_id": self.sample_id}
        for f in _SCORE_FIELDS:
            v = getattr(self, f)
            if v is not None:
                out[f] = v
        out["scorer"] = self.scorer
        return out


def validate_record(rec: dict) -> None:
    """Check one parsed sidecar object against the documented schema."""
    if not isinstance(rec, dict):
        raise SchemaError("record must be a JSON object")
    if not isinstance(rec.get("sample_id"), str) or not rec["sample_id"]:
        raise SchemaError("record needs a non-empty string sample_id")
    if not isinstance(rec.get("scorer"), str) or not rec["scorer"]:
        raise SchemaError("record needs a non-empty string scorer identifier")
    unknown = set(rec) - {"sample_id", "scorer", *_SCORE_FIELDS}
    if unknown:
        raise SchemaError(f"unknown sidecar fields: {sorted(unknown)}")
    scores = [f for f in _SCORE_FIELDS if f in rec]
    if not scores:
        raise SchemaError("record carries no score fields")
    for f in scores:
        v = rec[f]
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError(f"score {f} must be a finite number, got {v!r}")


def write_sidecar(path, records: list[ScoreRecord]) -> None:
    """Write records ordered by sample_id; validates each against the schema."""
    records = sorted(records, key=lambda r: r.sample_id)
    lines = []
    for rec in records:
        obj = rec.to_dict()
        validate_record(obj)
        lines.append(json.dumps(obj, separators=(",", ":")))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sidecar(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                validate_record(rec)
                out.append(rec)
    return out
