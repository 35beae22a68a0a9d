"""Unified data model shared by every pipeline stage.

A document, whatever its source format, is reduced to a single record:
plain text interleaved with placeholder tokens, plus an ordered list of
the non-text assets those placeholders stand for.  All types here are
immutable and safe to share across workers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

DEFAULT_PLACEHOLDER = "<attachment>"

MODALITY_KINDS = ("image", "table", "audio", "video", "other")


@dataclass(frozen=True)
class Modality:
    """A single extracted non-text asset: its kind and on-disk path."""

    kind: str
    value: str


@dataclass(frozen=True)
class PlaceholderConfig:
    """Placeholder token inserted into text where an asset occurred."""

    token: str = DEFAULT_PLACEHOLDER

    def __post_init__(self):
        if not self.token:
            raise ValueError("placeholder token must be non-empty")


@dataclass(frozen=True)
class MultimodalSample:
    """Text with placeholders plus the ordered assets they refer to.

    The i-th placeholder occurrence (left to right) corresponds to
    ``modalities[i]``; placeholder count and modality count must match.
    """

    text: str
    modalities: tuple[Modality, ...] = ()
    source_path: str = ""
    doc_id: str = ""
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        # dataclass is frozen; normalize list inputs for convenience
        if not isinstance(self.modalities, tuple):
            object.__setattr__(self, "modalities", tuple(self.modalities))

    def placeholder_count(self, token: str = DEFAULT_PLACEHOLDER) -> int:
        return self.text.count(token)

    def with_metadata(self, **kv: str) -> "MultimodalSample":
        merged = dict(self.metadata)
        merged.update(kv)
        return replace(self, metadata=merged)


@dataclass(frozen=True)
class Violation:
    """One failed validation check."""

    code: str
    message: str


def validate_sample(
    sample: MultimodalSample, token: str = DEFAULT_PLACEHOLDER
) -> list[Violation]:
    """Check a sample's invariants; empty list means pass."""
    violations = []
    n_ph = sample.placeholder_count(token)
    n_mod = len(sample.modalities)
    if n_ph != n_mod:
        violations.append(
            Violation("count_mismatch", f"count mismatch {n_ph}≠{n_mod}")
        )
    for i, m in enumerate(sample.modalities):
        if not m.value:
            violations.append(Violation("empty_value", f"empty asset path at index {i}"))
        if m.kind not in MODALITY_KINDS:
            violations.append(Violation("unknown_kind", f"unknown kind {m.kind!r} at index {i}"))
    return violations


def derive_doc_id(source_bytes: bytes, mode: str) -> str:
    """Content-derived document id: sha256 over (mode tag, raw bytes).

    Identical bytes and mode always produce the same id, so re-runs are
    idempotent and asset paths can be content-addressed.
    """
    h = hashlib.sha256()
    h.update(mode.encode("utf-8"))
    h.update(b"\x00")
    h.update(source_bytes)
    return h.hexdigest()


def sample_to_dict(sample: MultimodalSample) -> dict:
    return {
        "text": sample.text,
        "modalities": [{"type": m.kind, "value": m.value} for m in sample.modalities],
        "source_path": sample.source_path,
        "doc_id": sample.doc_id,
        "metadata": dict(sample.metadata),
    }


def sample_from_dict(obj: dict) -> MultimodalSample:
    return MultimodalSample(
        text=obj["text"],
        modalities=tuple(
            Modality(kind=m["type"], value=m["value"]) for m in obj.get("modalities", ())
        ),
        source_path=obj.get("source_path", ""),
        doc_id=obj.get("doc_id", ""),
        metadata=dict(obj.get("metadata", {})),
    )


def serialize_sample(sample: MultimodalSample) -> bytes:
    """One JSON object per sample; field names are part of the wire format."""
    return json.dumps(sample_to_dict(sample), ensure_ascii=False).encode("utf-8")


def deserialize_sample(data: bytes) -> MultimodalSample:
    return sample_from_dict(json.loads(data.decode("utf-8")))


def write_jsonl(samples, path) -> int:
    """Write samples to a JSONL manifest; returns the number written."""
    n = 0
    with open(path, "wb") as f:
        for s in samples:
            f.write(serialize_sample(s))
            f.write(b"\n")
            n += 1
    return n


def read_jsonl(path) -> list[MultimodalSample]:
    out = []
    with open(path, "rb") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(deserialize_sample(line))
    return out
