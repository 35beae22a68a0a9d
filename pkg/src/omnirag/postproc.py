"""Post-processing: filter, tag, and chunk extracted samples.

Stages run in a fixed filter -> tag -> chunk order driven by config.
Tokenization is Unicode-whitespace splitting; placeholder tokens count
as single tokens and are never split across chunks.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .core import DEFAULT_PLACEHOLDER, MultimodalSample


class UnknownStage(ValueError):
    """A pipeline config referenced a stage kind that does not exist."""


@dataclass(frozen=True)
class Chunk:
    """A token-window slice of a sample, the unit of indexing."""

    chunk_id: str
    doc_id: str
    text: str
    token_span: tuple[int, int]
    tags: tuple[str, ...] = ()
    modal_refs: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "token_span": list(self.token_span),
            "tags": list(self.tags),
            "modal_refs": list(self.modal_refs),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Chunk":
        return cls(
            chunk_id=obj["chunk_id"],
            doc_id=obj["doc_id"],
            text=obj["text"],
            token_span=tuple(obj["token_span"]),
            tags=tuple(obj.get("tags", ())),
            modal_refs=tuple(obj.get("modal_refs", ())),
        )


@dataclass
class PipelineConfig:
    stages: list[dict] = field(default_factory=list)
    chunk_size: int = 256
    chunk_overlap: int = 32
    min_chunk_chars: int = 20

    def __post_init__(self):
        if not 0 <= self.chunk_overlap < self.chunk_size:
            raise ValueError("require 0 <= overlap < size")


def chunk(
    sample: MultimodalSample,
    size: int = 256,
    overlap: int = 32,
    placeholder: str = DEFAULT_PLACEHOLDER,
) -> list[Chunk]:
    """Sliding token windows of `size` with `overlap` shared tokens.

    Windows stride by size - overlap starting at 0; the final window may
    be short, and every token lands in at least one chunk.
    """
    if not 0 <= overlap < size:
        raise ValueError("require 0 <= overlap < size")
    tokens = sample.text.split()
    if not tokens:
        return []
    # map the i-th placeholder token to modality index i
    ph_positions = [i for i, t in enumerate(tokens) if t == placeholder]
    ph_index = {pos: k for k, pos in enumerate(ph_positions)}

    stride = size - overlap
    chunks = []
    start = 0
    n = len(tokens)
    while True:
        end = min(start + size, n)
        refs = tuple(ph_index[p] for p in range(start, end) if p in ph_index)
        chunks.append(
            Chunk(
                chunk_id=f"{sample.doc_id}:{len(chunks)}",
                doc_id=sample.doc_id,
                text=" ".join(tokens[start:end]),
                token_span=(start, end),
                modal_refs=refs,
            )
        )
        if end >= n:
            break
        start += stride
    return chunks


def length_filter(min_chars: int):
    def stage(sample: MultimodalSample) -> bool:
        return len(sample.text) >= min_chars

    return stage


def regex_tagger(pattern: str, tag: str):
    rx = re.compile(pattern)

    def stage(text: str) -> list[str]:
        return [tag] if rx.search(text) else []

    return stage


STAGE_KINDS = ("length_filter", "regex_tagger")


def build_stages(configs: list[dict]):
    """Instantiate filter/tagger stages from their config dicts."""
    filters, taggers = [], []
    for cfg in configs:
        kind = cfg.get("kind")
        if kind == "length_filter":
            filters.append(length_filter(int(cfg.get("min-chars", cfg.get("min_chars", 20)))))
        elif kind == "regex_tagger":
            taggers.append(regex_tagger(cfg["pattern"], cfg["tag"]))
        else:
            raise UnknownStage(f"unknown stage kind: {kind!r}")
    return filters, taggers


def apply_pipeline(samples, config: PipelineConfig) -> list[Chunk]:
    """Run filter -> tag -> chunk over samples, preserving input order."""
    filters, taggers = build_stages(config.stages)
    out: list[Chunk] = []
    for sample in samples:
        if any(not f(sample) for f in filters):
            continue
        if len(sample.text) < config.min_chunk_chars:
            continue
        for ch in chunk(sample, config.chunk_size, config.chunk_overlap):
            tags: list[str] = []
            for t in taggers:
                tags.extend(t(ch.text))
            if tags:
                ch = Chunk(
                    chunk_id=ch.chunk_id,
                    doc_id=ch.doc_id,
                    text=ch.text,
                    token_span=ch.token_span,
                    tags=tuple(tags),
                    modal_refs=ch.modal_refs,
                )
            out.append(ch)
    return out


def write_chunks(chunks: list[Chunk], path) -> int:
    with open(path, "w", encoding="utf-8") as f:
        for ch in chunks:
            f.write(json.dumps(ch.to_dict(), ensure_ascii=False) + "\n")
    return len(chunks)


def read_chunks(path) -> list[Chunk]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(Chunk.from_dict(json.loads(line)))
    return out
