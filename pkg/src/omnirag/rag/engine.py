"""Retrieval-augmented answering: retrieve, render, generate.

The built-in generators are deterministic: ``echo`` returns the
rendered prompt (plumbing tests) and ``extractive`` returns the context
sentence with maximal query-term overlap (accuracy properties).  Real
LLMs attach via the sidecar protocol's /generate endpoint.
"""

from __future__ import annotations

import json
import re
import time
import urllib.request
from dataclasses import dataclass, field

from ..index import HybridIndex

DEFAULT_TEMPLATE = "Context:\n{context}\n\nQuestion: {question}\nAnswer:"


class IndexUnavailable(RuntimeError):
    pass


class GeneratorFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template: str = DEFAULT_TEMPLATE

    def __post_init__(self):
        for slot in ("{context}", "{question}"):
            if self.template.count(slot) != 1:
                raise ValueError(f"template must contain {slot} exactly once")

    def render(self, context: str, question: str) -> str:
        return self.template.replace("{context}", context).replace("{question}", question)


@dataclass(frozen=True)
class RagRequest:
    query: str
    k: int = 3
    mode: str = "rrf"
    template_id: str = ""

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")


@dataclass
class RagResponse:
    answer: str
    sources: list[dict] = field(default_factory=list)  # chunk_id, score, excerpt
    timing_ms: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"answer": self.answer, "sources": self.sources, "timing_ms": self.timing_ms}


class Generator:
    """Deterministic (prompt, question, context) -> answer mapping."""

    identity = "generator"

    def generate(self, prompt: str, question: str, context: str) -> str:
        raise NotImplementedError


class EchoGenerator(Generator):
    identity = "echo"

    def generate(self, prompt: str, question: str, context: str) -> str:
        return prompt


_SENTENCE_RE = re.compile(r"[^.!?\n]+[.!?]?")


def _terms(text: str) -> set[str]:
    return {w.strip(".,;:!?\"'()") for w in text.lower().split()} - {""}


class ExtractiveGenerator(Generator):
    """Returns the context sentence with maximal query-term overlap."""

    identity = "extractive"

    def generate(self, prompt: str, question: str, context: str) -> str:
        if not context.strip():
            return ""
        q_terms = _terms(question)
        best, best_score = "", -1
        for m in _SENTENCE_RE.finditer(context):
            sent = m.group(0).strip()
            if not sent:
                continue
            score = len(q_terms & _terms(sent))
            if score > best_score:
                best, best_score = sent, score
        return best


class RemoteGenerator(Generator):
    """Client for a model server's /generate endpoint (sidecar protocol)."""

    def __init__(self, base_url: str, max_tokens: int = 256, seed: int = 0, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.max_tokens = max_tokens
        self.seed = seed
        self.timeout = timeout
        self.identity = f"remote:{self.base_url}"

    def generate(self, prompt: str, question: str, context: str) -> str:
        body = json.dumps(
            {"v": 1, "prompt": prompt, "max_tokens": self.max_tokens, "seed": self.seed}
        ).encode("utf-8")
        req = urllib.request.Request(
            self.base_url + "/generate", data=body,
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))["text"]
        except OSError as e:
            raise GeneratorFailure(f"generate stage failed: {e}") from e


GENERATORS = {"echo": EchoGenerator, "extractive": ExtractiveGenerator}


def answer(
    req: RagRequest,
    index: HybridIndex,
    generator: Generator,
    template: PromptTemplate | None = None,
) -> RagResponse:
    """Retrieve top-k context (k=0 skips retrieval), render, generate."""
    if index is None:
        raise IndexUnavailable("no index loaded")
    template = template or PromptTemplate()
    timing: dict[str, float] = {}

    sources: list[dict] = []
    context_parts: list[str] = []
    t0 = time.monotonic()
    if req.k > 0 and len(index) > 0:
        for hit in index.search(req.query, req.k, mode=req.mode):
            chunk = index.chunks[hit.chunk_id]
            sources.append(
                {"chunk_id": hit.chunk_id, "score": hit.score, "excerpt": chunk.text[:200]}
            )
            context_parts.append(chunk.text)
    timing["retrieve"] = (time.monotonic() - t0) * 1000

    context = "\n\n".join(context_parts)
    prompt = template.render(context, req.query) if context else req.query
    t0 = time.monotonic()
    try:
        text = generator.generate(prompt, req.query, context)
    except GeneratorFailure:
        raise
    except Exception as e:
        raise GeneratorFailure(f"generate stage failed: {e}") from e
    timing["generate"] = (time.monotonic() - t0) * 1000
    return RagResponse(answer=text, sources=sources, timing_ms=timing)


def run_batch(input_path, output_path, index, generator, k=3, mode="rrf", template=None) -> dict:
    """Process a JSONL file of {id, input} queries; isolates bad lines.

    Output lines carry {id, answer, sources} in input order; malformed
    lines produce {id: null, error} records instead of aborting.
    """
    ok = failed = 0
    with open(input_path, encoding="utf-8") as fin, open(output_path, "w", encoding="utf-8") as fout:
        for line in fin:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                req = RagRequest(query=str(obj["input"]), k=k, mode=mode)
                resp = answer(req, index, generator, template)
                record = {"id": obj.get("id"), "answer": resp.answer, "sources": resp.sources}
                ok += 1
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                record = {"id": None, "error": f"{type(e).__name__}: {e}"}
                failed += 1
            fout.write(json.dumps(record, ensure_ascii=False) + "\n")
    return {"ok": ok, "failed": failed}
