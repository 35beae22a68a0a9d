"""Hybrid index: BM25 inverted index paired with an exact vector store.

Both sub-indexes hold every chunk.  Dense search is a brute-force scan
(exact by construction); fusion is reciprocal-rank or weighted min-max.
Ties always break by ascending chunk_id so results are reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..postproc import Chunk
from .embedder import Embedder, HashEmbedder

FORMAT_VERSION = 1

BM25_K1 = 1.2
BM25_B = 0.75
RRF_C = 60


class DimensionMismatch(ValueError):
    pass


class EmbedderMismatch(ValueError):
    pass


class CorruptIndex(RuntimeError):
    pass


class VersionMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class RetrievalHit:
    chunk_id: str
    score: float
    rank: int
    source: str  # sparse | dense | hybrid


_PUNCT = ".,;:!?\"'()[]"


def _tokenize(text: str) -> list[str]:
    return [w for w in (t.strip(_PUNCT) for t in text.lower().split()) if w]


class HybridIndex:
    """Sparse + dense store over chunks with pure and fused retrieval."""

    def __init__(self, embedder: Embedder | None = None):
        self.embedder = embedder or HashEmbedder()
        self.dimension = self.embedder.dimension
        self.embedder_identity = self.embedder.identity
        self.chunks: dict[str, Chunk] = {}
        self.postings: dict[str, dict[str, int]] = {}  # term -> {chunk_id: tf}
        self.doc_len: dict[str, int] = {}
        self.vectors: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.chunks)

    # -- write path ---------------------------------------------------------

    def add_chunks(self, chunks: list[Chunk], embedder: Embedder | None = None) -> None:
        chunks = list(chunks)
        emb = embedder or self.embedder
        if emb.dimension != self.dimension:
            raise DimensionMismatch(
                f"embedder dimension {emb.dimension} != index dimension {self.dimension}"
            )
        texts = [c.text for c in chunks]
        vecs = emb.embed_batch(texts)
        with self._lock:
            for c, v in zip(chunks, vecs):
                self._remove(c.chunk_id)
                self.chunks[c.chunk_id] = c
                tokens = _tokenize(c.text)
                self.doc_len[c.chunk_id] = len(tokens)
                tf: dict[str, int] = {}
                for t in tokens:
                    tf[t] = tf.get(t, 0) + 1
                for t, n in tf.items():
                    self.postings.setdefault(t, {})[c.chunk_id] = n
                self.vectors[c.chunk_id] = np.asarray(v, dtype=np.float32)

    def _remove(self, chunk_id: str) -> None:
        if chunk_id not in self.chunks:
            return
        old = self.chunks.pop(chunk_id)
        for t in set(_tokenize(old.text)):
            plist = self.postings.get(t)
            if plist:
                plist.pop(chunk_id, None)
                if not plist:
                    del self.postings[t]
        self.doc_len.pop(chunk_id, None)
        self.vectors.pop(chunk_id, None)

    # -- sparse -------------------------------------------------------------

    def _idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        n = len(self.chunks)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def bm25_score(self, query_terms: list[str], chunk_id: str) -> float:
        """Score one chunk against query terms; used for provenance checks."""
        avg = sum(self.doc_len.values()) / len(self.doc_len) if self.doc_len else 0.0
        dl = self.doc_len.get(chunk_id, 0)
        score = 0.0
        for t in query_terms:
            tf = self.postings.get(t, {}).get(chunk_id, 0)
            if tf == 0:
                continue
            denom = tf + BM25_K1 * (1 - BM25_B + BM25_B * dl / avg)
            score += self._idf(t) * tf * (BM25_K1 + 1) / denom
        return score

    def search_sparse(self, query: str, k: int) -> list[RetrievalHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.chunks:
            return []
        terms = _tokenize(query)
        candidates: set[str] = set()
        for t in terms:
            candidates.update(self.postings.get(t, ()))
        scored = [(cid, self.bm25_score(terms, cid)) for cid in candidates]
        scored.sort(key=lambda x: (-x[1], x[0]))
        return [
            RetrievalHit(cid, s, i + 1, "sparse") for i, (cid, s) in enumerate(scored[:k])
        ]

    # -- dense --------------------------------------------------------------

    def search_dense(
        self, query: str, k: int, embedder: Embedder | None = None
    ) -> list[RetrievalHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        emb = embedder or self.embedder
        if emb.identity != self.embedder_identity:
            raise EmbedderMismatch(
                f"index built with {self.embedder_identity!r}, queried with {emb.identity!r}"
            )
        if not self.vectors:
            return []
        qv = emb.embed(query)
        ids = sorted(self.vectors)
        mat = np.stack([self.vectors[c] for c in ids])
        sims = mat @ qv
        order = sorted(range(len(ids)), key=lambda i: (-float(sims[i]), ids[i]))[:k]
        return [
            RetrievalHit(ids[i], float(sims[i]), r + 1, "dense")
            for r, i in enumerate(order)
        ]

    # -- fusion -------------------------------------------------------------

    def search_hybrid(
        self, query: str, k: int, mode: str = "rrf", alpha: float = 0.5
    ) -> list[RetrievalHit]:
        """Fuse sparse and dense lists: 'rrf' or 'weighted' (min-max + alpha)."""
        sparse = self.search_sparse(query, k)
        dense = self.search_dense(query, k)
        if mode == "rrf":
            fused: dict[str, float] = {}
            for hits in (sparse, dense):
                for h in hits:
                    fused[h.chunk_id] = fused.get(h.chunk_id, 0.0) + 1.0 / (RRF_C + h.rank)
        elif mode == "weighted":
            fused = {}
            for hits, w in ((sparse, alpha), (dense, 1.0 - alpha)):
                if not hits:
                    continue
                scores = [h.score for h in hits]
                lo, hi = min(scores), max(scores)
                span = hi - lo
                for h in hits:
                    norm = (h.score - lo) / span if span > 0 else 1.0
                    fused[h.chunk_id] = fused.get(h.chunk_id, 0.0) + w * norm
        else:
            raise ValueError(f"unknown fusion mode: {mode!r}")
        ranked = sorted(fused.items(), key=lambda x: (-x[1], x[0]))[:k]
        return [RetrievalHit(cid, s, i + 1, "hybrid") for i, (cid, s) in enumerate(ranked)]

    def search(self, query: str, k: int, mode: str = "rrf") -> list[RetrievalHit]:
        if mode == "sparse":
            return self.search_sparse(query, k)
        if mode == "dense":
            return self.search_dense(query, k)
        return self.search_hybrid(query, k, mode=mode)

    # -- persistence ----------------------------------------------------------

    def save(self, path) -> None:
        """Write a versioned directory: manifest, postings, vectors, checksums."""
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        ids = sorted(self.chunks)

        chunks_blob = "\n".join(
            json.dumps(self.chunks[c].to_dict(), ensure_ascii=False) for c in ids
        ).encode("utf-8")
        postings_blob = json.dumps(
            {"postings": self.postings, "doc_len": self.doc_len}, sort_keys=True
        ).encode("utf-8")
        if ids:
            vec_blob = np.stack([self.vectors[c] for c in ids]).astype("<f4").tobytes()
        else:
            vec_blob = b""

        files = {"chunks.jsonl": chunks_blob, "postings.json": postings_blob, "vectors.bin": vec_blob}
        checksums = {}
        for name, blob in files.items():
            (root / name).write_bytes(blob)
            checksums[name] = hashlib.sha256(blob).hexdigest()
        manifest = {
            "version": FORMAT_VERSION,
            "dimension": self.dimension,
            "embedder": self.embedder_identity,
            "chunk_ids": ids,
            "checksums": checksums,
        }
        (root / "manifest.json").write_text(json.dumps(manifest, indent=2))

    @classmethod
    def load(cls, path, embedder: Embedder | None = None) -> "HybridIndex":
        root = Path(path)
        try:
            manifest = json.loads((root / "manifest.json").read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise CorruptIndex(f"cannot read manifest: {e}") from e
        if manifest.get("version") != FORMAT_VERSION:
            raise VersionMismatch(f"index format {manifest.get('version')}, expected {FORMAT_VERSION}")

        blobs = {}
        for name, expect in manifest["checksums"].items():
            try:
                blob = (root / name).read_bytes()
            except OSError as e:
                raise CorruptIndex(f"missing index file {name}") from e
            if hashlib.sha256(blob).hexdigest() != expect:
                raise CorruptIndex(f"checksum mismatch in {name}")
            blobs[name] = blob

        idx = cls(embedder=embedder or HashEmbedder())
        if idx.embedder.identity != manifest["embedder"]:
            # allow loading with the identical default; otherwise refuse
            raise EmbedderMismatch(
                f"index built with {manifest['embedder']!r}, loading with {idx.embedder.identity!r}"
            )
        ids = manifest["chunk_ids"]
        for line in blobs["chunks.jsonl"].decode("utf-8").splitlines():
            if line.strip():
                c = Chunk.from_dict(json.loads(line))
                idx.chunks[c.chunk_id] = c
        post = json.loads(blobs["postings.json"].decode("utf-8"))
        idx.postings = post["postings"]
        idx.doc_len = post["doc_len"]
        if ids:
            mat = np.frombuffer(blobs["vectors.bin"], dtype="<f4").reshape(len(ids), manifest["dimension"])
            for i, cid in enumerate(ids):
                idx.vectors[cid] = mat[i].copy()
        if set(idx.chunks) != set(ids):
            raise CorruptIndex("chunk ids disagree with manifest")
        return idx

    # -- consistency ----------------------------------------------------------

    def stats_consistent(self) -> bool:
        """Recompute corpus statistics from postings and compare."""
        recomputed: dict[str, int] = {}
        for plist in self.postings.values():
            for cid, tf in plist.items():
                recomputed[cid] = recomputed.get(cid, 0) + tf
        for cid, n in self.doc_len.items():
            if recomputed.get(cid, 0) != n:
                return False
        return set(self.chunks) == set(self.doc_len) == set(self.vectors)
