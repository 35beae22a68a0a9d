"""Embedder boundary: deterministic hashing embedder plus a remote client.

The hashing embedder keeps the whole pipeline model-free and exactly
reproducible; a remote embedder speaking the sidecar protocol can be
swapped in without touching the index.
"""

from __future__ import annotations

import hashlib
import json
import urllib.request

import numpy as np


class Embedder:
    """Deterministic text -> unit vector mapping of fixed dimension."""

    dimension: int
    identity: str

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        return np.stack([self.embed(t) for t in texts]) if texts else np.zeros((0, self.dimension), dtype=np.float32)


class HashEmbedder(Embedder):
    """Signed feature hashing over the token bag, L2-normalized.

    Order-invariant by construction; empty text maps to the first basis
    vector so every output has unit norm.
    """

    def __init__(self, dimension: int = 64):
        if dimension < 8:
            raise ValueError("dimension must be >= 8")
        self.dimension = dimension
        self.identity = f"hash-bag-v1-d{dimension}"

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in text.split():
            h = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            val = int.from_bytes(h, "little")
            bucket = (val >> 1) % self.dimension
            sign = 1.0 if val & 1 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            vec[0] = 1.0
            norm = 1.0
        return (vec / norm).astype(np.float32)


def hash_embed(text: str, d: int = 64) -> np.ndarray:
    return HashEmbedder(d).embed(text)


class RemoteEmbedder(Embedder):
    """Client for a model server's /embed endpoint (sidecar protocol)."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        info = self._get("/info")
        self.identity = info["identity"]
        self.dimension = int(info["dim"])

    def _get(self, path: str) -> dict:
        with urllib.request.urlopen(self.base_url + path, timeout=self.timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))

    def _post(self, path: str, body: dict) -> dict:
        req = urllib.request.Request(
            self.base_url + path,
            data=json.dumps(body).encode("utf-8"),
            headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float32)
        out = self._post("/embed", {"v": 1, "texts": texts})
        vecs = np.asarray(out["vectors"], dtype=np.float32)
        if vecs.shape != (len(texts), self.dimension):
            raise ValueError(f"embed returned shape {vecs.shape}, expected ({len(texts)}, {self.dimension})")
        return vecs
