from .embedder import Embedder, HashEmbedder, RemoteEmbedder, hash_embed
from .hybrid import (
    BM25_B,
    BM25_K1,
    RRF_C,
    CorruptIndex,
    DimensionMismatch,
    EmbedderMismatch,
    HybridIndex,
    RetrievalHit,
    VersionMismatch,
)

__all__ = [
    "BM25_B",
    "BM25_K1",
    "RRF_C",
    "CorruptIndex",
    "DimensionMismatch",
    "Embedder",
    "EmbedderMismatch",
    "HashEmbedder",
    "HybridIndex",
    "RemoteEmbedder",
    "RetrievalHit",
    "VersionMismatch",
    "hash_embed",
]
