import math
import random

import numpy as np
import pytest

from omnirag.index import (
    BM25_B,
    BM25_K1,
    RRF_C,
    CorruptIndex,
    DimensionMismatch,
    EmbedderMismatch,
    HashEmbedder,
    HybridIndex,
    hash_embed,
)
from omnirag.postproc import Chunk


def make_chunk(cid, text):
    return Chunk(chunk_id=cid, doc_id="doc", text=text, token_span=(0, len(text.split())))


def build(texts: dict[str, str], dim=64) -> HybridIndex:
    idx = HybridIndex(HashEmbedder(dim))
    idx.add_chunks([make_chunk(cid, t) for cid, t in texts.items()])
    return idx


# -- brute-force oracles ----------------------------------------------------

def oracle_bm25(texts: dict[str, str], query: str) -> dict[str, float]:
    docs = {cid: t.lower().split() for cid, t in texts.items()}
    n = len(docs)
    avg = sum(len(d) for d in docs.values()) / n
    scores = {}
    for cid, toks in docs.items():
        s = 0.0
        for term in query.lower().split():
            tf = toks.count(term)
            if tf == 0:
                continue
            df = sum(1 for d in docs.values() if term in d)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            s += idf * tf * (BM25_K1 + 1) / (tf + BM25_K1 * (1 - BM25_B + BM25_B * len(toks) / avg))
        scores[cid] = s
    return scores


def oracle_dense_ranking(idx: HybridIndex, query: str, k: int) -> list[str]:
    qv = idx.embedder.embed(query)
    sims = {cid: float(v @ qv) for cid, v in idx.vectors.items()}
    return [cid for cid, _ in sorted(sims.items(), key=lambda x: (-x[1], x[0]))[:k]]


# -- hash embedder -------------------------------------------------------------

def test_hash_embed_deterministic():
    assert np.array_equal(hash_embed("some text", 64), hash_embed("some text", 64))


def test_hash_embed_unit_norm():
    for text in ("a", "many words in this one", "x y z " * 40):
        assert abs(np.linalg.norm(hash_embed(text, 64)) - 1.0) <= 1e-6


def test_hash_embed_bag_semantics():
    assert np.array_equal(hash_embed("a b", 32), hash_embed("b a", 32))


def test_hash_embed_empty_is_basis_vector():
    v = hash_embed("", 16)
    assert v[0] == 1.0 and np.linalg.norm(v) == 1.0


def test_hash_embed_min_dimension():
    with pytest.raises(ValueError):
        HashEmbedder(4)


# -- add_chunks ------------------------------------------------------------------

def test_add_chunks_counts():
    idx = build({"c1": "apple pie", "c2": "banana bread", "c3": "cherry tart"})
    assert len(idx) == 3
    assert len(idx.vectors) == 3
    assert idx.stats_consistent()


def test_readd_replaces():
    idx = build({"c1": "old text here"})
    idx.add_chunks([make_chunk("c1", "brand new words")])
    assert len(idx) == 1
    assert "old" not in idx.postings
    assert "brand" in idx.postings
    assert idx.stats_consistent()


def test_empty_text_chunk_indexed():
    idx = build({"c1": ""})
    assert len(idx) == 1
    assert idx.vectors["c1"][0] == 1.0  # embedder's empty-input vector


def test_dimension_mismatch():
    idx = HybridIndex(HashEmbedder(64))
    with pytest.raises(DimensionMismatch):
        idx.add_chunks([make_chunk("c", "x")], embedder=HashEmbedder(32))


# -- sparse search -----------------------------------------------------------------

CORPUS = {"d1": "apple apple pie", "d2": "apple tart", "d3": "banana bread"}


def test_bm25_example_ranking():
    idx = build(CORPUS)
    hits = idx.search_sparse("apple", k=3)
    ids = [h.chunk_id for h in hits]
    assert ids[0] == "d1" and "d2" in ids
    assert "d3" not in ids
    expected = oracle_bm25(CORPUS, "apple")
    for h in hits:
        assert h.score == pytest.approx(expected[h.chunk_id])


def test_sparse_no_match_empty():
    assert build(CORPUS).search_sparse("zucchini", 5) == []


def test_sparse_k_truncation():
    idx = build({"only": "apple"})
    assert len(idx.search_sparse("apple", 5)) == 1


def test_sparse_empty_index():
    assert HybridIndex().search_sparse("x", 3) == []


def test_bm25_matches_oracle_random_corpora():
    rng = random.Random(9)
    vocab = [f"w{i}" for i in range(50)]
    for trial in range(20):
        texts = {
            f"c{i:02d}": " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 30)))
            for i in range(rng.randint(2, 20))
        }
        idx = build(texts)
        query = " ".join(rng.sample(vocab, 3))
        expected = oracle_bm25(texts, query)
        order = sorted(
            (cid for cid in texts if expected[cid] > 0),
            key=lambda c: (-expected[c], c),
        )
        hits = idx.search_sparse(query, k=len(texts))
        got = [h.chunk_id for h in hits if h.score > 0]
        assert got == order


# -- dense search ------------------------------------------------------------------

def test_dense_self_similarity():
    idx = build(CORPUS)
    hits = idx.search_dense("apple apple pie", 1)
    assert hits[0].chunk_id == "d1"
    assert hits[0].score == pytest.approx(1.0, abs=1e-6)


def test_dense_matches_exhaustive_scan():
    rng = random.Random(3)
    vocab = [f"w{i}" for i in range(30)]
    texts = {f"c{i}": " ".join(rng.choice(vocab) for _ in range(10)) for i in range(15)}
    idx = build(texts)
    for _ in range(10):
        q = " ".join(rng.sample(vocab, 4))
        got = [h.chunk_id for h in idx.search_dense(q, 5)]
        assert got == oracle_dense_ranking(idx, q, 5)


def test_dense_embedder_mismatch():
    idx = build(CORPUS)
    with pytest.raises(EmbedderMismatch):
        idx.search_dense("apple", 1, embedder=HashEmbedder(32))


# -- hybrid fusion ------------------------------------------------------------------

def test_rrf_formula():
    idx = build(CORPUS)
    query = "apple pie"
    sparse = {h.chunk_id: h.rank for h in idx.search_sparse(query, 3)}
    dense = {h.chunk_id: h.rank for h in idx.search_dense(query, 3)}
    for h in idx.search_hybrid(query, 3, mode="rrf"):
        expected = 0.0
        if h.chunk_id in sparse:
            expected += 1 / (RRF_C + sparse[h.chunk_id])
        if h.chunk_id in dense:
            expected += 1 / (RRF_C + dense[h.chunk_id])
        assert h.score == pytest.approx(expected)


def test_rrf_rank1_rank2_value():
    # rank 1 sparse + rank 2 dense = 1/61 + 1/62
    assert 1 / (RRF_C + 1) + 1 / (RRF_C + 2) == pytest.approx(0.0325224749, abs=1e-9)


def test_weighted_alpha_one_matches_sparse():
    idx = build(CORPUS)
    sparse_ids = [h.chunk_id for h in idx.search_sparse("apple pie", 3)]
    hybrid_ids = [h.chunk_id for h in idx.search_hybrid("apple pie", 3, mode="weighted", alpha=1.0)]
    assert hybrid_ids[: len(sparse_ids)] == sparse_ids


def test_hit_invariants():
    idx = build(CORPUS)
    for mode in ("sparse", "dense", "rrf"):
        hits = idx.search("apple tart", 3, mode=mode)
        assert [h.rank for h in hits] == list(range(1, len(hits) + 1))
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)


# -- persistence ----------------------------------------------------------------------

def test_save_load_round_trip(tmp_path):
    rng = random.Random(11)
    vocab = [f"w{i}" for i in range(40)]
    texts = {f"c{i}": " ".join(rng.choice(vocab) for _ in range(12)) for i in range(12)}
    idx = build(texts)
    idx.save(tmp_path / "idx")
    loaded = HybridIndex.load(tmp_path / "idx")
    for _ in range(100):
        q = " ".join(rng.sample(vocab, 3))
        for mode in ("sparse", "dense", "rrf"):
            assert idx.search(q, 5, mode=mode) == loaded.search(q, 5, mode=mode)


def test_truncated_file_corrupt(tmp_path):
    idx = build(CORPUS)
    idx.save(tmp_path / "idx")
    p = tmp_path / "idx" / "vectors.bin"
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(CorruptIndex):
        HybridIndex.load(tmp_path / "idx")


def test_version_mismatch(tmp_path):
    import json

    idx = build(CORPUS)
    idx.save(tmp_path / "idx")
    m = tmp_path / "idx" / "manifest.json"
    obj = json.loads(m.read_text())
    obj["version"] = 99
    m.write_text(json.dumps(obj))
    from omnirag.index import VersionMismatch

    with pytest.raises(VersionMismatch):
        HybridIndex.load(tmp_path / "idx")


def test_empty_index_round_trip(tmp_path):
    idx = HybridIndex()
    idx.save(tmp_path / "idx")
    loaded = HybridIndex.load(tmp_path / "idx")
    assert len(loaded) == 0
