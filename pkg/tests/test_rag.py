import json
import threading
import urllib.error
import urllib.request

import pytest

from omnirag.index import HashEmbedder, HybridIndex
from omnirag.postproc import Chunk
from omnirag.rag import (
    EchoGenerator,
    ExtractiveGenerator,
    PromptTemplate,
    RagRequest,
    RagResponse,
    RagService,
    answer,
    run_batch,
)

FACTS = [
    "The capital of France is Paris.",
    "The capital of Japan is Tokyo.",
    "The capital of Peru is Lima.",
    "Water boils at one hundred degrees.",
    "The tallest mountain is Everest.",
]


@pytest.fixture
def fact_index():
    idx = HybridIndex(HashEmbedder(64))
    idx.add_chunks(
        Chunk(chunk_id=f"doc:{i}", doc_id="doc", text=t, token_span=(0, len(t.split())))
        for i, t in enumerate(FACTS)
    )
    return idx


def test_template_renders_both_slots():
    t = PromptTemplate()
    out = t.render("CTX", "Q?")
    assert "CTX" in out and "Q?" in out


def test_template_missing_slot_rejected():
    with pytest.raises(ValueError):
        PromptTemplate("no slots here")
    with pytest.raises(ValueError):
        PromptTemplate("{context} {context} {question}")


def test_negative_k_rejected():
    with pytest.raises(ValueError):
        RagRequest(query="q", k=-1)


def test_answer_k0_skips_retrieval(fact_index):
    resp = answer(RagRequest("capital of France", k=0), fact_index, ExtractiveGenerator())
    assert resp.sources == []
    assert resp.answer == ""  # extractive with no context


def test_answer_k0_echo_prompt_is_bare_query(fact_index):
    resp = answer(RagRequest("what is up", k=0), fact_index, EchoGenerator())
    assert resp.answer == "what is up"


def test_answer_extracts_planted_fact(fact_index):
    resp = answer(RagRequest("What is the capital of Peru?", k=3), fact_index, ExtractiveGenerator())
    assert resp.answer == "The capital of Peru is Lima."
    assert len(resp.sources) == 3
    assert any(s["chunk_id"] == "doc:2" for s in resp.sources)


def test_sources_carry_excerpt_and_score(fact_index):
    resp = answer(RagRequest("capital of Japan", k=2), fact_index, ExtractiveGenerator())
    for s in resp.sources:
        assert s["chunk_id"] in fact_index.chunks
        assert s["excerpt"] == fact_index.chunks[s["chunk_id"]].text[:200]
        assert isinstance(s["score"], float)


def test_k_larger_than_corpus(fact_index):
    resp = answer(RagRequest("capital", k=50), fact_index, EchoGenerator())
    assert len(resp.sources) == len(FACTS)


def test_empty_index_behaves_like_k0():
    idx = HybridIndex(HashEmbedder(64))
    resp = answer(RagRequest("anything", k=3), idx, EchoGenerator())
    assert resp.sources == []
    assert resp.answer == "anything"


def test_timing_reported(fact_index):
    resp = answer(RagRequest("capital", k=1), fact_index, EchoGenerator())
    assert set(resp.timing_ms) == {"retrieve", "generate"}
    assert all(v >= 0 for v in resp.timing_ms.values())


# -- batch mode -------------------------------------------------------------------

def test_run_batch_order_and_isolation(tmp_path, fact_index):
    inp = tmp_path / "in.jsonl"
    out = tmp_path / "out.jsonl"
    lines = [
        json.dumps({"id": "q1", "input": "capital of France"}),
        "{this is not json",
        json.dumps({"id": "q2", "input": "capital of Japan"}),
        json.dumps({"no_input_key": True}),
    ]
    inp.write_text("\n".join(lines) + "\n")
    stats = run_batch(inp, out, fact_index, ExtractiveGenerator(), k=3)
    assert stats == {"ok": 2, "failed": 2}
    records = [json.loads(l) for l in out.read_text().splitlines()]
    assert [r.get("id") for r in records] == ["q1", None, "q2", None]
    assert records[0]["answer"] == "The capital of France is Paris."
    assert "error" in records[1] and "error" in records[3]


def test_run_batch_matches_interactive(tmp_path, fact_index):
    queries = ["capital of France", "capital of Peru", "tallest mountain"]
    inp = tmp_path / "in.jsonl"
    inp.write_text(
        "\n".join(json.dumps({"id": str(i), "input": q}) for i, q in enumerate(queries)) + "\n"
    )
    out = tmp_path / "out.jsonl"
    gen = ExtractiveGenerator()
    run_batch(inp, out, fact_index, gen, k=3)
    records = [json.loads(l) for l in out.read_text().splitlines()]
    for rec, q in zip(records, queries):
        direct = answer(RagRequest(q, k=3), fact_index, gen)
        assert rec["answer"] == direct.answer
        assert rec["sources"] == direct.sources


def test_run_batch_empty_input(tmp_path, fact_index):
    inp = tmp_path / "in.jsonl"
    inp.write_text("")
    out = tmp_path / "out.jsonl"
    assert run_batch(inp, out, fact_index, EchoGenerator()) == {"ok": 0, "failed": 0}
    assert out.read_text() == ""


# -- HTTP service -----------------------------------------------------------------

def _post(addr, path, body):
    req = urllib.request.Request(
        f"http://{addr[0]}:{addr[1]}{path}",
        data=json.dumps(body).encode(),
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(req, timeout=10) as resp:
        return json.loads(resp.read())


def _get(addr, path):
    with urllib.request.urlopen(f"http://{addr[0]}:{addr[1]}{path}", timeout=10) as resp:
        return json.loads(resp.read())


@pytest.fixture
def service(fact_index):
    svc = RagService(fact_index, ExtractiveGenerator())
    addr = svc.start()
    yield svc, addr
    svc.shutdown()


def test_service_health(service, fact_index):
    _, addr = service
    body = _get(addr, "/health")
    assert body["status"] == "ok"
    assert body["chunks"] == len(fact_index)
    assert body["embedder"] == fact_index.embedder_identity
    assert body["generator"] == "extractive"


def test_service_retrieve_matches_direct_search(service, fact_index):
    _, addr = service
    body = _post(addr, "/retrieve", {"query": "capital of Japan", "k": 3, "mode": "rrf"})
    direct = fact_index.search("capital of Japan", 3, mode="rrf")
    assert [h["chunk_id"] for h in body["hits"]] == [h.chunk_id for h in direct]
    assert [h["score"] for h in body["hits"]] == pytest.approx([h.score for h in direct])


def test_service_rag_endpoint(service):
    _, addr = service
    body = _post(addr, "/rag", {"query": "What is the capital of Peru?", "k": 3})
    assert body["answer"] == "The capital of Peru is Lima."
    assert body["sources"]


def test_service_concurrent_identical_requests(service):
    _, addr = service
    results: list = [None] * 50
    errors: list = []

    def hit(i):
        try:
            results[i] = _post(addr, "/rag", {"query": "capital of France", "k": 3})
        except Exception as e:  # pragma: no cover
            errors.append(e)

    threads = [threading.Thread(target=hit, args=(i,)) for i in range(50)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=30)
    assert not errors
    answers = {r["answer"] for r in results}
    assert answers == {"The capital of France is Paris."}
    first_sources = [s["chunk_id"] for s in results[0]["sources"]]
    assert all([s["chunk_id"] for s in r["sources"]] == first_sources for r in results)


def test_service_no_index_returns_503():
    svc = RagService(None, EchoGenerator())
    addr = svc.start()
    try:
        with pytest.raises(urllib.error.HTTPError) as exc:
            _post(addr, "/rag", {"query": "x"})
        assert exc.value.code == 503
        assert "error" in json.loads(exc.value.read())
    finally:
        svc.shutdown()


def test_service_reload_index_swaps_atomically(service, fact_index):
    svc, addr = service
    new_idx = HybridIndex(HashEmbedder(64))
    new_idx.add_chunks([Chunk(chunk_id="n:0", doc_id="n", text="Only fact.", token_span=(0, 2))])
    svc.reload_index(new_idx)
    body = _get(addr, "/health")
    assert body["chunks"] == 1


def test_service_unknown_path_404(service):
    _, addr = service
    with pytest.raises(urllib.error.HTTPError) as exc:
        _get(addr, "/nope")
    assert exc.value.code == 404
