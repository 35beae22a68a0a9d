"""Runs the wire-protocol conformance suite against the bundled model server.

The server is the TypeScript package in frontend/; these tests build it
once (if needed), spawn it on an ephemeral port, and talk to it only
over HTTP.
"""

import re
import shutil
import subprocess
import time
import urllib.request
from pathlib import Path

import numpy as np
import pytest

from omnirag.index import HashEmbedder, HybridIndex, RemoteEmbedder
from omnirag.index.hybrid import EmbedderMismatch
from omnirag.postproc import Chunk
from omnirag.rag import RagRequest, RemoteGenerator, answer
from omnirag.sidecar import SidecarClient, SidecarError, run_conformance

FRONTEND = Path(__file__).resolve().parent.parent / "frontend"

pytestmark = pytest.mark.skipif(shutil.which("node") is None, reason="node not available")


def _ensure_built():
    entry = FRONTEND / "dist" / "server.js"
    sources = list((FRONTEND / "src").glob("*.ts"))
    if entry.exists() and entry.stat().st_mtime >= max(s.stat().st_mtime for s in sources):
        return entry
    subprocess.run(["npx", "tsc"], cwd=FRONTEND, check=True, capture_output=True)
    return entry


@pytest.fixture(scope="module")
def sidecar_url():
    entry = _ensure_built()
    proc = subprocess.Popen(
        ["node", str(entry)],
        cwd=FRONTEND,
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
        env={"PORT": "0", "PATH": "/usr/bin:/bin:/usr/local/bin"},
    )
    try:
        line = proc.stdout.readline()
        m = re.search(r"listening on (http://\S+)", line)
        assert m, f"server did not announce its address: {line!r}"
        url = m.group(1)
        # wait until /info answers
        for _ in range(50):
            try:
                urllib.request.urlopen(url + "/info", timeout=1).read()
                break
            except OSError:
                time.sleep(0.1)
        yield url
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_conformance_suite_passes(sidecar_url):
    report = run_conformance(SidecarClient(sidecar_url))
    print("\n" + report.summary())
    assert report.passed, report.summary()


def test_remote_generate_is_deterministic(sidecar_url):
    client = SidecarClient(sidecar_url)
    out1 = client.generate("say something stable", max_tokens=8)
    out2 = client.generate("say something stable", max_tokens=8)
    assert out1 == out2


def test_unsupported_ocr_is_structured_501(sidecar_url):
    client = SidecarClient(sidecar_url)
    with pytest.raises(SidecarError) as exc:
        client.ocr(b"\x89PNG")
    assert exc.value.status == 501
    assert "ocr" in exc.value.body["error"]


# -- swapping the remote embedder into the retrieval stack --------------------------

FACTS = [
    "The capital of France is Paris.",
    "The capital of Japan is Tokyo.",
    "Dense retrieval uses vector similarity.",
    "Sparse retrieval uses term statistics.",
]


def _chunks():
    return [
        Chunk(chunk_id=f"d:{i}", doc_id="d", text=t, token_span=(0, len(t.split())))
        for i, t in enumerate(FACTS)
    ]


def test_remote_embedder_builds_a_working_index(sidecar_url, tmp_path):
    emb = RemoteEmbedder(sidecar_url)
    assert emb.identity.startswith("fnv-trigram")
    idx = HybridIndex(emb)
    idx.add_chunks(_chunks())

    # structural invariants hold regardless of which embedder produced the vectors
    for cid, v in idx.vectors.items():
        assert v.shape == (emb.dimension,)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-5)
    hits = idx.search("capital of Japan", 2, mode="dense")
    assert hits[0].chunk_id == "d:1"

    idx.save(tmp_path / "index")
    loaded = HybridIndex.load(tmp_path / "index", embedder=emb)
    before = [(h.chunk_id, h.score) for h in idx.search("vector similarity", 4)]
    after = [(h.chunk_id, h.score) for h in loaded.search("vector similarity", 4)]
    assert before == after


def test_embedder_identity_mismatch_detected(sidecar_url, tmp_path):
    idx = HybridIndex(RemoteEmbedder(sidecar_url))
    idx.add_chunks(_chunks())
    idx.save(tmp_path / "index")
    with pytest.raises(EmbedderMismatch):
        HybridIndex.load(tmp_path / "index", embedder=HashEmbedder(48))


def test_rag_answer_through_remote_generator(sidecar_url):
    idx = HybridIndex(RemoteEmbedder(sidecar_url))
    idx.add_chunks(_chunks())
    resp = answer(
        RagRequest("What is the capital of France?", k=2, mode="sparse"),
        idx,
        RemoteGenerator(sidecar_url),
    )
    assert resp.answer == "The capital of France is Paris."
    assert resp.sources
