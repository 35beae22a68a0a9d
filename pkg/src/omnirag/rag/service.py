"""HTTP service exposing the standalone retriever and the RAG endpoint.

POST /retrieve {query,k,mode} -> {hits}
POST /rag {query,k,mode}      -> {answer,sources,timing_ms}
GET  /health                  -> {status,chunks,embedder,generator}

Requests are served concurrently over a read-only index snapshot;
shutdown drains in-flight requests.  Errors come back as structured
JSON bodies and never take the service down.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..index import HybridIndex
from .engine import Generator, PromptTemplate, RagRequest, answer

logger = logging.getLogger(__name__)

API_VERSION = 1


class RagService:
    def __init__(
        self,
        index: HybridIndex | None,
        generator: Generator,
        template: PromptTemplate | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self._index = index
        self.generator = generator
        self.template = template or PromptTemplate()
        self._index_lock = threading.Lock()
        service = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):
                logger.debug("http: " + fmt, *args)

            def _reply(self, code: int, body: dict):
                payload = json.dumps({"v": API_VERSION, **body}).encode("utf-8")
                self.send_response(code)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def do_GET(self):
                if self.path == "/health":
                    idx = service.index
                    self._reply(
                        200,
                        {
                            "status": "ok" if idx is not None else "no_index",
                            "chunks": len(idx) if idx is not None else 0,
                            "embedder": idx.embedder_identity if idx is not None else "",
                            "generator": service.generator.identity,
                        },
                    )
                else:
                    self._reply(404, {"error": "not found"})

            def do_POST(self):
                try:
                    length = int(self.headers.get("Content-Length", 0))
                    body = json.loads(self.rfile.read(length) or b"{}")
                except (ValueError, json.JSONDecodeError) as e:
                    return self._reply(400, {"error": f"bad request body: {e}"})

                idx = service.index
                if idx is None:
                    return self._reply(503, {"error": "index unavailable"})
                try:
                    if self.path == "/retrieve":
                        hits = idx.search(
                            str(body.get("query", "")),
                            max(1, int(body.get("k", 5))),
                            mode=body.get("mode", "rrf"),
                        )
                        return self._reply(
                            200,
                            {"hits": [
                                {"chunk_id": h.chunk_id, "score": h.score,
                                 "rank": h.rank, "source": h.source}
                                for h in hits
                            ]},
                        )
                    if self.path == "/rag":
                        req = RagRequest(
                            query=str(body.get("query", "")),
                            k=int(body.get("k", 3)),
                            mode=body.get("mode", "rrf"),
                        )
                        resp = answer(req, idx, service.generator, service.template)
                        return self._reply(200, resp.to_dict())
                    return self._reply(404, {"error": "not found"})
                except Exception as e:
                    logger.exception("request failed")
                    return self._reply(500, {"error": f"{type(e).__name__}: {e}"})

        class Server(ThreadingHTTPServer):
            daemon_threads = False  # drain in-flight requests on shutdown
            request_queue_size = 128

        self._server = Server((host, port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def index(self) -> HybridIndex | None:
        with self._index_lock:
            return self._index

    def reload_index(self, index: HybridIndex) -> None:
        """Atomically swap the index snapshot seen by new requests."""
        with self._index_lock:
            self._index = index

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address

    def start(self) -> tuple[str, int]:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.address

    def serve_forever(self):
        self._server.serve_forever()

    def shutdown(self):
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=10)
