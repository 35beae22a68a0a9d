"""Client and conformance suite for the model-server wire protocol.

A model server exposes versioned HTTP+JSON endpoints: /embed,
/generate, /ocr, /transcribe, and /info.  The conformance suite can be
run against any implementer; it checks determinism, unit norms,
dimension consistency, and structured errors for unsupported
capabilities.
"""

from __future__ import annotations

import base64
import json
import urllib.error
import urllib.request
from dataclasses import dataclass, field

import numpy as np


class SidecarError(RuntimeError):
    def __init__(self, status: int, body: dict):
        super().__init__(f"sidecar returned {status}: {body.get('error')}")
        self.status = status
        self.body = body


class SidecarClient:
    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _request(self, method: str, path: str, body: dict | None = None) -> dict:
        data = json.dumps({"v": 1, **body}).encode("utf-8") if body is not None else None
        req = urllib.request.Request(
            self.base_url + path, data=data, method=method,
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as e:
            try:
                payload = json.loads(e.read().decode("utf-8"))
            except (ValueError, OSError):
                payload = {"error": str(e)}
            raise SidecarError(e.code, payload) from e

    def info(self) -> dict:
        return self._request("GET", "/info")

    def embed(self, texts: list[str]) -> dict:
        return self._request("POST", "/embed", {"texts": texts})

    def generate(self, prompt: str, max_tokens: int = 128, seed: int = 0) -> str:
        out = self._request(
            "POST", "/generate", {"prompt": prompt, "max_tokens": max_tokens, "seed": seed}
        )
        return out["text"]

    def ocr(self, image_bytes: bytes) -> str:
        out = self._request(
            "POST", "/ocr", {"image_bytes_b64": base64.b64encode(image_bytes).decode("ascii")}
        )
        return out["text"]

    def transcribe(self, audio_bytes: bytes) -> str:
        out = self._request(
            "POST", "/transcribe", {"audio_bytes_b64": base64.b64encode(audio_bytes).decode("ascii")}
        )
        return out["text"]


@dataclass
class ConformanceReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def record(self, name: str, passed: bool, detail: str = ""):
        self.checks.append((name, passed, detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def summary(self) -> str:
        return "\n".join(
            f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
            for name, ok, detail in self.checks
        )


NORM_TOLERANCE = 1e-5

PROBE_TEXTS = ["hello world", "the quick brown fox", "hello world", ""]


def run_conformance(client: SidecarClient) -> ConformanceReport:
    """Protocol conformance checks, runnable against any implementer."""
    report = ConformanceReport()

    info = client.info()
    report.record("info.identity nonempty", bool(info.get("identity")))
    caps = info.get("capabilities", [])
    report.record("info.capabilities lists embed", "embed" in caps)
    dim = int(info.get("dim", 0))
    report.record("info.dim positive", dim > 0, f"dim={dim}")

    out = client.embed(PROBE_TEXTS)
    vecs = np.asarray(out["vectors"], dtype=np.float64)
    report.record(
        "embed dimension matches /info",
        out.get("dim") == dim and vecs.shape == (len(PROBE_TEXTS), dim),
        f"shape={vecs.shape}",
    )
    norms = np.linalg.norm(vecs, axis=1)
    report.record(
        "embed vectors unit-norm",
        bool(np.all(np.abs(norms - 1.0) <= NORM_TOLERANCE)),
        f"max deviation {np.max(np.abs(norms - 1.0)):.2e}",
    )

    again = np.asarray(client.embed(PROBE_TEXTS)["vectors"], dtype=np.float64)
    report.record("embed deterministic", bool(np.array_equal(vecs, again)))
    report.record(
        "embed identical inputs agree", bool(np.array_equal(vecs[0], vecs[2]))
    )

    empty = client.embed([])
    report.record(
        "embed empty batch", empty.get("vectors") == [] and empty.get("dim") == dim
    )

    for cap, probe in (("ocr", client.ocr), ("transcribe", client.transcribe)):
        if cap in caps:
            continue
        try:
            probe(b"\x00\x01")
            report.record(f"unsupported {cap} rejected", False, "no error returned")
        except SidecarError as e:
            structured = isinstance(e.body, dict) and "error" in e.body
            report.record(
                f"unsupported {cap} rejected", e.status == 501 and structured,
                f"status={e.status}",
            )
    return report
