"""File-type extractors behind a common interface.

``extract(path, mode)`` detects the file kind, routes to the registered
extractor, and returns a validated MultimodalSample.  Embedded media are
written to a content-addressed assets directory and referenced by
placeholder tokens in the text.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..core import (
    DEFAULT_PLACEHOLDER,
    Modality,
    MultimodalSample,
    derive_doc_id,
    validate_sample,
)

logger = logging.getLogger(__name__)


class UnreadableFile(OSError):
    """The input file could not be read."""


class MalformedDocument(ValueError):
    """The file's structure could not be parsed."""


class UnsupportedKind(ValueError):
    """No extractor is registered for this file kind."""


EXTENSION_MAP = {
    "pdf": "pdf",
    "docx": "docx",
    "pptx": "pptx",
    "xlsx": "xlsx",
    "csv": "csv",
    "tsv": "csv",
    "txt": "txt",
    "text": "txt",
    "log": "txt",
    "md": "md",
    "markdown": "md",
    "html": "html",
    "htm": "html",
    "xhtml": "html",
    "eml": "eml",
    "mp3": "media",
    "wav": "media",
    "flac": "media",
    "ogg": "media",
    "m4a": "media",
    "mp4": "media",
    "mov": "media",
    "avi": "media",
    "mkv": "media",
}

TEXT_BEARING_KINDS = ("pdf", "docx", "pptx", "xlsx", "csv", "txt", "md", "html", "eml")


def detect_kind(path) -> str:
    """Map a path's extension to a file kind; unmapped -> 'unknown'."""
    ext = Path(path).suffix.lstrip(".").lower()
    return EXTENSION_MAP.get(ext, "unknown")


@dataclass
class ExtractionContext:
    """Shared extractor settings: where assets go, which placeholder to use."""

    assets_dir: Path = Path("assets")
    placeholder: str = DEFAULT_PLACEHOLDER
    ocr_hook: object = None  # callable(image_bytes: bytes) -> str, or None
    _counter: dict = field(default_factory=dict)

    def escape(self, text: str) -> str:
        """Neutralize literal placeholder occurrences in document text.

        A backslash before the closing character keeps the escaped form
        free of the token itself.
        """
        if self.placeholder in text:
            escaped = self.placeholder[:-1] + "\\" + self.placeholder[-1]
            text = text.replace(self.placeholder, escaped)
        return text

    def write_asset(self, doc_id: str, data: bytes, ext: str) -> str:
        """Write one asset under <assets>/<doc_id>/<n>.<ext>; idempotent."""
        n = self._counter.get(doc_id, 0)
        self._counter[doc_id] = n + 1
        d = self.assets_dir / doc_id
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"{n}.{ext.lstrip('.')}"
        if not path.exists():
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return str(path)


def _extract_media(path: Path, mode: str, ctx: ExtractionContext, doc_id: str):
    """Media files carry no text here; transcription is a sidecar concern."""
    data = path.read_bytes()
    ext = path.suffix.lstrip(".").lower()
    kind = "audio" if ext in ("mp3", "wav", "flac", "ogg", "m4a") else "video"
    asset = ctx.write_asset(doc_id, data, ext or "bin")
    return ctx.placeholder, [Modality(kind, asset)], {}


def extract(path, mode: str = "default", ctx: ExtractionContext | None = None) -> MultimodalSample:
    """Extract one file into a MultimodalSample.

    Raises UnsupportedKind for unmapped extensions, UnreadableFile on
    I/O failure, MalformedDocument when the file cannot be parsed at
    all; salvageable parse failures return a partial sample flagged
    ``metadata["partial"]``.
    """
    from . import markup, office, pdf

    p = Path(path)
    kind = detect_kind(p)
    if kind == "unknown":
        raise UnsupportedKind(f"no extractor for {p.suffix!r} ({p})")
    ctx = ctx or ExtractionContext()

    try:
        raw = p.read_bytes()
    except OSError as e:
        raise UnreadableFile(f"cannot read {p}: {e}") from e
    doc_id = derive_doc_id(raw, mode)

    dispatch = {
        "txt": markup.extract_txt,
        "md": markup.extract_md,
        "html": markup.extract_html,
        "csv": markup.extract_csv,
        "eml": markup.extract_eml,
        "docx": office.extract_docx,
        "pptx": office.extract_pptx,
        "xlsx": office.extract_xlsx,
        "pdf": pdf.extract_pdf_text_layer,
        "media": _extract_media,
    }
    text, modalities, extra_meta = dispatch[kind](p, mode, ctx, doc_id)

    metadata = {"kind": kind, "mode": mode}
    metadata.update(extra_meta)
    sample = MultimodalSample(
        text=text,
        modalities=tuple(modalities),
        source_path=str(p),
        doc_id=doc_id,
        metadata=metadata,
    )
    violations = validate_sample(sample, ctx.placeholder)
    if violations:
        raise MalformedDocument(
            f"extractor produced invalid sample for {p}: "
            + "; ".join(v.message for v in violations)
        )
    return sample
