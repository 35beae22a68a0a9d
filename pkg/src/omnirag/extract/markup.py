"""Extractors for plain-text and markup formats: txt, md, html, csv, eml."""

from __future__ import annotations

import csv
import email
import email.policy
import io
import re
from html.parser import HTMLParser
from pathlib import Path

from ..core import Modality

_BLOCK_TAGS = {
    "p", "div", "br", "li", "ul", "ol", "tr", "table",
    "h1", "h2", "h3", "h4", "h5", "h6", "section", "article",
    "header", "footer", "blockquote", "pre",
}


def _read_text(path: Path) -> str:
    return path.read_bytes().decode("utf-8", errors="replace")


def extract_txt(path: Path, mode: str, ctx, doc_id: str):
    return ctx.escape(_read_text(path)), [], {}


_MD_HEADING = re.compile(r"^\s{0,3}#{1,6}\s+")
_MD_EMPHASIS = re.compile(r"(\*{1,3}|_{1,3}|`{1,3})(.+?)\1")
_MD_LINK = re.compile(r"!?\[([^\]]*)\]\([^)]*\)")
_MD_HRULE = re.compile(r"^\s{0,3}([-*_])\s*(\1\s*){2,}$")


def extract_md(path: Path, mode: str, ctx, doc_id: str):
    """Strip markers, keep one line per block; blank lines collapse."""
    lines = []
    in_fence = False
    for raw in _read_text(path).splitlines():
        if raw.lstrip().startswith("```"):
            in_fence = not in_fence
            continue
        line = raw if in_fence else _strip_md_line(raw)
        if line.strip():
            lines.append(line.strip())
    return ctx.escape("\n".join(lines)), [], {}


def _strip_md_line(line: str) -> str:
    if _MD_HRULE.match(line):
        return ""
    line = _MD_HEADING.sub("", line)
    line = re.sub(r"^\s{0,3}[-*+]\s+", "", line)  # list bullets
    line = re.sub(r"^\s{0,3}\d+\.\s+", "", line)  # ordered lists
    line = re.sub(r"^\s{0,3}>\s?", "", line)  # blockquote
    line = _MD_LINK.sub(r"\1", line)
    prev = None
    while prev != line:
        prev = line
        line = _MD_EMPHASIS.sub(r"\2", line)
    return line


class _TextHTMLParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self._skip_depth:
            self._skip_depth -= 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        if not self._skip_depth:
            self.parts.append(data)


def extract_html(path: Path, mode: str, ctx, doc_id: str):
    parser = _TextHTMLParser()
    parser.feed(_read_text(path))
    raw = "".join(parser.parts)
    lines = [re.sub(r"[ \t]+", " ", ln).strip() for ln in raw.splitlines()]
    text = "\n".join(ln for ln in lines if ln)
    return ctx.escape(text), [], {}


def extract_csv(path: Path, mode: str, ctx, doc_id: str):
    delim = "\t" if path.suffix.lower() == ".tsv" else ","
    rows = []
    reader = csv.reader(io.StringIO(_read_text(path)), delimiter=delim)
    for row in reader:
        rows.append(" | ".join(cell.strip() for cell in row))
    return ctx.escape("\n".join(rows)), [], {}


_KIND_BY_MIME = {"image": "image", "audio": "audio", "video": "video"}


def extract_eml(path: Path, mode: str, ctx, doc_id: str):
    """RFC 5322 message: headers to metadata, body text, attachments out."""
    msg = email.message_from_bytes(path.read_bytes(), policy=email.policy.default)
    if not msg.keys():
        from . import MalformedDocument

        raise MalformedDocument(f"no message headers found in {path}")

    meta = {}
    for header in ("Subject", "From", "To", "Date"):
        value = msg.get(header)
        if value:
            meta[header.lower()] = str(value)

    body_parts: list[str] = []
    modalities: list[Modality] = []
    placeholders: list[str] = []

    def walk(part):
        ctype = part.get_content_type()
        if part.is_multipart():
            for sub in part.iter_parts():
                walk(sub)
            return
        disposition = part.get_content_disposition()
        main = ctype.split("/", 1)[0]
        if disposition == "attachment" or main in _KIND_BY_MIME:
            payload = part.get_payload(decode=True) or b""
            name = part.get_filename() or "attachment.bin"
            ext = Path(name).suffix.lstrip(".") or "bin"
            asset = ctx.write_asset(doc_id, payload, ext)
            modalities.append(Modality(_KIND_BY_MIME.get(main, "other"), asset))
            placeholders.append(ctx.placeholder)
        elif ctype == "text/plain":
            body_parts.append(ctx.escape(part.get_content()))
        elif ctype == "text/html" and not body_parts:
            parser = _TextHTMLParser()
            parser.feed(part.get_content())
            body_parts.append(ctx.escape("".join(parser.parts).strip()))

    walk(msg)
    text = "\n".join(p.strip() for p in body_parts if p.strip())
    if placeholders:
        text = (text + "\n" if text else "") + " ".join(placeholders)
    return text, modalities, meta
