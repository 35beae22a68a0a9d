"""Minimal PDF text-layer extractor.

Parses the object graph directly (no external PDF library): indirect
objects are found by scanning, streams are FlateDecoded, and text is
pulled from page content streams by interpreting the text-positioning
operators.  Reading order is row-major: runs are sorted by page, then
top-to-bottom with a 2pt line-merge tolerance, then left-to-right.

This is a text-layer parser only: no OCR, no layout reconstruction,
no encrypted files.  Pages without a text layer route to the OCR hook
in default mode when one is configured.
"""

from __future__ import annotations

import base64
import io
import logging
import re
import zlib
from collections import namedtuple
from pathlib import Path

from ..core import Modality

logger = logging.getLogger(__name__)

Ref = namedtuple("Ref", "num gen")

LINE_TOLERANCE = 2.0  # pt; runs within this vertical distance share a line

_WS = b"\x00\t\n\x0c\r "
_DELIM = b"()<>[]{}/%"


class Name(str):
    """A PDF name object (/Foo); distinct from string values."""


class PdfStream:
    def __init__(self, dictionary: dict, raw: bytes):
        self.dictionary = dictionary
        self.raw = raw


def _malformed(path, why):
    from . import MalformedDocument

    return MalformedDocument(f"{path}: {why}")


class _Lexer:
    """Tokenizer/parser for PDF object syntax over a byte buffer."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_ws(self):
        d, n = self.data, len(self.data)
        while self.pos < n:
            c = d[self.pos : self.pos + 1]
            if c in b"%":
                eol = d.find(b"\n", self.pos)
                self.pos = n if eol < 0 else eol + 1
            elif c in _WS:
                self.pos += 1
            else:
                return

    def peek(self) -> bytes:
        return self.data[self.pos : self.pos + 1]

    def parse_value(self):
        self.skip_ws()
        d = self.data
        c = self.peek()
        if c == b"":
            raise EOFError("unexpected end of data")
        if d.startswith(b"<<", self.pos):
            return self._parse_dict()
        if c == b"<":
            return self._parse_hex_string()
        if c == b"[":
            return self._parse_array()
        if c == b"(":
            return self._parse_literal_string()
        if c == b"/":
            return self._parse_name()
        if c in b"+-.0123456789":
            return self._parse_number_or_ref()
        return self._parse_keyword()

    def _parse_dict(self):
        self.pos += 2
        out = {}
        while True:
            self.skip_ws()
            if self.data.startswith(b">>", self.pos):
                self.pos += 2
                return out
            key = self.parse_value()
            if not isinstance(key, Name):
                raise ValueError(f"dict key is not a name at offset {self.pos}")
            out[str(key)] = self.parse_value()

    def _parse_array(self):
        self.pos += 1
        out = []
        while True:
            self.skip_ws()
            if self.peek() == b"]":
                self.pos += 1
                return out
            out.append(self.parse_value())

    def _parse_name(self) -> Name:
        self.pos += 1
        start = self.pos
        d, n = self.data, len(self.data)
        while self.pos < n and d[self.pos : self.pos + 1] not in _WS + _DELIM:
            self.pos += 1
        raw = d[start : self.pos]
        raw = re.sub(rb"#([0-9A-Fa-f]{2})", lambda m: bytes([int(m.group(1), 16)]), raw)
        return Name(raw.decode("latin-1"))

    def _parse_hex_string(self) -> bytes:
        end = self.data.find(b">", self.pos)
        if end < 0:
            raise ValueError("unterminated hex string")
        hexdigits = re.sub(rb"\s", b"", self.data[self.pos + 1 : end])
        if len(hexdigits) % 2:
            hexdigits += b"0"
        self.pos = end + 1
        return bytes.fromhex(hexdigits.decode("ascii"))

    def _parse_literal_string(self) -> bytes:
        d, n = self.data, len(self.data)
        self.pos += 1
        depth = 1
        out = bytearray()
        while self.pos < n:
            b = d[self.pos]
            self.pos += 1
            if b == 0x5C:  # backslash
                if self.pos >= n:
                    break
                e = d[self.pos]
                self.pos += 1
                table = {0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12,
                         0x28: 0x28, 0x29: 0x29, 0x5C: 0x5C}
                if e in table:
                    out.append(table[e])
                elif 0x30 <= e <= 0x37:  # octal, up to 3 digits
                    digits = chr(e)
                    while len(digits) < 3 and self.pos < n and 0x30 <= d[self.pos] <= 0x37:
                        digits += chr(d[self.pos])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif e in (10, 13):  # line continuation
                    if e == 13 and self.pos < n and d[self.pos] == 10:
                        self.pos += 1
                else:
                    out.append(e)
            elif b == 0x28:
                depth += 1
                out.append(b)
            elif b == 0x29:
                depth -= 1
                if depth == 0:
                    return bytes(out)
                out.append(b)
            else:
                out.append(b)
        raise ValueError("unterminated literal string")

    def _parse_number_or_ref(self):
        num = self._parse_number()
        if isinstance(num, int):
            save = self.pos
            try:
                self.skip_ws()
                gen = self._parse_number()
                self.skip_ws()
                if isinstance(gen, int) and self.data.startswith(b"R", self.pos) and (
                    self.pos + 1 >= len(self.data)
                    or self.data[self.pos + 1 : self.pos + 2] in _WS + _DELIM
                ):
                    self.pos += 1
                    return Ref(num, gen)
            except (ValueError, EOFError):
                pass
            self.pos = save
        return num

    def _parse_number(self):
        m = re.match(rb"[+-]?(?:\d+\.\d*|\.\d+|\d+)", self.data[self.pos : self.pos + 64])
        if not m:
            raise ValueError(f"expected number at offset {self.pos}")
        raw = m.group(0)
        self.pos += len(raw)
        return float(raw) if b"." in raw else int(raw)

    def _parse_keyword(self):
        start = self.pos
        d, n = self.data, len(self.data)
        while self.pos < n and d[self.pos : self.pos + 1] not in _WS + _DELIM:
            self.pos += 1
        kw = d[start : self.pos]
        if kw == b"true":
            return True
        if kw == b"false":
            return False
        if kw == b"null":
            return None
        return ("op", kw.decode("latin-1"))


_OBJ_RE = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")


class PdfDocument:
    """The parsed object graph of one PDF file."""

    def __init__(self, data: bytes, path):
        self.path = path
        self.objects: dict[tuple[int, int], object] = {}
        self._load(data)

    def _load(self, data: bytes):
        if not data.startswith(b"%PDF"):
            raise _malformed(self.path, "missing %PDF header")
        pending_streams = []
        for m in _OBJ_RE.finditer(data):
            key = (int(m.group(1)), int(m.group(2)))
            lex = _Lexer(data, m.end())
            try:
                value = lex.parse_value()
            except (ValueError, EOFError) as e:
                logger.warning("skipping object %s in %s: %s", key, self.path, e)
                continue
            lex.skip_ws()
            if isinstance(value, dict) and data.startswith(b"stream", lex.pos):
                start = lex.pos + len(b"stream")
                if data.startswith(b"\r\n", start):
                    start += 2
                elif data.startswith(b"\n", start) or data.startswith(b"\r", start):
                    start += 1
                pending_streams.append((key, value, start))
            else:
                self.objects[key] = value
        if not self.objects and not pending_streams:
            raise _malformed(self.path, "no parseable objects (corrupt cross-reference structure)")

        for key, dictionary, start in pending_streams:
            length = self.resolve(dictionary.get("Length"))
            if isinstance(length, int) and data.startswith(b"endstream", *_skip(data, start + length)):
                raw = data[start : start + length]
            else:
                end = data.find(b"endstream", start)
                if end < 0:
                    logger.warning("unterminated stream for object %s", key)
                    continue
                raw = data[start:end].rstrip(b"\r\n")
            self.objects[key] = PdfStream(dictionary, raw)

        self.catalog = self._find_catalog(data)

    def _find_catalog(self, data: bytes) -> dict:
        for m in re.finditer(rb"trailer", data):
            lex = _Lexer(data, m.end())
            try:
                trailer = lex.parse_value()
            except (ValueError, EOFError):
                continue
            if isinstance(trailer, dict) and "Root" in trailer:
                root = self.resolve(trailer["Root"])
                if isinstance(root, dict):
                    return root
        for value in self.objects.values():
            if isinstance(value, dict) and value.get("Type") == "Catalog":
                return value
        raise _malformed(self.path, "no document catalog found")

    def resolve(self, value, depth: int = 0):
        while isinstance(value, Ref) and depth < 32:
            value = self.objects.get((value.num, value.gen))
            depth += 1
        return value

    def pages(self) -> list[dict]:
        out: list[dict] = []

        def walk(node, depth=0):
            node = self.resolve(node)
            if not isinstance(node, dict) or depth > 64:
                return
            if node.get("Type") == "Page":
                out.append(node)
            else:
                for kid in self.resolve(node.get("Kids")) or []:
                    walk(kid, depth + 1)

        walk(self.catalog.get("Pages"))
        return out

    def decoded_stream(self, stream: PdfStream) -> bytes:
        filters = self.resolve(stream.dictionary.get("Filter"))
        if filters is None:
            return stream.raw
        if not isinstance(filters, list):
            filters = [filters]
        data = stream.raw
        for f in filters:
            f = str(self.resolve(f))
            if f == "FlateDecode":
                data = zlib.decompress(data)
            elif f == "ASCII85Decode":
                data = base64.a85decode(data.strip().removesuffix(b"~>"), adobe=False)
            elif f == "ASCIIHexDecode":
                data = bytes.fromhex(
                    re.sub(rb"[\s>]", b"", data).decode("ascii")
                )
            elif f in ("DCTDecode", "JPXDecode"):
                return data  # compressed image payload, kept as-is
            else:
                logger.warning("unsupported stream filter %s in %s", f, self.path)
                return b""
        return data


def _skip(data: bytes, pos: int):
    while pos < len(data) and data[pos : pos + 1] in b"\r\n":
        pos += 1
    return (pos,)


TextRun = namedtuple("TextRun", "y x text")


def _decode_pdf_text(raw: bytes) -> str:
    if raw.startswith(b"\xfe\xff"):
        return raw[2:].decode("utf-16-be", errors="replace")
    return raw.decode("cp1252", errors="replace")


def extract_page_text(doc: PdfDocument, page: dict) -> list[TextRun]:
    """Interpret the text operators of one page's content streams."""
    contents = doc.resolve(page.get("Contents"))
    streams = contents if isinstance(contents, list) else [contents]
    data = b"\n".join(
        doc.decoded_stream(s)
        for s in (doc.resolve(x) for x in streams)
        if isinstance(s, PdfStream)
    )

    runs: list[TextRun] = []
    lex = _Lexer(data)
    stack: list = []
    x = y = 0.0
    line_x = line_y = 0.0
    leading = 0.0

    def show(raw):
        nonlocal x
        if isinstance(raw, bytes):
            text = _decode_pdf_text(raw)
            if text:
                runs.append(TextRun(y, x, text))
                x += 1e-3  # keep subsequent runs on this line ordered

    while True:
        lex.skip_ws()
        if lex.pos >= len(data):
            break
        try:
            tok = lex.parse_value()
        except (ValueError, EOFError):
            lex.pos += 1
            continue
        if not (isinstance(tok, tuple) and len(tok) == 2 and tok[0] == "op"):
            stack.append(tok)
            continue
        op = tok[1]
        try:
            if op == "BT":
                x = y = line_x = line_y = 0.0
            elif op == "Tm" and len(stack) >= 6:
                line_x, line_y = float(stack[-2]), float(stack[-1])
                x, y = line_x, line_y
            elif op in ("Td", "TD") and len(stack) >= 2:
                tx, ty = float(stack[-2]), float(stack[-1])
                if op == "TD":
                    leading = -ty
                line_x += tx
                line_y += ty
                x, y = line_x, line_y
            elif op == "TL" and stack:
                leading = float(stack[-1])
            elif op == "T*":
                line_y -= leading
                x, y = line_x, line_y
            elif op == "Tj" and stack:
                show(stack[-1])
            elif op == "'" and stack:
                line_y -= leading
                x, y = line_x, line_y
                show(stack[-1])
            elif op == '"' and stack:
                line_y -= leading
                x, y = line_x, line_y
                show(stack[-1])
            elif op == "TJ" and stack and isinstance(stack[-1], list):
                parts = [e for e in stack[-1] if isinstance(e, bytes)]
                show(b"".join(parts))
        except (TypeError, ValueError):
            pass
        stack.clear()
    return runs


def assemble_lines(runs: list[TextRun]) -> str:
    """Row-major ordering with a 2pt line-merge tolerance."""
    if not runs:
        return ""
    runs = sorted(runs, key=lambda r: (-r.y, r.x))
    lines: list[list[TextRun]] = [[runs[0]]]
    for run in runs[1:]:
        if abs(run.y - lines[-1][0].y) <= LINE_TOLERANCE:
            lines[-1].append(run)
        else:
            lines.append([run])
    out = []
    for line in lines:
        line.sort(key=lambda r: r.x)
        out.append(" ".join(r.text.strip() for r in line if r.text.strip()))
    return "\n".join(ln for ln in out if ln)


def _export_page_images(doc: PdfDocument, page: dict, ctx, doc_id: str) -> list[Modality]:
    resources = doc.resolve(page.get("Resources")) or {}
    xobjects = doc.resolve(resources.get("XObject")) or {}
    out = []
    for name in sorted(xobjects):
        obj = doc.resolve(xobjects[name])
        if not isinstance(obj, PdfStream) or doc.resolve(obj.dictionary.get("Subtype")) != "Image":
            continue
        filters = doc.resolve(obj.dictionary.get("Filter"))
        if not isinstance(filters, list):
            filters = [filters] if filters else []
        filters = [str(doc.resolve(f)) for f in filters]
        if "DCTDecode" in filters:
            asset = ctx.write_asset(doc_id, obj.raw, "jpg")
        else:
            data = _raster_to_png(doc, obj)
            if data is None:
                asset = ctx.write_asset(doc_id, obj.raw, "bin")
            else:
                asset = ctx.write_asset(doc_id, data, "png")
        out.append(Modality("image", asset))
    return out


def _raster_to_png(doc: PdfDocument, obj: PdfStream) -> bytes | None:
    try:
        from PIL import Image
    except ImportError:
        return None
    try:
        raw = doc.decoded_stream(obj)
        w = int(doc.resolve(obj.dictionary.get("Width")))
        h = int(doc.resolve(obj.dictionary.get("Height")))
        cs = str(doc.resolve(obj.dictionary.get("ColorSpace")))
        mode = {"DeviceRGB": "RGB", "DeviceGray": "L"}.get(cs)
        if mode is None or len(raw) < w * h * len(mode):
            return None
        img = Image.frombytes(mode, (w, h), raw[: w * h * len(mode)])
        buf = io.BytesIO()
        img.save(buf, "PNG")
        return buf.getvalue()
    except (ValueError, TypeError, OSError):
        return None


def extract_pdf_text_layer(path: Path, mode: str, ctx, doc_id: str):
    """Text layer plus exported raster images for one PDF.

    Fast mode never OCRs.  Default mode sends pages lacking a text
    layer to the OCR hook when one is configured, and otherwise falls
    back to fast behavior with a metadata flag.
    """
    doc = PdfDocument(path.read_bytes(), path)
    pages = doc.pages()
    if not pages:
        raise _malformed(path, "document has no pages")

    meta: dict[str, str] = {}
    page_texts: list[str] = []
    modalities: list[Modality] = []
    any_text = False
    ocr_used = ocr_missing = False

    for page in pages:
        try:
            text = assemble_lines(extract_page_text(doc, page))
        except (ValueError, EOFError) as e:
            logger.warning("salvaging page of %s: %s", path, e)
            meta["partial"] = "true"
            text = ""
        images = _export_page_images(doc, page, ctx, doc_id)

        if not text and images:
            if mode == "default" and ctx.ocr_hook is not None:
                ocr_parts = []
                for m in images:
                    try:
                        ocr_parts.append(ctx.ocr_hook(Path(m.value).read_bytes()))
                    except Exception as e:  # hook is external; isolate failures
                        logger.warning("OCR hook failed on %s: %s", m.value, e)
                text = "\n".join(p.strip() for p in ocr_parts if p and p.strip())
                ocr_used = True
            elif mode == "default":
                ocr_missing = True

        any_text = any_text or bool(text)
        parts = [ctx.escape(text)] if text else []
        parts.extend(ctx.placeholder for _ in images)
        modalities.extend(images)
        page_texts.append("\n".join(parts))

    if ocr_used:
        meta["ocr"] = "sidecar"
    elif ocr_missing:
        meta["ocr"] = "unavailable"
    if not any_text:
        meta["no_text_layer"] = "true"
    text = "\n\n".join(t for t in page_texts if t)
    return text, modalities, meta
