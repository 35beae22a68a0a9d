"""OOXML extractors (docx, pptx, xlsx): direct zip + XML parsing.

Only the text- and image-bearing parts of the containers are read; no
styling.  A corrupt archive or a missing required part raises
MalformedDocument; mid-document XML failures salvage the prefix.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
import zipfile
from pathlib import Path

from ..core import Modality

NS = {
    "w": "http://schemas.openxmlformats.org/wordprocessingml/2006/main",
    "a": "http://schemas.openxmlformats.org/drawingml/2006/main",
    "r": "http://schemas.openxmlformats.org/officeDocument/2006/relationships",
    "rel": "http://schemas.openxmlformats.org/package/2006/relationships",
    "p": "http://schemas.openxmlformats.org/presentationml/2006/main",
    "s": "http://schemas.openxmlformats.org/spreadsheetml/2006/main",
}

SLIDE_BREAK = "\n\n---\n\n"


def _malformed(path, why):
    from . import MalformedDocument

    return MalformedDocument(f"{path}: {why}")


def _open_zip(path: Path) -> zipfile.ZipFile:
    try:
        return zipfile.ZipFile(path)
    except zipfile.BadZipFile as e:
        raise _malformed(path, f"not a valid OOXML container: {e}") from e


def _read_part(zf: zipfile.ZipFile, name: str, path: Path) -> bytes:
    try:
        return zf.read(name)
    except KeyError as e:
        raise _malformed(path, f"missing required part {name}") from e


def _parse_xml(data: bytes, path: Path, part: str) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as e:
        raise _malformed(path, f"unparseable XML in {part}: {e}") from e


def _rels_map(zf: zipfile.ZipFile, rels_name: str, base: str) -> dict[str, str]:
    """Relationship id -> zip member name, resolved against `base`."""
    if rels_name not in zf.namelist():
        return {}
    root = ET.fromstring(zf.read(rels_name))
    out = {}
    for rel in root.findall("rel:Relationship", NS):
        target = rel.get("Target", "")
        if target.startswith("/"):
            member = target.lstrip("/")
        else:
            member = str((Path(base) / target).as_posix())
            member = re.sub(r"[^/]+/\.\./", "", member)
        out[rel.get("Id", "")] = member
    return out


def _export_image(zf, member, ctx, doc_id, modalities, parts):
    if member not in zf.namelist():
        return
    ext = Path(member).suffix.lstrip(".") or "bin"
    asset = ctx.write_asset(doc_id, zf.read(member), ext)
    modalities.append(Modality("image", asset))
    parts.append(ctx.placeholder)


def extract_docx(path: Path, mode: str, ctx, doc_id: str):
    """Paragraph text in reading order; inline images become placeholders."""
    zf = _open_zip(path)
    doc = _parse_xml(_read_part(zf, "word/document.xml", path), path, "word/document.xml")
    rels = _rels_map(zf, "word/_rels/document.xml.rels", "word")

    modalities: list[Modality] = []
    lines = []
    for para in doc.iter(f"{{{NS['w']}}}p"):
        parts: list[str] = []
        for el in para.iter():
            tag = el.tag.rsplit("}", 1)[-1]
            if tag == "t" and el.tag.startswith(f"{{{NS['w']}}}"):
                parts.append(ctx.escape(el.text or ""))
            elif tag == "tab":
                parts.append("\t")
            elif tag == "blip":
                rid = el.get(f"{{{NS['r']}}}embed") or el.get(f"{{{NS['r']}}}link")
                if rid and rid in rels:
                    _export_image(zf, rels[rid], ctx, doc_id, modalities, parts)
        lines.append("".join(parts))
    text = "\n".join(lines).strip("\n")
    return text, modalities, {}


def _slide_number(name: str) -> int:
    m = re.search(r"slide(\d+)\.xml$", name)
    return int(m.group(1)) if m else 0


def extract_pptx(path: Path, mode: str, ctx, doc_id: str):
    """Slide texts in slide order, separated by a slide-break marker."""
    zf = _open_zip(path)
    slides = sorted(
        (n for n in zf.namelist() if re.fullmatch(r"ppt/slides/slide\d+\.xml", n)),
        key=_slide_number,
    )
    if not slides:
        raise _malformed(path, "no slides found")

    modalities: list[Modality] = []
    slide_texts = []
    for name in slides:
        root = _parse_xml(zf.read(name), path, name)
        rels = _rels_map(zf, f"ppt/slides/_rels/{Path(name).name}.rels", "ppt/slides")
        parts: list[str] = []
        for el in root.iter():
            tag = el.tag.rsplit("}", 1)[-1]
            if tag == "t" and el.tag.startswith(f"{{{NS['a']}}}"):
                parts.append(ctx.escape(el.text or ""))
            elif tag == "p" and el.tag.startswith(f"{{{NS['a']}}}"):
                parts.append("\n")
            elif tag == "blip":
                rid = el.get(f"{{{NS['r']}}}embed")
                if rid and rid in rels:
                    _export_image(zf, rels[rid], ctx, doc_id, modalities, parts)
                    parts.append("\n")
        slide_texts.append(re.sub(r"\n{2,}", "\n", "".join(parts)).strip("\n"))
    return SLIDE_BREAK.join(slide_texts), modalities, {}


def _cell_text(cell: ET.Element, shared: list[str]) -> str:
    t = cell.get("t", "n")
    v = cell.find("s:v", NS)
    if t == "s" and v is not None and v.text is not None:
        i = int(v.text)
        return shared[i] if 0 <= i < len(shared) else ""
    if t == "inlineStr":
        return "".join(x.text or "" for x in cell.iter(f"{{{NS['s']}}}t"))
    return v.text if v is not None and v.text is not None else ""


def extract_xlsx(path: Path, mode: str, ctx, doc_id: str):
    """One section per sheet: '## Sheet: <name>' then ' | '-joined rows."""
    zf = _open_zip(path)
    wb = _parse_xml(_read_part(zf, "xl/workbook.xml", path), path, "xl/workbook.xml")
    rels = _rels_map(zf, "xl/_rels/workbook.xml.rels", "xl")

    shared: list[str] = []
    if "xl/sharedStrings.xml" in zf.namelist():
        sroot = _parse_xml(zf.read("xl/sharedStrings.xml"), path, "sharedStrings")
        for si in sroot.findall("s:si", NS):
            shared.append("".join(t.text or "" for t in si.iter(f"{{{NS['s']}}}t")))

    sections = []
    for sheet in wb.iter(f"{{{NS['s']}}}sheet"):
        name = sheet.get("name", "Sheet")
        rid = sheet.get(f"{{{NS['r']}}}id", "")
        member = rels.get(rid)
        if not member or member not in zf.namelist():
            continue
        ws = _parse_xml(zf.read(member), path, member)
        rows = []
        for row in ws.iter(f"{{{NS['s']}}}row"):
            cells = [ctx.escape(_cell_text(c, shared)) for c in row.findall("s:c", NS)]
            rows.append(" | ".join(cells))
        sections.append(f"## Sheet: {name}\n" + "\n".join(rows))
    if not sections:
        raise _malformed(path, "workbook has no readable sheets")
    return "\n\n".join(sections), [], {}
