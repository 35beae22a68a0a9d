"""Shared fixture builders: minimal OOXML containers, PDFs, emails."""

from __future__ import annotations

import io
import zipfile
from email.message import EmailMessage
from pathlib import Path

import pytest

CONTENT_TYPES_DOCX = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">
<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>
<Default Extension="xml" ContentType="application/xml"/>
<Default Extension="png" ContentType="image/png"/>
<Override PartName="/word/document.xml" ContentType="application/vnd.openxmlformats-officedocument.wordprocessingml.document.main+xml"/>
</Types>"""

W = "http://schemas.openxmlformats.org/wordprocessingml/2006/main"
A = "http://schemas.openxmlformats.org/drawingml/2006/main"
R = "http://schemas.openxmlformats.org/officeDocument/2006/relationships"
S = "http://schemas.openxmlformats.org/spreadsheetml/2006/main"
P = "http://schemas.openxmlformats.org/presentationml/2006/main"
REL = "http://schemas.openxmlformats.org/package/2006/relationships"


def tiny_png() -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.new("RGB", (4, 4), (200, 30, 30)).save(buf, "PNG")
    return buf.getvalue()


def tiny_jpeg(size=(8, 8), color=(40, 90, 200)) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, "JPEG")
    return buf.getvalue()


def make_docx(path: Path, paragraphs: list[str], n_images: int = 0) -> Path:
    """Paragraphs of text; each image is appended as its own paragraph."""
    body = []
    for text in paragraphs:
        body.append(f'<w:p><w:r><w:t xml:space="preserve">{text}</w:t></w:r></w:p>')
    rels = []
    for i in range(n_images):
        rid = f"rIdImg{i}"
        body.append(
            f'<w:p><w:r><w:drawing><a:blip xmlns:a="{A}" xmlns:r="{R}" r:embed="{rid}"/>'
            f"</w:drawing></w:r></w:p>"
        )
        rels.append(f'<Relationship Id="{rid}" Type="{R}/image" Target="media/image{i}.png"/>')
    document = (
        f'<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        f'<w:document xmlns:w="{W}"><w:body>{"".join(body)}</w:body></w:document>'
    )
    rels_xml = f'<?xml version="1.0"?><Relationships xmlns="{REL}">{"".join(rels)}</Relationships>'
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("[Content_Types].xml", CONTENT_TYPES_DOCX)
        zf.writestr("word/document.xml", document)
        zf.writestr("word/_rels/document.xml.rels", rels_xml)
        for i in range(n_images):
            zf.writestr(f"word/media/image{i}.png", tiny_png())
    return path


def make_pptx(path: Path, slides: list[list[str]], images_on_slide: dict[int, int] | None = None) -> Path:
    """Each slide is a list of paragraph strings; optional images per slide."""
    images_on_slide = images_on_slide or {}
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("[Content_Types].xml", CONTENT_TYPES_DOCX)
        for n, paras in enumerate(slides, start=1):
            txt = "".join(
                f'<a:p><a:r><a:t>{p}</a:t></a:r></a:p>' for p in paras
            )
            pics, rels = [], []
            for i in range(images_on_slide.get(n, 0)):
                rid = f"rIdPic{i}"
                pics.append(
                    f'<p:pic><p:blipFill><a:blip r:embed="{rid}"/></p:blipFill></p:pic>'
                )
                rels.append(
                    f'<Relationship Id="{rid}" Type="{R}/image" Target="../media/img{n}_{i}.png"/>'
                )
                zf.writestr(f"ppt/media/img{n}_{i}.png", tiny_png())
            slide = (
                f'<?xml version="1.0"?><p:sld xmlns:p="{P}" xmlns:a="{A}" xmlns:r="{R}">'
                f"<p:cSld><p:spTree><p:sp><p:txBody>{txt}</p:txBody></p:sp>"
                f'{"".join(pics)}</p:spTree></p:cSld></p:sld>'
            )
            zf.writestr(f"ppt/slides/slide{n}.xml", slide)
            if rels:
                zf.writestr(
                    f"ppt/slides/_rels/slide{n}.xml.rels",
                    f'<?xml version="1.0"?><Relationships xmlns="{REL}">{"".join(rels)}</Relationships>',
                )
    return path


def make_xlsx(path: Path, sheets: dict[str, list[list[str]]]) -> Path:
    shared: list[str] = []
    sheet_xml = {}
    for idx, (name, rows) in enumerate(sheets.items(), start=1):
        row_parts = []
        for rn, row in enumerate(rows, start=1):
            cells = []
            for cn, value in enumerate(row):
                ref = f"{chr(65 + cn)}{rn}"
                if isinstance(value, (int, float)):
                    cells.append(f'<c r="{ref}"><v>{value}</v></c>')
                else:
                    shared.append(str(value))
                    cells.append(f'<c r="{ref}" t="s"><v>{len(shared) - 1}</v></c>')
            row_parts.append(f'<row r="{rn}">{"".join(cells)}</row>')
        sheet_xml[idx] = (
            f'<?xml version="1.0"?><worksheet xmlns="{S}">'
            f'<sheetData>{"".join(row_parts)}</sheetData></worksheet>'
        )
    sheets_decl = "".join(
        f'<sheet name="{name}" sheetId="{i}" r:id="rId{i}"/>'
        for i, name in enumerate(sheets, start=1)
    )
    workbook = (
        f'<?xml version="1.0"?><workbook xmlns="{S}" xmlns:r="{R}">'
        f"<sheets>{sheets_decl}</sheets></workbook>"
    )
    rels = "".join(
        f'<Relationship Id="rId{i}" Type="{R}/worksheet" Target="worksheets/sheet{i}.xml"/>'
        for i in range(1, len(sheets) + 1)
    )
    sst = (
        f'<?xml version="1.0"?><sst xmlns="{S}" count="{len(shared)}" uniqueCount="{len(shared)}">'
        + "".join(f"<si><t>{s}</t></si>" for s in shared)
        + "</sst>"
    )
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("[Content_Types].xml", CONTENT_TYPES_DOCX)
        zf.writestr("xl/workbook.xml", workbook)
        zf.writestr("xl/_rels/workbook.xml.rels",
                    f'<?xml version="1.0"?><Relationships xmlns="{REL}">{rels}</Relationships>')
        zf.writestr("xl/sharedStrings.xml", sst)
        for i, xml in sheet_xml.items():
            zf.writestr(f"xl/worksheets/sheet{i}.xml", xml)
    return path


def make_eml(path: Path, subject="Test", body="Hello from the message body.",
             n_images: int = 0) -> Path:
    msg = EmailMessage()
    msg["Subject"] = subject
    msg["From"] = "alice@example.org"
    msg["To"] = "bob@example.org"
    msg["Date"] = "Tue, 01 Jul 2025 10:00:00 +0000"
    msg.set_content(body)
    for i in range(n_images):
        msg.add_attachment(
            tiny_png(), maintype="image", subtype="png", filename=f"pic{i}.png"
        )
    path.write_bytes(msg.as_bytes())
    return path


def make_pdf(path: Path, lines: list[str], n_pages: int = 1) -> Path:
    """Digitally-typeset PDF: the same text lines drawn on each page."""
    from reportlab.lib.pagesizes import letter
    from reportlab.pdfgen import canvas

    c = canvas.Canvas(str(path), pagesize=letter)
    for _ in range(n_pages):
        y = 750
        for line in lines:
            c.drawString(72, y, line)
            y -= 14
        c.showPage()
    c.save()
    return path


def make_image_pdf(path: Path, n_pages: int = 1) -> Path:
    """Image-only PDF (no text layer), like a scanned document."""
    from reportlab.lib.pagesizes import letter
    from reportlab.lib.utils import ImageReader
    from reportlab.pdfgen import canvas
    from PIL import Image

    img = Image.open(io.BytesIO(tiny_jpeg(size=(64, 64))))
    c = canvas.Canvas(str(path), pagesize=letter)
    for _ in range(n_pages):
        c.drawImage(ImageReader(img), 72, 400, width=200, height=200)
        c.showPage()
    c.save()
    return path


@pytest.fixture
def assets_ctx(tmp_path):
    from omnirag.extract import ExtractionContext

    return ExtractionContext(assets_dir=tmp_path / "assets")


def build_fixture_corpus(root: Path) -> list[Path]:
    """One file per text-bearing kind plus an extra txt, ten files total."""
    files = [
        make_pdf(root / "book.pdf", ["The quick brown fox jumps over the dog.",
                                     "A second line of searchable text."]),
        make_docx(root / "report.docx", ["Quarterly report body text.", "More details follow here."]),
        make_pptx(root / "deck.pptx", [["Title slide"], ["Closing remarks slide"]]),
        make_xlsx(root / "table.xlsx", {"Sheet1": [["a", "b"], ["c", "d"]]}),
        make_eml(root / "mail.eml", body="Meeting moved to Thursday afternoon."),
    ]
    (root / "notes.txt").write_text("Plain text notes about the project schedule.")
    files.append(root / "notes.txt")
    (root / "readme.md").write_text("# Overview\n\nInstall the tool and run it.")
    files.append(root / "readme.md")
    (root / "page.html").write_text("<html><body><p>Welcome to the <b>site</b></p></body></html>")
    files.append(root / "page.html")
    (root / "data.csv").write_text("name,score\nalice,10\nbob,12\n")
    files.append(root / "data.csv")
    (root / "extra.txt").write_text("An extra plain file to round out ten fixtures.")
    files.append(root / "extra.txt")
    return files
