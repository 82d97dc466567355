"""BRAT standoff reading and writing (text-bound ``T`` annotations only).

Offsets are code-point offsets into the ``.txt`` file, which therefore has to
be read without newline translation; use :func:`read_text_exact`.
"""

from __future__ import annotations

import re

from toollink.corpus.documents import AnnotatedDocument, Mention
from toollink.errors import BratParseError, IntegrityError

_SPAN = re.compile(r"^(\S+) (\d+) (\d+)$")
_NEWLINES = str.maketrans({"\n": " ", "\r": " "})


def read_text_exact(path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def write_text_exact(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def parse_brat(text_content: str, ann_content: str, doc_id: str, modality: str, workflow_id: str = "") -> AnnotatedDocument:
    mentions = []
    seen = set()
    for lineno, line in enumerate(ann_content.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip() or not line.startswith("T"):
            continue
        parts = line.split("\t")
        if len(parts) < 3:
            raise BratParseError(f"{doc_id}: line {lineno}: malformed T-line {line!r}")
        ann_id, span, surface = parts[0], parts[1], "\t".join(parts[2:])
        if ";" in span:
            raise BratParseError(f"{doc_id}: line {lineno}: discontinuous span in {ann_id} is not supported")
        m = _SPAN.match(span)
        if m is None:
            raise BratParseError(f"{doc_id}: line {lineno}: malformed span {span!r} in {ann_id}")
        label, start, end = m.group(1), int(m.group(2)), int(m.group(3))
        if not 0 <= start < end <= len(text_content):
            raise BratParseError(
                f"{doc_id}: line {lineno}: offsets {start}-{end} of {ann_id} out of range (text length {len(text_content)})"
            )
        if ann_id in seen:
            raise BratParseError(f"{doc_id}: line {lineno}: duplicate annotation id {ann_id}")
        seen.add(ann_id)
        actual = text_content[start:end]
        if actual.translate(_NEWLINES) != surface.translate(_NEWLINES):
            raise IntegrityError(f"{doc_id}: annotation {ann_id} says {surface!r} but text has {actual!r}")
        mentions.append(Mention(ann_id, label, start, end, actual, doc_id))
    return AnnotatedDocument(doc_id, modality, workflow_id, text_content, tuple(mentions))


def write_brat(doc: AnnotatedDocument) -> str:
    ordered = sorted(doc.mentions, key=lambda m: (m.start, m.end, m.label))
    return "".join(
        f"T{i}\t{m.label} {m.start} {m.end}\t{m.surface.translate(_NEWLINES)}\n" for i, m in enumerate(ordered, start=1)
    )
