"""Corpus manifests: tab-separated tables that tie documents to workflows.

A corpus manifest has the header ``doc_id workflow_id modality txt ann`` and
optionally ``source offset status``.  Paths are relative to the manifest.
Rows whose status is not ``ok`` describe documents that extraction skipped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from toollink.corpus.brat import parse_brat, read_text_exact
from toollink.corpus.documents import MODALITIES, AnnotatedDocument
from toollink.errors import DataError

REQUIRED_COLUMNS = ("doc_id", "workflow_id", "modality", "txt", "ann")
COLUMNS = REQUIRED_COLUMNS + ("source", "offset", "status")


@dataclass(frozen=True)
class ManifestRow:
    doc_id: str
    workflow_id: str
    modality: str
    txt: str
    ann: str = ""
    source: str = ""
    offset: str = ""
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class CorpusManifest:
    path: Path
    rows: tuple[ManifestRow, ...]

    @property
    def root(self) -> Path:
        return self.path.parent

    def resolve(self, rel: str) -> Path:
        return self.root / rel

    def documents(self) -> list[ManifestRow]:
        return [r for r in self.rows if r.ok]

    def workflows(self) -> list[str]:
        return sorted({r.workflow_id for r in self.documents()})


def read_corpus_manifest(path) -> CorpusManifest:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"{path}: manifest lacks columns {missing}")
        rows = []
        seen = set()
        for lineno, rec in enumerate(reader, start=2):
            fields = {k: rec.get(k) or "" for k in COLUMNS}
            fields["status"] = fields["status"] or "ok"
            row = ManifestRow(**fields)
            if not row.doc_id:
                raise DataError(f"{path}: line {lineno}: empty doc_id")
            if row.doc_id in seen:
                raise DataError(f"{path}: line {lineno}: duplicate doc_id {row.doc_id!r}")
            if row.modality not in MODALITIES:
                raise DataError(f"{path}: line {lineno}: modality must be one of {MODALITIES}")
            seen.add(row.doc_id)
            rows.append(row)
    return CorpusManifest(path, tuple(rows))


def write_corpus_manifest(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in rows:
            writer.writerow([getattr(r, c) for c in COLUMNS])


def load_documents(manifest: CorpusManifest, with_annotations: bool = True) -> list[AnnotatedDocument]:
    """Read every usable document; gold annotations are attached when ``with_annotations``."""
    docs = []
    for row in manifest.documents():
        text = read_text_exact(manifest.resolve(row.txt))
        ann = ""
        if with_annotations and row.ann:
            ann = read_text_exact(manifest.resolve(row.ann))
        docs.append(parse_brat(text, ann, row.doc_id, row.modality, row.workflow_id))
    return docs


def read_sources_manifest(path) -> list[dict]:
    """Raw inputs for extraction: columns ``workflow_id kind path`` with kind article|code."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = [c for c in ("workflow_id", "kind", "path") if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"{path}: sources manifest lacks columns {missing}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if rec["kind"] not in MODALITIES:
                raise DataError(f"{path}: line {lineno}: kind must be one of {MODALITIES}")
            rows.append({"workflow_id": rec["workflow_id"], "kind": rec["kind"], "path": path.parent / rec["path"], "rel": rec["path"]})
    return rows
