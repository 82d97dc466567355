"""Document and mention types shared by the corpus, NER and evaluation code."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

from toollink.errors import DataError, UsageError
from toollink.kb import normalize_name

MODALITIES = ("article", "code")
TOOL_LABEL = "Tool"


@dataclass(frozen=True)
class Mention:
    mention_id: str
    label: str
    start: int
    end: int
    surface: str
    doc_id: str

    @property
    def span_key(self) -> tuple[str, int, int, str]:
        return (self.doc_id, self.start, self.end, self.label)


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    modality: str
    workflow_id: str
    text: str
    mentions: tuple[Mention, ...] = field(default=())

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise UsageError(f"document {self.doc_id!r}: modality must be one of {MODALITIES}, got {self.modality!r}")
        object.__setattr__(self, "mentions", tuple(self.mentions))
        ids = set()
        for m in self.mentions:
            if not (0 <= m.start < m.end <= len(self.text)):
                raise DataError(f"document {self.doc_id!r}: mention {m.mention_id} offsets {m.start}-{m.end} out of range")
            if self.text[m.start:m.end] != m.surface:
                raise DataError(f"document {self.doc_id!r}: mention {m.mention_id} surface does not match text")
            if m.mention_id in ids:
                raise DataError(f"document {self.doc_id!r}: duplicate mention id {m.mention_id}")
            ids.add(m.mention_id)

    def with_mentions(self, mentions: Iterable[Mention]) -> "AnnotatedDocument":
        return replace(self, mentions=tuple(mentions))


@dataclass(frozen=True)
class ProcessBlock:
    """A ``process NAME { ... }`` declaration.

    ``body`` is the text between the outer braces and starts at ``body_start``
    in the source file.  ``script`` holds the ``script:``/``shell:``/``exec:``
    stanza when the body has one.
    """

    process_name: str
    body: str
    source_path: str
    body_start: int
    script: str | None = None
    script_start: int | None = None

    @property
    def body_end(self) -> int:
        return self.body_start + len(self.body)


def unique_tool_names(docs: Iterable[AnnotatedDocument], modality: str, unify_separators: bool = False) -> set[str]:
    """Normalized surfaces of every mention in documents of ``modality``.

    All documents must belong to one workflow.
    """
    docs = list(docs)
    workflows = {d.workflow_id for d in docs}
    if len(workflows) > 1:
        raise UsageError(f"unique_tool_names expects one workflow, got {sorted(workflows)}")
    return {
        normalize_name(m.surface, unify_separators)
        for d in docs
        if d.modality == modality
        for m in d.mentions
    }
