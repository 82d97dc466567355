"""Cross-modal linking of tool names between an article and its workflow code.

Every strategy takes the two sets of (normalized) tool names of one workflow
and returns a :class:`LinkSet`.  Linking is many-to-many: nothing is pruned,
since one article tool may legitimately map to several code tools.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from toollink.errors import DataError, UsageError
from toollink.kb import AnyKB, normalize_name

ABSENT = "_"
HEADER = ("Article", "Executable code")
EXTENDED_HEADER = HEADER + ("Strategy",)
UNLINKED = "unlinked"


@dataclass(frozen=True)
class LinkRecord:
    """A link when both sides are set, otherwise an explicit unlinked record."""

    article_tool: str | None
    code_tool: str | None
    strategy: str = ""
    pivot: str | None = None

    def __post_init__(self):
        if self.article_tool is None and self.code_tool is None:
            raise ValueError("a link record needs at least one tool")

    @property
    def pair(self) -> tuple[str | None, str | None]:
        return (self.article_tool, self.code_tool)

    @property
    def is_link(self) -> bool:
        return self.article_tool is not None and self.code_tool is not None


def _sort_key(rec: LinkRecord):
    return (not rec.is_link, rec.article_tool or "", rec.code_tool or "")


def _merge_tags(*tags: str) -> str:
    out = []
    for tag in tags:
        for part in tag.split("+") if tag else ():
            if part not in out:
                out.append(part)
    return "+".join(out)


class LinkSet:
    """Records of one workflow, unique on the (article_tool, code_tool) pair.

    Order is kept as given so serialized files round-trip unchanged.  When a
    pair repeats, the strategy tags are merged and the first pivot is kept.
    """

    def __init__(self, workflow_id: str, records: Iterable[LinkRecord] = ()):
        self.workflow_id = workflow_id
        merged: dict[tuple, LinkRecord] = {}
        for rec in records:
            prev = merged.get(rec.pair)
            if prev is None:
                merged[rec.pair] = rec
            else:
                merged[rec.pair] = LinkRecord(
                    prev.article_tool, prev.code_tool, _merge_tags(prev.strategy, rec.strategy), prev.pivot or rec.pivot
                )
        self.records: tuple[LinkRecord, ...] = tuple(merged.values())

    def pairs(self) -> frozenset[tuple[str | None, str | None]]:
        return frozenset(r.pair for r in self.records)

    def links(self) -> list[LinkRecord]:
        return [r for r in self.records if r.is_link]

    def unlinked(self) -> list[LinkRecord]:
        return [r for r in self.records if not r.is_link]

    def tool_sets(self, unify_separators: bool = False) -> tuple[set[str], set[str]]:
        """Normalized article-side and code-side tool names mentioned by any record."""
        article = {normalize_name(r.article_tool, unify_separators) for r in self.records if r.article_tool is not None}
        code = {normalize_name(r.code_tool, unify_separators) for r in self.records if r.code_tool is not None}
        return article, code

    def sorted(self) -> "LinkSet":
        return LinkSet(self.workflow_id, sorted(self.records, key=_sort_key))

    def __iter__(self) -> Iterator[LinkRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinkSet):
            return NotImplemented
        return self.workflow_id == other.workflow_id and self.records == other.records

    def __repr__(self) -> str:
        return f"LinkSet({self.workflow_id!r}, {len(self.links())} links, {len(self.unlinked())} unlinked)"


# -- string strategies ------------------------------------------------------------


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insertions, deletions, substitutions)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _pairs_to_linkset(workflow_id, pairs, strategy, pivots=None) -> LinkSet:
    pivots = pivots or {}
    return LinkSet(workflow_id, [LinkRecord(a, c, strategy, pivots.get((a, c))) for a, c in sorted(pairs)])


def link_exact(article_tools: Iterable[str], code_tools: Iterable[str], workflow_id: str = "") -> LinkSet:
    common = set(article_tools) & set(code_tools)
    return _pairs_to_linkset(workflow_id, ((t, t) for t in common), "exact")


def link_levenshtein(article_tools: Iterable[str], code_tools: Iterable[str], n: int, workflow_id: str = "") -> LinkSet:
    """Link every pair within edit distance ``n``."""
    if n < 0:
        raise UsageError(f"levenshtein threshold must be >= 0, got {n}")
    code_tools = set(code_tools)
    pairs = [
        (a, c)
        for a in set(article_tools)
        for c in code_tools
        if abs(len(a) - len(c)) <= n and levenshtein(a, c) <= n
    ]
    return _pairs_to_linkset(workflow_id, pairs, f"levenshtein{n}")


def affix_match(a: str, b: str, min_overlap: int = 3) -> bool:
    """True when the shorter name is a prefix or a suffix of the longer one and has at least ``min_overlap`` characters."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    return len(short) >= min_overlap and (long_.startswith(short) or long_.endswith(short))


def link_prefix_suffix(
    article_tools: Iterable[str], code_tools: Iterable[str], min_overlap: int = 3, workflow_id: str = ""
) -> LinkSet:
    if min_overlap < 1:
        raise UsageError(f"min_overlap must be >= 1, got {min_overlap}")
    code_tools = set(code_tools)
    pairs = [(a, c) for a in set(article_tools) for c in code_tools if affix_match(a, c, min_overlap)]
    return _pairs_to_linkset(workflow_id, pairs, f"prefix_suffix{min_overlap}")


def kb_tag(kb: AnyKB) -> str:
    sources = getattr(kb, "sources", None) or (kb.source,)
    return "kb_bridge(" + ",".join(sources) + ")"


def link_kb_bridge(
    article_tools: Iterable[str], code_tools: Iterable[str], kb: AnyKB, workflow_id: str = ""
) -> LinkSet:
    """Link names that resolve to a common registry entry (or fusion group).

    The smallest shared id is recorded as the pivot.  Names unknown to the
    registry produce no links.
    """
    article_ids = {a: kb.lookup(a) for a in set(article_tools)}
    code_ids = {c: kb.lookup(c) for c in set(code_tools)}
    by_id: dict[str, list[str]] = {}
    for c, ids in code_ids.items():
        for i in ids:
            by_id.setdefault(i, []).append(c)
    pivots: dict[tuple[str, str], str] = {}
    for a, ids in article_ids.items():
        for i in ids:
            for c in by_id.get(i, ()):
                key = (a, c)
                if key not in pivots or i < pivots[key]:
                    pivots[key] = i
    return _pairs_to_linkset(workflow_id, pivots.keys(), kb_tag(kb), pivots)


def combine(link_sets: Iterable[LinkSet]) -> LinkSet:
    """Union of several link sets of the same workflow, sorted canonically."""
    link_sets = list(link_sets)
    if not link_sets:
        raise UsageError("combine needs at least one link set")
    workflows = {ls.workflow_id for ls in link_sets}
    if len(workflows) > 1:
        raise UsageError(f"cannot combine link sets of different workflows: {sorted(workflows)}")
    merged = LinkSet(link_sets[0].workflow_id, (r for ls in link_sets for r in ls))
    return merged.sorted()


def complete_unlinked(links: LinkSet, article_tools: Iterable[str], code_tools: Iterable[str]) -> LinkSet:
    """Add an unlinked record for every tool that takes part in no link.

    Pre-existing unlinked records of tools that do have a link are dropped, so
    each tool ends up either linked or explicitly unlinked, never both.
    """
    kept = links.links()
    linked_a = {r.article_tool for r in kept}
    linked_c = {r.code_tool for r in kept}
    lone_a = set(article_tools) | {r.article_tool for r in links.unlinked() if r.article_tool is not None}
    lone_c = set(code_tools) | {r.code_tool for r in links.unlinked() if r.code_tool is not None}
    extra = [LinkRecord(a, None, UNLINKED) for a in sorted(lone_a - linked_a)]
    extra += [LinkRecord(None, c, UNLINKED) for c in sorted(lone_c - linked_c)]
    previous = {r.pair: r for r in links.unlinked()}
    extra = [previous.get(r.pair, r) for r in extra]
    return LinkSet(links.workflow_id, kept + extra)


# -- TSV ------------------------------------------------------------------------


def write_links_tsv(links: LinkSet, extended: bool = False) -> str:
    """Two columns (article, code) with ``_`` for a missing side; ``extended`` adds the strategy."""
    lines = ["\t".join(EXTENDED_HEADER if extended else HEADER)]
    for r in links:
        for name in (r.article_tool, r.code_tool):
            if name is not None and (name == ABSENT or name != name.strip() or any(c in name for c in "\t\r\n")):
                raise DataError(f"{links.workflow_id}: tool name {name!r} cannot be written to a links file")
        row = [r.article_tool if r.article_tool is not None else ABSENT, r.code_tool if r.code_tool is not None else ABSENT]
        if extended:
            row.append(r.strategy or ABSENT)
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def read_links_tsv(content: str, workflow_id: str, default_strategy: str = "gold") -> LinkSet:
    """Parse the two- or three-column layout; names are kept exactly as written."""
    records = []
    lines = content.split("\n")
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        cols = line.split("\t")
        if lineno == 1 and cols[0].strip().lower() == HEADER[0].lower():
            continue
        if len(cols) not in (2, 3):
            raise DataError(f"{workflow_id}: line {lineno}: expected 2 or 3 tab-separated columns, got {len(cols)}")
        a, c = (None if x.strip() == ABSENT else x.strip() for x in cols[:2])
        if a is None and c is None:
            raise DataError(f"{workflow_id}: line {lineno}: both sides are '{ABSENT}'")
        if (a is not None and not a) or (c is not None and not c):
            raise DataError(f"{workflow_id}: line {lineno}: empty tool name")
        strategy = cols[2].strip() if len(cols) == 3 and cols[2].strip() != ABSENT else default_strategy
        records.append(LinkRecord(a, c, strategy))
    return LinkSet(workflow_id, records)


def read_links_dir(path) -> dict[str, LinkSet]:
    """Every ``<workflow_id>.tsv`` in a directory (or a single file)."""
    path = Path(path)
    files = [path] if path.is_file() else sorted(path.glob("*.tsv"))
    out = {}
    for f in files:
        with open(f, encoding="utf-8", newline="") as fh:
            out[f.stem] = read_links_tsv(fh.read(), f.stem)
    return out


def write_links_dir(path, link_sets: dict[str, LinkSet], extended: bool = False) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for wf in sorted(link_sets):
        with open(path / f"{wf}.tsv", "w", encoding="utf-8", newline="") as fh:
            fh.write(write_links_tsv(link_sets[wf], extended=extended))
