"""Tool registries: canonical snapshots, alias indexes and cross-registry fusion.

A snapshot is a line-delimited JSON file, one tool per line::

    {"id": "rsem", "name": "rsem", "aliases": ["rsem", "rsem-prepare-reference"], "source": "bioconda"}

and may be accompanied by a ``<stem>.manifest.json`` recording the source tag,
the retrieval date and the record count.  Raw registry dumps are converted to
this shape upstream; nothing here talks to the network.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Union

from toollink.errors import DuplicateEntryError, KBParseError, UsageError
from toollink.unionfind import UnionFind

KNOWN_SOURCES = frozenset({"bioconda", "biotools", "biocontainers", "bioweb"})
FUSION_SOURCE = "fusion"

_WS_RUN = re.compile(r"\s+")


def normalize_name(raw: str, unify_separators: bool = False) -> str:
    """Canonical form used for every name comparison.

    NFC composition, lowercase, trimmed, whitespace runs collapsed to one
    space.  Hyphens and underscores stay distinct unless ``unify_separators``
    is set, in which case underscores become hyphens.

    >>> normalize_name("  RSEM\\t")
    'rsem'
    >>> normalize_name("BAsic  Rapid\\nRibosomal")
    'basic rapid ribosomal'
    """
    s = unicodedata.normalize("NFC", raw)
    s = unicodedata.normalize("NFC", s.lower())
    s = _WS_RUN.sub(" ", s).strip()
    if unify_separators:
        s = s.replace("_", "-")
    return s


@dataclass(frozen=True)
class ToolEntry:
    """One registry record.

    ``aliases`` always contains ``primary_name``; aliases that collapse to the
    same normalized form are kept once (first spelling wins).
    """

    entry_id: str
    source: str
    primary_name: str
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.entry_id:
            raise ValueError("entry_id must be non-empty")
        if not self.primary_name.strip():
            raise ValueError(f"entry {self.entry_id!r}: empty primary name")
        seen = set()
        kept = []
        for alias in (self.primary_name, *self.aliases):
            if not isinstance(alias, str) or not alias.strip():
                raise ValueError(f"entry {self.entry_id!r}: empty alias")
            key = normalize_name(alias)
            if key not in seen:
                seen.add(key)
                kept.append(alias)
        object.__setattr__(self, "aliases", tuple(kept))

    def normalized_aliases(self, unify_separators: bool = False) -> frozenset[str]:
        return frozenset(normalize_name(a, unify_separators) for a in self.aliases)


def _freeze_index(index: Mapping[str, set]) -> Mapping[str, frozenset]:
    return MappingProxyType({k: frozenset(v) for k, v in index.items()})


class KnowledgeBase:
    """An immutable set of :class:`ToolEntry` objects from one registry plus an alias index."""

    def __init__(self, source: str, entries: Iterable[ToolEntry] = (), unify_separators: bool = False):
        self.source = source
        self.unify_separators = unify_separators
        by_id: dict[str, ToolEntry] = {}
        index: dict[str, set] = {}
        for entry in entries:
            if entry.entry_id in by_id:
                raise DuplicateEntryError(f"duplicate entry id {entry.entry_id!r}")
            by_id[entry.entry_id] = entry
            for alias in entry.normalized_aliases(unify_separators):
                index.setdefault(alias, set()).add(entry.entry_id)
        self._entries = MappingProxyType(by_id)
        self.alias_index = _freeze_index(index)

    @property
    def entries(self) -> Mapping[str, ToolEntry]:
        return self._entries

    def lookup(self, name: str) -> frozenset[str]:
        return self.alias_index.get(normalize_name(name, self.unify_separators), frozenset())

    def normalize(self, name: str) -> str:
        return normalize_name(name, self.unify_separators)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[ToolEntry]:
        return iter(self._entries.values())

    def __contains__(self, entry_id) -> bool:
        return entry_id in self._entries

    def __repr__(self) -> str:
        return f"KnowledgeBase(source={self.source!r}, entries={len(self)}, aliases={len(self.alias_index)})"


@dataclass(frozen=True)
class FusionGroup:
    group_id: str
    member_entry_ids: frozenset[tuple[str, str]]
    alias_union: frozenset[str] = field(default_factory=frozenset)


class FusedKnowledgeBase:
    """Entries of several registries merged into groups connected by shared aliases.

    ``lookup`` returns group ids instead of entry ids.
    """

    source = FUSION_SOURCE

    def __init__(self, groups: Iterable[FusionGroup], sources: Iterable[str] = (), unify_separators: bool = False):
        self.unify_separators = unify_separators
        self.sources = tuple(sorted(set(sources)))
        by_id: dict[str, FusionGroup] = {}
        index: dict[str, set] = {}
        for group in groups:
            if group.group_id in by_id:
                raise DuplicateEntryError(f"duplicate group id {group.group_id!r}")
            by_id[group.group_id] = group
            for alias in group.alias_union:
                index.setdefault(alias, set()).add(group.group_id)
        self.groups = MappingProxyType(dict(sorted(by_id.items())))
        self.alias_index = _freeze_index(index)

    def lookup(self, name: str) -> frozenset[str]:
        return self.alias_index.get(normalize_name(name, self.unify_separators), frozenset())

    def normalize(self, name: str) -> str:
        return normalize_name(name, self.unify_separators)

    def partition(self) -> set[frozenset[tuple[str, str]]]:
        """Groups as a set of member sets; handy for order-insensitive comparison."""
        return {g.member_entry_ids for g in self.groups.values()}

    def __len__(self) -> int:
        return len(self.groups)

    def __repr__(self) -> str:
        return f"FusedKnowledgeBase(sources={self.sources}, groups={len(self)}, aliases={len(self.alias_index)})"


AnyKB = Union[KnowledgeBase, FusedKnowledgeBase]


def lookup(kb: AnyKB, name: str) -> frozenset[str]:
    """Ids of every entry (or fusion group) that has ``name`` among its aliases."""
    return kb.lookup(name)


def fuse(kbs: Iterable[KnowledgeBase]) -> FusedKnowledgeBase:
    """Merge registries by transitive grouping of shared normalized aliases.

    Every entry ends up in exactly one group; two entries sharing an alias,
    directly or through a chain of entries, end up in the same group.  Group
    ids are derived from the smallest member so the result does not depend
    on input order.
    """
    kbs = list(kbs)
    if not kbs:
        raise UsageError("fuse needs at least one knowledge base")
    flags = {kb.unify_separators for kb in kbs}
    if len(flags) > 1:
        raise UsageError("cannot fuse knowledge bases built with different separator settings")
    unify = flags.pop()

    uf = UnionFind()
    first_owner: dict[str, tuple[str, str]] = {}
    aliases_of: dict[tuple[str, str], set] = {}
    for kb in kbs:
        for entry in kb:
            node = (kb.source, entry.entry_id)
            uf.add(node)
            names = aliases_of.setdefault(node, set())
            for alias in entry.normalized_aliases(unify):
                names.add(alias)
                if alias in first_owner:
                    uf.union(first_owner[alias], node)
                else:
                    first_owner[alias] = node

    groups = []
    for members in uf.groups():
        group_id = "{}:{}".format(*min(members))
        alias_union = frozenset().union(*(aliases_of[m] for m in members))
        groups.append(FusionGroup(group_id, frozenset(members), alias_union))
    return FusedKnowledgeBase(groups, sources=(kb.source for kb in kbs), unify_separators=unify)


# -- snapshot I/O -------------------------------------------------------------


def load_kb_snapshot(
    stream: Iterable[str],
    source: str,
    *,
    known_sources: Iterable[str] = KNOWN_SOURCES,
    unify_separators: bool = False,
    path=None,
) -> KnowledgeBase:
    """Read canonical records (one JSON object per line) into a :class:`KnowledgeBase`.

    Errors carry the 1-based line number of the offending record.
    """
    if source not in set(known_sources):
        raise UsageError(f"unknown knowledge-base source {source!r}; expected one of {sorted(known_sources)}")
    entries: dict[str, ToolEntry] = {}
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise KBParseError(f"invalid JSON ({exc.msg})", lineno, path) from None
        if not isinstance(record, dict):
            raise KBParseError("record is not an object", lineno, path)
        entry_id = record.get("id")
        name = record.get("name")
        aliases = record.get("aliases")
        if not isinstance(entry_id, str) or not entry_id:
            raise KBParseError("missing or empty 'id'", lineno, path)
        if not isinstance(name, str) or not name.strip():
            raise KBParseError(f"record {entry_id!r}: missing or empty 'name'", lineno, path)
        if not isinstance(aliases, list) or not aliases:
            raise KBParseError(f"record {entry_id!r}: 'aliases' must be a non-empty list", lineno, path)
        if any(not isinstance(a, str) or not a.strip() for a in aliases):
            raise KBParseError(f"record {entry_id!r}: aliases must be non-empty strings", lineno, path)
        rec_source = record.get("source", source)
        if rec_source != source:
            raise KBParseError(f"record {entry_id!r}: source {rec_source!r} does not match {source!r}", lineno, path)
        if entry_id in entries:
            raise DuplicateEntryError(f"duplicate entry id {entry_id!r}", lineno, path)
        entries[entry_id] = ToolEntry(entry_id, source, name, tuple(aliases))
    return KnowledgeBase(source, entries.values(), unify_separators=unify_separators)


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def read_manifest(path) -> dict | None:
    mpath = manifest_path(path)
    if not mpath.exists():
        return None
    with open(mpath, encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def load_kb_file(path, source: str | None = None, *, known_sources=KNOWN_SOURCES, unify_separators=None) -> AnyKB:
    """Load a snapshot or a fused index from disk, guided by its manifest when present."""
    path = Path(path)
    manifest = read_manifest(path) or {}
    if manifest.get("kind") == "fusion":
        return load_fused(path)
    source = source or manifest.get("source")
    if source is None:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    try:
                        source = json.loads(line).get("source")
                    except (json.JSONDecodeError, AttributeError):
                        pass
                    break
    if source is None:
        raise KBParseError("cannot determine the source tag (no manifest and no 'source' field)", path=path)
    if unify_separators is None:
        unify_separators = bool(manifest.get("unify_separators", False))
    with open(path, encoding="utf-8") as fh:
        kb = load_kb_snapshot(fh, source, known_sources=known_sources, unify_separators=unify_separators, path=path)
    expected = manifest.get("record_count")
    if expected is not None and expected != len(kb):
        raise KBParseError(f"manifest declares {expected} records but file holds {len(kb)}", path=path)
    return kb


def dump_kb(kb: KnowledgeBase, path, retrieval_date: str | None = None) -> dict:
    """Write ``kb`` in canonical form (sorted by id) and its manifest; return the manifest."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for entry_id in sorted(kb.entries):
            e = kb.entries[entry_id]
            rec = {"id": e.entry_id, "name": e.primary_name, "aliases": list(e.aliases), "source": e.source}
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    manifest = {
        "kind": "snapshot",
        "source": kb.source,
        "retrieval_date": retrieval_date,
        "record_count": len(kb),
        "alias_count": len(kb.alias_index),
        "unify_separators": kb.unify_separators,
    }
    _write_json(manifest_path(path), manifest)
    return manifest


def dump_fused(fkb: FusedKnowledgeBase, path) -> dict:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for group in fkb.groups.values():
            rec = {
                "group_id": group.group_id,
                "members": sorted(list(m) for m in group.member_entry_ids),
                "aliases": sorted(group.alias_union),
            }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    manifest = {
        "kind": "fusion",
        "source": FUSION_SOURCE,
        "sources": list(fkb.sources),
        "group_count": len(fkb),
        "entry_count": sum(len(g.member_entry_ids) for g in fkb.groups.values()),
        "alias_count": len(fkb.alias_index),
        "unify_separators": fkb.unify_separators,
    }
    _write_json(manifest_path(path), manifest)
    return manifest


def load_fused(path) -> FusedKnowledgeBase:
    path = Path(path)
    manifest = read_manifest(path) or {}
    groups = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                members = frozenset((str(s), str(i)) for s, i in rec["members"])
                groups.append(FusionGroup(rec["group_id"], members, frozenset(rec["aliases"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise KBParseError(f"malformed fusion group ({exc})", lineno, path) from None
    return FusedKnowledgeBase(
        groups, sources=manifest.get("sources", ()), unify_separators=bool(manifest.get("unify_separators", False))
    )
