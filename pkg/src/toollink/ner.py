"""Tool mention detection: dictionary matching against a registry, or imported predictions.

Matching semantics
------------------
The text is folded character by character (lowercase, optional ``_``→``-``)
and every whitespace run is collapsed to one space, so an alias such as
``"basic rapid ribosomal rna predictor"`` also matches the same words split
across a line break.  All alias occurrences are collected with an
Aho-Corasick automaton, filtered by the boundary rule, and then resolved:
longest span first, leftmost start on ties, dropping anything that overlaps
an already accepted span.  Aliases in the stoplist or shorter than
``min_match_length`` never become candidates, so they cannot shadow a
shorter valid match.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Union

from toollink.corpus.brat import parse_brat, read_text_exact
from toollink.corpus.documents import TOOL_LABEL, AnnotatedDocument, Mention
from toollink.corpus.manifest import CorpusManifest
from toollink.errors import DataError, UsageError
from toollink.kb import AnyKB, normalize_name

BOUNDARY_MODES = ("token_boundary", "substring")
OVERLAP_POLICIES = ("longest_leftmost",)


def load_stoplist(path) -> frozenset[str]:
    """One name per line; blank lines and ``#`` comments are ignored."""
    with open(path, encoding="utf-8") as fh:
        return _parse_stoplist(fh)


def default_stoplist() -> frozenset[str]:
    """The shipped list of short or generic aliases that mostly produce noise."""
    text = resources.files("toollink.data").joinpath("stoplist_short.txt").read_text(encoding="utf-8")
    return _parse_stoplist(text.splitlines())


def _parse_stoplist(lines: Iterable[str]) -> frozenset[str]:
    names = set()
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            names.add(normalize_name(line))
    return frozenset(names)


@dataclass(frozen=True)
class NerConfig:
    min_match_length: int = 2
    stoplist: frozenset[str] = field(default_factory=frozenset)
    boundary_mode: str = "token_boundary"
    overlap_policy: str = "longest_leftmost"

    def __post_init__(self):
        if not isinstance(self.min_match_length, int) or self.min_match_length < 1:
            raise UsageError(f"min_match_length must be an integer >= 1, got {self.min_match_length!r}")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise UsageError(f"boundary_mode must be one of {BOUNDARY_MODES}, got {self.boundary_mode!r}")
        if self.overlap_policy not in OVERLAP_POLICIES:
            raise UsageError(f"overlap_policy must be one of {OVERLAP_POLICIES}, got {self.overlap_policy!r}")
        object.__setattr__(self, "stoplist", frozenset(normalize_name(s) for s in self.stoplist))

    @classmethod
    def from_mapping(cls, section: Mapping, base_dir: Path | None = None) -> "NerConfig":
        """Build from a config-file section (``min_match_length``, ``stoplist``, ``boundary_mode``).

        ``stoplist`` is a path relative to ``base_dir``, or ``default`` for the shipped list.
        """
        kwargs = {}
        if "min_match_length" in section:
            kwargs["min_match_length"] = section["min_match_length"]
        if "boundary_mode" in section:
            kwargs["boundary_mode"] = section["boundary_mode"]
        stop = section.get("stoplist")
        if stop == "default":
            kwargs["stoplist"] = default_stoplist()
        elif stop:
            p = Path(stop)
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            kwargs["stoplist"] = load_stoplist(p)
        return cls(**kwargs)


# -- Aho-Corasick ---------------------------------------------------------------


class _Automaton:
    """Character automaton reporting every occurrence of every pattern as (end, length)."""

    def __init__(self, patterns: Iterable[str]):
        self.goto: list[dict[str, int]] = [{}]
        self.term: list[int] = [0]  # length of the pattern ending at this node, 0 if none
        for pat in patterns:
            node = 0
            for ch in pat:
                nxt = self.goto[node].get(ch)
                if nxt is None:
                    nxt = len(self.goto)
                    self.goto.append({})
                    self.term.append(0)
                    self.goto[node][ch] = nxt
                node = nxt
            self.term[node] = len(pat)
        self._link()

    def _link(self) -> None:
        n = len(self.goto)
        self.fail = [0] * n
        self.out = [0] * n  # nearest node on the failure chain (excluding self) that ends a pattern
        queue = list(self.goto[0].values())
        head = 0
        while head < len(queue):
            node = queue[head]
            head += 1
            for ch, child in self.goto[node].items():
                f = self.fail[node]
                while f and ch not in self.goto[f]:
                    f = self.fail[f]
                target = self.goto[f].get(ch, 0)
                self.fail[child] = target if target != child else 0
                fc = self.fail[child]
                self.out[child] = fc if self.term[fc] else self.out[fc]
                queue.append(child)

    def iter_matches(self, text: str):
        goto, fail, term, out = self.goto, self.fail, self.term, self.out
        node = 0
        for i, ch in enumerate(text):
            while node and ch not in goto[node]:
                node = fail[node]
            node = goto[node].get(ch, 0)
            hit = node if term[node] else out[node]
            while hit:
                yield i + 1, term[hit]
                hit = out[hit]


def fold_text(text: str, unify_separators: bool = False) -> tuple[str, list[int]]:
    """Lowercase ``text`` char by char and collapse whitespace runs to one space.

    Returns the folded string and, for each of its characters, the offset of
    the source character it came from.
    """
    chars = []
    origin = []
    in_space = False
    for i, c in enumerate(text):
        if c.isspace():
            if not in_space:
                chars.append(" ")
                origin.append(i)
                in_space = True
            continue
        in_space = False
        lc = c.lower()
        if len(lc) != 1:
            lc = c
        if unify_separators and lc == "_":
            lc = "-"
        chars.append(lc)
        origin.append(i)
    return "".join(chars), origin


def resolve_longest_leftmost(spans: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Non-overlapping subset of ``spans``: longest first, leftmost start breaks ties."""
    ordered = sorted(set(spans), key=lambda s: (s[0] - s[1], s[0]))
    starts: list[int] = []
    ends: list[int] = []
    for s, e in ordered:
        k = bisect.bisect_left(starts, s)
        if k > 0 and ends[k - 1] > s:
            continue
        if k < len(starts) and starts[k] < e:
            continue
        starts.insert(k, s)
        ends.insert(k, e)
    return list(zip(starts, ends))


class DictionaryMatcher:
    """Reusable matcher over the aliases of one registry (or fusion) under a :class:`NerConfig`."""

    def __init__(self, kb: AnyKB | Iterable[str], config: NerConfig | None = None):
        self.config = config or NerConfig()
        if hasattr(kb, "alias_index"):
            aliases = kb.alias_index.keys()
            self.unify_separators = kb.unify_separators
        else:
            self.unify_separators = False
            aliases = {normalize_name(a) for a in kb}
        cfg = self.config
        self.aliases = frozenset(
            a for a in aliases if a and len(a) >= cfg.min_match_length and a not in cfg.stoplist
        )
        self._automaton = _Automaton(sorted(self.aliases))

    def candidates(self, text: str) -> list[tuple[int, int]]:
        """Every alias occurrence that passes the boundary rule, as (start, end) source offsets."""
        folded, origin = fold_text(text, self.unify_separators)
        check = self.config.boundary_mode == "token_boundary"
        n = len(text)
        found = set()
        for fend, length in self._automaton.iter_matches(folded):
            start = origin[fend - length]
            end = origin[fend - 1] + 1
            if check and ((start > 0 and text[start - 1].isalnum()) or (end < n and text[end].isalnum())):
                continue
            found.add((start, end))
        return sorted(found)

    def find(self, text: str) -> list[tuple[int, int]]:
        return resolve_longest_leftmost(self.candidates(text))


def dictionary_ner(
    doc: AnnotatedDocument,
    kb: Union[AnyKB, DictionaryMatcher],
    config: NerConfig | None = None,
) -> list[Mention]:
    """Tool mentions found by matching registry aliases against ``doc.text``.

    Pass a prebuilt :class:`DictionaryMatcher` to avoid rebuilding the
    automaton for every document.
    """
    matcher = kb if isinstance(kb, DictionaryMatcher) else DictionaryMatcher(kb, config)
    return [
        Mention(f"T{i}", TOOL_LABEL, s, e, doc.text[s:e], doc.doc_id)
        for i, (s, e) in enumerate(matcher.find(doc.text), start=1)
    ]


def import_predictions(manifest: CorpusManifest, ann_dir) -> dict[str, list[Mention]]:
    """Read ``<ann_dir>/<doc_id>.ann`` for every manifest document.

    Useful for feeding the output of an external NER system to the linker.
    """
    ann_dir = Path(ann_dir)
    rows = manifest.documents()
    missing = [r.doc_id for r in rows if not (ann_dir / f"{r.doc_id}.ann").is_file()]
    if missing:
        raise DataError(f"no prediction file in {ann_dir} for: {', '.join(missing)}")
    out = {}
    for row in rows:
        text = read_text_exact(manifest.resolve(row.txt))
        ann = read_text_exact(ann_dir / f"{row.doc_id}.ann")
        out[row.doc_id] = list(parse_brat(text, ann, row.doc_id, row.modality, row.workflow_id).mentions)
    return out
