"""A small declarative grammar for naming linking strategies.

::

    exact
    levenshtein(1)
    prefix_suffix(3)              # argument optional, defaults to 3
    kb_bridge(bioconda)           # one registry, entry-level pivots
    kb_bridge(bioconda, bioweb)   # several registries are fused first
    combine(kb_bridge(bioconda, bioweb), levenshtein(1))

``kb_bridge()`` with no argument uses the run's ``fusion`` list.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

from toollink.errors import UsageError
from toollink.kb import AnyKB, KnowledgeBase, fuse
from toollink.linker import LinkSet, combine, link_exact, link_kb_bridge, link_levenshtein, link_prefix_suffix


class StrategySyntaxError(UsageError):
    pass


@dataclass(frozen=True)
class Exact:
    def __str__(self):
        return "exact"


@dataclass(frozen=True)
class Levenshtein:
    n: int

    def __str__(self):
        return f"levenshtein({self.n})"


@dataclass(frozen=True)
class PrefixSuffix:
    min_overlap: int = 3

    def __str__(self):
        return f"prefix_suffix({self.min_overlap})"


@dataclass(frozen=True)
class KBBridge:
    sources: tuple[str, ...] = ()

    def __str__(self):
        return f"kb_bridge({','.join(self.sources)})"


@dataclass(frozen=True)
class Combine:
    parts: tuple["Strategy", ...]

    def __str__(self):
        return f"combine({','.join(map(str, self.parts))})"


Strategy = Union[Exact, Levenshtein, PrefixSuffix, KBBridge, Combine]

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][\w\-]*)|(?P<punct>[(),]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise StrategySyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r} in strategy {text!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    return tokens


_BARE = {"exact", "prefix_suffix", "kb_bridge"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind or "token"
            got = tok[1] if tok[0] else "end of input"
            raise StrategySyntaxError(f"expected {want} but found {got!r} in strategy {self.text!r}")
        self.i += 1
        return tok

    def args(self) -> list:
        if self.peek() != ("punct", "("):
            return []
        self.take("punct", "(")
        out = []
        if self.peek() == ("punct", ")"):
            self.take()
            return out
        while True:
            kind, value = self.peek()
            if kind == "int":
                self.take()
                out.append(int(value))
            elif kind == "ident" and self.tokens[self.i + 1 : self.i + 2] == [("punct", "(")]:
                out.append(self.strategy())
            elif kind == "ident":
                self.take()
                out.append(value)
            else:
                self.take("ident")
            if self.peek() == ("punct", ","):
                self.take()
                continue
            self.take("punct", ")")
            return out

    def strategy(self) -> Strategy:
        _, name = self.take("ident")
        args = self.args()
        name = name.lower()
        if name == "exact":
            if args:
                raise StrategySyntaxError("exact takes no arguments")
            return Exact()
        if name in ("levenshtein", "lev"):
            if len(args) != 1 or not isinstance(args[0], int):
                raise StrategySyntaxError("levenshtein takes one integer threshold, e.g. levenshtein(1)")
            return Levenshtein(args[0])
        if name == "prefix_suffix":
            if len(args) > 1 or (args and not isinstance(args[0], int)) or (args and args[0] < 1):
                raise StrategySyntaxError("prefix_suffix takes an optional integer >= 1, e.g. prefix_suffix(3)")
            return PrefixSuffix(*args)
        if name == "kb_bridge":
            if any(not isinstance(a, str) for a in args):
                raise StrategySyntaxError("kb_bridge takes knowledge-base source tags, e.g. kb_bridge(bioconda,bioweb)")
            return KBBridge(tuple(args))
        if name == "combine":
            # bare names such as ``exact`` arrive as identifiers
            args = [_Parser(a).strategy() if isinstance(a, str) and a.lower() in _BARE else a for a in args]
            if not args or any(isinstance(a, (int, str)) for a in args):
                raise StrategySyntaxError("combine takes one or more strategies")
            return Combine(tuple(args))
        raise StrategySyntaxError(f"unknown strategy {name!r}")


def parse_strategy(text: str) -> Strategy:
    parser = _Parser(text)
    result = parser.strategy()
    if parser.peek()[0] is not None:
        raise StrategySyntaxError(f"trailing input after {result} in strategy {text!r}")
    return result


def required_sources(strategy: Strategy, default_fusion: Iterable[str] = ()) -> set[str]:
    if isinstance(strategy, KBBridge):
        return set(strategy.sources or default_fusion)
    if isinstance(strategy, Combine):
        return set().union(*(required_sources(p, default_fusion) for p in strategy.parts))
    return set()


def validate_strategy(strategy: Strategy, loaded: Iterable[str], default_fusion: Iterable[str] = ()) -> list[str]:
    """Problems that would stop ``strategy`` from running against the ``loaded`` sources."""
    loaded = set(loaded)
    default_fusion = tuple(default_fusion)
    problems = []

    def walk(s):
        if isinstance(s, KBBridge):
            sources = s.sources or default_fusion
            if not sources:
                problems.append("kb_bridge() has no sources and no fusion list is configured")
            for src in sources:
                if src not in loaded:
                    problems.append(f"strategy {s} refers to knowledge base {src!r}, which is not loaded")
        elif isinstance(s, Combine):
            for p in s.parts:
                walk(p)

    walk(strategy)
    return problems


LinkFunction = Callable[[Iterable[str], Iterable[str], str], LinkSet]


def compile_strategy(
    strategy: Strategy, kbs: Mapping[str, KnowledgeBase], default_fusion: Iterable[str] = ()
) -> LinkFunction:
    """Turn a parsed strategy into ``f(article_tools, code_tools, workflow_id) -> LinkSet``.

    Registries are fused once here, not per workflow.
    """
    problems = validate_strategy(strategy, kbs.keys(), default_fusion)
    if problems:
        raise UsageError("; ".join(problems))
    default_fusion = tuple(default_fusion)
    fused_cache: dict[tuple[str, ...], AnyKB] = {}

    def bridge_kb(sources: tuple[str, ...]) -> AnyKB:
        key = tuple(sorted(set(sources)))
        if key not in fused_cache:
            fused_cache[key] = kbs[key[0]] if len(key) == 1 else fuse(kbs[s] for s in key)
        return fused_cache[key]

    def build(s: Strategy) -> LinkFunction:
        if isinstance(s, Exact):
            return lambda a, c, wf: link_exact(a, c, wf)
        if isinstance(s, Levenshtein):
            return lambda a, c, wf: link_levenshtein(a, c, s.n, wf)
        if isinstance(s, PrefixSuffix):
            return lambda a, c, wf: link_prefix_suffix(a, c, s.min_overlap, wf)
        if isinstance(s, KBBridge):
            kb = bridge_kb(s.sources or default_fusion)
            return lambda a, c, wf: link_kb_bridge(a, c, kb, wf)
        if isinstance(s, Combine):
            parts = [build(p) for p in s.parts]
            return lambda a, c, wf: combine([f(a, c, wf) for f in parts])
        raise UsageError(f"cannot compile strategy {s!r}")

    return build(strategy)
