"""Static extraction of ``process`` blocks from Nextflow (DSL1/DSL2) sources.

This is a lexical scan, not a Groovy parser: braces are counted outside of
string literals and comments, and a ``process NAME {`` at nesting depth zero
opens a block.  Includes and modules are not followed.
"""

from __future__ import annotations

import re

from toollink.corpus.documents import ProcessBlock
from toollink.errors import ProcessParseError

_PROCESS_DECL = re.compile(r"process\s+([A-Za-z_]\w*)\s*\{")
_SECTION_LABEL = re.compile(r"(script|shell|exec)\s*:(?!:)")
_STUB_LABEL = re.compile(r"stub\s*:(?!:)")


class _Unterminated(Exception):
    def __init__(self, what, pos):
        self.what = what
        self.pos = pos


def _skip_literal(src: str, i: int) -> int | None:
    """If a string literal or comment starts at ``i``, return the index just past it."""
    if src.startswith("//", i):
        nl = src.find("\n", i)
        return len(src) if nl < 0 else nl
    if src.startswith("/*", i):
        close = src.find("*/", i + 2)
        if close < 0:
            raise _Unterminated("block comment", i)
        return close + 2
    if src.startswith('"""', i):
        return _skip_quoted(src, i + 3, '"""', interpolate=True, multiline=True)
    if src.startswith("'''", i):
        return _skip_quoted(src, i + 3, "'''", interpolate=False, multiline=True)
    if src.startswith("$/", i):
        close = src.find("/$", i + 2)
        if close < 0:
            raise _Unterminated("dollar-slashy string", i)
        return close + 2
    c = src[i]
    if c == '"':
        return _skip_quoted(src, i + 1, '"', interpolate=True, multiline=False)
    if c == "'":
        return _skip_quoted(src, i + 1, "'", interpolate=False, multiline=False)
    return None


def _skip_quoted(src: str, i: int, quote: str, interpolate: bool, multiline: bool) -> int:
    start = i - len(quote)
    n = len(src)
    while i < n:
        if src[i] == "\\":
            i += 2
            continue
        if src.startswith(quote, i):
            return i + len(quote)
        if not multiline and src[i] == "\n":
            # Groovy forbids this; treat the line end as the close so one stray
            # quote cannot swallow the rest of the file.
            return i
        if interpolate and src.startswith("${", i):
            i = _skip_code(src, i + 2)
            continue
        i += 1
    raise _Unterminated("string literal", start)


def _skip_code(src: str, i: int) -> int:
    """Scan code from ``i`` up to and including the ``}`` closing an already-open brace."""
    depth = 1
    n = len(src)
    while i < n:
        j = _skip_literal(src, i)
        if j is not None:
            i = j
            continue
        c = src[i]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    raise _Unterminated("block", i)


def _is_word_start(src: str, i: int) -> bool:
    return i == 0 or not (src[i - 1].isalnum() or src[i - 1] in "_.$")


def _script_stanza(body: str) -> tuple[str, int] | None:
    """Find the ``script:``/``shell:``/``exec:`` stanza among the top-level labels of ``body``."""
    label_end = None
    stop = len(body)
    depth = 0
    i = 0
    n = len(body)
    at_line_start = True
    while i < n:
        j = _skip_literal(body, i)
        if j is not None:
            i = j
            at_line_start = False
            continue
        c = body[i]
        if c == "\n":
            at_line_start = True
            i += 1
            continue
        if c in " \t\r":
            i += 1
            continue
        if at_line_start and depth == 0:
            if label_end is None:
                m = _SECTION_LABEL.match(body, i)
                if m:
                    label_end = m.end()
                    i = label_end
                    at_line_start = False
                    continue
            else:
                m = _STUB_LABEL.match(body, i)
                if m:
                    stop = i
                    break
        at_line_start = False
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
        i += 1
    if label_end is None:
        return None
    return body[label_end:stop], label_end


def extract_processes(nextflow_source: str, source_path: str = "") -> list[ProcessBlock]:
    """All top-level process blocks of a Nextflow file, in source order."""
    src = nextflow_source
    blocks = []
    depth = 0
    i = 0
    n = len(src)
    while i < n:
        try:
            j = _skip_literal(src, i)
        except _Unterminated as exc:
            raise ProcessParseError(f"{source_path}: unterminated {exc.what} at offset {exc.pos}") from None
        if j is not None:
            i = j
            continue
        c = src[i]
        if c == "{":
            depth += 1
        elif c == "}":
            depth = max(depth - 1, 0)
        elif c == "p" and depth == 0 and _is_word_start(src, i):
            m = _PROCESS_DECL.match(src, i)
            if m:
                name = m.group(1)
                body_start = m.end()
                try:
                    close = _skip_code(src, body_start) - 1
                except _Unterminated:
                    raise ProcessParseError(
                        f"{source_path}: process {name!r} starting at offset {i} is never closed"
                    ) from None
                body = src[body_start:close]
                stanza = _script_stanza(body)
                script, script_start = (stanza[0], body_start + stanza[1]) if stanza else (None, None)
                blocks.append(ProcessBlock(name, body, source_path, body_start, script, script_start))
                i = close + 1
                continue
        i += 1
    return blocks
