"""Rule-based extraction of the Materials-and-Methods-type section of an article."""

from __future__ import annotations

import re
from typing import NamedTuple, Sequence

DEFAULT_HEADINGS = (
    r"materials?\s+and\s+methods?",
    r"methods?\s+and\s+materials?",
    r"methods",
    r"methodology",
    r"implementation",
)

DEFAULT_STOP_HEADINGS = (
    r"results?",
    r"results?\s+and\s+discussions?",
    r"discussions?",
    r"conclusions?",
    r"references",
    r"bibliography",
    r"acknowledge?ments?",
    r"funding",
    r"(data\s+)?availability.*",
    r"supplementary.*",
    r"author\s+contributions?",
    r"conflicts?\s+of\s+interests?",
    r"competing\s+interests?",
    r"declarations?",
    r"abbreviations",
)

# "2 ", "2.1. ", "IV. "
_NUMBERING = re.compile(r"^(?:\d+(?:\.\d+)*\.?|[IVXLC]+\.)\s+")
_MAX_HEADING_LEN = 80
_MAX_CAPS_HEADING_LEN = 60


class Section(NamedTuple):
    text: str
    offset: int


def _heading_key(line: str) -> str | None:
    s = line.strip()
    if not s or len(s) > _MAX_HEADING_LEN:
        return None
    s = _NUMBERING.sub("", s)
    s = s.rstrip(":. ").strip()
    return re.sub(r"\s+", " ", s) or None


def _matches(key: str | None, patterns) -> bool:
    return key is not None and any(p.fullmatch(key) for p in patterns)


def _is_caps_heading(line: str) -> bool:
    s = line.strip()
    return (
        0 < len(s) <= _MAX_CAPS_HEADING_LEN
        and any(c.isalpha() for c in s)
        and not any(c.islower() for c in s)
    )


def extract_methods_section(
    full_text: str,
    heading_patterns: Sequence[str] = DEFAULT_HEADINGS,
    stop_patterns: Sequence[str] = DEFAULT_STOP_HEADINGS,
    caps_headings_stop: bool = True,
) -> Section | None:
    """Body of the first methods-like section, or ``None`` if there is no such heading.

    The body starts on the line after the heading and runs up to the next
    top-level heading (a ``stop_patterns`` match or, with
    ``caps_headings_stop``, a short all-caps line) or the end of the text.
    Headings are matched case-insensitively against the whole line, ignoring
    section numbering and trailing colons.  ``offset`` is a character offset.
    """
    starts = [re.compile(p, re.IGNORECASE) for p in heading_patterns]
    stops = [re.compile(p, re.IGNORECASE) for p in stop_patterns]

    pos = 0
    body_start = None
    for line in full_text.splitlines(keepends=True):
        line_start = pos
        pos += len(line)
        key = _heading_key(line)
        if body_start is None:
            if _matches(key, starts):
                body_start = pos
            continue
        if _matches(key, stops) or (caps_headings_stop and key is not None and _is_caps_heading(line)):
            return Section(full_text[body_start:line_start], body_start)
    if body_start is None:
        return None
    return Section(full_text[body_start:], body_start)
