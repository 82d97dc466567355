"""Link bioinformatics tool mentions between workflow articles and workflow code."""

from toollink.kb import KnowledgeBase, FusedKnowledgeBase, ToolEntry, fuse, load_kb_snapshot, lookup, normalize_name
from toollink.linker import LinkRecord, LinkSet

__version__ = "0.1.0"

__all__ = [
    "FusedKnowledgeBase",
    "KnowledgeBase",
    "LinkRecord",
    "LinkSet",
    "ToolEntry",
    "fuse",
    "load_kb_snapshot",
    "lookup",
    "normalize_name",
]
