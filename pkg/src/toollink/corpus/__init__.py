from toollink.corpus.brat import parse_brat, read_text_exact, write_brat, write_text_exact
from toollink.corpus.documents import AnnotatedDocument, Mention, ProcessBlock, unique_tool_names
from toollink.corpus.manifest import CorpusManifest, ManifestRow, load_documents, read_corpus_manifest
from toollink.corpus.nextflow import extract_processes
from toollink.corpus.sections import extract_methods_section

__all__ = [
    "AnnotatedDocument",
    "CorpusManifest",
    "ManifestRow",
    "Mention",
    "ProcessBlock",
    "extract_methods_section",
    "extract_processes",
    "load_documents",
    "parse_brat",
    "read_corpus_manifest",
    "read_text_exact",
    "unique_tool_names",
    "write_brat",
    "write_text_exact",
]
