import json
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
SUITE_BUDGET_S = 60.0

_acceptance = {}
_t0 = None


def pytest_sessionstart(session):
    global _t0
    _t0 = time.perf_counter()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    key = (number, item.name)
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        _acceptance[key] = (number, title, status)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    by_number = {}
    for (number, _), (_, title, status) in sorted(_acceptance.items()):
        by_number.setdefault(number, (title, []))[1].append(status)
    for number, (title, statuses) in sorted(by_number.items()):
        if "FAIL" in statuses:
            status = "FAIL"
        elif all(s == "SKIP" for s in statuses):
            status = "SKIP"
        else:
            status = "PASS"
        tr.write_line(f"[{status}] AC{number}: {title}")
    elapsed = time.perf_counter() - _t0
    status = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    tr.write_line(f"[{status}] AC8 (runtime): whole suite ran in {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)")


def pytest_sessionfinish(session, exitstatus):
    if _acceptance and time.perf_counter() - _t0 >= SUITE_BUDGET_S and session.exitstatus == 0:
        session.exitstatus = 1


# -- sample workspace ----------------------------------------------------------------

ARTICLE_TEXT = (
    "Materials and methods\n"
    "Ancient DNA reads were mapped with CircularMapper (CM) against the mitochondrial reference.\n"
    "Contamination was estimated with Schmutzi.\n"
    "rRNA genes were predicted with BAsic Rapid Ribosomal RNA Predictor (Barrnap).\n"
    "Taxonomic profiles were visualised with Krona.\n"
)

ARTICLE_TOOLS = ["CircularMapper", "CM", "Schmutzi", "BAsic Rapid Ribosomal RNA Predictor", "Barrnap", "Krona"]

NEXTFLOW_SOURCE = '''#!/usr/bin/env nextflow
nextflow.enable.dsl = 2

process CIRCULARMAPPER {
    input:
    path ref

    script:
    """
    circulargenerator -e 500 -i ${ref}
    realignsamfile -e 500 -i in.bam -r ${ref}
    """
}

process BARRNAP {
    script:
    """
    barrnap --kingdom mito in.fa > out.gff
    bgzip out.gff
    """
}

process KRONA {
    script:
    """
    ktImportTaxonomy -o krona.html tax.txt
    """
}

workflow {
    CIRCULARMAPPER(params.ref)
}
'''

CODE_TOOLS = ["circulargenerator", "realignsamfile", "barrnap", "bgzip", "ktImportTaxonomy"]

BIOCONDA = [
    {"id": "circularmapper", "name": "circularmapper", "aliases": ["circularmapper", "circulargenerator", "realignsamfile"]},
    {"id": "rsem", "name": "rsem", "aliases": ["rsem", "rsem-prepare-reference", "rsem-bam2wig"]},
    {"id": "metabat2", "name": "metabat2", "aliases": ["metabat2", "jgi_summarize_bam_contig_depths", "contigOverlaps"]},
    {"id": "krona", "name": "krona", "aliases": ["krona", "ktImportTaxonomy"]},
    {"id": "barrnap", "name": "barrnap", "aliases": ["barrnap"]},
    {"id": "htslib", "name": "htslib", "aliases": ["htslib", "bgzip", "tabix"]},
    {"id": "schmutzi", "name": "schmutzi", "aliases": ["schmutzi"]},
]

BIOWEB = [
    {"id": "bw-barrnap", "name": "Barrnap", "aliases": ["barrnap", "BAsic Rapid Ribosomal RNA Predictor"]},
    {"id": "bw-samtools", "name": "samtools", "aliases": ["samtools"]},
]


def annotate(text, surfaces, doc_id):
    """T-lines for the first occurrence of each surface, offsets found by str.index."""
    lines = []
    for i, s in enumerate(surfaces, start=1):
        start = text.index(s)
        lines.append(f"T{i}\tTool {start} {start + len(s)}\t{s}")
    return "\n".join(lines) + "\n"


def write_jsonl(path, records, source):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({**r, "source": source}) + "\n")


def build_workspace(root: Path) -> Path:
    """A one-workflow corpus, gold links, two KB snapshots and a run config; returns the config path."""
    from toollink.corpus.nextflow import extract_processes

    root.mkdir(parents=True, exist_ok=True)
    corpus = root / "corpus"
    corpus.mkdir()
    rows = ["doc_id\tworkflow_id\tmodality\ttxt\tann"]
    (corpus / "wf1__article.txt").write_text(ARTICLE_TEXT, encoding="utf-8")
    (corpus / "wf1__article.ann").write_text(annotate(ARTICLE_TEXT, ARTICLE_TOOLS, "wf1__article"), encoding="utf-8")
    rows.append("wf1__article\twf1\tarticle\twf1__article.txt\twf1__article.ann")
    for block in extract_processes(NEXTFLOW_SOURCE, "main.nf"):
        doc_id = f"wf1__{block.process_name}"
        surfaces = [t for t in CODE_TOOLS if t in block.body]
        (corpus / f"{doc_id}.txt").write_text(block.body, encoding="utf-8")
        (corpus / f"{doc_id}.ann").write_text(annotate(block.body, surfaces, doc_id), encoding="utf-8")
        rows.append(f"{doc_id}\twf1\tcode\t{doc_id}.txt\t{doc_id}.ann")
    (corpus / "manifest.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    gold = root / "gold"
    gold.mkdir()
    (gold / "wf1.tsv").write_bytes((FIXTURES / "sample_gold.tsv").read_bytes())

    kb = root / "kb"
    kb.mkdir()
    write_jsonl(kb / "bioconda.jsonl", BIOCONDA, "bioconda")
    write_jsonl(kb / "bioweb.jsonl", BIOWEB, "bioweb")

    config = root / "run.yaml"
    config.write_text(
        "kb_sources:\n"
        "  bioconda: kb/bioconda.jsonl\n"
        "  bioweb: kb/bioweb.jsonl\n"
        "fusion: [bioconda, bioweb]\n"
        "ner:\n"
        "  mode: gold\n"
        "link: kb_bridge(bioconda,bioweb)\n"
        "corpus: corpus/manifest.tsv\n"
        "gold: gold\n"
        "output: out\n",
        encoding="utf-8",
    )
    return config


@pytest.fixture
def workspace(tmp_path):
    return build_workspace(tmp_path / "ws")


@pytest.fixture
def sample_tsv():
    return (FIXTURES / "sample_gold.tsv").read_text(encoding="utf-8")
