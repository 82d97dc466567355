"""Command line interface.

Exit codes: 0 success, 1 invalid usage or configuration, 2 bad input data.
Logs go to stderr, tables to stdout, everything else to files.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from toollink.corpus.brat import write_brat, write_text_exact
from toollink.corpus.manifest import load_documents, read_corpus_manifest
from toollink.errors import DataError, ToolLinkError, UsageError
from toollink.evaluation import eval_links, eval_ner, format_table, predict_links, write_reports_jsonl
from toollink.kb import KnowledgeBase, dump_fused, dump_kb, fuse, load_kb_file, load_kb_snapshot, read_manifest
from toollink.linker import complete_unlinked, read_links_dir, write_links_dir
from toollink.ner import DictionaryMatcher, NerConfig, default_stoplist, dictionary_ner, import_predictions, load_stoplist
from toollink.pipeline import extract_corpus, load_run_config, run
from toollink.strategy import compile_strategy, parse_strategy

log = logging.getLogger("toollink")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


def _split_source(value: str) -> tuple[str | None, Path]:
    if "=" in value:
        src, path = value.split("=", 1)
        return src, Path(path)
    return None, Path(value)


def _load_kbs(values) -> dict[str, KnowledgeBase]:
    kbs = {}
    for value in values:
        src, path = _split_source(value)
        kb = load_kb_file(path, src)
        if kb.source in kbs:
            raise UsageError(f"knowledge base {kb.source!r} given twice")
        kbs[kb.source] = kb
    return kbs


def _ner_matcher(kb_values, boundary_mode, min_length, stoplist) -> DictionaryMatcher:
    kbs = list(_load_kbs(kb_values).values())
    if not kbs:
        raise UsageError("at least one --kb is required for dictionary matching")
    if len(kbs) > 1 and any(not isinstance(k, KnowledgeBase) for k in kbs):
        raise UsageError("a fused index cannot be fused again; pass the single-source indexes")
    kb = kbs[0] if len(kbs) == 1 else fuse(kbs)
    stop = frozenset()
    if stoplist == "default":
        stop = default_stoplist()
    elif stoplist:
        stop = load_stoplist(stoplist)
    return DictionaryMatcher(kb, NerConfig(min_match_length=min_length, stoplist=stop, boundary_mode=boundary_mode))


@click.group()
@click.option("-v", "--verbose", count=True, help="More log output on stderr (repeatable).")
def cli(verbose):
    """Link bioinformatics tool mentions between workflow articles and workflow code."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


# -- kb ---------------------------------------------------------------------------


@cli.group()
def kb():
    """Build and fuse knowledge-base indexes."""


@kb.command("build")
@click.option("-s", "--snapshot", "snapshots", multiple=True, required=True, metavar="SOURCE=PATH",
              help="Canonical snapshot (JSON lines) tagged with its source.")
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--date", "retrieval_date", default=None, help="Retrieval date recorded in the manifest.")
@click.option("--unify-separators", is_flag=True, help="Treat '_' and '-' as the same character.")
def kb_build(snapshots, out_dir, retrieval_date, unify_separators):
    """Validate snapshots and write canonical indexes with manifests."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for value in snapshots:
        src, path = _split_source(value)
        if src is None:
            raise UsageError(f"--snapshot expects SOURCE=PATH, got {value!r}")
        with open(path, encoding="utf-8") as fh:
            kb_ = load_kb_snapshot(fh, src, unify_separators=unify_separators, path=path)
        date = retrieval_date
        if date is None:
            date = (read_manifest(path) or {}).get("retrieval_date")
        manifest = dump_kb(kb_, out_dir / f"{src}.jsonl", date)
        click.echo(f"{src}\t{manifest['record_count']} records\t{manifest['alias_count']} aliases")


@kb.command("fuse")
@click.argument("indexes", nargs=-1, required=True)
@click.option("-o", "--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
def kb_fuse(indexes, out_path):
    """Group entries of several indexes that share an alias (transitively)."""
    kbs = _load_kbs(indexes)
    if any(not isinstance(k, KnowledgeBase) for k in kbs.values()):
        raise UsageError("kb fuse takes single-source indexes, not fused ones")
    fused = fuse(kbs.values())
    out_path.parent.mkdir(parents=True, exist_ok=True)
    manifest = dump_fused(fused, out_path)
    click.echo(f"fusion\t{manifest['entry_count']} entries\t{manifest['group_count']} groups")


# -- corpus -----------------------------------------------------------------------


@cli.command()
@click.argument("sources", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
def extract(sources, out_dir):
    """Extract methods sections and Nextflow processes listed in SOURCES (TSV: workflow_id, kind, path)."""
    result = extract_corpus(sources, out_dir)
    ok = sum(r.ok for r in result.rows)
    click.echo(f"{ok} documents written, {len(result.rows) - ok} skipped or failed")
    if result.failures:
        raise SystemExit(EXIT_DATA)


@cli.command()
@click.option("-m", "--manifest", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--kb", "kb_values", multiple=True, required=True, metavar="[SOURCE=]PATH")
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--boundary-mode", type=click.Choice(["token_boundary", "substring"]), default="token_boundary")
@click.option("--min-length", type=click.IntRange(min=1), default=2)
@click.option("--stoplist", default=None, help="Path to a stoplist, or 'default' for the shipped one.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Also score against the manifest's gold annotations and write the report here.")
def ner(manifest, kb_values, out_dir, boundary_mode, min_length, stoplist, report_path):
    """Dictionary-match tool names in every corpus document; write BRAT predictions."""
    m = read_corpus_manifest(manifest)
    matcher = _ner_matcher(kb_values, boundary_mode, min_length, stoplist)
    docs = load_documents(m, with_annotations=report_path is not None)
    out_dir.mkdir(parents=True, exist_ok=True)
    pred = []
    for doc in docs:
        found = dictionary_ner(doc, matcher)
        pred.extend(found)
        write_text_exact(out_dir / f"{doc.doc_id}.ann", write_brat(doc.with_mentions(found)))
    click.echo(f"{len(pred)} mentions in {len(docs)} documents")
    if report_path is not None:
        gold = [mention for d in docs for mention in d.mentions]
        report = eval_ner(pred, gold, doc_ids=[d.doc_id for d in docs], workflow_of={d.doc_id: d.workflow_id for d in docs})
        write_reports_jsonl(report_path, [report])
        click.echo(format_table([report]))


@cli.command()
@click.option("-m", "--manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--predictions", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None,
              help="BRAT predictions (<doc_id>.ann); default uses the manifest's gold annotations.")
@click.option("--from-gold", "from_gold", type=click.Path(exists=True, path_type=Path), default=None,
              help="Take tool names from gold link TSVs instead of a corpus.")
@click.option("-s", "--strategy", required=True, help="e.g. 'combine(kb_bridge(bioconda,bioweb),levenshtein(1))'.")
@click.option("--kb", "kb_values", multiple=True, metavar="[SOURCE=]PATH")
@click.option("--fusion", default="", help="Comma-separated sources used by a bare kb_bridge().")
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--extended", is_flag=True, help="Add the strategy column to the TSVs.")
def link(manifest, predictions, from_gold, strategy, kb_values, fusion, out_dir, extended):
    """Link article and code tools of each workflow; write one TSV per workflow."""
    if (manifest is None) == (from_gold is None):
        raise UsageError("give exactly one of --manifest or --from-gold")
    parsed = parse_strategy(strategy)
    kbs = _load_kbs(kb_values)
    link_fn = compile_strategy(parsed, kbs, [s for s in fusion.split(",") if s])
    if from_gold is not None:
        links = {}
        for wf, gold in read_links_dir(from_gold).items():
            a, c = gold.tool_sets()
            links[wf] = complete_unlinked(link_fn(a, c, wf), a, c)
    else:
        m = read_corpus_manifest(manifest)
        docs = load_documents(m, with_annotations=predictions is None)
        preds = import_predictions(m, predictions) if predictions is not None else None
        links = predict_links(docs, link_fn, predictions=preds)
    write_links_dir(out_dir, links, extended=extended)
    n = sum(len(ls.links()) for ls in links.values())
    click.echo(f"{n} links over {len(links)} workflows")


# -- eval -------------------------------------------------------------------------


@cli.group("eval")
def eval_group():
    """Score predictions against gold standards."""


@eval_group.command("links")
@click.option("--pred", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--gold", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--averaging", type=click.Choice(["micro", "macro"]), default="micro")
@click.option("--strategy", default="", help="Label recorded in the report.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--per-workflow", is_flag=True)
def eval_links_cmd(pred, gold, averaging, strategy, report_path, per_workflow):
    """Score link TSVs in PRED against gold TSVs (matched by workflow file name)."""
    report = eval_links(read_links_dir(pred), read_links_dir(gold), averaging=averaging, strategy=strategy)
    if report_path:
        write_reports_jsonl(report_path, [report])
    click.echo(format_table([report], per_workflow=per_workflow))


@eval_group.command("ner")
@click.option("-m", "--manifest", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--pred", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--averaging", type=click.Choice(["micro", "macro"]), default="micro")
@click.option("--modality", type=click.Choice(["article", "code", "all"]), default="all")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--per-workflow", is_flag=True)
def eval_ner_cmd(manifest, pred, averaging, modality, report_path, per_workflow):
    """Strict span scoring of BRAT predictions against the manifest's gold annotations."""
    m = read_corpus_manifest(manifest)
    docs = [d for d in load_documents(m) if modality == "all" or d.modality == modality]
    predicted = import_predictions(m, pred)
    pred_mentions = [x for d in docs for x in predicted[d.doc_id]]
    gold_mentions = [x for d in docs for x in d.mentions]
    report = eval_ner(
        pred_mentions, gold_mentions, doc_ids=[d.doc_id for d in docs],
        workflow_of={d.doc_id: d.workflow_id for d in docs}, averaging=averaging,
    )
    if report_path:
        write_reports_jsonl(report_path, [report])
    click.echo(format_table([report], per_workflow=per_workflow))


# -- run --------------------------------------------------------------------------


@cli.command("run")
@click.argument("config", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--per-workflow", is_flag=True)
def run_cmd(config, per_workflow):
    """Run detection, linking and scoring as described by a YAML CONFIG."""
    cfg = load_run_config(config)
    result = run(cfg)
    click.echo(format_table([result.report], per_workflow=per_workflow))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="toollink", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except (DataError, OSError, UnicodeDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA
    except ToolLinkError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
