"""Declarative runs and corpus extraction behind the CLI.

A run configuration is a YAML file; relative paths are resolved against the
file's directory::

    kb_sources:
      bioconda: kb/bioconda.jsonl
      bioweb: kb/bioweb.jsonl
    fusion: [bioconda, bioweb]
    ner:
      mode: dictionary          # dictionary | import | gold
      kb: [bioconda]            # dictionary mode; several sources are fused
      boundary_mode: token_boundary
      min_match_length: 2
      stoplist: default         # or a path
      predictions: preds/       # import mode: <doc_id>.ann files
    link: combine(kb_bridge(bioconda,bioweb), levenshtein(1))
    corpus: corpus/manifest.tsv
    gold: gold/                 # <workflow_id>.tsv files
    output: out/
    averaging: micro
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from toollink.corpus.brat import read_text_exact, write_brat, write_text_exact
from toollink.corpus.manifest import ManifestRow, load_documents, read_corpus_manifest, read_sources_manifest, write_corpus_manifest
from toollink.corpus.nextflow import extract_processes
from toollink.corpus.sections import extract_methods_section
from toollink.errors import ConfigError, DataError, UsageError
from toollink.evaluation import AVERAGING, EvalReport, eval_pipeline, write_reports_jsonl
from toollink.kb import KNOWN_SOURCES, KnowledgeBase, fuse, load_kb_file
from toollink.linker import LinkSet, read_links_dir, write_links_dir
from toollink.ner import BOUNDARY_MODES, DictionaryMatcher, NerConfig, dictionary_ner, import_predictions
from toollink.strategy import Strategy, StrategySyntaxError, compile_strategy, parse_strategy, validate_strategy

log = logging.getLogger(__name__)

NER_MODES = ("dictionary", "import", "gold")
_TOP_KEYS = {"kb_sources", "fusion", "ner", "link", "corpus", "gold", "output", "averaging"}
_NER_KEYS = {"mode", "kb", "min_match_length", "boundary_mode", "stoplist", "predictions"}


@dataclass
class RunConfig:
    base_dir: Path
    kb_sources: dict[str, Path]
    fusion: tuple[str, ...]
    ner_mode: str
    ner_kb: tuple[str, ...]
    ner: NerConfig
    predictions: Path | None
    strategy: Strategy
    corpus: Path
    gold: Path
    output: Path
    averaging: str = "micro"
    raw: dict = field(default_factory=dict, repr=False)


def _kb_sources(value, problems) -> dict[str, str]:
    if value is None:
        return {}
    if isinstance(value, Mapping):
        return {str(k): str(v) for k, v in value.items()}
    if isinstance(value, list):
        out = {}
        for item in value:
            if isinstance(item, Mapping) and "source" in item and "path" in item:
                out[str(item["source"])] = str(item["path"])
            else:
                problems.append(f"kb_sources entry {item!r} must have 'source' and 'path'")
        return out
    problems.append("kb_sources must be a mapping of source tag to snapshot path")
    return {}


def _str_list(value, name, problems) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    if isinstance(value, list) and all(isinstance(v, str) for v in value):
        return tuple(value)
    problems.append(f"{name} must be a list of source tags")
    return ()


def parse_run_config(data: Mapping[str, Any], base_dir) -> RunConfig:
    """Validate a config mapping completely, reporting every problem in one :class:`ConfigError`."""
    base_dir = Path(base_dir)
    problems: list[str] = []
    if not isinstance(data, Mapping):
        raise ConfigError(["configuration must be a mapping"])

    for key in sorted(set(data) - _TOP_KEYS):
        problems.append(f"unknown key {key!r}")
    for key in ("link", "corpus", "gold", "output"):
        if not data.get(key):
            problems.append(f"missing required key {key!r}")

    def path_of(key, must_exist=True):
        value = data.get(key)
        if not value:
            return None
        p = base_dir / str(value)
        if must_exist and not p.exists():
            problems.append(f"{key}: {p} does not exist")
        return p

    sources = _kb_sources(data.get("kb_sources"), problems)
    kb_paths = {}
    for src, rel in sources.items():
        if src not in KNOWN_SOURCES:
            problems.append(f"kb_sources: unknown source tag {src!r} (known: {', '.join(sorted(KNOWN_SOURCES))})")
        p = base_dir / rel
        if not p.is_file():
            problems.append(f"kb_sources.{src}: {p} does not exist")
        kb_paths[src] = p

    fusion = _str_list(data.get("fusion"), "fusion", problems)
    for src in fusion:
        if src not in sources:
            problems.append(f"fusion refers to {src!r}, which is not in kb_sources")

    averaging = data.get("averaging", "micro")
    if averaging not in AVERAGING:
        problems.append(f"averaging must be one of {AVERAGING}, got {averaging!r}")

    ner_section = data.get("ner") or {}
    if not isinstance(ner_section, Mapping):
        problems.append("ner must be a mapping")
        ner_section = {}
    for key in sorted(set(ner_section) - _NER_KEYS):
        problems.append(f"ner: unknown key {key!r}")
    ner_mode = ner_section.get("mode", "dictionary")
    if ner_mode not in NER_MODES:
        problems.append(f"ner.mode must be one of {NER_MODES}, got {ner_mode!r}")
    ner_kb = _str_list(ner_section.get("kb"), "ner.kb", problems) or fusion or tuple(sorted(sources))
    if ner_mode == "dictionary":
        if not ner_kb:
            problems.append("ner.mode is dictionary but no knowledge base is available")
        for src in ner_kb:
            if src not in sources:
                problems.append(f"ner.kb refers to {src!r}, which is not in kb_sources")
    predictions = None
    if ner_mode == "import":
        if not ner_section.get("predictions"):
            problems.append("ner.mode is import but ner.predictions is not set")
        else:
            predictions = base_dir / str(ner_section["predictions"])
            if not predictions.is_dir():
                problems.append(f"ner.predictions: {predictions} is not a directory")
    if ner_section.get("boundary_mode", "token_boundary") not in BOUNDARY_MODES:
        problems.append(f"ner.boundary_mode must be one of {BOUNDARY_MODES}")
    mml = ner_section.get("min_match_length", 2)
    if not isinstance(mml, int) or isinstance(mml, bool) or mml < 1:
        problems.append("ner.min_match_length must be an integer >= 1")
    stop = ner_section.get("stoplist")
    if stop and stop != "default" and not (base_dir / str(stop)).is_file():
        problems.append(f"ner.stoplist: {base_dir / str(stop)} does not exist")
    ner_cfg = NerConfig()
    if not any(p.startswith("ner.") for p in problems):
        try:
            ner_cfg = NerConfig.from_mapping(ner_section, base_dir)
        except (UsageError, OSError) as exc:
            problems.append(f"ner: {exc}")

    strategy = None
    if data.get("link"):
        try:
            strategy = parse_strategy(str(data["link"]))
        except StrategySyntaxError as exc:
            problems.append(f"link: {exc}")
        else:
            problems.extend(f"link: {p}" for p in validate_strategy(strategy, sources, fusion))

    corpus = path_of("corpus")
    gold = path_of("gold")
    output = path_of("output", must_exist=False)

    if problems:
        raise ConfigError(problems)
    return RunConfig(
        base_dir=base_dir,
        kb_sources=kb_paths,
        fusion=fusion,
        ner_mode=ner_mode,
        ner_kb=ner_kb,
        ner=ner_cfg,
        predictions=predictions,
        strategy=strategy,
        corpus=corpus,
        gold=gold,
        output=output,
        averaging=averaging,
        raw=dict(data),
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path} is not valid YAML: {exc}"]) from None
    return parse_run_config(data or {}, path.parent)


@dataclass
class RunResult:
    report: EvalReport
    links: dict[str, LinkSet]


def run(config: RunConfig) -> RunResult:
    """Detection, linking and scoring as configured; artifacts go to ``config.output``."""
    kbs: dict[str, KnowledgeBase] = {}
    for src, p in sorted(config.kb_sources.items()):
        kbs[src] = load_kb_file(p, src)
        log.info("loaded %s: %d entries, %d aliases", src, len(kbs[src]), len(kbs[src].alias_index))

    manifest = read_corpus_manifest(config.corpus)
    docs = load_documents(manifest, with_annotations=True)
    gold = read_links_dir(config.gold)
    if not gold:
        raise DataError(f"no gold link files found in {config.gold}")

    link_fn = compile_strategy(config.strategy, kbs, config.fusion)
    matcher = None
    predictions = None
    if config.ner_mode == "dictionary":
        sources = sorted(set(config.ner_kb))
        ner_kb = kbs[sources[0]] if len(sources) == 1 else fuse(kbs[s] for s in sources)
        matcher = DictionaryMatcher(ner_kb, config.ner)
    elif config.ner_mode == "import":
        predictions = import_predictions(manifest, config.predictions)

    report, links = eval_pipeline(
        docs, gold, link_fn, matcher=matcher, predictions=predictions, averaging=config.averaging,
        strategy=str(config.strategy),
    )

    out = config.output
    out.mkdir(parents=True, exist_ok=True)
    write_links_dir(out / "links", links)
    write_links_dir(out / "links_extended", links, extended=True)
    write_reports_jsonl(out / "report.jsonl", [report])
    if matcher is not None:
        ner_dir = out / "ner"
        ner_dir.mkdir(exist_ok=True)
        for doc in docs:
            found = doc.with_mentions(dictionary_ner(doc, matcher))
            write_text_exact(ner_dir / f"{doc.doc_id}.ann", write_brat(found))
    return RunResult(report, links)


# -- extraction -------------------------------------------------------------------

_UNSAFE = re.compile(r"[^\w.\-]+")


def _safe(s: str) -> str:
    return _UNSAFE.sub("_", s).strip("_") or "x"


@dataclass
class ExtractResult:
    rows: list[ManifestRow]
    failures: list[str]


def extract_corpus(sources_manifest, out_dir, heading_patterns=None) -> ExtractResult:
    """Cut raw articles and Nextflow files into per-document ``.txt`` files plus a corpus manifest.

    Articles yield their methods section; workflow files yield one document
    per process.  Files that fail are reported and skipped.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sources = read_sources_manifest(sources_manifest) if not isinstance(sources_manifest, list) else sources_manifest
    rows: list[ManifestRow] = []
    failures: list[str] = []
    used: set[str] = set()

    def new_id(base: str) -> str:
        doc_id, k = base, 2
        while doc_id in used:
            doc_id, k = f"{base}__{k}", k + 1
        used.add(doc_id)
        return doc_id

    for src in sources:
        wf, kind, path = src["workflow_id"], src["kind"], Path(src["path"])
        rel_source = str(src.get("rel", path))
        try:
            text = read_text_exact(path)
        except (OSError, UnicodeDecodeError) as exc:
            msg = f"{path}: cannot read ({exc})"
            log.error(msg)
            failures.append(msg)
            rows.append(ManifestRow(new_id(f"{_safe(wf)}__{_safe(path.stem)}"), wf, kind, "", "", rel_source, "", "failed"))
            continue
        if kind == "article":
            kwargs = {"heading_patterns": heading_patterns} if heading_patterns else {}
            section = extract_methods_section(text, **kwargs)
            doc_id = new_id(f"{_safe(wf)}__article")
            if section is None:
                log.warning("%s: no methods heading found; skipped", path)
                rows.append(ManifestRow(doc_id, wf, kind, "", "", rel_source, "", "skipped:no-methods-heading"))
                continue
            write_text_exact(out_dir / f"{doc_id}.txt", section.text)
            rows.append(ManifestRow(doc_id, wf, kind, f"{doc_id}.txt", "", rel_source, str(section.offset)))
        else:
            try:
                blocks = extract_processes(text, rel_source)
            except DataError as exc:
                log.error("%s", exc)
                failures.append(str(exc))
                rows.append(ManifestRow(new_id(f"{_safe(wf)}__{_safe(path.stem)}"), wf, kind, "", "", rel_source, "", "failed"))
                continue
            for block in blocks:
                doc_id = new_id(f"{_safe(wf)}__{_safe(block.process_name)}")
                write_text_exact(out_dir / f"{doc_id}.txt", block.body)
                rows.append(ManifestRow(doc_id, wf, kind, f"{doc_id}.txt", "", rel_source, str(block.body_start)))
    write_corpus_manifest(out_dir / "manifest.tsv", rows)
    return ExtractResult(rows, failures)
