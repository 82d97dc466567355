"""Precision / recall / F1 for mention detection and for linking.

Linking is scored over records: a predicted link and an explicit unlinked
record count the same way, and two records match when their normalized
(article, code) pairs are equal.  A tool the gold standard leaves unlinked
but the prediction links therefore costs one FP (the wrong pair) and one FN
(the missing unlinked record).
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from toollink.corpus.documents import AnnotatedDocument, Mention, unique_tool_names
from toollink.errors import UsageError
from toollink.kb import normalize_name
from toollink.linker import LinkSet, complete_unlinked
from toollink.ner import DictionaryMatcher, dictionary_ner

log = logging.getLogger(__name__)

AVERAGING = ("micro", "macro")


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    breakdown: Mapping[str, "EvalReport"] = field(default_factory=dict)
    averaging: str = "micro"
    strategy: str = ""
    corpus: str = ""

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, **kwargs) -> "EvalReport":
        return cls(tp, fp, fn, *prf(tp, fp, fn), **kwargs)

    def to_dict(self) -> dict:
        d = {
            "strategy": self.strategy,
            "corpus": self.corpus,
            "averaging": self.averaging,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        d["per_workflow"] = [
            {"workflow_id": k, "tp": r.tp, "fp": r.fp, "fn": r.fn, "precision": r.precision, "recall": r.recall, "f1": r.f1}
            for k, r in sorted(self.breakdown.items())
        ]
        return d


def aggregate(breakdown: Mapping[str, EvalReport], averaging: str = "micro", **kwargs) -> EvalReport:
    """Combine per-workflow reports.

    Counts are always summed.  ``micro`` derives P/R/F1 from the summed counts;
    ``macro`` takes the unweighted mean of the per-workflow P, R and F1.
    """
    if averaging not in AVERAGING:
        raise UsageError(f"averaging must be one of {AVERAGING}, got {averaging!r}")
    tp = sum(r.tp for r in breakdown.values())
    fp = sum(r.fp for r in breakdown.values())
    fn = sum(r.fn for r in breakdown.values())
    if averaging == "micro" or not breakdown:
        return EvalReport.from_counts(tp, fp, fn, breakdown=dict(breakdown), averaging=averaging, **kwargs)
    k = len(breakdown)
    p = sum(r.precision for r in breakdown.values()) / k
    r_ = sum(r.recall for r in breakdown.values()) / k
    f = sum(r.f1 for r in breakdown.values()) / k
    return EvalReport(tp, fp, fn, p, r_, f, breakdown=dict(breakdown), averaging=averaging, **kwargs)


# -- NER ------------------------------------------------------------------------


def eval_ner(
    pred: Iterable[Mention],
    gold: Iterable[Mention],
    doc_ids: Iterable[str] | None = None,
    workflow_of: Mapping[str, str] | None = None,
    averaging: str = "micro",
) -> EvalReport:
    """Strict span matching on (doc_id, start, end, label).

    ``doc_ids`` lists the documents under evaluation; mentions pointing
    elsewhere are rejected.  With ``workflow_of`` the report carries a
    per-workflow breakdown.
    """
    pred = list(pred)
    gold = list(gold)
    if doc_ids is not None:
        known = set(doc_ids)
        unknown = sorted({m.doc_id for m in pred + gold} - known)
        if unknown:
            raise UsageError(f"mentions refer to unknown documents: {', '.join(unknown)}")
    if workflow_of is not None:
        missing = sorted({m.doc_id for m in pred + gold} - set(workflow_of))
        if missing:
            raise UsageError(f"no workflow known for documents: {', '.join(missing)}")
    group = (lambda d: workflow_of[d]) if workflow_of is not None else (lambda d: "")

    pred_c = Counter(m.span_key for m in pred)
    gold_c = Counter(m.span_key for m in gold)
    counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for key in pred_c.keys() | gold_c.keys():
        hit = min(pred_c[key], gold_c[key])
        c = counts[group(key[0])]
        c[0] += hit
        c[1] += pred_c[key] - hit
        c[2] += gold_c[key] - hit
    if workflow_of is not None:
        for wf in set(workflow_of.values()):
            counts.setdefault(wf, [0, 0, 0])
        breakdown = {wf: EvalReport.from_counts(*c) for wf, c in counts.items()}
        return aggregate(breakdown, averaging, corpus="ner")
    tp, fp, fn = counts[""]
    return EvalReport.from_counts(tp, fp, fn, corpus="ner")


# -- linking ----------------------------------------------------------------------


def link_items(links: LinkSet, unify_separators: bool = False) -> set[tuple[str | None, str | None]]:
    def norm(x):
        return None if x is None else normalize_name(x, unify_separators)

    return {(norm(r.article_tool), norm(r.code_tool)) for r in links}


def _as_mapping(x) -> Mapping[str, LinkSet]:
    return {x.workflow_id: x} if isinstance(x, LinkSet) else x


def eval_links(
    pred: LinkSet | Mapping[str, LinkSet],
    gold: LinkSet | Mapping[str, LinkSet],
    averaging: str = "micro",
    strategy: str = "",
    unify_separators: bool = False,
) -> EvalReport:
    pred = _as_mapping(pred)
    gold = _as_mapping(gold)
    extra = sorted(set(pred) - set(gold))
    if extra:
        raise UsageError(f"predicted workflows missing from the gold standard: {', '.join(extra)}")
    breakdown = {}
    for wf in sorted(gold):
        g = link_items(gold[wf], unify_separators)
        p = link_items(pred[wf], unify_separators) if wf in pred else set()
        breakdown[wf] = EvalReport.from_counts(len(p & g), len(p - g), len(g - p))
    return aggregate(breakdown, averaging, strategy=strategy, corpus="links")


# -- end to end -------------------------------------------------------------------


def predict_links(
    docs: Iterable[AnnotatedDocument],
    link_fn: Callable[[set, set, str], LinkSet],
    matcher: DictionaryMatcher | None = None,
    predictions: Mapping[str, list[Mention]] | None = None,
    workflows: Iterable[str] | None = None,
) -> dict[str, LinkSet]:
    """Mentions → unique tool names → links → unlinked completion, per workflow.

    Mentions come from ``predictions`` when given, else from ``matcher``, else
    from the documents themselves (gold mentions).
    """
    by_wf: dict[str, list[AnnotatedDocument]] = defaultdict(list)
    for doc in docs:
        if predictions is not None:
            if doc.doc_id not in predictions:
                raise UsageError(f"no predictions for document {doc.doc_id!r}")
            doc = doc.with_mentions(predictions[doc.doc_id])
        elif matcher is not None:
            doc = doc.with_mentions(dictionary_ner(doc, matcher))
        by_wf[doc.workflow_id].append(doc)
    wanted = sorted(by_wf) if workflows is None else sorted(set(workflows))
    out = {}
    for wf in wanted:
        wf_docs = by_wf.get(wf, [])
        if not wf_docs:
            log.warning("workflow %s has no documents; it will score as all missed", wf)
        article = unique_tool_names(wf_docs, "article")
        code = unique_tool_names(wf_docs, "code")
        out[wf] = complete_unlinked(link_fn(article, code, wf), article, code)
    return out


def eval_pipeline(
    docs: Iterable[AnnotatedDocument],
    gold_links: Mapping[str, LinkSet],
    link_fn: Callable[[set, set, str], LinkSet],
    matcher: DictionaryMatcher | None = None,
    predictions: Mapping[str, list[Mention]] | None = None,
    averaging: str = "micro",
    strategy: str = "",
) -> tuple[EvalReport, dict[str, LinkSet]]:
    """Run detection and linking over the gold workflows and score the links.

    Documents of workflows absent from ``gold_links`` are ignored.
    """
    docs = [d for d in docs if d.workflow_id in gold_links]
    links = predict_links(docs, link_fn, matcher=matcher, predictions=predictions, workflows=gold_links.keys())
    report = eval_links(links, gold_links, averaging=averaging, strategy=strategy)
    return report, links


# -- output ---------------------------------------------------------------------


def write_reports_jsonl(path, reports: Iterable[EvalReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def format_table(reports: Iterable[EvalReport], per_workflow: bool = False) -> str:
    rows = [("strategy", "corpus", "avg", "TP", "FP", "FN", "P", "R", "F1")]
    for r in reports:
        rows.append(
            (r.strategy or "-", r.corpus or "-", r.averaging, str(r.tp), str(r.fp), str(r.fn),
             f"{100 * r.precision:.1f}", f"{100 * r.recall:.1f}", f"{100 * r.f1:.1f}")
        )
        if per_workflow:
            for wf, b in sorted(r.breakdown.items()):
                rows.append(
                    (f"  {wf}", "", "", str(b.tp), str(b.fp), str(b.fn),
                     f"{100 * b.precision:.1f}", f"{100 * b.recall:.1f}", f"{100 * b.f1:.1f}")
                )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for k, row in enumerate(rows):
        lines.append("  ".join(c.ljust(w) if i < 3 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
