import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import count_links

from toollink.corpus import Mention
from toollink.corpus.manifest import load_documents, read_corpus_manifest
from toollink.errors import UsageError
from toollink.evaluation import (
    EvalReport,
    aggregate,
    eval_links,
    eval_ner,
    eval_pipeline,
    format_table,
    prf,
    write_reports_jsonl,
)
from toollink.kb import KnowledgeBase
from toollink.linker import LinkRecord, LinkSet, complete_unlinked, link_exact, read_links_dir, read_links_tsv
from toollink.strategy import compile_strategy, parse_strategy


def m(doc, s, e, label="Tool", i=1):
    return Mention(f"T{i}", label, s, e, "x" * (e - s), doc)


def check_report(r: EvalReport):
    assert min(r.tp, r.fp, r.fn) >= 0
    for v in (r.precision, r.recall, r.f1):
        assert 0.0 <= v <= 1.0
    if r.averaging == "micro":
        assert (r.f1 == 0) == (r.tp == 0)
        p, rc = r.precision, r.recall
        assert r.f1 == pytest.approx(2 * p * rc / (p + rc) if p + rc else 0.0)
        assert r.f1 <= 2 * min(p, rc) + 1e-12
        assert r.f1 <= (p + rc) / 2 + 1e-12


# -- NER ------------------------------------------------------------------------------------


def test_ner_identity():
    gold = [m("d", 0, 3), m("d", 5, 9, i=2)]
    r = eval_ner(gold, gold)
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


def test_ner_empty_prediction():
    r = eval_ner([], [m("d", 0, 3)])
    assert (r.tp, r.fp, r.fn, r.precision, r.recall, r.f1) == (0, 0, 1, 0.0, 0.0, 0.0)


def test_ner_two_right_one_spurious():
    gold = [m("d", 0, 3), m("d", 5, 9), m("d", 10, 12)]
    pred = [m("d", 0, 3), m("d", 5, 9), m("d", 20, 22)]
    r = eval_ner(pred, gold)
    assert (r.tp, r.fp, r.fn) == (2, 1, 1)
    assert r.precision == r.recall == r.f1 == pytest.approx(2 / 3)


def test_ner_strict_offsets_and_labels():
    r = eval_ner([m("d", 0, 4), m("d", 5, 9, "Other")], [m("d", 0, 3), m("d", 5, 9)])
    assert r.tp == 0


def test_ner_unknown_docs_rejected():
    with pytest.raises(UsageError):
        eval_ner([m("zzz", 0, 1)], [], doc_ids=["d"])


def test_ner_per_workflow():
    gold = [m("a", 0, 1), m("b", 0, 1)]
    pred = [m("a", 0, 1)]
    r = eval_ner(pred, gold, workflow_of={"a": "w1", "b": "w2"})
    assert r.breakdown["w1"].f1 == 1.0 and r.breakdown["w2"].f1 == 0.0
    macro = eval_ner(pred, gold, workflow_of={"a": "w1", "b": "w2"}, averaging="macro")
    assert macro.f1 == pytest.approx(0.5)


spans = st.lists(st.tuples(st.sampled_from("ab"), st.integers(0, 5), st.integers(1, 3), st.sampled_from(["Tool", "X"])), max_size=12)


@given(spans, spans)
def test_ner_counting_invariants(p, g):
    pred = [m(d, s, s + w, lab) for d, s, w, lab in p]
    gold = [m(d, s, s + w, lab) for d, s, w, lab in g]
    r = eval_ner(pred, gold)
    assert r.tp + r.fn == len(gold)
    assert r.tp + r.fp == len(pred)
    check_report(r)


# -- links ------------------------------------------------------------------------------------


def test_links_identity(sample_tsv):
    gold = read_links_tsv(sample_tsv, "wf1")
    r = eval_links(gold, gold)
    assert (r.tp, r.fp, r.fn, r.f1) == (9, 0, 0, 1.0)


def test_links_normalizes_names(sample_tsv):
    gold = read_links_tsv(sample_tsv, "wf1")
    lowered = LinkSet("wf1", [LinkRecord(r.article_tool and r.article_tool.upper(), r.code_tool) for r in gold])
    assert eval_links(lowered, gold).f1 == 1.0


def test_links_all_unlinked_vs_all_linked():
    gold = link_exact({"a", "b"}, {"a", "b"}, "w")
    pred = complete_unlinked(LinkSet("w"), {"a", "b"}, {"a", "b"})
    assert eval_links(pred, gold).tp == 0


def test_links_empty_everything():
    r = eval_links(LinkSet("w"), LinkSet("w"))
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)


def test_links_unknown_workflow_rejected():
    with pytest.raises(UsageError):
        eval_links({"x": LinkSet("x")}, {"w": LinkSet("w")})


def test_missing_prediction_counts_as_misses():
    gold = {"w1": link_exact({"a"}, {"a"}, "w1"), "w2": link_exact({"b"}, {"b"}, "w2")}
    r = eval_links({"w1": gold["w1"]}, gold)
    assert (r.tp, r.fp, r.fn) == (1, 0, 1)


names = st.sampled_from(["a", "b", "c", "d"])
records = st.lists(st.tuples(st.one_of(st.none(), names), names), max_size=8)


def _ls(wf, recs):
    return LinkSet(wf, [LinkRecord(a, c) for a, c in recs])


@settings(max_examples=80)
@given(st.dictionaries(st.sampled_from(["w1", "w2", "w3"]), st.tuples(records, records), min_size=1))
def test_link_scoring_invariants(data):
    pred = {wf: _ls(wf, p) for wf, (p, _) in data.items()}
    gold = {wf: _ls(wf, g) for wf, (_, g) in data.items()}
    r = eval_links(pred, gold)
    check_report(r)
    # micro counts are sums of per-workflow counts, and each matches the counting oracle
    assert r.tp == sum(b.tp for b in r.breakdown.values())
    assert r.fp == sum(b.fp for b in r.breakdown.values())
    assert r.fn == sum(b.fn for b in r.breakdown.values())
    for wf in data:
        b = r.breakdown[wf]
        assert (b.tp, b.fp, b.fn) == count_links([x.pair for x in pred[wf]], [x.pair for x in gold[wf]])
    # identity
    nonempty = {wf: g for wf, g in gold.items() if len(g)}
    if nonempty:
        assert eval_links(nonempty, nonempty).f1 == 1.0
    # relabeling workflows changes nothing
    rename = {wf: f"renamed-{wf}" for wf in data}
    pred2 = {rename[wf]: LinkSet(rename[wf], ls) for wf, ls in pred.items()}
    gold2 = {rename[wf]: LinkSet(rename[wf], ls) for wf, ls in gold.items()}
    r2 = eval_links(pred2, gold2)
    assert (r2.tp, r2.fp, r2.fn, r2.f1) == (r.tp, r.fp, r.fn, r.f1)
    macro = eval_links(pred, gold, averaging="macro")
    assert macro.f1 == pytest.approx(sum(b.f1 for b in r.breakdown.values()) / len(r.breakdown))


def test_aggregate_rejects_unknown_averaging():
    with pytest.raises(UsageError):
        aggregate({}, "weighted")


def test_prf_zero_denominators():
    assert prf(0, 0, 0) == (0.0, 0.0, 0.0)


# -- pipeline -------------------------------------------------------------------------------


@pytest.fixture
def sample_docs(workspace):
    manifest = read_corpus_manifest(workspace.parent / "corpus" / "manifest.tsv")
    return load_documents(manifest), read_links_dir(workspace.parent / "gold")


def test_gold_ner_reduces_to_standalone_linking(sample_docs):
    docs, gold = sample_docs
    link_fn = compile_strategy(parse_strategy("exact"), {})
    report, links = eval_pipeline(docs, gold, link_fn)
    a, c = gold["wf1"].tool_sets()
    standalone = eval_links({"wf1": complete_unlinked(link_exact(a, c, "wf1"), a, c)}, gold)
    assert (report.tp, report.fp, report.fn) == (standalone.tp, standalone.fp, standalone.fn) == (3, 7, 6)


def test_empty_kbs_leave_everything_unlinked(sample_docs):
    docs, gold = sample_docs
    empty = {"bioconda": KnowledgeBase("bioconda")}
    link_fn = compile_strategy(parse_strategy("kb_bridge(bioconda)"), empty)
    report, links = eval_pipeline(docs, gold, link_fn)
    unlinked_gold = len(gold["wf1"].unlinked())
    n_pred = len(links["wf1"])
    assert all(not r.is_link for r in links["wf1"])
    assert report.tp == unlinked_gold == 2
    assert report.precision == pytest.approx(unlinked_gold / n_pred)
    assert report.recall == pytest.approx(unlinked_gold / len(gold["wf1"]))


def test_report_serialization(tmp_path):
    r = eval_links({"w": link_exact({"a"}, {"a"}, "w")}, {"w": link_exact({"a"}, {"a", "b"}, "w")}, strategy="exact")
    write_reports_jsonl(tmp_path / "r.jsonl", [r])
    (line,) = (tmp_path / "r.jsonl").read_text().splitlines()
    d = json.loads(line)
    assert {"strategy", "corpus", "tp", "fp", "fn", "precision", "recall", "f1", "per_workflow"} <= set(d)
    assert d["per_workflow"][0]["workflow_id"] == "w"
    table = format_table([r], per_workflow=True)
    assert "exact" in table and "100.0" in table
