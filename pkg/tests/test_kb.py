import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import components, random_kb_instance, reference_normalize

from toollink.errors import DuplicateEntryError, KBParseError, UsageError
from toollink.kb import (
    FusedKnowledgeBase,
    KnowledgeBase,
    ToolEntry,
    dump_fused,
    dump_kb,
    fuse,
    load_kb_file,
    load_kb_snapshot,
    lookup,
    normalize_name,
    read_manifest,
)


def snapshot(*records, source="bioconda"):
    return io.StringIO("".join(json.dumps({**r, "source": source}) + "\n" for r in records))


def entry(eid, *aliases, source="bioconda"):
    return ToolEntry(eid, source, aliases[0] if aliases else eid, tuple(aliases))


# -- normalize_name -------------------------------------------------------------


@pytest.mark.parametrize("raw, expected", [("Barrnap", "barrnap"), ("barrnap", "barrnap"), ("  RSEM\t", "rsem")])
def test_normalize_examples(raw, expected):
    assert normalize_name(raw) == expected
    assert reference_normalize(raw) == expected


def test_normalize_keeps_separators_unless_asked():
    assert normalize_name("rsem_prepare-reference") == "rsem_prepare-reference"
    assert normalize_name("rsem_prepare-reference", unify_separators=True) == "rsem-prepare-reference"


def test_normalize_collapses_inner_whitespace():
    assert normalize_name("BAsic  Rapid\n Ribosomal") == "basic rapid ribosomal"


@given(st.text())
def test_normalize_idempotent(s):
    once = normalize_name(s)
    assert normalize_name(once) == once


@given(st.text(alphabet=st.characters(max_codepoint=127)))
def test_normalize_matches_reference_on_ascii(s):
    assert normalize_name(s) == reference_normalize(s)


# -- load / lookup ----------------------------------------------------------------


def test_load_and_lookup_binary_alias():
    kb = load_kb_snapshot(
        snapshot({"id": "circularmapper", "name": "circularmapper",
                  "aliases": ["circularmapper", "circulargenerator", "realignsamfile"]}),
        "bioconda",
    )
    assert "circularmapper" in lookup(kb, "realignsamfile")


def test_empty_stream():
    kb = load_kb_snapshot(io.StringIO(""), "bioconda")
    assert len(kb) == 0
    assert lookup(kb, "anything") == frozenset()


def test_shared_alias_returns_both_ids():
    recs = [
        {"id": "rsem", "name": "rsem", "aliases": ["rsem", "rsem-bam2wig"]},
        {"id": "rsem-legacy", "name": "RSEM legacy", "aliases": ["RSEM"]},
        {"id": "other", "name": "other", "aliases": ["other"]},
    ]
    kb = load_kb_snapshot(snapshot(*recs), "bioconda")
    brute = {r["id"] for r in recs if "rsem" in {normalize_name(a) for a in r["aliases"] + [r["name"]]}}
    assert lookup(kb, "rsem") == brute == {"rsem", "rsem-legacy"}


def test_lookup_examples():
    kb = KnowledgeBase("bioconda", [entry("rsem", "rsem", "rsem-prepare-reference", "rsem-bam2wig"), entry("barrnap", "barrnap")])
    assert lookup(kb, "rsem-prepare-reference") == {"rsem"}
    assert lookup(kb, "nonexistent-tool-xyz") == frozenset()
    assert lookup(kb, "BARRNAP") == kb.alias_index[normalize_name("BARRNAP")] == {"barrnap"}


def test_primary_name_is_an_alias():
    kb = KnowledgeBase("bioweb", [ToolEntry("bw1", "bioweb", "Barrnap", ("BAsic Rapid Ribosomal RNA Predictor",))])
    assert lookup(kb, "barrnap") == {"bw1"}
    assert lookup(kb, "basic rapid  ribosomal rna predictor") == {"bw1"}


def test_alias_index_is_read_only():
    kb = KnowledgeBase("bioconda", [entry("a", "a")])
    with pytest.raises(TypeError):
        kb.alias_index["b"] = frozenset({"x"})


@pytest.mark.parametrize(
    "bad, fragment",
    [
        ("not json", "invalid JSON"),
        ('{"id": "x", "name": "x", "aliases": []}', "aliases"),
        ('{"id": "x", "aliases": ["x"]}', "name"),
        ('{"id": "x", "name": "x", "aliases": ["x"], "source": "biotools"}', "does not match"),
        ("[1, 2]", "not an object"),
    ],
)
def test_corrupt_record_names_its_line(bad, fragment):
    lines = [json.dumps({"id": f"t{i}", "name": f"t{i}", "aliases": [f"t{i}"]}) for i in range(6)]
    stream = io.StringIO("\n".join(lines + [bad]) + "\n")
    with pytest.raises(KBParseError) as err:
        load_kb_snapshot(stream, "bioconda", path="snap.jsonl")
    assert err.value.line == 7
    assert "line 7" in str(err.value) and fragment in str(err.value)


def test_duplicate_id_rejected():
    with pytest.raises(DuplicateEntryError):
        load_kb_snapshot(snapshot({"id": "a", "name": "a", "aliases": ["a"]}, {"id": "a", "name": "b", "aliases": ["b"]}), "bioconda")


def test_unknown_source_rejected():
    with pytest.raises(UsageError):
        load_kb_snapshot(io.StringIO(""), "pypi")


def test_case_variants_of_one_alias_collapse():
    e = ToolEntry("x", "bioconda", "Tool", ("tool", "TOOL", "other"))
    assert e.normalized_aliases() == {"tool", "other"}


# -- fusion -------------------------------------------------------------------------


def test_fuse_transitive_example():
    kb1 = KnowledgeBase("bioconda", [ToolEntry("A", "bioconda", "x", ("x", "y"))])
    kb2 = KnowledgeBase("bioweb", [ToolEntry("B", "bioweb", "y", ("y", "z"))])
    fused = fuse([kb1, kb2])
    assert len(fused.groups) == 1
    (group,) = fused.groups.values()
    assert group.alias_union == {"x", "y", "z"}
    assert group.member_entry_ids == {("bioconda", "A"), ("bioweb", "B")}
    assert fused.lookup("x") == fused.lookup("z") == {group.group_id}


def test_fuse_disjoint_keeps_every_entry_apart():
    kb1 = KnowledgeBase("bioconda", [entry("a", "a"), entry("b", "b")])
    kb2 = KnowledgeBase("bioweb", [entry("c", "c", source="bioweb")])
    assert len(fuse([kb1, kb2]).groups) == 3


def test_fuse_chain_through_three_sources():
    kb1 = KnowledgeBase("bioconda", [entry("a", "p", "q")])
    kb2 = KnowledgeBase("biotools", [entry("b", "q", "r", source="biotools")])
    kb3 = KnowledgeBase("bioweb", [entry("c", "r", "s", source="bioweb"), entry("d", "t", source="bioweb")])
    fused = fuse([kb1, kb2, kb3])
    assert fused.partition() == {
        frozenset({("bioconda", "a"), ("biotools", "b"), ("bioweb", "c")}),
        frozenset({("bioweb", "d")}),
    }


def test_fuse_random_50_entries_80_edges():
    rng = random.Random(50)
    nodes, aliases, records = random_kb_instance(rng, max_entries=50, max_edges=80)
    kbs = [load_kb_snapshot((json.dumps(r) for r in recs), src) for src, recs in records.items()]
    expected = components(nodes, {n: {a.lower() for a in aliases[n]} for n in nodes})
    assert fuse(kbs).partition() == expected


def test_fuse_needs_input():
    with pytest.raises(UsageError):
        fuse([])


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_fuse_order_insensitive(rng):
    _, _, records = random_kb_instance(rng, max_entries=20, max_edges=25)
    kbs = [load_kb_snapshot((json.dumps(r) for r in recs), src) for src, recs in records.items()]
    a = fuse(kbs)
    b = fuse(list(reversed(kbs)))
    assert a.partition() == b.partition()
    assert {g.group_id: g.alias_union for g in a.groups.values()} == {g.group_id: g.alias_union for g in b.groups.values()}


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_fusion_groups_partition_entries(rng):
    nodes, _, records = random_kb_instance(rng, max_entries=30, max_edges=30)
    kbs = [load_kb_snapshot((json.dumps(r) for r in recs), src) for src, recs in records.items()]
    fused = fuse(kbs)
    members = [m for g in fused.groups.values() for m in g.member_entry_ids]
    assert sorted(members) == sorted(nodes)
    # every alias resolves to exactly one group
    assert all(len(ids) == 1 for ids in fused.alias_index.values())


# -- persistence ----------------------------------------------------------------------


def test_dump_and_reload(tmp_path):
    kb = KnowledgeBase("bioconda", [entry("b", "b", "bb"), entry("a", "a"), entry("c", "c")])
    manifest = dump_kb(kb, tmp_path / "bioconda.jsonl", "2025-01-01")
    assert manifest["record_count"] == 3
    assert read_manifest(tmp_path / "bioconda.jsonl")["record_count"] == 3
    back = load_kb_file(tmp_path / "bioconda.jsonl")
    assert isinstance(back, KnowledgeBase)
    assert dict(back.alias_index) == dict(kb.alias_index)
    first = (tmp_path / "bioconda.jsonl").read_bytes()
    dump_kb(back, tmp_path / "bioconda.jsonl", "2025-01-01")
    assert (tmp_path / "bioconda.jsonl").read_bytes() == first


def test_manifest_count_mismatch_is_detected(tmp_path):
    kb = KnowledgeBase("bioconda", [entry("a", "a"), entry("b", "b")])
    dump_kb(kb, tmp_path / "bioconda.jsonl")
    p = tmp_path / "bioconda.jsonl"
    p.write_text(p.read_text().splitlines()[0] + "\n")
    with pytest.raises(KBParseError):
        load_kb_file(p)


def test_fused_round_trip(tmp_path):
    kb1 = KnowledgeBase("bioconda", [ToolEntry("A", "bioconda", "x", ("x", "y"))])
    kb2 = KnowledgeBase("bioweb", [ToolEntry("B", "bioweb", "y", ("y", "z")), ToolEntry("C", "bioweb", "w", ())])
    fused = fuse([kb1, kb2])
    dump_fused(fused, tmp_path / "fusion.jsonl")
    back = load_kb_file(tmp_path / "fusion.jsonl")
    assert isinstance(back, FusedKnowledgeBase)
    assert back.partition() == fused.partition()
    assert dict(back.alias_index) == dict(fused.alias_index)
