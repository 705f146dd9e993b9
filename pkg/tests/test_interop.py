import pytest

from conftest import FIXTURES, make_graph
from graphbook.closure import predecessor_closure
from graphbook.ingest import load_cross_edges, load_native
from graphbook.interop import (
    AnalyzerEntry,
    CrossEdge,
    MergeError,
    NoMatchError,
    competency_lookup,
    cross_edges_of,
    exercises_from_analyzer_export,
    merge_graphs,
    register_exercise_from_tags,
    sync_report,
)
from graphbook.validation import validate_graph

from oracles import closure_oracle


def test_cross_edge_must_span_disciplines():
    CrossEdge(tail="latin:a", head="greek:b")
    with pytest.raises(ValueError):
        CrossEdge(tail="latin:a", head="latin:b")


def test_merge_disjoint_chains():
    g1 = make_graph([("a", "b")], discipline="latin")
    g2 = make_graph([("a", "b")], discipline="greek")
    merged = merge_graphs([g1, g2], [])
    assert set(merged.nodes) == {"latin:a", "latin:b", "greek:a", "greek:b"}
    assert len(merged.edges) == 2
    assert validate_graph(merged).ok
    assert merged.discipline == "latin_greek"


def test_merge_node_count_is_sum():
    g1 = make_graph([("a", "b"), ("b", "c")], discipline="latin")
    g2 = make_graph([("a", "x")], discipline="greek")
    merged = merge_graphs([g1, g2], [CrossEdge(tail="latin:c", head="greek:a")])
    assert len(merged.nodes) == len(g1.nodes) + len(g2.nodes)


def test_merge_rejects_duplicate_disciplines():
    g1 = make_graph([("a", "b")], discipline="latin")
    g2 = make_graph([("x", "y")], discipline="latin")
    with pytest.raises(MergeError) as excinfo:
        merge_graphs([g1, g2], [])
    assert excinfo.value.code == "DUPLICATE_DISCIPLINE"


def test_merge_rejects_cross_cycle():
    g1 = make_graph([("a", "b")], discipline="latin")
    g2 = make_graph([("x", "y")], discipline="greek")
    cross = [CrossEdge(tail="latin:b", head="greek:x"), CrossEdge(tail="greek:y", head="latin:a")]
    with pytest.raises(MergeError) as excinfo:
        merge_graphs([g1, g2], cross)
    assert excinfo.value.code == "CYCLE"
    assert excinfo.value.cycle


def test_merge_rejects_dangling_cross_edge():
    g1 = make_graph([("a", "b")], discipline="latin")
    g2 = make_graph([("x", "y")], discipline="greek")
    with pytest.raises(MergeError) as excinfo:
        merge_graphs([g1, g2], [CrossEdge(tail="latin:ghost", head="greek:x")])
    assert excinfo.value.code == "DANGLING_CROSS_EDGE"


def test_merge_closure_crosses_boundary(latin32):
    italiano, report = load_native(FIXTURES / "italiano-5.graph")
    assert report.ok
    cross = load_cross_edges(FIXTURES / "cross-latin-italiano.txt")
    merged = merge_graphs([latin32, italiano], cross)
    assert validate_graph(merged).ok
    closure = predecessor_closure(merged, {"latin:prop_causale"})
    # italian analysis units feed latin syntax across the boundary
    assert "italiano:analisi_logica" in closure.nodes
    assert "italiano:nome_genere" in closure.nodes
    # oracle check over the merged edge set
    ids = sorted(merged.nodes)
    pairs = [(e.tail, e.head) for e in merged.edges]
    assert closure.nodes == closure_oracle(ids, pairs, {"latin:prop_causale"})


def test_merge_cycle_fixture_rejected(latin32):
    italiano, _ = load_native(FIXTURES / "italiano-5.graph")
    cross = load_cross_edges(FIXTURES / "cross-cycle.txt")
    with pytest.raises(MergeError) as excinfo:
        merge_graphs([latin32, italiano], cross)
    assert excinfo.value.code == "CYCLE"


def test_merge_carries_groups_namespaced():
    g1 = make_graph([("x", "c", "alt", "g1"), ("y", "c", "alt", "g1")], discipline="latin")
    g2 = make_graph([("p", "q")], discipline="greek")
    merged = merge_graphs([g1, g2], [])
    assert set(merged.alt_groups) == {"latin:g1"}
    group = merged.alt_groups["latin:g1"]
    assert group.head == "latin:c"
    assert group.member_tails() == ("latin:x", "latin:y")
    # grouped closure still resolves after namespacing
    closure = predecessor_closure(merged, {"latin:c"})
    assert closure.resolved_groups["latin:g1"].tail == "latin:x"


# --- sync reports -------------------------------------------------------------


def merged_pair():
    g1 = make_graph([("a", "b")], discipline="latin")
    g2 = make_graph([("x", "y")], discipline="greek")
    return merge_graphs([g1, g2], [CrossEdge(tail="greek:y", head="latin:a")])


def test_sync_satisfiable_with_calendar():
    merged = merged_pair()
    orders = {"latin": ("latin:a", "latin:b"), "greek": ("greek:x", "greek:y")}
    calendar = {"latin": {0: 3, 1: 4}, "greek": {0: 1, 1: 2}}
    findings = sync_report(merged, orders, calendar)
    assert len(findings) == 1
    f = findings[0]
    assert f.status == "SATISFIABLE"
    assert (f.tail, f.head) == ("greek:y", "latin:a")
    assert f.head_position == 0 and f.tail_position == 1


def test_sync_violated_when_head_scheduled_first():
    merged = merged_pair()
    orders = {"latin": ("latin:a", "latin:b"), "greek": ("greek:x", "greek:y")}
    calendar = {"latin": {0: 1, 1: 2}, "greek": {0: 2, 1: 3}}
    findings = sync_report(merged, orders, calendar)
    assert findings[0].status == "VIOLATED"


def test_sync_empty_without_cross_edges():
    g1 = make_graph([("a", "b")], discipline="latin")
    g2 = make_graph([("x", "y")], discipline="greek")
    merged = merge_graphs([g1, g2], [])
    assert cross_edges_of(merged) == []
    assert sync_report(merged, {"latin": ("latin:a", "latin:b")}) == []


# --- tag lookup and analyzer adapter --------------------------------------------


def fixture_index(latin32):
    from graphbook.ingest import load_tag_index

    return load_tag_index(FIXTURES / "tags.tsv", latin32)


def test_competency_lookup_with_closure(latin32):
    index = fixture_index(latin32)
    report = competency_lookup(index, ["causal_clause"], latin32)
    assert report.direct_nodes == {"prop_causale"}
    expected = closure_oracle(
        sorted(latin32.nodes), [(e.tail, e.head) for e in latin32.edges], {"prop_causale"}
    )
    assert report.closure.nodes == expected


def test_unknown_tags_reported_not_fatal(latin32):
    index = fixture_index(latin32)
    report = competency_lookup(index, ["causal_clause", "made_up_tag"], latin32)
    assert report.unknown_tags == ("made_up_tag",)
    with pytest.raises(NoMatchError):
        competency_lookup(index, ["made_up_tag"], latin32)


def test_duplicate_tag_hits_deduplicated(latin32):
    index = fixture_index(latin32)
    report = competency_lookup(index, ["accusative_singular", "ablative_singular"], latin32)
    assert report.direct_nodes == {"casi", "prima_decl"}


def test_register_exercise_idempotent(latin32):
    index = fixture_index(latin32)
    e1 = register_exercise_from_tags(index, ["causal_clause", "copula"], "x_quia_sentence", latin32)
    e2 = register_exercise_from_tags(index, ["copula", "causal_clause"], "x_quia_sentence", latin32)
    assert e1.id == e2.id
    assert e1.nodes == ("prop_causale", "verbo_sum")
    assert e1.kind.value == "external"


def test_analyzer_batch_of_three(latin32):
    from graphbook.ingest import load_analyzer_export

    index = fixture_index(latin32)
    entries = load_analyzer_export(FIXTURES / "analyzer-export.tsv")
    assert len(entries) == 3
    batch = exercises_from_analyzer_export(index, entries, latin32)
    assert len(batch.exercises) == 3
    assert batch.skipped == ()
    by_form = dict(batch.reports)
    assert by_form["rosam"].direct_nodes == {"casi", "prima_decl"}
    assert by_form["laudaverunt"].direct_nodes == {"ind_perf_att"}
    assert batch.exercises[0].prompt_ref == "form_rosam"


def test_analyzer_batch_skips_unmatched(latin32):
    index = fixture_index(latin32)
    entries = [AnalyzerEntry(form="zzz", tags=("no_such_tag",))]
    batch = exercises_from_analyzer_export(index, entries, latin32)
    assert batch.exercises == ()
    assert batch.skipped[0][0] == "zzz"


def test_tag_exercise_satisfies_placement(latin32, fixture_content):
    from graphbook.book import place_exercises
    from graphbook.sequencing import topological_order

    index = fixture_index(latin32)
    exercise = register_exercise_from_tags(index, ["perfect_indicative_active"], "x_laudaverunt", latin32)
    closure = predecessor_closure(latin32, {"prop_causale"})
    order = topological_order(closure)
    items, omitted = place_exercises(order, [exercise])
    assert omitted == []
    idx = {item.ref: i for i, item in enumerate(items)}
    assert idx[exercise.id] > idx["ind_perf_att"]
