import pytest

from conftest import diamond, make_graph
from graphbook.model import (
    AltGroup,
    CurriculumGraph,
    EdgeKind,
    InvalidGraphError,
    PrerequisiteEdge,
    TopicNode,
)
from graphbook.validation import detect_cycle, ensure_usable, validate_graph

from oracles import linear_extensions_bruteforce


def codes(findings):
    return [f.code for f in findings]


def test_valid_chain_has_no_findings():
    report = validate_graph(make_graph([("a", "b"), ("b", "c")]))
    assert report.errors == []
    assert report.warnings == []


def test_two_cycle_witness():
    report = validate_graph(make_graph([("a", "b"), ("b", "a")]))
    assert codes(report.errors) == ["CYCLE"]
    assert report.errors[0].ids == ("a", "b", "a")


def test_singleton_group_is_error():
    g = make_graph([("x", "c", "alt", "g1"), ("a", "c")])
    # force a single-member group: drop the required edge from the group
    assert codes(validate_graph(g).errors) == ["SINGLETON_ALT_GROUP"]


def test_dangling_and_self_loop_and_duplicate():
    nodes = [TopicNode(id="a", title="a"), TopicNode(id="b", title="b")]
    edges = [
        PrerequisiteEdge(tail="a", head="b"),
        PrerequisiteEdge(tail="a", head="b"),
        PrerequisiteEdge(tail="a", head="a"),
        PrerequisiteEdge(tail="a", head="ghost"),
    ]
    report = validate_graph(CurriculumGraph.build("test", nodes, edges))
    assert codes(report.errors) == ["DANGLING_EDGE", "DUPLICATE_EDGE", "SELF_LOOP"]


def test_isolated_node_warning():
    g = make_graph([("a", "b")], extra_nodes=("island",))
    report = validate_graph(g)
    assert report.ok
    assert codes(report.warnings) == ["ISOLATED_NODE"]
    assert report.warnings[0].ids == ("island",)


def test_ungrouped_alternative_warning():
    nodes = [TopicNode(id=i, title=i) for i in ("a", "b")]
    edges = [PrerequisiteEdge(tail="a", head="b", kind=EdgeKind.ALTERNATIVE, alt_group="ghost_group")]
    g = CurriculumGraph(discipline="test", nodes={n.id: n for n in nodes}, edges=edges, alt_groups={})
    report = validate_graph(g)
    assert report.ok
    assert codes(report.warnings) == ["UNGROUPED_ALTERNATIVE_EDGE"]


def test_mixed_head_group_is_error():
    e1 = PrerequisiteEdge(tail="a", head="c", kind=EdgeKind.ALTERNATIVE, alt_group="g1")
    e2 = PrerequisiteEdge(tail="a", head="d", kind=EdgeKind.ALTERNATIVE, alt_group="g1")
    nodes = {i: TopicNode(id=i, title=i) for i in ("a", "c", "d")}
    g = CurriculumGraph(
        discipline="test",
        nodes=nodes,
        edges=[e1, e2],
        alt_groups={"g1": AltGroup(id="g1", head="c", members=(e1, e2))},
    )
    assert "ALT_GROUP_MIXED_HEADS" in codes(validate_graph(g).errors)


def test_detect_cycle_on_diamond_is_none():
    assert detect_cycle(diamond()) is None


def test_detect_cycle_triangle():
    assert detect_cycle(make_graph([("a", "b"), ("b", "c"), ("c", "a")])) == ["a", "b", "c", "a"]


def test_detect_cycle_picks_smallest_participant():
    # two cycles: {m, z} and {b, c}; the witness must run through b
    g = make_graph([("m", "z"), ("z", "m"), ("b", "c"), ("c", "b"), ("a", "b")])
    cycle = detect_cycle(g)
    assert cycle == ["b", "c", "b"]


def test_detect_cycle_self_loop():
    nodes = [TopicNode(id="a", title="a")]
    g = CurriculumGraph.build("test", nodes, [PrerequisiteEdge(tail="a", head="a")])
    assert detect_cycle(g) == ["a", "a"]


def test_latin32_fixture_is_acyclic(latin32):
    # independent confirmation: the permutation oracle finds at least one
    # valid order for the prop_causale closure subgraph
    assert detect_cycle(latin32) is None
    sub_nodes = ["prop_causale", "congiunzioni", "prop_principale", "ind_perf_att"]
    pairs = [
        (e.tail, e.head)
        for e in latin32.edges
        if e.tail in sub_nodes and e.head in sub_nodes
    ]
    assert linear_extensions_bruteforce(sub_nodes, pairs)


def test_ensure_usable_gate():
    cyclic = make_graph([("a", "b"), ("b", "a")])
    with pytest.raises(InvalidGraphError):
        ensure_usable(cyclic)
    ensure_usable(diamond())  # no raise
