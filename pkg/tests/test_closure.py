import random

import pytest

from conftest import diamond, make_graph
from graphbook.closure import (
    direct_predecessors,
    direct_successors,
    enumerate_closures,
    predecessor_closure,
)
from graphbook.model import (
    ClosurePolicy,
    ExplicitChoiceError,
    InvalidGraphError,
    Resolution,
    UnknownNodeError,
    UnresolvedGroupError,
)

from oracles import closure_oracle


def test_chain_closure():
    g = make_graph([("a", "b"), ("b", "c")])
    closure = predecessor_closure(g, {"c"})
    assert closure.nodes == {"a", "b", "c"}
    assert closure.targets == {"c"}


def test_optional_excluded_by_default():
    g = make_graph([("a", "c"), ("b", "c", "optional")])
    closure = predecessor_closure(g, {"c"})
    assert closure.nodes == {"a", "c"}
    assert {(e.tail, e.head) for e in closure.skipped_optional} == {("b", "c")}


def test_optional_included_on_request():
    g = make_graph([("a", "c"), ("b", "c", "optional")])
    closure = predecessor_closure(g, {"c"}, ClosurePolicy(include_optional=True))
    assert closure.nodes == {"a", "b", "c"}
    assert closure.skipped_optional == frozenset()


def test_minimal_closure_picks_smaller_branch():
    # group {x->c, y->c}: closure(x) = {x}, closure(y) = {y, w}
    g = make_graph(
        [("x", "c", "alt", "g1"), ("y", "c", "alt", "g1"), ("w", "y")]
    )
    closure = predecessor_closure(g, {"c"})
    # brute force over both resolutions: {x,c} (2) vs {w,y,c} (3)
    assert closure.nodes == {"x", "c"}
    assert closure.resolved_groups["g1"].tail == "x"


def test_minimal_closure_tie_breaks_by_tail_id():
    g = make_graph([("x", "c", "alt", "g1"), ("y", "c", "alt", "g1")])
    closure = predecessor_closure(g, {"c"})
    assert closure.resolved_groups["g1"].tail == "x"


def test_preferred_list_resolution():
    g = make_graph([("x", "c", "alt", "g1"), ("y", "c", "alt", "g1"), ("w", "y")])
    policy = ClosurePolicy(resolution=Resolution.PREFERRED, preferred=("y",))
    closure = predecessor_closure(g, {"c"}, policy)
    assert closure.nodes == {"w", "y", "c"}
    # preference misses every member -> falls back to minimal
    policy = ClosurePolicy(resolution=Resolution.PREFERRED, preferred=("nope",))
    assert predecessor_closure(g, {"c"}, policy).nodes == {"x", "c"}


def test_explicit_resolution_and_choice_errors():
    g = make_graph([("x", "c", "alt", "g1"), ("y", "c", "alt", "g1"), ("w", "y")])
    policy = ClosurePolicy(resolution=Resolution.EXPLICIT, choices={"g1": "y"})
    assert predecessor_closure(g, {"c"}, policy).nodes == {"w", "y", "c"}

    with pytest.raises(ExplicitChoiceError):
        predecessor_closure(g, {"c"}, ClosurePolicy(resolution=Resolution.EXPLICIT, choices={"g1": "zz"}))
    with pytest.raises(ExplicitChoiceError):
        predecessor_closure(g, {"c"}, ClosurePolicy(resolution=Resolution.EXPLICIT, choices={"nope": "x"}))


def test_explicit_missing_choice_raises_choice_points():
    g = make_graph([("x", "c", "alt", "g1"), ("y", "c", "alt", "g1"), ("w", "y")])
    with pytest.raises(UnresolvedGroupError) as excinfo:
        predecessor_closure(g, {"c"}, ClosurePolicy(resolution=Resolution.EXPLICIT))
    (cp,) = excinfo.value.choice_points
    assert cp.group_id == "g1"
    assert cp.head == "c"
    assert cp.members == (("x", 1), ("y", 2))  # member tails with recursive closure sizes


def test_enrolled_required_edge_loses_standalone_necessity():
    # black a->c enrolled with red x->c: choosing x must NOT pull a
    g = make_graph([("a", "c", "required", "g1"), ("x", "c", "alt", "g1"), ("p", "a")])
    policy = ClosurePolicy(resolution=Resolution.EXPLICIT, choices={"g1": "x"})
    closure = predecessor_closure(g, {"c"}, policy)
    assert closure.nodes == {"x", "c"}


def test_required_grouped_edge_still_counts_when_chosen():
    g = make_graph([("a", "c", "required", "g1"), ("x", "c", "alt", "g1"), ("p", "a")])
    policy = ClosurePolicy(resolution=Resolution.EXPLICIT, choices={"g1": "a"})
    closure = predecessor_closure(g, {"c"}, policy)
    assert closure.nodes == {"p", "a", "c"}


def test_unknown_target_and_cyclic_rejection():
    g = diamond()
    with pytest.raises(UnknownNodeError):
        predecessor_closure(g, {"ghost"})
    with pytest.raises(ValueError):
        predecessor_closure(g, set())
    cyclic = make_graph([("a", "b"), ("b", "a")])
    with pytest.raises(InvalidGraphError):
        predecessor_closure(cyclic, {"a"})


def test_closure_minimality_exhaustive_small():
    g = make_graph([("a", "b"), ("b", "d"), ("c", "d"), ("e", "a", "optional")])
    closure = predecessor_closure(g, {"d"})
    required_pairs = [(e.tail, e.head) for e in g.edges if e.kind.value == "required"]
    for nid in closure.nodes - closure.targets:
        remaining = closure.nodes - {nid}
        broken = any(t in remaining and s not in remaining for s, t in required_pairs)
        assert broken, f"{nid} is not load-bearing"


def test_direct_predecessors_and_successors():
    g = diamond()
    preds = direct_predecessors(g, "d")
    assert [(e.tail, e.head) for e in preds] == [("b", "d"), ("c", "d")]
    assert direct_predecessors(g, "a") == []
    succs = direct_successors(g, "a")
    assert [(e.tail, e.head) for e in succs] == [("a", "b"), ("a", "c")]
    with pytest.raises(UnknownNodeError):
        direct_predecessors(g, "ghost")


def test_latin32_fixture_predecessors(latin32):
    preds = direct_predecessors(latin32, "prop_causale")
    assert [(e.tail, e.head) for e in preds] == [
        ("congiunzioni", "prop_causale"),
        ("ind_perf_att", "prop_causale"),
    ]


def test_latin32_closure_matches_matrix_oracle(latin32):
    pairs = [(e.tail, e.head) for e in latin32.edges]
    ids = sorted(latin32.nodes)
    for target in ids:
        expected = closure_oracle(ids, pairs, {target})
        assert predecessor_closure(latin32, {target}).nodes == expected


def test_closure_oracle_on_random_group_free_dags():
    rng = random.Random(7)
    from conftest import random_dag

    for _ in range(40):
        g = random_dag(rng, max_nodes=16)
        ids = sorted(g.nodes)
        pairs = [(e.tail, e.head) for e in g.edges]
        targets = set(rng.sample(ids, rng.randint(1, min(3, len(ids)))))
        assert predecessor_closure(g, targets).nodes == closure_oracle(ids, pairs, targets)


def test_enumerate_no_groups_single_result():
    g = make_graph([("a", "b"), ("b", "c")])
    results, truncated = enumerate_closures(g, {"c"}, cap=10)
    assert len(results) == 1 and not truncated
    assert results[0].nodes == {"a", "b", "c"}


def test_enumerate_one_group_two_results():
    g = make_graph([("x", "c", "alt", "g1"), ("y", "c", "alt", "g1"), ("w", "y")])
    results, truncated = enumerate_closures(g, {"c"}, cap=10)
    assert [sorted(r.nodes) for r in results] == [["c", "x"], ["c", "w", "y"]]
    assert not truncated


def test_enumerate_two_groups_deduplicated():
    # brute force over the 4 choice vectors: two of them coincide on node sets
    g = make_graph(
        [
            ("x", "c", "alt", "g1"),
            ("y", "c", "alt", "g1"),
            ("x", "d", "alt", "g2"),
            ("z", "d", "alt", "g2"),
            ("c", "top"),
            ("d", "top"),
        ]
    )
    results, truncated = enumerate_closures(g, {"top"}, cap=10)
    node_sets = [frozenset(r.nodes) for r in results]
    assert len(node_sets) == len(set(node_sets)) <= 4
    assert frozenset({"x", "c", "d", "top"}) in node_sets  # x satisfies both groups
    assert not truncated
    # ordering: ascending by size then node list
    sizes = [len(r.nodes) for r in results]
    assert sizes == sorted(sizes)


def test_enumerate_cap_truncates():
    g = make_graph([("x", "c", "alt", "g1"), ("y", "c", "alt", "g1")])
    results, truncated = enumerate_closures(g, {"c"}, cap=1)
    assert len(results) == 1 and truncated
    with pytest.raises(ValueError):
        enumerate_closures(g, {"c"}, cap=0)


def test_closure_determinism(latin32):
    a = predecessor_closure(latin32, {"prop_causale", "compl_luogo"})
    b = predecessor_closure(latin32, {"prop_causale", "compl_luogo"})
    assert a == b
    assert repr(a.sorted_nodes()) == repr(b.sorted_nodes())
