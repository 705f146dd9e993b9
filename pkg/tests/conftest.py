from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from graphbook.ingest import load_content_store, load_exercises, load_native
from graphbook.model import CurriculumGraph, EdgeKind, PrerequisiteEdge, TopicNode

FIXTURES = Path(__file__).parent.parent / "fixtures"


def make_graph(edge_specs, discipline="test", extra_nodes=(), clusters=None, durations=None):
    """Small-graph helper: edge_specs like [("a", "b"), ("a", "c", "optional"), ("x", "c", "alt", "g1")]."""
    node_ids = set(extra_nodes)
    edges = []
    for spec in edge_specs:
        padded = list(spec) + [None] * (4 - len(spec))
        tail, head, kind, group = padded
        kind = kind or "required"
        node_ids.update((tail, head))
        edges.append(
            PrerequisiteEdge(
                tail=tail,
                head=head,
                kind=EdgeKind(kind if kind != "alt" else "alternative"),
                alt_group=group,
            )
        )
    clusters = clusters or {}
    durations = durations or {}
    nodes = [
        TopicNode(
            id=nid,
            title=nid.replace("_", " ").title(),
            cluster=clusters.get(nid),
            duration_minutes=durations.get(nid, 30),
        )
        for nid in sorted(node_ids)
    ]
    return CurriculumGraph.build(discipline=discipline, nodes=nodes, edges=edges)


def diamond():
    return make_graph([("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])


def random_dag(rng: random.Random, max_nodes: int = 8, edge_prob: float = 0.4,
               optional_prob: float = 0.0) -> CurriculumGraph:
    """Random DAG over shuffled labels (forward edges only, so acyclic)."""
    n = rng.randint(1, max_nodes)
    labels = [f"n{i:02d}" for i in range(n)]
    rng.shuffle(labels)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                kind = EdgeKind.OPTIONAL if rng.random() < optional_prob else EdgeKind.REQUIRED
                edges.append(PrerequisiteEdge(tail=labels[i], head=labels[j], kind=kind))
    return make_graph([], extra_nodes=labels) if not edges else CurriculumGraph.build(
        discipline="rand",
        nodes=[TopicNode(id=lab, title=lab, duration_minutes=30) for lab in sorted(labels)],
        edges=edges,
    )


@pytest.fixture(scope="session")
def latin32():
    g, report = load_native(FIXTURES / "latin-32.graph")
    assert report.ok
    return g


@pytest.fixture(scope="session")
def latin_full():
    g, report = load_native(FIXTURES / "latin-full-150.graph")
    assert report.ok
    return g


@pytest.fixture(scope="session")
def fixture_content():
    return load_content_store(FIXTURES / "content-manifest.tsv")


@pytest.fixture()
def fixture_exercises(latin32):
    return load_exercises(FIXTURES / "exercises.txt", latin32)


# --- acceptance reporting ---------------------------------------------------

_acceptance_results: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in str(item.fspath):
        _acceptance_results[item.name] = report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance_results.items()):
        label = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"{label:6s} {name}")
