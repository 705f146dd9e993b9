"""Interdisciplinary merging, cross-discipline scheduling checks, tag lookup.

Merging re-namespaces every node as "discipline:id" and joins the graphs
with Required cross edges; the result must still be a DAG, so a cycle that
only appears across the discipline boundary rejects the whole merge. The
tag side maps grammatical-analyzer tags onto graph nodes, turning analyzed
forms into external exercises bound to the competencies they require.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .book import Exercise, ExerciseKind
from .closure import predecessor_closure
from .model import (
    AltGroup,
    ClosurePolicy,
    ClosureResult,
    CurriculumGraph,
    EdgeKind,
    Finding,
    GraphbookError,
    PrerequisiteEdge,
    check_token,
)
from .sequencing import Linearization
from .validation import ensure_usable, validate_graph


@dataclass(frozen=True)
class CrossEdge:
    """Required prerequisite across two disciplines, in namespaced ids."""

    tail: str
    head: str

    def __post_init__(self):
        check_token(self.tail, "cross edge tail")
        check_token(self.head, "cross edge head")
        if discipline_of(self.tail) == discipline_of(self.head):
            raise ValueError(f"cross edge {self.tail}->{self.head} stays inside one discipline")


def discipline_of(namespaced_id: str) -> str:
    return namespaced_id.split(":", 1)[0]


class MergeError(GraphbookError):
    def __init__(self, code: str, message: str, cycle: list[str] | None = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.cycle = cycle


def merge_graphs(graphs: list[CurriculumGraph], cross: Iterable[CrossEdge]) -> CurriculumGraph:
    """Join per-discipline graphs into one namespaced graph.

    Every input must be individually valid; disciplines must be distinct.
    Raises MergeError(CYCLE) when the cross edges close a loop and
    MergeError(DANGLING_CROSS_EDGE) for endpoints that do not exist.
    """
    if not graphs:
        raise ValueError("merge needs at least one graph")
    disciplines = [g.discipline for g in graphs]
    if len(set(disciplines)) != len(disciplines):
        dupes = sorted({d for d in disciplines if disciplines.count(d) > 1})
        raise MergeError("DUPLICATE_DISCIPLINE", "duplicate discipline names: " + ", ".join(dupes))
    for g in graphs:
        ensure_usable(g)

    nodes = []
    edges: list[PrerequisiteEdge] = []
    groups: dict[str, AltGroup] = {}
    metadata: dict[str, str] = {"disciplines": ",".join(disciplines)}
    for g in graphs:
        prefix = g.discipline + ":"
        for node in g.nodes.values():
            nodes.append(
                type(node)(
                    id=prefix + node.id,
                    title=node.title,
                    cluster=node.cluster,
                    duration_minutes=node.duration_minutes,
                    page_estimate=node.page_estimate,
                    content_ref=node.content_ref,
                )
            )
        for e in g.edges:
            edges.append(
                PrerequisiteEdge(
                    tail=prefix + e.tail,
                    head=prefix + e.head,
                    kind=e.kind,
                    alt_group=(prefix + e.alt_group) if e.alt_group else None,
                )
            )
        for gid, group in g.alt_groups.items():
            groups[prefix + gid] = AltGroup(
                id=prefix + gid,
                head=prefix + group.head,
                members=tuple(
                    PrerequisiteEdge(
                        tail=prefix + m.tail,
                        head=prefix + m.head,
                        kind=m.kind,
                        alt_group=(prefix + m.alt_group) if m.alt_group else None,
                    )
                    for m in group.members
                ),
            )
        for k, v in g.metadata.items():
            metadata[f"{g.discipline}:{k}"] = v

    node_ids = {n.id for n in nodes}
    for ce in cross:
        missing = [x for x in (ce.tail, ce.head) if x not in node_ids]
        if missing:
            raise MergeError("DANGLING_CROSS_EDGE", "unknown endpoint(s): " + ", ".join(missing))
        edges.append(PrerequisiteEdge(tail=ce.tail, head=ce.head, kind=EdgeKind.REQUIRED))

    merged = CurriculumGraph.build(
        discipline="_".join(disciplines),
        nodes=nodes,
        edges=edges,
        alt_groups=groups,
        metadata=metadata,
    )
    report = validate_graph(merged)
    if not report.ok:
        cycle_findings = [f for f in report.errors if f.code == "CYCLE"]
        if cycle_findings:
            raise MergeError("CYCLE", cycle_findings[0].message, cycle=list(cycle_findings[0].ids))
        raise MergeError("INVALID_MERGE", "; ".join(f.message for f in report.errors))
    return merged


@dataclass(frozen=True)
class SyncFinding:
    status: str  # SATISFIABLE | VIOLATED | UNSCHEDULED
    tail: str
    head: str
    # tail must be covered before position `head_position` of head's
    # discipline order (0-based index of head in that order); -1 when the
    # endpoint is not scheduled in its discipline's order
    head_position: int
    tail_position: int
    tail_week: int | None = None
    head_week: int | None = None


def cross_edges_of(merged: CurriculumGraph) -> list[PrerequisiteEdge]:
    return sorted(
        (e for e in merged.edges if discipline_of(e.tail) != discipline_of(e.head)),
        key=lambda e: (e.tail, e.head),
    )


def sync_report(
    merged: CurriculumGraph,
    orders: Mapping[str, Linearization | tuple[str, ...] | list[str]],
    calendar: Mapping[str, Mapping[int, int]] | None = None,
) -> list[SyncFinding]:
    """Constraint findings for every cross-discipline edge.

    Each finding gives the position in the head's discipline order before
    which the tail's discipline must have covered the tail. With a joint
    calendar (discipline -> order index -> week) an edge is VIOLATED when
    the head is scheduled strictly before its cross-discipline tail.
    """

    def nodes_of(order) -> tuple[str, ...]:
        return order.nodes if isinstance(order, Linearization) else tuple(order)

    findings = []
    for e in cross_edges_of(merged):
        tail_disc = discipline_of(e.tail)
        head_disc = discipline_of(e.head)
        tail_order = orders.get(tail_disc)
        head_order = orders.get(head_disc)
        if tail_order is None or head_order is None:
            continue
        tail_nodes = nodes_of(tail_order)
        head_nodes = nodes_of(head_order)
        if e.tail not in tail_nodes or e.head not in head_nodes:
            findings.append(
                SyncFinding(
                    status="UNSCHEDULED",
                    tail=e.tail,
                    head=e.head,
                    head_position=head_nodes.index(e.head) if e.head in head_nodes else -1,
                    tail_position=tail_nodes.index(e.tail) if e.tail in tail_nodes else -1,
                )
            )
            continue
        tail_pos = tail_nodes.index(e.tail)
        head_pos = head_nodes.index(e.head)
        status = "SATISFIABLE"
        tail_week = head_week = None
        if calendar is not None:
            tail_week = calendar.get(tail_disc, {}).get(tail_pos)
            head_week = calendar.get(head_disc, {}).get(head_pos)
            if tail_week is not None and head_week is not None and head_week < tail_week:
                status = "VIOLATED"
        findings.append(
            SyncFinding(
                status=status,
                tail=e.tail,
                head=e.head,
                head_position=head_pos,
                tail_position=tail_pos,
                tail_week=tail_week,
                head_week=head_week,
            )
        )
    return findings


@dataclass
class TagIndex:
    """Map from grammatical tag (e.g. ablative_singular) to graph node ids."""

    entries: dict[str, frozenset[str]] = field(default_factory=dict)

    def validate_against(self, g: CurriculumGraph) -> list[Finding]:
        problems = []
        for tag, nodes in sorted(self.entries.items()):
            unknown = sorted(n for n in nodes if n not in g.nodes)
            if unknown:
                problems.append(
                    Finding("UNKNOWN_TAG_NODE", f"tag {tag} maps to unknown node(s)", tuple(unknown))
                )
        return problems


class NoMatchError(GraphbookError):
    def __init__(self, tags: list[str]):
        super().__init__("no node matches any tag: " + ", ".join(tags))
        self.tags = tags


@dataclass(frozen=True)
class CompetencyReport:
    direct_nodes: frozenset[str]
    closure: ClosureResult
    unknown_tags: tuple[str, ...]


def competency_lookup(
    index: TagIndex, tags: Iterable[str], g: CurriculumGraph, policy: ClosurePolicy | None = None
) -> CompetencyReport:
    """Resolve tags to nodes and pull in every competency they presuppose."""
    ensure_usable(g)
    tags = list(tags)
    direct: set[str] = set()
    unknown: list[str] = []
    for tag in tags:
        hits = index.entries.get(tag.lower())
        if hits is None:
            unknown.append(tag)
        else:
            direct.update(hits)
    if not direct:
        raise NoMatchError(unknown or tags)
    closure = predecessor_closure(g, direct, policy)
    return CompetencyReport(
        direct_nodes=frozenset(direct), closure=closure, unknown_tags=tuple(sorted(set(unknown)))
    )


def register_exercise_from_tags(
    index: TagIndex,
    tags: Iterable[str],
    prompt_ref: str,
    g: CurriculumGraph,
    difficulty: int | None = None,
) -> Exercise:
    """Build an external exercise on the tags' direct nodes.

    The competency set is the direct hits, not the closure: placement after
    the last direct node already happens after all their prerequisites.
    Deterministic id, so registering the same form twice is idempotent.
    """
    report = competency_lookup(index, tags, g)
    normalized = ",".join(sorted({t.lower() for t in tags}))
    digest = hashlib.sha256(f"{normalized}|{prompt_ref}".encode("utf-8")).hexdigest()[:12]
    return Exercise(
        id=f"tagex_{digest}",
        kind=ExerciseKind.EXTERNAL,
        nodes=tuple(sorted(report.direct_nodes)),
        prompt_ref=prompt_ref,
        difficulty=difficulty,
    )


@dataclass(frozen=True)
class AnalyzerEntry:
    form: str
    tags: tuple[str, ...]


@dataclass(frozen=True)
class AnalyzerBatch:
    exercises: tuple[Exercise, ...]
    reports: tuple[tuple[str, CompetencyReport], ...]  # (form, report)
    skipped: tuple[tuple[str, str], ...]  # (form, reason)


def exercises_from_analyzer_export(
    index: TagIndex, entries: Iterable[AnalyzerEntry], g: CurriculumGraph
) -> AnalyzerBatch:
    """One external exercise per analyzed form; unmatched forms are reported."""
    exercises = []
    reports = []
    skipped = []
    for entry in entries:
        try:
            report = competency_lookup(index, entry.tags, g)
        except NoMatchError as err:
            skipped.append((entry.form, str(err)))
            continue
        prompt_ref = "form_" + _slug(entry.form)
        exercises.append(register_exercise_from_tags(index, entry.tags, prompt_ref, g))
        reports.append((entry.form, report))
    return AnalyzerBatch(
        exercises=tuple(exercises), reports=tuple(reports), skipped=tuple(skipped)
    )


def _slug(text: str) -> str:
    out = []
    for ch in text.lower():
        if ch.isalnum():
            out.append(ch)
        elif out and out[-1] != "_":
            out.append("_")
    return "".join(out).strip("_") or "x"
