"""Domain model: topic units, typed prerequisite edges and the curriculum graph.

A curriculum graph is a DAG whose nodes are self-contained teaching units
and whose directed edges state "tail must be taught before head". Edges come
in three strengths: Required (unconditional), Optional (recommended, can be
left out of a book) and Alternative (necessary but substitutable inside an
AltGroup of sibling in-edges, of which at least one must be satisfied).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

TOKEN_RE = re.compile(r"^[a-z0-9_:-]+$")


class GraphbookError(Exception):
    """Base class for all engine errors."""


class UnknownNodeError(GraphbookError):
    def __init__(self, node_id: str):
        super().__init__(f"unknown node id: {node_id}")
        self.node_id = node_id


class ExplicitChoiceError(GraphbookError):
    """An explicit group choice names a group or member that does not exist."""


class InvalidGraphError(GraphbookError):
    """Operation invoked on a graph whose validation report has errors."""

    def __init__(self, report):
        codes = ", ".join(sorted({f.code for f in report.errors}))
        super().__init__(f"graph has validation errors: {codes}")
        self.report = report


class UnresolvedGroupError(GraphbookError):
    """Explicit resolution reached alternative groups without a supplied choice.

    Carries the choice points so interactive callers can ask the user and retry.
    """

    def __init__(self, choice_points: list["ChoicePoint"]):
        ids = ", ".join(cp.group_id for cp in choice_points)
        super().__init__(f"unresolved alternative groups: {ids}")
        self.choice_points = choice_points


def check_token(value: str, what: str) -> str:
    if not TOKEN_RE.match(value):
        raise ValueError(f"{what} is not a valid token: {value!r}")
    return value


class EdgeKind(Enum):
    REQUIRED = "required"
    OPTIONAL = "optional"
    ALTERNATIVE = "alternative"

    @property
    def rank(self) -> int:
        return _KIND_RANK[self]


_KIND_RANK = {EdgeKind.REQUIRED: 0, EdgeKind.OPTIONAL: 1, EdgeKind.ALTERNATIVE: 2}


@dataclass(frozen=True)
class TopicNode:
    """One self-contained teaching unit (a lesson)."""

    id: str
    title: str
    cluster: Optional[str] = None
    duration_minutes: int = 30
    page_estimate: Optional[float] = None
    content_ref: Optional[str] = None

    def __post_init__(self):
        check_token(self.id, "node id")
        if self.cluster is not None:
            check_token(self.cluster, "cluster")
        if self.content_ref is not None:
            check_token(self.content_ref, "content_ref")
        if self.duration_minutes < 1:
            raise ValueError(f"duration_minutes must be >= 1, got {self.duration_minutes}")
        if self.page_estimate is not None and self.page_estimate <= 0:
            raise ValueError("page_estimate must be positive")


@dataclass(frozen=True)
class PrerequisiteEdge:
    """Directed edge: tail must be covered before head.

    alt_group is set on Alternative edges and on Required edges that were
    enrolled into a group (enrolled edges lose stand-alone necessity; the
    group as a whole is the obligation).
    """

    tail: str
    head: str
    kind: EdgeKind = EdgeKind.REQUIRED
    alt_group: Optional[str] = None

    def __post_init__(self):
        check_token(self.tail, "edge tail")
        check_token(self.head, "edge head")
        if self.alt_group is not None:
            check_token(self.alt_group, "alt_group")
        if self.kind is EdgeKind.ALTERNATIVE and self.alt_group is None:
            raise ValueError(f"alternative edge {self.tail}->{self.head} needs an alt_group")
        if self.kind is EdgeKind.OPTIONAL and self.alt_group is not None:
            raise ValueError(f"optional edge {self.tail}->{self.head} cannot join a group")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.tail, self.head, self.kind.value)


@dataclass(frozen=True)
class AltGroup:
    """A set of in-edges to one head of which at least one must be satisfied."""

    id: str
    head: str
    members: tuple[PrerequisiteEdge, ...]

    def member_tails(self) -> tuple[str, ...]:
        return tuple(sorted(e.tail for e in self.members))


@dataclass(frozen=True)
class ChoicePoint:
    """One unresolved alternative group, with each member's own closure size."""

    group_id: str
    head: str
    members: tuple[tuple[str, int], ...]  # (tail, size of tail's recursive closure)


@dataclass
class CurriculumGraph:
    """Validated-on-demand DAG of topic units plus the alternative-group table.

    Immutable by convention after construction: every algorithm treats it as
    read-only, so unlimited concurrent readers are safe.
    """

    discipline: str
    nodes: dict[str, TopicNode]
    edges: list[PrerequisiteEdge]
    alt_groups: dict[str, AltGroup] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)
    duplicate_node_ids: tuple[str, ...] = ()

    def __post_init__(self):
        check_token(self.discipline, "discipline")
        self._in_edges: Optional[dict[str, list[PrerequisiteEdge]]] = None
        self._out_edges: Optional[dict[str, list[PrerequisiteEdge]]] = None

    @classmethod
    def build(
        cls,
        discipline: str,
        nodes: Iterable[TopicNode],
        edges: Iterable[PrerequisiteEdge],
        alt_groups: Mapping[str, AltGroup] | None = None,
        metadata: Mapping[str, str] | None = None,
    ) -> "CurriculumGraph":
        """Build a graph from node/edge sequences, remembering duplicate ids.

        Duplicates cannot be represented in the id->node map, so they are
        recorded for validate_graph to report; the first declaration wins.
        """
        node_map: dict[str, TopicNode] = {}
        dups: list[str] = []
        for node in nodes:
            if node.id in node_map:
                dups.append(node.id)
            else:
                node_map[node.id] = node
        if alt_groups is None:
            alt_groups = infer_alt_groups(edges := list(edges))
        else:
            edges = list(edges)
            alt_groups = dict(alt_groups)
        return cls(
            discipline=discipline,
            nodes=node_map,
            edges=edges,
            alt_groups=dict(alt_groups),
            metadata=dict(metadata or {}),
            duplicate_node_ids=tuple(sorted(set(dups))),
        )

    # Adjacency is cached lazily; safe because the graph is never mutated
    # after publication.
    def in_edges(self, node_id: str) -> list[PrerequisiteEdge]:
        if self._in_edges is None:
            index: dict[str, list[PrerequisiteEdge]] = {nid: [] for nid in self.nodes}
            for e in self.edges:
                index.setdefault(e.head, []).append(e)
            self._in_edges = index
        return self._in_edges.get(node_id, [])

    def out_edges(self, node_id: str) -> list[PrerequisiteEdge]:
        if self._out_edges is None:
            index: dict[str, list[PrerequisiteEdge]] = {nid: [] for nid in self.nodes}
            for e in self.edges:
                index.setdefault(e.tail, []).append(e)
            self._out_edges = index
        return self._out_edges.get(node_id, [])

    def groups_into(self, head: str) -> list[AltGroup]:
        return sorted((g for g in self.alt_groups.values() if g.head == head), key=lambda g: g.id)

    def require_node(self, node_id: str) -> TopicNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None


def infer_alt_groups(edges: Iterable[PrerequisiteEdge]) -> dict[str, AltGroup]:
    """Collect edges carrying an alt_group label into AltGroup objects."""
    by_group: dict[str, list[PrerequisiteEdge]] = {}
    for e in edges:
        if e.alt_group is not None:
            by_group.setdefault(e.alt_group, []).append(e)
    groups = {}
    for gid, members in by_group.items():
        members = sorted(members, key=lambda e: (e.tail, e.head))
        groups[gid] = AltGroup(id=gid, head=members[0].head, members=tuple(members))
    return groups


class Resolution(Enum):
    """How alternative groups encountered during a closure get resolved."""

    MINIMAL = "minimal"
    PREFERRED = "preferred"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class ClosurePolicy:
    include_optional: bool = False
    resolution: Resolution = Resolution.MINIMAL
    preferred: tuple[str, ...] = ()
    choices: Mapping[str, str] = field(default_factory=dict)  # group id -> chosen member tail

    def __post_init__(self):
        # freeze the mapping so the policy is hashable-by-value in practice
        object.__setattr__(self, "choices", dict(self.choices))


@dataclass(frozen=True)
class ClosureResult:
    """A target set plus the predecessors the chosen policy obliges."""

    targets: frozenset[str]
    nodes: frozenset[str]
    induced_edges: tuple[PrerequisiteEdge, ...]
    resolved_groups: Mapping[str, PrerequisiteEdge]
    skipped_optional: frozenset[PrerequisiteEdge]

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes)


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    ids: tuple[str, ...] = ()

    def sort_key(self) -> tuple:
        return (self.code, self.ids, self.message)


@dataclass
class ValidationReport:
    errors: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def sort(self) -> "ValidationReport":
        self.errors.sort(key=Finding.sort_key)
        self.warnings.sort(key=Finding.sort_key)
        return self

    def extend(self, other: "ValidationReport") -> "ValidationReport":
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)
        return self
