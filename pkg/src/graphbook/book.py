"""Book assembly: exercise placement, rendering, review books and plan edits.

A BookPlan is the skeleton of one personalized ebook: a closure, one
linearization of it, and exercise items spliced in. External exercises
(bound to several competency nodes) land immediately after the last of
their nodes, so a reader meets them exactly when every needed competency
has been covered — wherever that happens to fall in the chosen order.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .closure import predecessor_closure
from .model import (
    ClosurePolicy,
    ClosureResult,
    CurriculumGraph,
    EdgeKind,
    GraphbookError,
    PrerequisiteEdge,
    UnknownNodeError,
    check_token,
)
from .sequencing import Linearization, is_valid_order, topological_order
from .validation import ensure_usable

_DIFFICULTY_UNSET = 99  # unknown difficulty sorts after rated exercises


class ExerciseKind(Enum):
    LOCAL = "local"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Exercise:
    id: str
    kind: ExerciseKind
    nodes: tuple[str, ...]  # exactly one for LOCAL, the competency set for EXTERNAL
    prompt_ref: str
    difficulty: Optional[int] = None

    def __post_init__(self):
        check_token(self.id, "exercise id")
        check_token(self.prompt_ref, "prompt_ref")
        if not self.nodes:
            raise ValueError(f"exercise {self.id} names no nodes")
        if self.kind is ExerciseKind.LOCAL and len(self.nodes) != 1:
            raise ValueError(f"local exercise {self.id} must name exactly one node")
        if self.difficulty is not None and not 1 <= self.difficulty <= 5:
            raise ValueError(f"exercise {self.id}: difficulty must be 1-5")
        object.__setattr__(self, "nodes", tuple(sorted(set(self.nodes))))

    def sort_key(self) -> tuple[int, str]:
        return (self.difficulty if self.difficulty is not None else _DIFFICULTY_UNSET, self.id)


def validate_exercises(exercises: Iterable[Exercise], g: CurriculumGraph) -> None:
    for ex in exercises:
        for nid in ex.nodes:
            if nid not in g.nodes:
                raise UnknownNodeError(nid)


@dataclass(frozen=True)
class ContentDoc:
    title: str
    body: str


@dataclass
class ContentStore:
    docs: dict[str, ContentDoc] = field(default_factory=dict)

    def resolve(self, token: str) -> ContentDoc | None:
        return self.docs.get(token)

    def missing(self, tokens: Iterable[str]) -> list[str]:
        return sorted({t for t in tokens if t not in self.docs})


@dataclass(frozen=True)
class BookItem:
    kind: str  # "topic" | "exercise"
    ref: str  # node id or exercise id


class MissingContentError(GraphbookError):
    def __init__(self, tokens: list[str]):
        super().__init__("unresolved content tokens: " + ", ".join(tokens))
        self.tokens = tokens


class OrderMismatchError(GraphbookError):
    pass


class EditRejectedError(GraphbookError):
    """An in-course edit would break prerequisite consistency."""

    def __init__(self, reason: str, detail: str, edge: tuple[str, str] | None = None):
        super().__init__(f"{reason}: {detail}")
        self.reason = reason
        self.detail = detail
        self.edge = edge


class ReviewTargetError(GraphbookError):
    pass


def place_exercises(
    order: Linearization, exercises: Iterable[Exercise]
) -> tuple[list[BookItem], list[tuple[str, str]]]:
    """Splice exercises into a topic order.

    Local exercises follow their node's topic item; external ones follow the
    last topic item of their competency set, after that node's local block.
    Exercises whose nodes are not all in the book are omitted and reported as
    (exercise id, reason) pairs.
    """
    position = {nid: i for i, nid in enumerate(order.nodes)}
    locals_at: dict[int, list[Exercise]] = {}
    externals_at: dict[int, list[Exercise]] = {}
    omitted: list[tuple[str, str]] = []

    for ex in sorted(exercises, key=Exercise.sort_key):
        outside = [nid for nid in ex.nodes if nid not in position]
        if outside:
            omitted.append((ex.id, "nodes not in book: " + ",".join(outside)))
            continue
        anchor = max(position[nid] for nid in ex.nodes)
        bucket = locals_at if ex.kind is ExerciseKind.LOCAL else externals_at
        bucket.setdefault(anchor, []).append(ex)

    items: list[BookItem] = []
    for i, nid in enumerate(order.nodes):
        items.append(BookItem(kind="topic", ref=nid))
        for ex in locals_at.get(i, []):
            items.append(BookItem(kind="exercise", ref=ex.id))
        for ex in externals_at.get(i, []):
            items.append(BookItem(kind="exercise", ref=ex.id))
    return items, sorted(omitted)


@dataclass(frozen=True)
class BookPlan:
    id: str
    graph_id: str
    graph_version: int
    title: str
    closure: ClosureResult
    order: tuple[str, ...]
    items: tuple[BookItem, ...]
    exercises: tuple[Exercise, ...]
    omitted: tuple[tuple[str, str], ...]
    stubs: tuple[str, ...]
    created_at: int
    author_role: str

    def topic_projection(self) -> tuple[str, ...]:
        return tuple(item.ref for item in self.items if item.kind == "topic")


def _plan_id(graph_id: str, version: int, order: tuple[str, ...], exercise_ids: Iterable[str]) -> str:
    blob = "|".join([graph_id, str(version), ",".join(order), ",".join(sorted(exercise_ids))])
    return "bk_" + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def assemble_book(
    g: CurriculumGraph,
    closure: ClosureResult,
    order: Linearization,
    exercises: Iterable[Exercise],
    content: ContentStore,
    *,
    graph_version: int = 1,
    author_role: str = "teacher",
    title: str | None = None,
    created_at: int | None = None,
    stubs: tuple[str, ...] = (),
) -> BookPlan:
    """Bind a closure + order + exercises into a persistable plan."""
    ensure_usable(g)
    exercises = sorted(exercises, key=lambda e: e.id)
    validate_exercises(exercises, g)
    if frozenset(order.nodes) != closure.nodes:
        raise OrderMismatchError("order does not serialize the given closure")
    check = is_valid_order(closure, order.nodes)
    if not check.ok:
        raise OrderMismatchError(f"order invalid: {check.reason} {check.violated_edge or ''}".strip())

    wanted_tokens = [
        g.nodes[nid].content_ref for nid in closure.nodes if g.nodes[nid].content_ref is not None
    ]
    wanted_tokens += [ex.prompt_ref for ex in exercises]
    missing = content.missing(wanted_tokens)
    if missing:
        raise MissingContentError(missing)

    items, omitted = place_exercises(order, exercises)
    for stub in stubs:
        g.require_node(stub)
    plan_order = tuple(order.nodes)
    return BookPlan(
        id=_plan_id(g.discipline, graph_version, plan_order, (e.id for e in exercises)),
        graph_id=g.discipline,
        graph_version=graph_version,
        title=title or f"Percorso {g.discipline}",
        closure=closure,
        order=plan_order,
        items=tuple(items),
        exercises=tuple(exercises),
        omitted=tuple(omitted),
        stubs=tuple(sorted(stubs)),
        created_at=int(created_at if created_at is not None else time.time()),
        author_role=author_role,
    )


def render_book(plan: BookPlan, content: ContentStore, g: CurriculumGraph) -> str:
    """Emit the whole book as one deterministic lightweight-markup document."""
    ex_by_id = {ex.id: ex for ex in plan.exercises}
    lines: list[str] = []
    lines.append(f"# {plan.title}")
    lines.append("")
    lines.append(f"- book: {plan.id}")
    lines.append(f"- graph: {plan.graph_id} v{plan.graph_version}")
    lines.append(f"- created: {_iso(plan.created_at)}")
    lines.append(f"- author role: {plan.author_role}")
    lines.append(f"- topics: {len(plan.order)}")
    total = sum(g.require_node(nid).duration_minutes for nid in plan.order)
    lines.append(f"- estimated time: {total} min")
    lines.append("")

    if plan.stubs:
        lines.append("## Already mastered (reference stubs)")
        lines.append("")
        for nid in plan.stubs:
            lines.append(f"- {g.nodes[nid].title} ({nid})")
        lines.append("")

    lines.append("## Contents")
    lines.append("")
    section = 0
    for item in plan.items:
        if item.kind == "topic":
            section += 1
            lines.append(f"{section}. {g.nodes[item.ref].title}")
    lines.append("")

    section = 0
    for item in plan.items:
        if item.kind == "topic":
            node = g.nodes[item.ref]
            section += 1
            lines.append(f"## {section}. {node.title}")
            lines.append("")
            doc = content.resolve(node.content_ref) if node.content_ref else None
            if doc is not None:
                lines.append(doc.body.rstrip("\n"))
            else:
                lines.append("(content unit not yet digitized)")
            lines.append("")
        else:
            ex = ex_by_id[item.ref]
            if ex.kind is ExerciseKind.LOCAL:
                tag = "exercise"
            else:
                tag = "external exercise, competencies: " + ", ".join(ex.nodes)
            difficulty = f", difficulty {ex.difficulty}" if ex.difficulty is not None else ""
            lines.append(f"> [{tag}{difficulty}] {ex.id}")
            prompt = content.resolve(ex.prompt_ref)
            if prompt is not None:
                for row in prompt.body.rstrip("\n").splitlines():
                    lines.append(f"> {row}")
            lines.append("")

    if plan.omitted:
        lines.append("## Appendix: omitted external exercises")
        lines.append("")
        for ex_id, reason in plan.omitted:
            lines.append(f"- {ex_id}: {reason}")
        lines.append("")

    return "\n".join(lines).rstrip("\n") + "\n"


def _iso(epoch: int) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(epoch))


class Status(Enum):
    UNSEEN = "unseen"
    IN_PROGRESS = "in_progress"
    MASTERED = "mastered"
    GAP = "gap"


@dataclass
class ProgressRecord:
    student: str
    statuses: dict[str, Status] = field(default_factory=dict)
    updated_at: dict[str, int] = field(default_factory=dict)

    def status(self, node_id: str) -> Status:
        return self.statuses.get(node_id, Status.UNSEEN)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        lines = [f"student {self.student}"]
        for nid in sorted(self.statuses):
            lines.append(f"node {nid} {self.statuses[nid].value} {self.updated_at.get(nid, 0)}")
        payload = "\n".join(lines) + "\n"
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str | Path) -> "ProgressRecord":
        path = Path(path)
        record = cls(student="anonymous")
        for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "student" and len(parts) == 2:
                record.student = parts[1]
            elif parts[0] == "node" and len(parts) == 4:
                record.statuses[parts[1]] = Status(parts[2])
                record.updated_at[parts[1]] = int(parts[3])
            else:
                raise ValueError(f"{path}:{lineno}: bad progress line: {raw!r}")
        return record


def update_progress(
    record: ProgressRecord,
    g: CurriculumGraph,
    node_id: str,
    status: Status,
    now: int | None = None,
) -> ProgressRecord:
    """Set one node's mastery status; idempotent apart from the timestamp."""
    g.require_node(node_id)
    record.statuses[node_id] = status
    record.updated_at[node_id] = int(now if now is not None else time.time())
    return record


@dataclass(frozen=True)
class ReviewOutline:
    """Inputs for a review book: retained full nodes, their order, and stubs."""

    closure: ClosureResult  # full closure of the gap targets
    book_closure: ClosureResult  # restricted to retained full nodes
    order: Linearization
    stubs: tuple[str, ...]


def review_book(
    g: CurriculumGraph,
    progress: ProgressRecord,
    gap_targets: set[str] | frozenset[str],
    policy: ClosurePolicy | None = None,
    *,
    override_targets: bool = False,
) -> ReviewOutline:
    """Plan a personalized review path over a student's gaps.

    Mastered prerequisites drop out of the full treatment but stay visible as
    collapsed reference stubs whenever a retained node builds directly on
    them, so the review book remains self-contained without re-teaching.
    """
    if not gap_targets:
        raise ValueError("gap_targets must be non-empty")
    ensure_usable(g)
    for t in gap_targets:
        g.require_node(t)
        if not override_targets and progress.status(t) is not Status.GAP:
            raise ReviewTargetError(
                f"target {t} has status {progress.status(t).value}, not gap (use override to force)"
            )

    closure = predecessor_closure(g, gap_targets, policy)
    mastered = {nid for nid in closure.nodes if progress.status(nid) is Status.MASTERED}
    full = (closure.nodes - mastered) | frozenset(gap_targets)
    stubs = sorted(
        {e.tail for e in closure.induced_edges if e.head in full and e.tail in mastered and e.tail not in full}
    )

    book_closure = ClosureResult(
        targets=frozenset(gap_targets),
        nodes=frozenset(full),
        induced_edges=tuple(
            e for e in closure.induced_edges if e.tail in full and e.head in full
        ),
        resolved_groups={
            gid: e for gid, e in closure.resolved_groups.items() if e.tail in full and e.head in full
        },
        skipped_optional=closure.skipped_optional,
    )
    order = topological_order(book_closure)
    return ReviewOutline(closure=closure, book_closure=book_closure, order=order, stubs=tuple(stubs))


@dataclass(frozen=True)
class EditOp:
    op: str  # "insert" | "remove" | "move"
    node: str
    index: int | None = None


def edit_plan_in_itinere(
    plan: BookPlan, g: CurriculumGraph, ops: Iterable[EditOp]
) -> BookPlan:
    """Apply order edits, re-validate, and re-place exercises.

    Rejects (leaving the original untouched) any edit that orphans a required
    prerequisite, breaks an alternative group, or violates an induced edge;
    on success placements are recomputed since insertion points may move.
    """
    ensure_usable(g)
    order = list(plan.order)
    for op in ops:
        if op.op == "insert":
            g.require_node(op.node)
            if op.node in order:
                raise EditRejectedError("DUPLICATE_NODE", f"{op.node} already in the book")
            idx = len(order) if op.index is None else max(0, min(op.index, len(order)))
            order.insert(idx, op.node)
        elif op.op == "remove":
            if op.node not in order:
                raise EditRejectedError("NODE_NOT_IN_BOOK", op.node)
            order.remove(op.node)
        elif op.op == "move":
            if op.node not in order:
                raise EditRejectedError("NODE_NOT_IN_BOOK", op.node)
            order.remove(op.node)
            idx = len(order) if op.index is None else max(0, min(op.index, len(order)))
            order.insert(idx, op.node)
        else:
            raise ValueError(f"unknown edit op: {op.op}")

    nodes = frozenset(order)
    # Soundness against the full graph: required prerequisites and groups.
    for e in g.edges:
        if e.head not in nodes or e.kind is not EdgeKind.REQUIRED:
            continue
        if e.alt_group is not None and e.alt_group in g.alt_groups:
            continue
        if e.tail not in nodes:
            raise EditRejectedError(
                "MISSING_PREREQUISITE", f"{e.head} requires {e.tail}", edge=(e.tail, e.head)
            )
    for gid, group in sorted(g.alt_groups.items()):
        if group.head in nodes and not any(m.tail in nodes for m in group.members):
            raise EditRejectedError("GROUP_UNSATISFIED", f"group {gid} of {group.head} has no member in the book")

    new_closure = ClosureResult(
        targets=plan.closure.targets & nodes,
        nodes=nodes,
        induced_edges=tuple(
            sorted(
                (e for e in g.edges if e.tail in nodes and e.head in nodes),
                key=lambda e: (e.tail, e.head, e.kind.rank),
            )
        ),
        resolved_groups={
            gid: _present_member(g, gid, nodes)
            for gid, group in sorted(g.alt_groups.items())
            if group.head in nodes
        },
        skipped_optional=frozenset(
            e
            for e in g.edges
            if e.kind is EdgeKind.OPTIONAL and e.head in nodes and e.tail not in nodes
        ),
    )
    check = is_valid_order(new_closure, order)
    if not check.ok:
        raise EditRejectedError("EDGE_VIOLATION", str(check.violated_edge), edge=check.violated_edge)

    lin = Linearization(nodes=tuple(order), source_closure=new_closure)
    items, omitted = place_exercises(lin, plan.exercises)
    return replace(
        plan,
        id=_plan_id(plan.graph_id, plan.graph_version, tuple(order), (e.id for e in plan.exercises)),
        closure=new_closure,
        order=tuple(order),
        items=tuple(items),
        omitted=tuple(omitted),
        stubs=tuple(s for s in plan.stubs if s not in nodes),
    )


def _present_member(g: CurriculumGraph, gid: str, nodes: frozenset[str]) -> PrerequisiteEdge:
    group = g.alt_groups[gid]
    return min((m for m in group.members if m.tail in nodes), key=lambda m: m.tail)


# --- plan manifest (stable field order, line-oriented) ---------------------


def plan_to_manifest(plan: BookPlan) -> str:
    lines = [
        f"plan {plan.id}",
        f"graph {plan.graph_id} {plan.graph_version}",
        f"title {plan.title}",
        f"created {plan.created_at}",
        f"author {plan.author_role}",
    ]
    for t in sorted(plan.closure.targets):
        lines.append(f"target {t}")
    for nid in sorted(plan.closure.nodes):
        lines.append(f"node {nid}")
    for e in plan.closure.induced_edges:
        group = e.alt_group if e.alt_group is not None else "-"
        lines.append(f"edge {e.tail} {e.head} {e.kind.value} {group}")
    for gid, e in sorted(plan.closure.resolved_groups.items()):
        lines.append(f"resolved {gid} {e.tail}")
    for e in sorted(plan.closure.skipped_optional, key=lambda e: (e.tail, e.head)):
        lines.append(f"skipped {e.tail} {e.head}")
    for s in plan.stubs:
        lines.append(f"stub {s}")
    lines.append("order " + ",".join(plan.order))
    for ex in plan.exercises:
        difficulty = str(ex.difficulty) if ex.difficulty is not None else "-"
        lines.append(f"exercise {ex.id} {ex.kind.value} {','.join(ex.nodes)} {ex.prompt_ref} {difficulty}")
    for item in plan.items:
        lines.append(f"item {item.kind} {item.ref}")
    for ex_id, reason in plan.omitted:
        lines.append(f"omitted {ex_id} {reason}")
    return "\n".join(lines) + "\n"


def plan_from_manifest(text: str) -> BookPlan:
    plan_id = graph_id = title = author = ""
    version = 1
    created = 0
    targets: set[str] = set()
    nodes: set[str] = set()
    edges: list[PrerequisiteEdge] = []
    resolved: dict[str, str] = {}
    skipped: list[tuple[str, str]] = []
    stubs: list[str] = []
    order: tuple[str, ...] = ()
    exercises: list[Exercise] = []
    items: list[BookItem] = []
    omitted: list[tuple[str, str]] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "plan":
            plan_id = rest.strip()
        elif head == "graph":
            gid, v = rest.split()
            graph_id, version = gid, int(v)
        elif head == "title":
            title = rest
        elif head == "created":
            created = int(rest)
        elif head == "author":
            author = rest.strip()
        elif head == "target":
            targets.add(rest.strip())
        elif head == "node":
            nodes.add(rest.strip())
        elif head == "edge":
            tail, h, kind, group = rest.split()
            edges.append(
                PrerequisiteEdge(
                    tail=tail, head=h, kind=EdgeKind(kind), alt_group=None if group == "-" else group
                )
            )
        elif head == "resolved":
            gid, tail = rest.split()
            resolved[gid] = tail
        elif head == "skipped":
            tail, h = rest.split()
            skipped.append((tail, h))
        elif head == "stub":
            stubs.append(rest.strip())
        elif head == "order":
            order = tuple(rest.split(",")) if rest else ()
        elif head == "exercise":
            ex_id, kind, node_csv, prompt, difficulty = rest.split()
            exercises.append(
                Exercise(
                    id=ex_id,
                    kind=ExerciseKind(kind),
                    nodes=tuple(node_csv.split(",")),
                    prompt_ref=prompt,
                    difficulty=None if difficulty == "-" else int(difficulty),
                )
            )
        elif head == "item":
            kind, ref = rest.split()
            items.append(BookItem(kind=kind, ref=ref))
        elif head == "omitted":
            ex_id, _, reason = rest.partition(" ")
            omitted.append((ex_id, reason))
        else:
            raise ValueError(f"manifest line {lineno}: unknown record {head!r}")

    edge_by_key = {(e.tail, e.head): e for e in edges}
    skipped_edges = frozenset(
        edge_by_key.get((t, h), PrerequisiteEdge(tail=t, head=h, kind=EdgeKind.OPTIONAL))
        for t, h in skipped
    )
    closure = ClosureResult(
        targets=frozenset(targets),
        nodes=frozenset(nodes),
        induced_edges=tuple(edges),
        resolved_groups={
            gid: next(e for e in edges if e.alt_group == gid and e.tail == tail)
            for gid, tail in resolved.items()
        },
        skipped_optional=skipped_edges,
    )
    return BookPlan(
        id=plan_id,
        graph_id=graph_id,
        graph_version=version,
        title=title,
        closure=closure,
        order=order,
        items=tuple(items),
        exercises=tuple(exercises),
        omitted=tuple(omitted),
        stubs=tuple(stubs),
        created_at=created,
        author_role=author,
    )


def save_plan(plan: BookPlan, path: str | Path) -> None:
    path = Path(path)
    payload = plan_to_manifest(plan)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_plan(path: str | Path) -> BookPlan:
    return plan_from_manifest(Path(path).read_text(encoding="utf-8"))
