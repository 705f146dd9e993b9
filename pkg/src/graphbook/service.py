"""HTTP facade over the engine, owning workspace persistence.

The workspace directory holds graphs/, plans/, progress/, a popularity
file, a content manifest and an exercise file, all in the line-oriented
text formats the ingest module defines, so a restart rebuilds the exact
same index from disk. Engine calls are pure; mutations of any one file go
through per-resource locks (single writer, unlimited readers).
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .book import (
    BookPlan,
    EditOp,
    EditRejectedError,
    Exercise,
    MissingContentError,
    OrderMismatchError,
    ReviewTargetError,
    Status,
    assemble_book,
    load_plan,
    render_book,
    review_book,
    save_plan,
    update_progress,
    ProgressRecord,
)
from .closure import direct_predecessors, direct_successors, predecessor_closure
from .ingest import (
    GraphImportError,
    IngestError,
    import_graphml,
    load_content_store,
    load_exercises,
    load_native,
    load_tag_index,
    parse_native,
    save_native,
)
from .interop import (
    CrossEdge,
    MergeError,
    NoMatchError,
    competency_lookup,
    merge_graphs,
    register_exercise_from_tags,
)
from .model import (
    ClosurePolicy,
    ClosureResult,
    CurriculumGraph,
    EdgeKind,
    GraphbookError,
    PrerequisiteEdge,
    Resolution,
    UnknownNodeError,
    UnresolvedGroupError,
)
from .sequencing import (
    Linearization,
    PopularityStore,
    RankingWeights,
    all_linearizations,
    is_valid_order,
    rank_orderings,
)
from .validation import validate_graph


class Workspace:
    """On-disk state plus the in-memory index the endpoints serve from."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("graphs", "plans", "progress"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self.graphs: dict[str, dict[int, CurriculumGraph]] = {}
        self.plans: dict[str, BookPlan] = {}
        self._graphs_lock = threading.Lock()
        self._plans_lock = threading.Lock()
        self._popularity_lock = threading.Lock()
        self._progress_locks: dict[str, threading.Lock] = {}
        self._progress_master = threading.Lock()
        self.reload()

    def reload(self) -> None:
        self.graphs.clear()
        self.plans.clear()
        for path in sorted((self.root / "graphs").glob("*.graph")):
            stem = path.stem  # <id>__v<version>
            gid, _, vtag = stem.rpartition("__v")
            if not gid or not vtag.isdigit():
                continue
            g, report = load_native(path)
            if report.ok:
                self.graphs.setdefault(gid, {})[int(vtag)] = g
        for path in sorted((self.root / "plans").glob("*.plan")):
            plan = load_plan(path)
            self.plans[plan.id] = plan

    # -- graphs --

    def latest_version(self, gid: str) -> int:
        return max(self.graphs[gid])

    def get_graph(self, gid: str, version: int | None = None) -> tuple[CurriculumGraph, int]:
        versions = self.graphs.get(gid)
        if not versions:
            raise KeyError(gid)
        v = version if version is not None else max(versions)
        if v not in versions:
            raise KeyError(f"{gid} v{v}")
        return versions[v], v

    def store_graph(self, g: CurriculumGraph) -> int:
        with self._graphs_lock:
            versions = self.graphs.setdefault(g.discipline, {})
            version = max(versions) + 1 if versions else 1
            save_native(g, self.root / "graphs" / f"{g.discipline}__v{version}.graph")
            versions[version] = g
            return version

    # -- plans --

    def store_plan(self, plan: BookPlan) -> None:
        with self._plans_lock:
            save_plan(plan, self.root / "plans" / f"{plan.id}.plan")
            self.plans[plan.id] = plan

    # -- popularity --

    def popularity(self) -> PopularityStore:
        return PopularityStore.load(self.root / "popularity.txt")

    def record_adoption(self, order: Linearization) -> None:
        with self._popularity_lock:
            store = PopularityStore.load(self.root / "popularity.txt")
            store.record_adoption(order)
            store.save(self.root / "popularity.txt")

    # -- progress --

    def _progress_lock(self, student: str) -> threading.Lock:
        with self._progress_master:
            return self._progress_locks.setdefault(student, threading.Lock())

    def progress_of(self, student: str) -> ProgressRecord:
        path = self.root / "progress" / f"{student}.progress"
        if path.exists():
            return ProgressRecord.load(path)
        return ProgressRecord(student=student)

    def save_progress(self, record: ProgressRecord) -> None:
        record.save(self.root / "progress" / f"{record.student}.progress")

    # -- shared resources --

    def content_store(self):
        manifest = self.root / "content-manifest.tsv"
        if manifest.exists():
            return load_content_store(manifest)
        from .book import ContentStore

        return ContentStore()

    def exercises_for(self, g: CurriculumGraph) -> list[Exercise]:
        path = self.root / "exercises.txt"
        if path.exists():
            return load_exercises(path, g)
        return []

    def tag_index(self, g: CurriculumGraph):
        path = self.root / "tags.tsv"
        if not path.exists():
            raise IngestError("workspace has no tags.tsv")
        return load_tag_index(path, g)


# --- JSON encoding of domain objects ---------------------------------------


def edge_json(e: PrerequisiteEdge) -> dict:
    return {"tail": e.tail, "head": e.head, "kind": e.kind.value, "alt_group": e.alt_group}


def graph_json(g: CurriculumGraph, version: int) -> dict:
    return {
        "id": g.discipline,
        "version": version,
        "metadata": dict(sorted(g.metadata.items())),
        "nodes": [
            {
                "id": n.id,
                "title": n.title,
                "cluster": n.cluster,
                "duration_minutes": n.duration_minutes,
                "page_estimate": n.page_estimate,
                "content_ref": n.content_ref,
            }
            for n in (g.nodes[nid] for nid in sorted(g.nodes))
        ],
        "edges": [edge_json(e) for e in sorted(g.edges, key=lambda e: (e.tail, e.head))],
        "alt_groups": [
            {"id": grp.id, "head": grp.head, "members": [edge_json(m) for m in grp.members]}
            for grp in (g.alt_groups[gid] for gid in sorted(g.alt_groups))
        ],
    }


def closure_json(c: ClosureResult) -> dict:
    return {
        "targets": sorted(c.targets),
        "nodes": c.sorted_nodes(),
        "induced_edges": [edge_json(e) for e in c.induced_edges],
        "resolved_groups": {gid: edge_json(e) for gid, e in sorted(c.resolved_groups.items())},
        "skipped_optional": [
            edge_json(e) for e in sorted(c.skipped_optional, key=lambda e: (e.tail, e.head))
        ],
    }


def closure_from_json(g: CurriculumGraph, data: dict) -> ClosureResult:
    nodes = frozenset(data["nodes"])
    unknown = sorted(n for n in nodes if n not in g.nodes)
    if unknown:
        raise UnknownNodeError(unknown[0])
    induced = tuple(
        sorted(
            (e for e in g.edges if e.tail in nodes and e.head in nodes),
            key=lambda e: (e.tail, e.head, e.kind.rank),
        )
    )
    resolved = {}
    for gid, edge in (data.get("resolved_groups") or {}).items():
        group = g.alt_groups.get(gid)
        if group is None:
            continue
        match = [m for m in group.members if m.tail == edge["tail"]]
        if match:
            resolved[gid] = match[0]
    return ClosureResult(
        targets=frozenset(data.get("targets") or []),
        nodes=nodes,
        induced_edges=induced,
        resolved_groups=resolved,
        skipped_optional=frozenset(
            e
            for e in g.edges
            if e.kind is EdgeKind.OPTIONAL and e.head in nodes and e.tail not in nodes
        ),
    )


def check_closure_sound(g: CurriculumGraph, c: ClosureResult) -> str | None:
    """Reject node sets that are not prerequisite-complete."""
    for e in g.edges:
        if (
            e.kind is EdgeKind.REQUIRED
            and (e.alt_group is None or e.alt_group not in g.alt_groups)
            and e.head in c.nodes
            and e.tail not in c.nodes
        ):
            return f"missing required prerequisite {e.tail} of {e.head}"
    for gid, group in sorted(g.alt_groups.items()):
        if group.head in c.nodes and not any(m.tail in c.nodes for m in group.members):
            return f"alternative group {gid} of {group.head} unsatisfied"
    return None


def plan_json(plan: BookPlan) -> dict:
    return {
        "id": plan.id,
        "graph_id": plan.graph_id,
        "graph_version": plan.graph_version,
        "title": plan.title,
        "created_at": plan.created_at,
        "author_role": plan.author_role,
        "order": list(plan.order),
        "items": [{"kind": i.kind, "ref": i.ref} for i in plan.items],
        "exercises": [
            {
                "id": ex.id,
                "kind": ex.kind.value,
                "nodes": list(ex.nodes),
                "prompt_ref": ex.prompt_ref,
                "difficulty": ex.difficulty,
            }
            for ex in plan.exercises
        ],
        "omitted": [{"exercise": ex_id, "reason": reason} for ex_id, reason in plan.omitted],
        "stubs": list(plan.stubs),
        "closure": closure_json(plan.closure),
    }


def report_json(report) -> dict:
    return {
        "errors": [{"code": f.code, "message": f.message, "ids": list(f.ids)} for f in report.errors],
        "warnings": [
            {"code": f.code, "message": f.message, "ids": list(f.ids)} for f in report.warnings
        ],
    }


def _fail(status: int, code: str, message: str, **extra) -> JSONResponse:
    body = {"code": code, "message": message}
    body.update(extra)
    return JSONResponse(body, status_code=status)


def create_app(data_dir: str | Path) -> FastAPI:
    ws = Workspace(data_dir)
    app = FastAPI(title="graphbook", version="0.1.0")
    app.state.workspace = ws

    @app.exception_handler(GraphbookError)
    async def on_engine_error(_req: Request, err: GraphbookError):
        if isinstance(err, UnresolvedGroupError):
            return _fail(
                409,
                "UNRESOLVED_GROUPS",
                str(err),
                choice_points=[
                    {
                        "group": cp.group_id,
                        "head": cp.head,
                        "members": [{"tail": tail, "closure_size": size} for tail, size in cp.members],
                    }
                    for cp in err.choice_points
                ],
            )
        if isinstance(err, MergeError):
            return _fail(409, err.code, str(err), cycle=err.cycle)
        if isinstance(err, EditRejectedError):
            return _fail(409, err.reason, err.detail, edge=list(err.edge) if err.edge else None)
        if isinstance(err, (OrderMismatchError, ReviewTargetError)):
            return _fail(409, "CONSTRAINT", str(err))
        if isinstance(err, MissingContentError):
            return _fail(400, "MISSING_CONTENT", str(err), tokens=err.tokens)
        if isinstance(err, NoMatchError):
            return _fail(404, "NO_MATCH", str(err), tags=err.tags)
        if isinstance(err, UnknownNodeError):
            return _fail(404, "UNKNOWN_NODE", str(err))
        if isinstance(err, (IngestError, GraphImportError)):
            return _fail(400, "BAD_INPUT", str(err))
        return _fail(400, "VALIDATION", str(err))

    @app.exception_handler(KeyError)
    async def on_missing(_req: Request, err: KeyError):
        return _fail(404, "NOT_FOUND", f"no such resource: {err.args[0] if err.args else err}")

    # -- graphs --

    @app.get("/graphs")
    def list_graphs():
        out = []
        for gid in sorted(ws.graphs):
            for version in sorted(ws.graphs[gid]):
                g = ws.graphs[gid][version]
                out.append(
                    {
                        "id": gid,
                        "version": version,
                        "nodes": len(g.nodes),
                        "edges": len(g.edges),
                        "latest": version == ws.latest_version(gid),
                    }
                )
        return {"graphs": out}

    @app.post("/graphs")
    async def upload_graph(request: Request):
        text = (await request.body()).decode("utf-8")
        warnings = []
        if text.lstrip().startswith("<"):
            g, import_warnings = import_graphml(text, use_labels_as_ids=True)
            warnings = import_warnings
            report = validate_graph(g)
        else:
            g, report = parse_native(text)
        if not report.ok:
            return _fail(400, "VALIDATION", "graph has validation errors", report=report_json(report))
        version = ws.store_graph(g)
        payload = report_json(report)
        payload["warnings"].extend(
            {"code": w.code, "message": w.message, "ids": list(w.ids)} for w in warnings
        )
        return {"id": g.discipline, "version": version, "report": payload}

    @app.get("/graphs/{gid}")
    def get_graph(gid: str, version: int | None = None):
        g, v = ws.get_graph(gid, version)
        return graph_json(g, v)

    @app.get("/graphs/{gid}/nodes/{nid}")
    def get_node(gid: str, nid: str, version: int | None = None):
        g, _ = ws.get_graph(gid, version)
        node = g.require_node(nid)
        return {
            "id": node.id,
            "title": node.title,
            "cluster": node.cluster,
            "duration_minutes": node.duration_minutes,
            "page_estimate": node.page_estimate,
            "content_ref": node.content_ref,
            "predecessors": [edge_json(e) for e in direct_predecessors(g, nid)],
            "successors": [edge_json(e) for e in direct_successors(g, nid)],
        }

    @app.post("/graphs/merge")
    async def merge_endpoint(request: Request):
        body = await request.json()
        graphs = [ws.get_graph(gid)[0] for gid in body["graph_ids"]]
        cross = [CrossEdge(tail=c["tail"], head=c["head"]) for c in body.get("cross", [])]
        merged = merge_graphs(graphs, cross)
        version = ws.store_graph(merged)
        return {"id": merged.discipline, "version": version, "nodes": len(merged.nodes),
                "edges": len(merged.edges)}

    @app.post("/graphs/{gid}/closure")
    async def closure_endpoint(gid: str, request: Request):
        body = await request.json()
        g, v = ws.get_graph(gid, body.get("version"))
        targets = set(body.get("targets") or [])
        if not targets:
            return _fail(400, "BAD_REQUEST", "targets must be non-empty")
        resolution = Resolution(body.get("resolution", "explicit"))
        policy = ClosurePolicy(
            include_optional=bool(body.get("include_optional", False)),
            resolution=resolution,
            preferred=tuple(body.get("preferred") or ()),
            choices=dict(body.get("choices") or {}),
        )
        closure = predecessor_closure(g, targets, policy)
        return {"graph_id": gid, "version": v, "closure": closure_json(closure)}

    @app.post("/graphs/{gid}/linearizations")
    async def linearizations_endpoint(gid: str, request: Request):
        body = await request.json()
        g, v = ws.get_graph(gid, body.get("version"))
        closure = closure_from_json(g, body["closure"])
        problem = check_closure_sound(g, closure)
        if problem:
            return _fail(409, "UNSOUND_CLOSURE", problem)
        cap = int(body.get("cap", 100))
        weights_spec = body.get("weights") or {}
        weights = RankingWeights(
            w_time=float(weights_spec.get("time", 1.0)),
            w_popularity=float(weights_spec.get("popularity", 1.0)),
            w_coherence=float(weights_spec.get("coherence", 1.0)),
        )
        lins, truncated = all_linearizations(closure, cap=cap)
        ranked = rank_orderings(lins, g, weights, ws.popularity())
        return {
            "graph_id": gid,
            "version": v,
            "truncated": truncated,
            "orders": [
                {
                    "nodes": list(lin.nodes),
                    "score": score.total,
                    "breakdown": {
                        "time": score.time_component,
                        "popularity": score.popularity_component,
                        "coherence": score.coherence_component,
                    },
                }
                for lin, score in ranked
            ],
        }

    @app.post("/graphs/{gid}/order-check")
    async def order_check(gid: str, request: Request):
        """Validate a candidate order against a closure without persisting
        anything — the UI's per-drop check during drag reordering."""
        body = await request.json()
        g, v = ws.get_graph(gid, body.get("version"))
        closure = closure_from_json(g, body["closure"])
        problem = check_closure_sound(g, closure)
        if problem:
            return _fail(409, "UNSOUND_CLOSURE", problem)
        check = is_valid_order(closure, tuple(body["order"]))
        if not check.ok:
            return _fail(
                409,
                check.reason,
                "order rejected",
                edge=list(check.violated_edge) if check.violated_edge else None,
            )
        return {"ok": True, "graph_id": gid, "version": v}

    # -- books --

    @app.get("/books")
    def list_books():
        return {
            "books": [
                {"id": p.id, "title": p.title, "graph_id": p.graph_id,
                 "graph_version": p.graph_version, "topics": len(p.order)}
                for p in sorted(ws.plans.values(), key=lambda p: p.id)
            ]
        }

    @app.post("/books")
    async def create_book(request: Request):
        body = await request.json()
        g, version = ws.get_graph(body["graph_id"], body.get("version"))
        closure = closure_from_json(g, body["closure"])
        problem = check_closure_sound(g, closure)
        if problem:
            return _fail(409, "UNSOUND_CLOSURE", problem)
        order_nodes = tuple(body["order"])
        check = is_valid_order(closure, order_nodes)
        if not check.ok:
            return _fail(
                409,
                check.reason,
                "order rejected",
                edge=list(check.violated_edge) if check.violated_edge else None,
            )
        exercise_ids = set(body.get("exercises") or [])
        available = {ex.id: ex for ex in ws.exercises_for(g)}
        unknown = sorted(exercise_ids - set(available))
        if unknown:
            return _fail(404, "UNKNOWN_EXERCISE", "unknown exercise ids: " + ", ".join(unknown))
        order = Linearization(nodes=order_nodes, source_closure=closure)
        plan = assemble_book(
            g,
            closure,
            order,
            [available[ex_id] for ex_id in sorted(exercise_ids)],
            ws.content_store(),
            graph_version=version,
            author_role=body.get("author_role", "teacher"),
            title=body.get("title"),
            created_at=body.get("created_at"),
        )
        ws.store_plan(plan)
        ws.record_adoption(order)
        return plan_json(plan)

    @app.get("/books/{plan_id}")
    def get_book(plan_id: str):
        return plan_json(ws.plans[plan_id])

    @app.get("/books/{plan_id}/render")
    def render_endpoint(plan_id: str):
        plan = ws.plans[plan_id]
        g, _ = ws.get_graph(plan.graph_id, plan.graph_version)
        return PlainTextResponse(render_book(plan, ws.content_store(), g))

    @app.post("/books/{plan_id}/edits")
    async def edit_book(plan_id: str, request: Request):
        body = await request.json()
        plan = ws.plans[plan_id]
        g, _ = ws.get_graph(plan.graph_id, plan.graph_version)
        ops = [
            EditOp(op=o["op"], node=o["node"], index=o.get("index"))
            for o in body.get("ops") or []
        ]
        from .book import edit_plan_in_itinere

        edited = edit_plan_in_itinere(plan, g, ops)
        ws.store_plan(edited)
        return plan_json(edited)

    # -- students --

    @app.get("/students/{student}/progress")
    def get_progress(student: str):
        record = ws.progress_of(student)
        return {
            "student": student,
            "statuses": {nid: record.statuses[nid].value for nid in sorted(record.statuses)},
        }

    @app.put("/students/{student}/progress/{nid}")
    async def put_progress(student: str, nid: str, request: Request):
        body = await request.json()
        gid = body.get("graph_id")
        if gid is None:
            return _fail(400, "BAD_REQUEST", "graph_id required")
        g, _ = ws.get_graph(gid, body.get("version"))
        try:
            status = Status(body["status"])
        except (KeyError, ValueError):
            return _fail(400, "BAD_STATUS", "status must be one of " + ", ".join(s.value for s in Status))
        with ws._progress_lock(student):
            record = ws.progress_of(student)
            record.student = student
            update_progress(record, g, nid, status)
            ws.save_progress(record)
        return {"student": student, "node": nid, "status": status.value}

    @app.post("/students/{student}/review")
    async def review_endpoint(student: str, request: Request):
        body = await request.json()
        gid = body.get("graph_id")
        if gid is None:
            return _fail(400, "BAD_REQUEST", "graph_id required")
        g, version = ws.get_graph(gid, body.get("version"))
        gaps = set(body.get("gaps") or [])
        if not gaps:
            return _fail(400, "BAD_REQUEST", "gaps must be non-empty")
        record = ws.progress_of(student)
        outline = review_book(
            g, record, gaps, override_targets=bool(body.get("override", False))
        )
        plan = assemble_book(
            g,
            outline.book_closure,
            outline.order,
            ws.exercises_for(g),
            ws.content_store(),
            graph_version=version,
            author_role="student",
            title=body.get("title") or f"Ripasso {student}",
            created_at=body.get("created_at"),
            stubs=outline.stubs,
        )
        ws.store_plan(plan)
        return plan_json(plan)

    # -- analyzer --

    @app.post("/analyzer/lookup")
    async def analyzer_lookup(request: Request):
        body = await request.json()
        g, _ = ws.get_graph(body["graph_id"], body.get("version"))
        index = ws.tag_index(g)
        report = competency_lookup(index, body.get("tags") or [], g)
        return {
            "direct": sorted(report.direct_nodes),
            "closure": report.closure.sorted_nodes(),
            "unknown_tags": list(report.unknown_tags),
        }

    @app.post("/analyzer/exercises")
    async def analyzer_exercises(request: Request):
        body = await request.json()
        g, _ = ws.get_graph(body["graph_id"], body.get("version"))
        index = ws.tag_index(g)
        out = []
        for entry in body.get("entries") or []:
            ex = register_exercise_from_tags(
                index, entry["tags"], entry["prompt_ref"], g, entry.get("difficulty")
            )
            out.append(
                {
                    "id": ex.id,
                    "kind": ex.kind.value,
                    "nodes": list(ex.nodes),
                    "prompt_ref": ex.prompt_ref,
                    "difficulty": ex.difficulty,
                }
            )
        return {"exercises": out}

    ui_dir = Path(os.environ.get("GRAPHBOOK_UI", Path(__file__).resolve().parents[2] / "frontend" / "dist"))
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
