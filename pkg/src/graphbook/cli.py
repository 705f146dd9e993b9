"""Batch command-line interface over the whole engine.

stdout carries machine-readable records, one per line; anything meant for
humans goes to stderr. Exit codes: 0 ok, 1 usage, 2 validation, 3 I/O,
4 constraint violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .book import (
    ProgressRecord,
    ReviewTargetError,
    assemble_book,
    render_book,
    review_book,
)
from .closure import enumerate_closures, predecessor_closure
from .ingest import (
    ColorMap,
    GraphImportError,
    IngestError,
    import_graphml,
    load_analyzer_export,
    load_calendar,
    load_content_store,
    load_cross_edges,
    load_exercises,
    load_native,
    load_orders,
    load_tag_index,
    save_native,
)
from .interop import (
    MergeError,
    NoMatchError,
    competency_lookup,
    exercises_from_analyzer_export,
    merge_graphs,
    sync_report,
)
from .model import (
    ClosurePolicy,
    GraphbookError,
    InvalidGraphError,
    Resolution,
    UnknownNodeError,
    UnresolvedGroupError,
    ValidationReport,
)
from .sequencing import (
    DEFAULT_COUNT_CAP,
    DEFAULT_ENUM_CAP,
    PopularityStore,
    RankingWeights,
    all_linearizations,
    count_linearizations,
    rank_orderings,
    topological_order,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_CONSTRAINT = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        raise UsageError(message)


def _say(text: str) -> None:
    print(text, file=sys.stderr)


def _emit(record: str) -> None:
    print(record)


def _print_report(report: ValidationReport) -> None:
    for f in report.errors:
        _emit(f"error {f.code} {','.join(f.ids) or '-'} {f.message}")
    for f in report.warnings:
        _emit(f"warning {f.code} {','.join(f.ids) or '-'} {f.message}")


def _load_graph(path: str):
    try:
        g, report = load_native(path)
    except OSError as err:
        raise IngestError(str(err)) from None
    return g, report


def _require_valid(path: str):
    g, report = _load_graph(path)
    if not report.ok:
        _print_report(report)
        raise SystemExit(EXIT_VALIDATION)
    return g

def _targets(spec: str) -> set[str]:
    targets = {t.strip() for t in spec.split(",") if t.strip()}
    if not targets:
        raise UsageError("--target needs at least one node id")
    return targets


def _policy(args) -> ClosurePolicy:
    choices = {}
    for item in getattr(args, "choose", None) or []:
        group, _, tail = item.partition("=")
        if not group or not tail:
            raise UsageError(f"--choose needs group=tail, got {item!r}")
        choices[group] = tail
    resolution = Resolution.EXPLICIT if choices else Resolution.MINIMAL
    return ClosurePolicy(
        include_optional=getattr(args, "include_optional", False),
        resolution=resolution,
        choices=choices,
    )


def cmd_validate(args) -> int:
    g, report = _load_graph(args.graph)
    _print_report(report)
    _say(f"{g.discipline}: {len(g.nodes)} nodes, {len(g.edges)} edges, "
         f"{len(report.errors)} error(s), {len(report.warnings)} warning(s)")
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_closure(args) -> int:
    g = _require_valid(args.graph)
    targets = _targets(args.target)
    if args.enumerate:
        results, truncated = enumerate_closures(
            g, targets, include_optional=args.include_optional, cap=args.enumerate
        )
        for i, c in enumerate(results):
            _emit(f"closure {i} {len(c.nodes)} {','.join(c.sorted_nodes())}")
        _emit(f"truncated {str(truncated).lower()}")
        return EXIT_OK
    closure = predecessor_closure(g, targets, _policy(args))
    _emit("nodes " + ",".join(closure.sorted_nodes()))
    for gid, e in sorted(closure.resolved_groups.items()):
        _emit(f"resolved {gid} {e.tail}")
    for e in sorted(closure.skipped_optional, key=lambda e: (e.tail, e.head)):
        _emit(f"skipped {e.tail} {e.head}")
    return EXIT_OK


def cmd_order(args) -> int:
    g = _require_valid(args.graph)
    closure = predecessor_closure(g, _targets(args.target), _policy(args))
    lin = topological_order(closure)
    _emit("order " + ",".join(lin.nodes))
    return EXIT_OK


def cmd_enumerate(args) -> int:
    g = _require_valid(args.graph)
    closure = predecessor_closure(g, _targets(args.target), _policy(args))
    lins, truncated = all_linearizations(closure, cap=args.cap)
    for i, lin in enumerate(lins):
        _emit(f"linearization {i} {','.join(lin.nodes)}")
    _emit(f"truncated {str(truncated).lower()}")
    return EXIT_OK


def cmd_count(args) -> int:
    g = _require_valid(args.graph)
    closure = predecessor_closure(g, _targets(args.target), _policy(args))
    count, exact = count_linearizations(closure, cap=args.cap)
    _emit(f"count {count} {'exact' if exact else 'capped'}")
    return EXIT_OK


def cmd_rank(args) -> int:
    g = _require_valid(args.graph)
    closure = predecessor_closure(g, _targets(args.target), _policy(args))
    lins, truncated = all_linearizations(closure, cap=args.cap)
    weights = _weights(args.weights)
    pop = PopularityStore.load(args.popularity) if args.popularity else PopularityStore()
    ranked = rank_orderings(lins, g, weights, pop)
    for i, (lin, score) in enumerate(ranked):
        _emit(
            f"rank {i} {score.total:.6f} {score.time_component:.6f} "
            f"{score.popularity_component:.6f} {score.coherence_component:.6f} "
            + ",".join(lin.nodes)
        )
    _emit(f"truncated {str(truncated).lower()}")
    return EXIT_OK


def _weights(spec: str | None) -> RankingWeights:
    if not spec:
        return RankingWeights()
    try:
        t, p, c = (float(x) for x in spec.split(","))
        return RankingWeights(w_time=t, w_popularity=p, w_coherence=c)
    except ValueError as err:
        raise UsageError(f"--weights needs t,p,c: {err}") from None


def cmd_assemble(args) -> int:
    g = _require_valid(args.graph)
    closure = predecessor_closure(g, _targets(args.target), _policy(args))
    lin = topological_order(closure)
    content = load_content_store(args.content)
    exercises = load_exercises(args.exercises, g) if args.exercises else []
    plan = assemble_book(
        g,
        closure,
        lin,
        exercises,
        content,
        author_role=args.author,
        title=args.title,
        created_at=args.epoch,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    plan_path = out / f"{plan.id}.plan"
    book_path = out / f"{plan.id}.book.md"
    from .book import save_plan

    save_plan(plan, plan_path)
    book_path.write_text(render_book(plan, content, g), encoding="utf-8")
    _emit(f"plan {plan.id} {plan_path}")
    _emit(f"book {plan.id} {book_path}")
    for ex_id, reason in plan.omitted:
        _emit(f"omitted {ex_id} {reason}")
    return EXIT_OK


def cmd_review(args) -> int:
    g = _require_valid(args.graph)
    progress = ProgressRecord.load(args.progress)
    gaps = _targets(args.gaps)
    outline = review_book(g, progress, gaps, _policy(args), override_targets=args.override)
    content = load_content_store(args.content)
    exercises = load_exercises(args.exercises, g) if args.exercises else []
    plan = assemble_book(
        g,
        outline.book_closure,
        outline.order,
        exercises,
        content,
        author_role="student",
        title=args.title or f"Ripasso {progress.student}",
        created_at=args.epoch,
        stubs=outline.stubs,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    plan_path = out / f"{plan.id}.plan"
    book_path = out / f"{plan.id}.book.md"
    from .book import save_plan

    save_plan(plan, plan_path)
    book_path.write_text(render_book(plan, content, g), encoding="utf-8")
    _emit(f"plan {plan.id} {plan_path}")
    _emit(f"book {plan.id} {book_path}")
    for stub in plan.stubs:
        _emit(f"stub {stub}")
    return EXIT_OK


def cmd_merge(args) -> int:
    graphs = [_require_valid(p) for p in args.graphs]
    cross = load_cross_edges(args.cross) if args.cross else []
    merged = merge_graphs(graphs, cross)
    save_native(merged, args.out)
    _emit(f"merged {merged.discipline} {len(merged.nodes)} {len(merged.edges)} {args.out}")
    return EXIT_OK


def cmd_sync(args) -> int:
    g = _require_valid(args.graph)
    orders = load_orders(args.orders)
    calendar = load_calendar(args.calendar) if args.calendar else None
    findings = sync_report(g, orders, calendar)
    for f in findings:
        weeks = ""
        if f.tail_week is not None or f.head_week is not None:
            weeks = f" tail_week={f.tail_week} head_week={f.head_week}"
        _emit(
            f"{f.status} {f.tail} -> {f.head} tail_pos={f.tail_position} "
            f"head_pos={f.head_position}{weeks}"
        )
    violated = any(f.status == "VIOLATED" for f in findings)
    return EXIT_CONSTRAINT if violated else EXIT_OK


def cmd_tags(args) -> int:
    g = _require_valid(args.graph)
    index = load_tag_index(args.index, g)
    if args.analyzer_export:
        entries = load_analyzer_export(args.analyzer_export)
        batch = exercises_from_analyzer_export(index, entries, g)
        if args.make_exercises:
            # Emit in the exercise file format so output can be saved as-is.
            for ex in batch.exercises:
                _emit(f"exercise {ex.id} external {','.join(ex.nodes)}")
                _emit(f"prompt {ex.prompt_ref}")
            for form, reason in batch.skipped:
                _emit(f"# skipped {form}: {reason}")
        else:
            for form, report in batch.reports:
                _emit(f"form {form} direct {','.join(sorted(report.direct_nodes))}")
                _emit(f"form {form} closure {','.join(report.closure.sorted_nodes())}")
                for tag in report.unknown_tags:
                    _emit(f"form {form} unknown {tag}")
            for form, reason in batch.skipped:
                _emit(f"form {form} skipped {reason}")
        return EXIT_OK
    if not args.tags:
        raise UsageError("tags needs --analyzer-export or --tags")
    report = competency_lookup(index, [t.strip() for t in args.tags.split(",")], g)
    _emit("direct " + ",".join(sorted(report.direct_nodes)))
    _emit("closure " + ",".join(report.closure.sorted_nodes()))
    for tag in report.unknown_tags:
        _emit(f"unknown {tag}")
    return EXIT_OK


def cmd_import_graphml(args) -> int:
    colors = ColorMap.from_spec(args.colors) if args.colors else ColorMap()
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as err:
        raise IngestError(str(err)) from None
    g, warnings = import_graphml(
        text, colors, discipline=args.discipline, use_labels_as_ids=args.ids_from_labels
    )
    save_native(g, args.out)
    _emit(f"imported {g.discipline} {len(g.nodes)} {len(g.edges)} {args.out}")
    for w in warnings:
        _emit(f"warning {w.code} {','.join(w.ids) or '-'} {w.message}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data)
    _say(f"serving workspace {args.data} on port {args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="graphbook", description=__doc__)
    parser.add_argument("--version", action="version", version=f"graphbook {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_cmd(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = graph_cmd("validate", cmd_validate, help="check a native graph file")
    p.add_argument("graph")

    for name, fn in (("closure", cmd_closure), ("order", cmd_order)):
        p = graph_cmd(name, fn)
        p.add_argument("graph")
        p.add_argument("--target", required=True, help="comma-separated node ids")
        p.add_argument("--include-optional", action="store_true")
        p.add_argument("--choose", action="append", metavar="GROUP=TAIL")
        if name == "closure":
            p.add_argument("--enumerate", type=int, metavar="N", default=0,
                           help="enumerate closures over group choices, capped at N")

    for name, fn, cap in (("enumerate", cmd_enumerate, DEFAULT_ENUM_CAP),
                          ("count", cmd_count, DEFAULT_COUNT_CAP)):
        p = graph_cmd(name, fn)
        p.add_argument("graph")
        p.add_argument("--target", required=True)
        p.add_argument("--include-optional", action="store_true")
        p.add_argument("--choose", action="append", metavar="GROUP=TAIL")
        p.add_argument("--cap", type=int, default=cap)

    p = graph_cmd("rank", cmd_rank)
    p.add_argument("graph")
    p.add_argument("--target", required=True)
    p.add_argument("--include-optional", action="store_true")
    p.add_argument("--choose", action="append", metavar="GROUP=TAIL")
    p.add_argument("--cap", type=int, default=DEFAULT_ENUM_CAP)
    p.add_argument("--weights", metavar="T,P,C")
    p.add_argument("--popularity", metavar="FILE")

    p = graph_cmd("assemble", cmd_assemble)
    p.add_argument("graph")
    p.add_argument("--target", required=True)
    p.add_argument("--include-optional", action="store_true")
    p.add_argument("--choose", action="append", metavar="GROUP=TAIL")
    p.add_argument("--content", required=True, metavar="MANIFEST")
    p.add_argument("--exercises", metavar="FILE")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--title")
    p.add_argument("--author", default="teacher", choices=["teacher", "student"])
    p.add_argument("--epoch", type=int, help="fixed created-at timestamp for reproducible output")

    p = graph_cmd("review", cmd_review)
    p.add_argument("graph")
    p.add_argument("--progress", required=True, metavar="FILE")
    p.add_argument("--gaps", required=True, help="comma-separated gap node ids")
    p.add_argument("--include-optional", action="store_true")
    p.add_argument("--choose", action="append", metavar="GROUP=TAIL")
    p.add_argument("--override", action="store_true", help="allow non-gap targets")
    p.add_argument("--content", required=True, metavar="MANIFEST")
    p.add_argument("--exercises", metavar="FILE")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--title")
    p.add_argument("--epoch", type=int)

    p = graph_cmd("merge", cmd_merge)
    p.add_argument("graphs", nargs="+")
    p.add_argument("--cross", metavar="FILE")
    p.add_argument("--out", required=True, metavar="FILE")

    p = graph_cmd("sync", cmd_sync)
    p.add_argument("graph", help="merged native graph")
    p.add_argument("--orders", required=True, metavar="FILE")
    p.add_argument("--calendar", metavar="FILE")

    p = graph_cmd("tags", cmd_tags)
    p.add_argument("graph")
    p.add_argument("--index", required=True, metavar="FILE")
    p.add_argument("--analyzer-export", metavar="FILE")
    p.add_argument("--tags", metavar="TAG[,TAG...]")
    p.add_argument("--make-exercises", action="store_true")

    p = graph_cmd("import-graphml", cmd_import_graphml)
    p.add_argument("file")
    p.add_argument("--colors", metavar="#HEX=KIND[,...]")
    p.add_argument("--discipline", default="imported")
    p.add_argument("--ids-from-labels", action="store_true")
    p.add_argument("--out", required=True, metavar="FILE")

    p = graph_cmd("serve", cmd_serve)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data", default=os.environ.get("GRAPHBOOK_DATA", "./data"))

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as err:
        _say(f"usage error: {err}")
        return EXIT_USAGE
    except (UnresolvedGroupError,) as err:
        for cp in err.choice_points:
            members = " ".join(f"{tail}:{size}" for tail, size in cp.members)
            _emit(f"choice {cp.group_id} {cp.head} {members}")
        _say(f"constraint: {err}")
        return EXIT_CONSTRAINT
    except MergeError as err:
        _emit(f"error {err.code} {','.join(err.cycle or []) or '-'} {err}")
        return EXIT_CONSTRAINT
    except (ReviewTargetError, NoMatchError) as err:
        _say(f"constraint: {err}")
        return EXIT_CONSTRAINT
    except (InvalidGraphError, UnknownNodeError) as err:
        _say(f"validation: {err}")
        return EXIT_VALIDATION
    except (IngestError, GraphImportError) as err:
        _say(f"input error: {err}")
        return EXIT_IO
    except FileNotFoundError as err:
        _say(f"missing file: {err}")
        return EXIT_IO
    except GraphbookError as err:
        _say(f"error: {err}")
        return EXIT_CONSTRAINT
    except SystemExit as exit_:
        return int(exit_.code or 0)


if __name__ == "__main__":
    sys.exit(main())
