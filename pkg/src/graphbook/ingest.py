"""Parsing and writing of every on-disk format the engine consumes.

Native graph documents are line-oriented UTF-8 text (human-diffable and
trivially versioned); the canonical writer sorts everything so output is
byte-stable and idempotent. GraphML import covers the dialect yEd emits,
mapping edge line colors onto prerequisite kinds.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .book import ContentDoc, ContentStore, Exercise, ExerciseKind
from .interop import AnalyzerEntry, CrossEdge, TagIndex
from .model import (
    AltGroup,
    CurriculumGraph,
    EdgeKind,
    Finding,
    GraphbookError,
    TOKEN_RE,
    TopicNode,
    ValidationReport,
)
from .validation import validate_graph

GRAPHML_NS = "{http://graphml.graphdrawing.org/xmlns}"
YWORKS_NS = "{http://www.yworks.com/xml/graphml}"


class IngestError(GraphbookError):
    pass


# --- native graph format ----------------------------------------------------


def parse_native(text: str) -> tuple[CurriculumGraph, ValidationReport]:
    """Parse a native graph document and validate the result.

    Syntax problems become SYNTAX findings with "line N, col C" locations;
    the parser keeps going so one bad line does not hide the rest. The
    returned report also contains the structural validation findings, with
    source line numbers attached where an offender maps back to one line.
    """
    discipline: str | None = None
    nodes: list[TopicNode] = []
    edges: list[tuple[int, object]] = []  # (line, edge) — line kept for enrichment
    group_decls: dict[str, tuple[int, str]] = {}  # id -> (line, head)
    metadata: dict[str, str] = {}
    node_lines: dict[str, int] = {}
    syntax: list[Finding] = []

    def bad(lineno: int, col: int, message: str) -> None:
        syntax.append(Finding("SYNTAX", f"line {lineno}, col {col}: {message}", ()))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        head, _, rest = line.strip().partition(" ")
        rest = rest.strip()
        if head == "graph":
            if discipline is not None:
                bad(lineno, 1, "duplicate graph header")
            elif not TOKEN_RE.match(rest):
                bad(lineno, 7, f"bad discipline token: {rest!r}")
            else:
                discipline = rest
        elif head == "meta":
            key, _, value = rest.partition(" ")
            if not key:
                bad(lineno, 6, "meta needs a key and a value")
            else:
                metadata[key] = value
        elif head == "node":
            parsed = _parse_node_line(rest, lineno, bad)
            if parsed is not None:
                if parsed.id in node_lines:
                    pass  # duplicate surfaces as DUPLICATE_NODE_ID from validation
                else:
                    node_lines[parsed.id] = lineno
                nodes.append(parsed)
        elif head == "edge":
            parsed_edge = _parse_edge_line(rest, lineno, bad)
            if parsed_edge is not None:
                edges.append((lineno, parsed_edge))
        elif head == "group":
            parts = rest.split()
            if len(parts) != 2:
                bad(lineno, 7, "group needs: group <id> <head>")
            elif parts[0] in group_decls:
                bad(lineno, 7, f"duplicate group declaration: {parts[0]}")
            elif not (TOKEN_RE.match(parts[0]) and TOKEN_RE.match(parts[1])):
                bad(lineno, 7, f"bad group tokens: {rest!r}")
            else:
                group_decls[parts[0]] = (lineno, parts[1])
        else:
            bad(lineno, 1, f"unknown declaration {head!r}")

    if discipline is None:
        bad(0, 1, "missing graph header")
        discipline = "unnamed"

    edge_objs = [e for _, e in edges]
    groups = _assemble_groups(edge_objs, group_decls)
    graph = CurriculumGraph.build(
        discipline=discipline, nodes=nodes, edges=edge_objs, alt_groups=groups, metadata=metadata
    )

    report = validate_graph(graph)
    edge_lines = {}
    for lineno, e in edges:
        edge_lines.setdefault((e.tail, e.head), lineno)
    _attach_lines(report, node_lines, edge_lines, {gid: ln for gid, (ln, _) in group_decls.items()})
    report.errors = sorted(syntax, key=Finding.sort_key) + report.errors
    return graph, report


def _parse_node_line(rest: str, lineno: int, bad) -> TopicNode | None:
    fields = [f.strip() for f in rest.split("|")]
    if len(fields) not in (5, 6):
        bad(lineno, 6, f"node needs 5 or 6 |-separated fields, got {len(fields)}")
        return None
    nid, title, cluster, duration, content_ref = fields[:5]
    pages = fields[5] if len(fields) == 6 else "-"
    try:
        return TopicNode(
            id=nid,
            title=title,
            cluster=None if cluster == "-" else cluster,
            duration_minutes=int(duration),
            page_estimate=None if pages == "-" else float(pages),
            content_ref=None if content_ref == "-" else content_ref,
        )
    except (ValueError, TypeError) as err:
        bad(lineno, 6, str(err))
        return None


def _parse_edge_line(rest: str, lineno: int, bad):
    from .model import PrerequisiteEdge

    parts = rest.split()
    if len(parts) != 4 or parts[1] != "->":
        bad(lineno, 6, "edge needs: edge <tail> -> <head> <kind>")
        return None
    tail, _, head, kind_spec = parts
    kind_name, _, group = kind_spec.partition(":")
    try:
        if kind_name == "required":
            return PrerequisiteEdge(
                tail=tail, head=head, kind=EdgeKind.REQUIRED, alt_group=group or None
            )
        if kind_name == "optional" and not group:
            return PrerequisiteEdge(tail=tail, head=head, kind=EdgeKind.OPTIONAL)
        if kind_name == "alt" and group:
            return PrerequisiteEdge(tail=tail, head=head, kind=EdgeKind.ALTERNATIVE, alt_group=group)
        bad(lineno, 6, f"bad edge kind {kind_spec!r} (required, optional, alt:<group>, required:<group>)")
        return None
    except ValueError as err:
        bad(lineno, 6, str(err))
        return None


def _assemble_groups(edges, group_decls) -> dict[str, AltGroup]:
    members: dict[str, list] = {gid: [] for gid in group_decls}
    for e in edges:
        if e.alt_group is not None:
            members.setdefault(e.alt_group, []).append(e)
    groups = {}
    for gid, group_members in members.items():
        group_members = sorted(group_members, key=lambda e: (e.tail, e.head))
        if gid in group_decls:
            head = group_decls[gid][1]
        elif group_members:
            head = group_members[0].head
        else:
            continue
        groups[gid] = AltGroup(id=gid, head=head, members=tuple(group_members))
    return groups


def _attach_lines(report: ValidationReport, node_lines, edge_lines, group_lines) -> None:
    """Append "(line N)" to findings whose offenders map to one source line."""

    def enrich(finding: Finding) -> Finding:
        line = None
        if finding.code in ("SELF_LOOP", "DUPLICATE_EDGE", "DANGLING_EDGE", "UNGROUPED_ALTERNATIVE_EDGE"):
            if len(finding.ids) == 2:
                line = edge_lines.get((finding.ids[0], finding.ids[1]))
            elif len(finding.ids) == 1:
                line = edge_lines.get((finding.ids[0], finding.ids[0])) or node_lines.get(finding.ids[0])
        elif finding.code == "DUPLICATE_NODE_ID" and finding.ids:
            line = node_lines.get(finding.ids[0])
        elif finding.code in ("SINGLETON_ALT_GROUP", "ALT_GROUP_MIXED_HEADS") and finding.ids:
            line = group_lines.get(finding.ids[0])
        if line is None:
            return finding
        return Finding(finding.code, f"{finding.message} (line {line})", finding.ids)

    report.errors = [enrich(f) for f in report.errors]
    report.warnings = [enrich(f) for f in report.warnings]


def write_native(g: CurriculumGraph) -> str:
    """Canonical form: sorted declarations, stable bytes, idempotent."""
    lines = [f"graph {g.discipline}"]
    for key in sorted(g.metadata):
        lines.append(f"meta {key} {g.metadata[key]}")
    for nid in sorted(g.nodes):
        node = g.nodes[nid]
        if "|" in node.title:
            raise ValueError(f"node {nid}: titles cannot contain '|'")
        cluster = node.cluster if node.cluster is not None else "-"
        content = node.content_ref if node.content_ref is not None else "-"
        pages = repr(node.page_estimate) if node.page_estimate is not None else "-"
        lines.append(
            f"node {node.id} | {node.title} | {cluster} | {node.duration_minutes} | {content} | {pages}"
        )
    for e in sorted(g.edges, key=lambda e: (e.tail, e.head, e.kind.rank)):
        if e.kind is EdgeKind.REQUIRED:
            kind_spec = "required" if e.alt_group is None else f"required:{e.alt_group}"
        elif e.kind is EdgeKind.OPTIONAL:
            kind_spec = "optional"
        else:
            kind_spec = f"alt:{e.alt_group}"
        lines.append(f"edge {e.tail} -> {e.head} {kind_spec}")
    for gid in sorted(g.alt_groups):
        lines.append(f"group {gid} {g.alt_groups[gid].head}")
    return "\n".join(lines) + "\n"


def structurally_equal(a: CurriculumGraph, b: CurriculumGraph) -> bool:
    """Order-insensitive comparison used by the round-trip contract."""
    return (
        a.discipline == b.discipline
        and a.nodes == b.nodes
        and sorted(a.edges, key=lambda e: (e.tail, e.head, e.kind.rank))
        == sorted(b.edges, key=lambda e: (e.tail, e.head, e.kind.rank))
        and a.alt_groups == b.alt_groups
        and a.metadata == b.metadata
    )


def load_native(path: str | Path) -> tuple[CurriculumGraph, ValidationReport]:
    return parse_native(Path(path).read_text(encoding="utf-8"))


def save_native(g: CurriculumGraph, path: str | Path) -> None:
    Path(path).write_text(write_native(g), encoding="utf-8")


# --- yEd GraphML import -----------------------------------------------------

DEFAULT_COLOR_MAP = {
    "#000000": EdgeKind.REQUIRED,
    "#008000": EdgeKind.OPTIONAL,
    "#FF0000": EdgeKind.ALTERNATIVE,
}


@dataclass
class ColorMap:
    """Hex line-color to edge-kind mapping; unknown colors warn and fall back."""

    mapping: dict[str, EdgeKind] = field(default_factory=lambda: dict(DEFAULT_COLOR_MAP))

    def kind_of(self, color: str | None) -> EdgeKind | None:
        if color is None:
            return EdgeKind.REQUIRED  # unstyled edges are plain prerequisites
        return self.mapping.get(color.upper())

    @classmethod
    def from_spec(cls, spec: str) -> "ColorMap":
        """Parse overrides like "#800080=optional,#123456=alternative"."""
        mapping = dict(DEFAULT_COLOR_MAP)
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            color, _, kind = part.partition("=")
            try:
                mapping[color.strip().upper()] = EdgeKind(kind.strip().lower())
            except ValueError:
                raise IngestError(f"bad color map entry: {part!r}") from None
        return cls(mapping=mapping)


class GraphImportError(IngestError):
    def __init__(self, message: str, report: ValidationReport | None = None):
        super().__init__(message)
        self.report = report


DEFAULT_IMPORT_DURATION = 30


def import_graphml(
    xml_text: str,
    colors: ColorMap | None = None,
    *,
    discipline: str = "imported",
    use_labels_as_ids: bool = False,
) -> tuple[CurriculumGraph, list[Finding]]:
    """Import the GraphML dialect yEd writes.

    Red (alternative) in-edges are grouped per head together with that head's
    black (required) in-edges into one synthesized group — the OR reading of
    "necessary but substitutable" — and every synthesized group is surfaced
    as a warning for human review. Never returns an invalid graph: structural
    errors raise GraphImportError instead.
    """
    colors = colors or ColorMap()
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as err:
        raise GraphImportError(f"malformed XML: {err}") from None

    warnings: list[Finding] = []
    nodes: list[TopicNode] = []
    id_map: dict[str, str] = {}
    for el in root.iter(f"{GRAPHML_NS}node"):
        raw_id = el.get("id")
        if raw_id is None:
            raise GraphImportError("node element without id")
        label_el = next(iter(el.iter(f"{YWORKS_NS}NodeLabel")), None)
        label = (label_el.text or "").strip() if label_el is not None else ""
        nid = _slugify(label) if (use_labels_as_ids and label) else _slugify(raw_id)
        if nid in id_map.values():
            raise GraphImportError(f"duplicate node id after import: {nid}")
        id_map[raw_id] = nid
        nodes.append(
            TopicNode(id=nid, title=label or raw_id, duration_minutes=DEFAULT_IMPORT_DURATION)
        )
    if nodes:
        warnings.append(
            Finding(
                "DEFAULT_DURATION",
                f"no duration data in GraphML; defaulted {len(nodes)} node(s) to "
                f"{DEFAULT_IMPORT_DURATION} minutes",
                tuple(sorted(n.id for n in nodes)),
            )
        )

    from .model import PrerequisiteEdge

    raw_edges: list[tuple[str, str, EdgeKind]] = []
    for el in root.iter(f"{GRAPHML_NS}edge"):
        source, target = el.get("source"), el.get("target")
        if source not in id_map or target not in id_map:
            raise GraphImportError(f"edge references unknown node: {source}->{target}")
        style = next(iter(el.iter(f"{YWORKS_NS}LineStyle")), None)
        color = style.get("color") if style is not None else None
        kind = colors.kind_of(color)
        if kind is None:
            warnings.append(
                Finding(
                    "UNKNOWN_COLOR",
                    f"edge {id_map[source]}->{id_map[target]} has unmapped color {color}; "
                    "treated as required",
                    (id_map[source], id_map[target]),
                )
            )
            kind = EdgeKind.REQUIRED
        raw_edges.append((id_map[source], id_map[target], kind))

    # Group alternatives per head, enrolling the head's required in-edges.
    by_head_alt: dict[str, list[int]] = {}
    for i, (_, head, kind) in enumerate(raw_edges):
        if kind is EdgeKind.ALTERNATIVE:
            by_head_alt.setdefault(head, []).append(i)

    group_of: dict[int, str] = {}
    groups: dict[str, str] = {}  # gid -> head
    for head, alt_indices in sorted(by_head_alt.items()):
        member_indices = list(alt_indices) + [
            i for i, (_, h, kind) in enumerate(raw_edges) if h == head and kind is EdgeKind.REQUIRED
        ]
        if len(member_indices) < 2:
            i = alt_indices[0]
            tail = raw_edges[i][0]
            raw_edges[i] = (tail, head, EdgeKind.REQUIRED)
            warnings.append(
                Finding(
                    "LONE_ALTERNATIVE_EDGE",
                    f"edge {tail}->{head} is alternative but has nothing to alternate with; "
                    "treated as required",
                    (tail, head),
                )
            )
            continue
        gid = "alt_" + head
        groups[gid] = head
        for i in member_indices:
            group_of[i] = gid
        member_names = ", ".join(sorted(f"{raw_edges[i][0]}->{head}" for i in member_indices))
        warnings.append(
            Finding(
                "SYNTHESIZED_GROUP",
                f"group {gid} synthesized from in-edges of {head}: {member_names}",
                (gid, head),
            )
        )

    edges = [
        PrerequisiteEdge(tail=t, head=h, kind=k, alt_group=group_of.get(i))
        for i, (t, h, k) in enumerate(raw_edges)
    ]
    graph = CurriculumGraph.build(
        discipline=discipline,
        nodes=nodes,
        edges=edges,
        alt_groups=None,  # inferred from the enrolled edges
        metadata={"source_format": "graphml"},
    )
    report = validate_graph(graph)
    if not report.ok:
        raise GraphImportError(
            "imported graph is structurally invalid: "
            + "; ".join(f.message for f in report.errors),
            report,
        )
    warnings.extend(report.warnings)
    return graph, sorted(warnings, key=Finding.sort_key)


def _slugify(text: str) -> str:
    out = []
    for ch in text.lower():
        if ch.isalnum() or ch in "_:-":
            out.append(ch)
        elif out and out[-1] != "_":
            out.append("_")
    slug = "".join(out).strip("_")
    if not slug or not TOKEN_RE.match(slug):
        raise GraphImportError(f"cannot derive a valid id from {text!r}")
    return slug


# --- content store, exercises, tags, analyzer exports, calendars ------------


def load_content_store(manifest_path: str | Path) -> ContentStore:
    """Manifest rows `token<TAB>relative/path`; files resolve next to it."""
    manifest_path = Path(manifest_path)
    store = ContentStore()
    for lineno, raw in enumerate(manifest_path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            token, rel = line.split("\t")
        except ValueError:
            raise IngestError(f"{manifest_path}:{lineno}: expected token<TAB>path") from None
        doc_path = manifest_path.parent / rel
        if not doc_path.is_file():
            raise IngestError(f"{manifest_path}:{lineno}: missing content file {rel}")
        text = doc_path.read_text(encoding="utf-8")
        title = token
        body = text
        first, _, remainder = text.partition("\n")
        if first.startswith("# "):
            title = first[2:].strip()
            body = remainder
        store.docs[token] = ContentDoc(title=title, body=body.strip("\n"))
    return store


def parse_exercises(text: str, g: CurriculumGraph | None = None) -> list[Exercise]:
    """Parse the exercise file format; validates node ids when given a graph."""
    pending: dict | None = None
    out: list[Exercise] = []

    def flush(lineno: int):
        nonlocal pending
        if pending is None:
            return
        if "prompt_ref" not in pending:
            raise IngestError(f"exercise {pending['id']} has no prompt line (before line {lineno})")
        out.append(Exercise(**pending))
        pending = None

    lines = text.splitlines()
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "exercise":
            flush(lineno)
            parts = rest.split()
            if len(parts) != 3 or parts[1] not in ("local", "external"):
                raise IngestError(f"line {lineno}: exercise needs: exercise <id> local|external <nodes>")
            pending = {
                "id": parts[0],
                "kind": ExerciseKind(parts[1]),
                "nodes": tuple(parts[2].split(",")),
            }
        elif head == "prompt":
            if pending is None:
                raise IngestError(f"line {lineno}: prompt outside an exercise block")
            pending["prompt_ref"] = rest.strip()
        elif head == "difficulty":
            if pending is None:
                raise IngestError(f"line {lineno}: difficulty outside an exercise block")
            pending["difficulty"] = int(rest)
        else:
            raise IngestError(f"line {lineno}: unknown exercise declaration {head!r}")
    flush(len(lines) + 1)

    if g is not None:
        from .book import validate_exercises

        validate_exercises(out, g)
    return out


def load_exercises(path: str | Path, g: CurriculumGraph | None = None) -> list[Exercise]:
    return parse_exercises(Path(path).read_text(encoding="utf-8"), g)


def load_tag_index(path: str | Path, g: CurriculumGraph | None = None) -> TagIndex:
    """Rows `tag<TAB>node_id[,node_id...]`; tags must be lowercase tokens."""
    index = TagIndex()
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tag, nodes_csv = line.split("\t")
        except ValueError:
            raise IngestError(f"{path}:{lineno}: expected tag<TAB>node[,node...]") from None
        if not TOKEN_RE.match(tag) or tag != tag.lower():
            raise IngestError(f"{path}:{lineno}: bad tag token {tag!r}")
        index.entries[tag] = frozenset(nodes_csv.split(","))
    if g is not None:
        problems = index.validate_against(g)
        if problems:
            raise IngestError("; ".join(p.message + ": " + ",".join(p.ids) for p in problems))
    return index


def parse_analyzer_export(text: str) -> list[AnalyzerEntry]:
    """Rows `form<TAB>tag[,tag...]`, one analyzed form per line."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            form, tags_csv = line.split("\t")
        except ValueError:
            raise IngestError(f"line {lineno}: expected form<TAB>tag[,tag...]") from None
        out.append(AnalyzerEntry(form=form, tags=tuple(t.strip().lower() for t in tags_csv.split(","))))
    return out


def load_analyzer_export(path: str | Path) -> list[AnalyzerEntry]:
    return parse_analyzer_export(Path(path).read_text(encoding="utf-8"))


def load_calendar(path: str | Path) -> dict[str, dict[int, int]]:
    """Rows `discipline<TAB>order index<TAB>week`."""
    calendar: dict[str, dict[int, int]] = {}
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            disc, idx, week = line.split("\t")
            calendar.setdefault(disc, {})[int(idx)] = int(week)
        except ValueError:
            raise IngestError(f"{path}:{lineno}: expected discipline<TAB>index<TAB>week") from None
    return calendar


def load_cross_edges(path: str | Path) -> list[CrossEdge]:
    """Rows `cross <discipline:tail> -> <discipline:head>`."""
    out = []
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 4 and parts[0] == "cross" and parts[2] == "->":
            out.append(CrossEdge(tail=parts[1], head=parts[3]))
        elif len(parts) == 3 and parts[1] == "->":
            out.append(CrossEdge(tail=parts[0], head=parts[2]))
        else:
            raise IngestError(f"{path}:{lineno}: expected cross <tail> -> <head>")
    return out


def load_orders(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Rows `discipline<TAB>node,node,...` — per-discipline teaching orders."""
    orders: dict[str, tuple[str, ...]] = {}
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            disc, csv = line.split("\t")
        except ValueError:
            raise IngestError(f"{path}:{lineno}: expected discipline<TAB>node,node,...") from None
        orders[disc] = tuple(csv.split(","))
    return orders
