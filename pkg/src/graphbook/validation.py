"""Graph validation: structural error reporting and deterministic cycle search.

All problems are reported, never raised: validate_graph accepts arbitrary
candidate graphs and downstream operations require a report with no errors.
"""

from __future__ import annotations

from .model import CurriculumGraph, EdgeKind, Finding, InvalidGraphError, ValidationReport


def detect_cycle(g: CurriculumGraph) -> list[str] | None:
    """Return one witness cycle [n0, ..., nk, n0], or None for a DAG.

    Deterministic: the cycle through the lexicographically smallest node that
    participates in any cycle, found by depth-first search that visits
    successors in ascending id order. Edges of every kind count.
    """
    succ: dict[str, list[str]] = {nid: [] for nid in g.nodes}
    for e in g.edges:
        if e.tail in succ and e.head in g.nodes:
            succ[e.tail].append(e.head)
    for tails in succ.values():
        tails.sort()

    for nid in g.nodes:
        if nid in succ.get(nid, []):
            return [nid, nid]

    cyclic = _nodes_on_cycles(succ)
    if not cyclic:
        return None
    start = min(cyclic)

    # DFS restricted to the start node's strongly connected component, so a
    # path back to the start always exists and backtracking stays local.
    component = _scc_of(start, succ, cyclic)
    path = [start]
    on_path = {start}

    def dfs(current: str) -> bool:
        for nxt in succ[current]:
            if nxt == start:
                return True
            if nxt in component and nxt not in on_path:
                path.append(nxt)
                on_path.add(nxt)
                if dfs(nxt):
                    return True
                on_path.discard(path.pop())
        return False

    if not dfs(start):  # pragma: no cover - component membership guarantees a cycle
        return None
    return path + [start]


def _nodes_on_cycles(succ: dict[str, list[str]]) -> set[str]:
    """Node ids lying in a strongly connected component of size >= 2."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    result: set[str] = set()

    # Tarjan, iterative to survive deep graphs.
    for root in succ:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp.append(member)
                    if member == node:
                        break
                if len(comp) > 1:
                    result.update(comp)
    return result


def _scc_of(start: str, succ: dict[str, list[str]], cyclic: set[str]) -> set[str]:
    """Members of start's SCC, assuming start lies on a cycle."""
    forward = _reach(start, succ)
    pred: dict[str, list[str]] = {nid: [] for nid in succ}
    for tail, heads in succ.items():
        for head in heads:
            pred[head].append(tail)
    backward = _reach(start, pred)
    return forward & backward & (cyclic | {start})


def _reach(start: str, adj: dict[str, list[str]]) -> set[str]:
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for nxt in adj.get(node, []):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def validate_graph(g: CurriculumGraph) -> ValidationReport:
    """Report every structural problem; empty errors means fully usable.

    Error codes: CYCLE, DANGLING_EDGE, SELF_LOOP, SINGLETON_ALT_GROUP,
    DUPLICATE_EDGE, DUPLICATE_NODE_ID. Warning codes: ISOLATED_NODE,
    UNGROUPED_ALTERNATIVE_EDGE. Findings come back sorted by (code, ids).
    """
    report = ValidationReport()

    for nid in g.duplicate_node_ids:
        report.errors.append(Finding("DUPLICATE_NODE_ID", f"node id declared more than once: {nid}", (nid,)))

    seen_edges: set[tuple[str, str, str]] = set()
    for e in g.edges:
        if e.tail not in g.nodes or e.head not in g.nodes:
            missing = tuple(x for x in (e.tail, e.head) if x not in g.nodes)
            report.errors.append(
                Finding("DANGLING_EDGE", f"edge {e.tail}->{e.head} references unknown node(s)", missing)
            )
        if e.tail == e.head:
            report.errors.append(Finding("SELF_LOOP", f"edge {e.tail}->{e.head} is a self-loop", (e.tail,)))
        if e.key in seen_edges:
            report.errors.append(
                Finding("DUPLICATE_EDGE", f"duplicate edge {e.tail}->{e.head} ({e.kind.value})", (e.tail, e.head))
            )
        seen_edges.add(e.key)
        if e.kind is EdgeKind.ALTERNATIVE and (e.alt_group is None or e.alt_group not in g.alt_groups):
            report.warnings.append(
                Finding(
                    "UNGROUPED_ALTERNATIVE_EDGE",
                    f"alternative edge {e.tail}->{e.head} belongs to no declared group",
                    (e.tail, e.head),
                )
            )

    for gid, group in g.alt_groups.items():
        if len(group.members) < 2:
            report.errors.append(
                Finding("SINGLETON_ALT_GROUP", f"group {gid} has fewer than two member edges", (gid,))
            )
        heads = {e.head for e in group.members}
        if heads and (len(heads) > 1 or group.head not in heads):
            report.errors.append(
                Finding(
                    "ALT_GROUP_MIXED_HEADS",
                    f"group {gid} (head {group.head}) has members into: {', '.join(sorted(heads))}",
                    (gid,),
                )
            )

    # Cycle detection only makes sense once edges resolve.
    if not any(f.code == "DANGLING_EDGE" for f in report.errors):
        cycle = detect_cycle(g)
        if cycle is not None:
            report.errors.append(
                Finding("CYCLE", "prerequisites form a cycle: " + " -> ".join(cycle), tuple(cycle))
            )

    touched = {e.tail for e in g.edges} | {e.head for e in g.edges}
    for nid in g.nodes:
        if nid not in touched:
            report.warnings.append(Finding("ISOLATED_NODE", f"node {nid} has no edges", (nid,)))

    return report.sort()


def ensure_usable(g: CurriculumGraph) -> None:
    """Gate for every algorithm beyond validation itself.

    Raises InvalidGraphError when validate_graph reports any error. The
    verdict is cached on the (immutable after publication) graph instance.
    """
    cached = getattr(g, "_usable_report", None)
    if cached is None:
        cached = validate_graph(g)
        g._usable_report = cached
    if not cached.ok:
        raise InvalidGraphError(cached)
