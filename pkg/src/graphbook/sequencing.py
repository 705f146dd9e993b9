"""Serialization of closures into teaching orders, plus enumeration and ranking.

A linearization is a total order over a closure's nodes respecting every
induced edge (any kind: once both endpoints are in the book, even an optional
edge constrains the order). Enumeration and counting are capped because the
number of linear extensions explodes combinatorially.
"""

from __future__ import annotations

import heapq
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .model import ClosureResult, CurriculumGraph, GraphbookError

DEFAULT_ENUM_CAP = 1000
DEFAULT_COUNT_CAP = 1_000_000


class CorruptClosureError(GraphbookError):
    """A closure whose induced subgraph is not a DAG (should never happen)."""


@dataclass(frozen=True)
class Linearization:
    nodes: tuple[str, ...]
    source_closure: ClosureResult

    def __len__(self) -> int:
        return len(self.nodes)

    def adjacent_pairs(self) -> list[tuple[str, str]]:
        return list(zip(self.nodes, self.nodes[1:]))


@dataclass(frozen=True)
class OrderCheck:
    ok: bool
    reason: str = "OK"  # OK | NOT_PERMUTATION | EDGE_VIOLATION
    violated_edge: tuple[str, str] | None = None

    def __bool__(self) -> bool:
        return self.ok


def _edge_pairs(closure: ClosureResult) -> list[tuple[str, str]]:
    return sorted({(e.tail, e.head) for e in closure.induced_edges})


def topological_order(closure: ClosureResult) -> Linearization:
    """Kahn's algorithm, always emitting the smallest ready node id."""
    indegree = {nid: 0 for nid in closure.nodes}
    succ: dict[str, list[str]] = {nid: [] for nid in closure.nodes}
    for tail, head in _edge_pairs(closure):
        indegree[head] += 1
        succ[tail].append(head)
    ready = [nid for nid, deg in indegree.items() if deg == 0]
    heapq.heapify(ready)
    out: list[str] = []
    while ready:
        nid = heapq.heappop(ready)
        out.append(nid)
        for nxt in succ[nid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(out) != len(closure.nodes):
        raise CorruptClosureError("closure subgraph contains a cycle")
    return Linearization(nodes=tuple(out), source_closure=closure)


def is_valid_order(closure: ClosureResult, order: list[str] | tuple[str, ...]) -> OrderCheck:
    """Check a candidate order against the closure's nodes and induced edges.

    On failure reports the first violated edge met while scanning the order
    left to right (ties at one position broken by ascending tail id).
    """
    if set(order) != set(closure.nodes) or len(order) != len(closure.nodes):
        return OrderCheck(ok=False, reason="NOT_PERMUTATION")
    in_edges: dict[str, list[tuple[str, str]]] = {nid: [] for nid in closure.nodes}
    for tail, head in _edge_pairs(closure):
        in_edges[head].append((tail, head))
    seen: set[str] = set()
    for nid in order:
        for tail, head in sorted(in_edges[nid]):
            if tail not in seen:
                return OrderCheck(ok=False, reason="EDGE_VIOLATION", violated_edge=(tail, head))
        seen.add(nid)
    return OrderCheck(ok=True)


def all_linearizations(
    closure: ClosureResult, cap: int = DEFAULT_ENUM_CAP
) -> tuple[list[Linearization], bool]:
    """Backtracking enumeration in ascending lexicographic order, capped."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    nodes = sorted(closure.nodes)
    indegree = {nid: 0 for nid in nodes}
    succ: dict[str, list[str]] = {nid: [] for nid in nodes}
    for tail, head in _edge_pairs(closure):
        indegree[head] += 1
        succ[tail].append(head)

    results: list[Linearization] = []
    path: list[str] = []
    truncated = False

    def backtrack() -> bool:
        nonlocal truncated
        if len(path) == len(nodes):
            if len(results) >= cap:
                truncated = True
                return False
            results.append(Linearization(nodes=tuple(path), source_closure=closure))
            return True
        for nid in nodes:
            if indegree[nid] == 0 and nid not in taken:
                taken.add(nid)
                path.append(nid)
                for nxt in succ[nid]:
                    indegree[nxt] -= 1
                keep_going = backtrack()
                for nxt in succ[nid]:
                    indegree[nxt] += 1
                path.pop()
                taken.discard(nid)
                if not keep_going:
                    return False
        return True

    taken: set[str] = set()
    backtrack()
    return results, truncated


def count_linearizations(closure: ClosureResult, cap: int = DEFAULT_COUNT_CAP) -> tuple[int, bool]:
    """Exact count when it fits under cap, else (cap, exact=False)."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    nodes = sorted(closure.nodes)
    indegree = {nid: 0 for nid in nodes}
    succ: dict[str, list[str]] = {nid: [] for nid in nodes}
    for tail, head in _edge_pairs(closure):
        indegree[head] += 1
        succ[tail].append(head)

    count = 0
    taken: set[str] = set()

    def backtrack(depth: int) -> bool:
        nonlocal count
        if depth == len(nodes):
            count += 1
            return count <= cap
        for nid in nodes:
            if indegree[nid] == 0 and nid not in taken:
                taken.add(nid)
                for nxt in succ[nid]:
                    indegree[nxt] -= 1
                keep_going = backtrack(depth + 1)
                for nxt in succ[nid]:
                    indegree[nxt] += 1
                taken.discard(nid)
                if not keep_going:
                    return False
        return True

    exact = backtrack(0)
    return (count, True) if exact else (cap, False)


@dataclass(frozen=True)
class RankingWeights:
    w_time: float = 1.0
    w_popularity: float = 1.0
    w_coherence: float = 1.0

    def __post_init__(self):
        if min(self.w_time, self.w_popularity, self.w_coherence) < 0:
            raise ValueError("weights must be non-negative")
        if self.w_time == self.w_popularity == self.w_coherence == 0:
            raise ValueError("at least one weight must be positive")


@dataclass
class PopularityStore:
    """Adjacent-pair adoption counts feeding the popularity ranking component."""

    pair_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    book_count: int = 0

    def record_adoption(self, lin: Linearization) -> "PopularityStore":
        """Count every adjacent ordered pair of an adopted book once."""
        for pair in lin.adjacent_pairs():
            self.pair_counts[pair] = self.pair_counts.get(pair, 0) + 1
        self.book_count += 1
        return self

    # Line-oriented persistence: `pair <tail> <head> <count>` rows plus one
    # `books <count>` row, written atomically (temp file then rename).
    def save(self, path: str | Path) -> None:
        path = Path(path)
        lines = [f"pair {t} {h} {c}" for (t, h), c in sorted(self.pair_counts.items())]
        lines.append(f"books {self.book_count}")
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
    def load(cls, path: str | Path) -> "PopularityStore":
        store = cls()
        path = Path(path)
        if not path.exists():
            return store
        for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "pair" and len(parts) == 4:
                store.pair_counts[(parts[1], parts[2])] = int(parts[3])
            elif parts[0] == "books" and len(parts) == 2:
                store.book_count = int(parts[1])
            else:
                raise ValueError(f"{path}:{lineno}: bad popularity line: {raw!r}")
        return store


def record_adoption(pop: PopularityStore, lin: Linearization) -> PopularityStore:
    return pop.record_adoption(lin)


@dataclass(frozen=True)
class ScoreBreakdown:
    time_component: float
    popularity_component: float
    coherence_component: float
    total: float


def score_ordering(
    lin: Linearization,
    g: CurriculumGraph,
    weights: RankingWeights | None = None,
    pop: PopularityStore | None = None,
) -> ScoreBreakdown:
    """Affine score over three normalized components; higher is better.

    time: 1/(1 + total minutes) — only separates closures of different node
    sets (e.g. alternative resolutions). popularity: adopted adjacent-pair
    mass over 1 + total adopted books. coherence: fraction of adjacent pairs
    staying inside one cluster.
    """
    weights = weights or RankingWeights()
    pop = pop or PopularityStore()
    total_minutes = sum(g.require_node(nid).duration_minutes for nid in lin.nodes)
    t = 1.0 / (1.0 + total_minutes)
    p = sum(pop.pair_counts.get(pair, 0) for pair in lin.adjacent_pairs()) / (1.0 + pop.book_count)
    if len(lin.nodes) <= 1:
        c = 0.0
    else:
        same = 0
        for a, b in lin.adjacent_pairs():
            ca = g.nodes[a].cluster
            cb = g.nodes[b].cluster
            if ca is not None and ca == cb:
                same += 1
        c = same / (len(lin.nodes) - 1)
    total = weights.w_time * t + weights.w_popularity * p + weights.w_coherence * c
    return ScoreBreakdown(time_component=t, popularity_component=p, coherence_component=c, total=total)


def rank_orderings(
    lins: list[Linearization],
    g: CurriculumGraph,
    weights: RankingWeights | None = None,
    pop: PopularityStore | None = None,
) -> list[tuple[Linearization, ScoreBreakdown]]:
    """Sort by descending score; equal scores fall back to lexicographic order."""
    scored = [(lin, score_ordering(lin, g, weights, pop)) for lin in lins]
    scored.sort(key=lambda item: (-item[1].total, item[0].nodes))
    return scored
