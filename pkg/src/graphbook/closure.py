"""Predecessor closures: backwards visits with optional/alternative resolution.

The closure of a target set is the targets plus every node some obligation
chain forces in: Required edges always pull their tail, Optional edges pull
only when the policy says so, and each alternative group pulls exactly one
chosen member. Group choices are resolved greedily per group (documented:
possibly non-minimal globally); exhaustive what-if exploration lives in
enumerate_closures.
"""

from __future__ import annotations

from .model import (
    AltGroup,
    ChoicePoint,
    ClosurePolicy,
    ClosureResult,
    CurriculumGraph,
    EdgeKind,
    ExplicitChoiceError,
    PrerequisiteEdge,
    Resolution,
    UnresolvedGroupError,
)
from .validation import ensure_usable


def direct_predecessors(g: CurriculumGraph, node_id: str) -> list[PrerequisiteEdge]:
    """In-edges of node_id, sorted by (kind, tail)."""
    g.require_node(node_id)
    return sorted(g.in_edges(node_id), key=lambda e: (e.kind.rank, e.tail))


def direct_successors(g: CurriculumGraph, node_id: str) -> list[PrerequisiteEdge]:
    """Out-edges of node_id, sorted by (kind, head)."""
    g.require_node(node_id)
    return sorted(g.out_edges(node_id), key=lambda e: (e.kind.rank, e.head))


class _Resolver:
    """Per-call resolution state: policy plus a memo of single-node closures."""

    def __init__(self, g: CurriculumGraph, policy: ClosurePolicy):
        self.g = g
        self.policy = policy
        self._single: dict[str, frozenset[str]] = {}
        if policy.resolution is Resolution.EXPLICIT:
            for gid, tail in policy.choices.items():
                group = g.alt_groups.get(gid)
                if group is None:
                    raise ExplicitChoiceError(f"choice names unknown group: {gid}")
                if tail not in {e.tail for e in group.members}:
                    raise ExplicitChoiceError(f"{tail} is not a member of group {gid}")

    def choose(self, group: AltGroup, strict_explicit: bool = True) -> PrerequisiteEdge:
        policy = self.policy
        if policy.resolution is Resolution.EXPLICIT:
            tail = policy.choices.get(group.id)
            if tail is None:
                if strict_explicit:
                    raise UnresolvedGroupError([self.choice_point(group)])
                return self._minimal_member(group)
            return next(e for e in sorted(group.members, key=lambda e: e.tail) if e.tail == tail)
        if policy.resolution is Resolution.PREFERRED:
            member_tails = {e.tail for e in group.members}
            for pref in policy.preferred:
                if pref in member_tails:
                    return next(e for e in sorted(group.members, key=lambda e: e.tail) if e.tail == pref)
            return self._minimal_member(group)
        return self._minimal_member(group)

    def _minimal_member(self, group: AltGroup) -> PrerequisiteEdge:
        # Smallest recursive closure wins; ties break on ascending tail id.
        best = None
        best_key = None
        for e in sorted(group.members, key=lambda e: e.tail):
            size = len(self.single_closure(e.tail))
            key = (size, e.tail)
            if best_key is None or key < best_key:
                best, best_key = e, key
        assert best is not None
        return best

    def single_closure(self, node_id: str) -> frozenset[str]:
        """Memoized node set of closure({node_id}) under this same policy.

        Groups met during sizing are resolved minimally even under Explicit
        policy with missing choices: sizing must not raise, it only informs
        choice points and tie-breaking.
        """
        cached = self._single.get(node_id)
        if cached is not None:
            return cached
        nodes = _collect(self.g, {node_id}, self, strict_explicit=False)[0]
        result = frozenset(nodes)
        self._single[node_id] = result
        return result

    def choice_point(self, group: AltGroup) -> ChoicePoint:
        members = tuple(
            (e.tail, len(self.single_closure(e.tail))) for e in sorted(group.members, key=lambda e: e.tail)
        )
        return ChoicePoint(group_id=group.id, head=group.head, members=members)


def _collect(
    g: CurriculumGraph,
    targets: set[str],
    resolver: _Resolver,
    strict_explicit: bool,
) -> tuple[set[str], dict[str, PrerequisiteEdge]]:
    """Worklist pass returning (closure nodes, group choices made)."""
    nodes: set[str] = set()
    resolved: dict[str, PrerequisiteEdge] = {}
    pending: list[str] = sorted(targets)
    unresolved: dict[str, AltGroup] = {}
    while pending:
        nid = pending.pop()
        if nid in nodes:
            continue
        nodes.add(nid)
        for e in g.in_edges(nid):
            if e.alt_group is not None and e.alt_group in g.alt_groups:
                continue  # handled at group level below
            if e.kind is EdgeKind.REQUIRED or (
                e.kind is EdgeKind.OPTIONAL and resolver.policy.include_optional
            ):
                if e.tail not in nodes:
                    pending.append(e.tail)
        for group in g.groups_into(nid):
            if group.id in resolved:
                continue
            if strict_explicit and resolver.policy.resolution is Resolution.EXPLICIT:
                if resolver.policy.choices.get(group.id) is None:
                    unresolved[group.id] = group
                    continue
            chosen = resolver.choose(group, strict_explicit=strict_explicit)
            resolved[group.id] = chosen
            if chosen.tail not in nodes:
                pending.append(chosen.tail)
    if unresolved:
        points = [resolver.choice_point(grp) for _, grp in sorted(unresolved.items())]
        raise UnresolvedGroupError(points)
    return nodes, resolved


def predecessor_closure(
    g: CurriculumGraph, targets: set[str] | frozenset[str], policy: ClosurePolicy | None = None
) -> ClosureResult:
    """Backwards visit from the targets under the given resolution policy.

    Raises UnknownNodeError for bad targets, ExplicitChoiceError for a choice
    naming a non-member, and UnresolvedGroupError when Explicit resolution
    reaches a group the caller did not decide.
    """
    if not targets:
        raise ValueError("targets must be non-empty")
    ensure_usable(g)
    policy = policy or ClosurePolicy()
    for t in targets:
        g.require_node(t)
    resolver = _Resolver(g, policy)
    nodes, resolved = _collect(g, set(targets), resolver, strict_explicit=True)
    return _finish(g, frozenset(targets), nodes, resolved)


def _finish(
    g: CurriculumGraph,
    targets: frozenset[str],
    nodes: set[str],
    resolved: dict[str, PrerequisiteEdge],
) -> ClosureResult:
    node_set = frozenset(nodes)
    induced = tuple(
        sorted(
            (e for e in g.edges if e.tail in node_set and e.head in node_set),
            key=lambda e: (e.tail, e.head, e.kind.rank),
        )
    )
    skipped = frozenset(
        e
        for e in g.edges
        if e.kind is EdgeKind.OPTIONAL
        and (e.alt_group is None or e.alt_group not in g.alt_groups)
        and e.head in node_set
        and e.tail not in node_set
    )
    return ClosureResult(
        targets=targets,
        nodes=node_set,
        induced_edges=induced,
        resolved_groups=dict(sorted(resolved.items())),
        skipped_optional=skipped,
    )


def enumerate_closures(
    g: CurriculumGraph,
    targets: set[str] | frozenset[str],
    include_optional: bool = False,
    cap: int = 1000,
) -> tuple[list[ClosureResult], bool]:
    """All distinct closures over the reachable group-choice combinations.

    Results are deduplicated by node set and ordered by (size, node list);
    the returned flag is True when more than cap distinct closures exist.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if not targets:
        raise ValueError("targets must be non-empty")
    ensure_usable(g)
    for t in targets:
        g.require_node(t)

    results: dict[frozenset[str], ClosureResult] = {}
    seen_choice_maps: set[tuple[tuple[str, str], ...]] = set()
    stack: list[dict[str, str]] = [{}]
    while stack:
        choices = stack.pop()
        key = tuple(sorted(choices.items()))
        if key in seen_choice_maps:
            continue
        seen_choice_maps.add(key)
        policy = ClosurePolicy(
            include_optional=include_optional, resolution=Resolution.EXPLICIT, choices=choices
        )
        try:
            closure = predecessor_closure(g, targets, policy)
        except UnresolvedGroupError as unresolved:
            first = unresolved.choice_points[0]
            for tail, _ in first.members:
                extended = dict(choices)
                extended[first.group_id] = tail
                stack.append(extended)
            continue
        results.setdefault(closure.nodes, closure)

    ordered = sorted(results.values(), key=lambda c: (len(c.nodes), sorted(c.nodes)))
    truncated = len(ordered) > cap
    return ordered[:cap], truncated
