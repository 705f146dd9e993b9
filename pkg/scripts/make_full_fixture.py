#!/usr/bin/env python3
"""Generate the synthetic full-scale fixture: 150 units, 300 edges.

Deterministic (fixed seed) so the committed file can be regenerated
verbatim. Node ids follow a chapter_unit pattern; edges are forward-only
over the id order, which keeps the graph acyclic by construction.

Usage: python scripts/make_full_fixture.py > fixtures/latin-full-150.graph
"""

import random

NODES = 150
EDGES = 300
CLUSTERS = [
    "fonologia",
    "morfologia_nome",
    "morfologia_verbo",
    "sintassi_frase",
    "sintassi_periodo",
    "lessico",
]


def main() -> None:
    rng = random.Random(219)  # lesson count of the source textbook
    lines = [
        "# Synthetic full-scale curriculum graph: 150 units, 300 edges.",
        "# Generated by scripts/make_full_fixture.py (seeded); do not hand-edit.",
        "graph latin_full",
        "meta source synthetic",
    ]
    ids = []
    for i in range(NODES):
        cluster = CLUSTERS[min(i * len(CLUSTERS) // NODES, len(CLUSTERS) - 1)]
        nid = f"u{i + 1:03d}_{cluster}"
        ids.append(nid)
        duration = rng.choice([30, 30, 45, 45, 60, 90])
        pages = rng.choice([2.0, 2.5, 3.0, 3.5, 3.5, 4.0, 4.5, 5.0])
        lines.append(f"node {nid} | Unita {i + 1} ({cluster}) | {cluster} | {duration} | - | {pages}")

    edges = set()
    # Spine: every non-root unit builds on a recent predecessor, so no unit
    # is isolated and the graph stays connected enough to be interesting.
    for i in range(1, NODES):
        j = rng.randrange(max(0, i - 8), i)
        edges.add((j, i))
    while len(edges) < EDGES:
        i = rng.randrange(0, NODES - 1)
        j = rng.randrange(i + 1, min(i + 25, NODES))
        edges.add((i, j))

    optional_budget = 20
    for tail, head in sorted(edges):
        kind = "required"
        if optional_budget and rng.random() < 0.10:
            kind = "optional"
            optional_budget -= 1
        lines.append(f"edge {ids[tail]} -> {ids[head]} {kind}")

    print("\n".join(lines))


if __name__ == "__main__":
    main()
