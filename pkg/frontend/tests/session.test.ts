import { describe, expect, it } from "vitest";

import {
  applyClosureOutcome,
  applyDropOutcome,
  applyRankings,
  chooseGroupMember,
  emptySession,
  pickOrdering,
  popularityOf,
  selectGraph,
  toggleTarget,
} from "../src/session.js";
import type { ChoicePoint, ClosureData, RankedOrder } from "../src/types.js";

const closure: ClosureData = {
  targets: ["c"],
  nodes: ["a", "b", "c"],
  induced_edges: [
    { tail: "a", head: "b", kind: "required", alt_group: null },
    { tail: "b", head: "c", kind: "required", alt_group: null },
  ],
  resolved_groups: {},
  skipped_optional: [],
};

const choicePoint: ChoicePoint = {
  group: "g1",
  head: "c",
  members: [
    { tail: "x", closure_size: 1 },
    { tail: "y", closure_size: 2 },
  ],
};

describe("target selection", () => {
  it("toggles targets and invalidates downstream state", () => {
    let s = selectGraph(emptySession(), "latin", 1);
    s = toggleTarget(s, "c");
    s = applyClosureOutcome(s, { kind: "ok", closure });
    expect(s.closure).not.toBeNull();
    s = toggleTarget(s, "b");
    expect(s.targets).toEqual(["b", "c"]);
    expect(s.closure).toBeNull();
    expect(s.choices).toEqual({});
    expect(s.dirty).toBe(true);
    s = toggleTarget(s, "b");
    expect(s.targets).toEqual(["c"]);
  });
});

describe("choice-point loop", () => {
  it("opens the dialog exactly when the closure outcome carries choice points", () => {
    let s = selectGraph(emptySession(), "latin", 1);
    s = toggleTarget(s, "c");
    expect(s.pendingChoicePoints).toHaveLength(0);

    s = applyClosureOutcome(s, { kind: "choices", choicePoints: [choicePoint] });
    expect(s.pendingChoicePoints).toHaveLength(1); // dialog open
    expect(s.closure).toBeNull();

    s = chooseGroupMember(s, "g1", "x");
    expect(s.choices).toEqual({ g1: "x" });
    expect(s.pendingChoicePoints).toHaveLength(0); // dialog closes

    s = applyClosureOutcome(s, { kind: "ok", closure });
    expect(s.pendingChoicePoints).toHaveLength(0);
    expect(s.closure?.nodes).toEqual(["a", "b", "c"]);
    expect(s.dirty).toBe(false);
  });

  it("keeps the dialog open while other groups are still pending", () => {
    const second: ChoicePoint = { group: "g2", head: "b", members: [{ tail: "z", closure_size: 3 }] };
    let s = applyClosureOutcome(emptySession(), {
      kind: "choices",
      choicePoints: [choicePoint, second],
    });
    s = chooseGroupMember(s, "g1", "y");
    expect(s.pendingChoicePoints.map((cp) => cp.group)).toEqual(["g2"]);
  });
});

describe("working order and snap-back", () => {
  const rankings: RankedOrder[] = [
    { nodes: ["a", "b", "c"], score: 1.0, breakdown: { time: 0.1, popularity: 0, coherence: 0.9 } },
    { nodes: ["a", "c", "b"], score: 0.5, breakdown: { time: 0.1, popularity: 0, coherence: 0.4 } },
  ];

  it("only server-provided orders enter the working list", () => {
    let s = applyRankings(emptySession(), rankings);
    expect(s.workingOrder).toBeNull();
    s = pickOrdering(s, 1);
    expect(s.workingOrder).toEqual(["a", "c", "b"]);
    expect(pickOrdering(s, 99).workingOrder).toEqual(["a", "c", "b"]); // out of range: no change
  });

  it("accepted drops replace the order; rejected drops snap back with the edge", () => {
    let s = applyRankings(emptySession(), rankings);
    s = pickOrdering(s, 0);

    s = applyDropOutcome(s, ["a", "c", "b"], { kind: "ok" });
    expect(s.workingOrder).toEqual(["a", "c", "b"]);
    expect(s.lastViolation).toBeNull();

    s = applyDropOutcome(s, ["c", "a", "b"], {
      kind: "rejected",
      code: "EDGE_VIOLATION",
      edge: ["a", "c"],
    });
    expect(s.workingOrder).toEqual(["a", "c", "b"]); // snapped back
    expect(s.lastViolation?.edge).toEqual(["a", "c"]);
  });
});

describe("popularity lookup", () => {
  it("finds the breakdown component of a specific ordering", () => {
    const rankings: RankedOrder[] = [
      { nodes: ["a", "b"], score: 1, breakdown: { time: 0, popularity: 0.5, coherence: 0 } },
      { nodes: ["b", "a"], score: 0, breakdown: { time: 0, popularity: 0, coherence: 0 } },
    ];
    expect(popularityOf(rankings, ["a", "b"])).toBe(0.5);
    expect(popularityOf(rankings, ["b", "a"])).toBe(0);
    expect(popularityOf(rankings, ["x"])).toBeNull();
  });
});
