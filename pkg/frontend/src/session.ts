/** UI session state: a pure state machine the views render from.
 *
 * The working order is only ever replaced with server-validated data
 * (ranked list entries or orders that passed the per-drop check), so the
 * UI can never display an ordering the server has not blessed.
 */

import type { ChoicePoint, ClosureData, RankedOrder } from "./types.js";
import type { ClosureOutcome, OrderCheckOutcome } from "./api.js";

export interface UiSession {
  graphId: string | null;
  graphVersion: number | null;
  targets: string[];
  includeOptional: boolean;
  /** accumulated explicit group choices (group id -> member tail) */
  choices: Record<string, string>;
  /** non-empty exactly while the choice dialog must be open */
  pendingChoicePoints: ChoicePoint[];
  closure: ClosureData | null;
  rankings: RankedOrder[];
  workingOrder: string[] | null;
  /** last rejected drop, for the snap-back flash */
  lastViolation: { edge: [string, string] | null; code: string } | null;
  adoptedPlanId: string | null;
  /** targets/choices changed since the closure was computed */
  dirty: boolean;
}

export function emptySession(): UiSession {
  return {
    graphId: null,
    graphVersion: null,
    targets: [],
    includeOptional: false,
    choices: {},
    pendingChoicePoints: [],
    closure: null,
    rankings: [],
    workingOrder: null,
    lastViolation: null,
    adoptedPlanId: null,
    dirty: false,
  };
}

export function selectGraph(session: UiSession, graphId: string, version: number): UiSession {
  return { ...emptySession(), graphId, graphVersion: version };
}

export function toggleTarget(session: UiSession, nodeId: string): UiSession {
  const targets = session.targets.includes(nodeId)
    ? session.targets.filter((t) => t !== nodeId)
    : [...session.targets, nodeId].sort();
  // a new target set invalidates earlier choices and results
  return {
    ...session,
    targets,
    choices: {},
    pendingChoicePoints: [],
    closure: null,
    rankings: [],
    workingOrder: null,
    lastViolation: null,
    adoptedPlanId: null,
    dirty: targets.length > 0,
  };
}

export function setIncludeOptional(session: UiSession, value: boolean): UiSession {
  return {
    ...session,
    includeOptional: value,
    choices: {},
    pendingChoicePoints: [],
    closure: null,
    rankings: [],
    workingOrder: null,
    dirty: session.targets.length > 0,
  };
}

/** Fold a closure response in: 409 choice points open the dialog, a
 * resolved closure closes it and clears the dirty flag. */
export function applyClosureOutcome(session: UiSession, outcome: ClosureOutcome): UiSession {
  if (outcome.kind === "choices") {
    return { ...session, pendingChoicePoints: outcome.choicePoints, closure: null };
  }
  return {
    ...session,
    pendingChoicePoints: [],
    closure: outcome.closure,
    rankings: [],
    workingOrder: null,
    dirty: false,
  };
}

/** User picked one member of one pending group; the caller re-requests the
 * closure, which may surface further (newly reachable) choice points. */
export function chooseGroupMember(session: UiSession, groupId: string, tail: string): UiSession {
  return {
    ...session,
    choices: { ...session.choices, [groupId]: tail },
    pendingChoicePoints: session.pendingChoicePoints.filter((cp) => cp.group !== groupId),
  };
}

export function applyRankings(session: UiSession, rankings: RankedOrder[]): UiSession {
  return { ...session, rankings };
}

/** Load one server-ranked (hence valid) ordering into the drag list. */
export function pickOrdering(session: UiSession, index: number): UiSession {
  const entry = session.rankings[index];
  if (!entry) return session;
  return { ...session, workingOrder: [...entry.nodes], lastViolation: null, adoptedPlanId: null };
}

/** Fold the server verdict on a dropped candidate order: accept it, or
 * snap back to the previous order exposing the violated edge. */
export function applyDropOutcome(
  session: UiSession,
  candidate: string[],
  outcome: OrderCheckOutcome,
): UiSession {
  if (outcome.kind === "ok") {
    return { ...session, workingOrder: candidate, lastViolation: null, adoptedPlanId: null };
  }
  return {
    ...session,
    // workingOrder intentionally untouched: the list snaps back
    lastViolation: { edge: outcome.edge, code: outcome.code },
  };
}

export function markAdopted(session: UiSession, planId: string): UiSession {
  return { ...session, adoptedPlanId: planId };
}

/** The popularity component the current working order scores in a ranking
 * response; used to show the adoption feedback loop closing. */
export function popularityOf(rankings: RankedOrder[], order: string[]): number | null {
  const key = order.join(",");
  for (const entry of rankings) {
    if (entry.nodes.join(",") === key) return entry.breakdown.popularity;
  }
  return null;
}
