import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, FetchLike } from "../src/api.js";
import { applyRankings, emptySession, popularityOf } from "../src/session.js";
import type { ClosureData } from "../src/types.js";

type Route = { status: number; body: unknown };

/** fetch double driven by a method+path -> queue of canned responses map. */
function fakeFetch(routes: Record<string, Route[] | Route>): {
  fetcher: FetchLike;
  calls: { path: string; body?: unknown }[];
} {
  const calls: { path: string; body?: unknown }[] = [];
  const fetcher: FetchLike = async (input, init) => {
    const key = `${init?.method ?? "GET"} ${input}`;
    calls.push({ path: key, body: init?.body ? JSON.parse(String(init.body)) : undefined });
    const entry = routes[key];
    if (!entry) throw new Error(`no canned response for ${key}`);
    const route = Array.isArray(entry) ? entry.shift() : entry;
    if (!route) throw new Error(`canned responses exhausted for ${key}`);
    return new Response(JSON.stringify(route.body), {
      status: route.status,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetcher, calls };
}

const closure: ClosureData = {
  targets: ["c"],
  nodes: ["a", "c"],
  induced_edges: [{ tail: "a", head: "c", kind: "required", alt_group: null }],
  resolved_groups: {},
  skipped_optional: [],
};

describe("requestClosure", () => {
  it("returns the closure on 200", async () => {
    const { fetcher } = fakeFetch({
      "POST /graphs/latin/closure": { status: 200, body: { closure } },
    });
    const api = new ApiClient("", fetcher);
    const outcome = await api.requestClosure("latin", ["c"], {}, false);
    expect(outcome).toEqual({ kind: "ok", closure });
  });

  it("turns 409 UNRESOLVED_GROUPS into choice points, not an error", async () => {
    const { fetcher, calls } = fakeFetch({
      "POST /graphs/latin/closure": {
        status: 409,
        body: {
          code: "UNRESOLVED_GROUPS",
          message: "unresolved",
          choice_points: [
            { group: "g1", head: "c", members: [{ tail: "x", closure_size: 1 }] },
          ],
        },
      },
    });
    const api = new ApiClient("", fetcher);
    const outcome = await api.requestClosure("latin", ["c"], {}, false);
    expect(outcome.kind).toBe("choices");
    if (outcome.kind === "choices") {
      expect(outcome.choicePoints[0].group).toBe("g1");
    }
    expect(calls[0].body).toMatchObject({ resolution: "explicit", targets: ["c"] });
  });

  it("propagates other failures as ApiError", async () => {
    const { fetcher } = fakeFetch({
      "POST /graphs/latin/closure": {
        status: 404,
        body: { code: "UNKNOWN_NODE", message: "unknown node id: ghost" },
      },
    });
    const api = new ApiClient("", fetcher);
    await expect(api.requestClosure("latin", ["ghost"], {}, false)).rejects.toBeInstanceOf(
      ApiError,
    );
  });
});

describe("checkOrder", () => {
  it("maps 200 to ok and 409 to a rejection carrying the edge", async () => {
    const { fetcher } = fakeFetch({
      "POST /graphs/latin/order-check": [
        { status: 200, body: { ok: true } },
        { status: 409, body: { code: "EDGE_VIOLATION", message: "order rejected", edge: ["a", "c"] } },
      ],
    });
    const api = new ApiClient("", fetcher);
    expect(await api.checkOrder("latin", closure, ["a", "c"])).toEqual({ kind: "ok" });
    const rejected = await api.checkOrder("latin", closure, ["c", "a"]);
    expect(rejected).toEqual({ kind: "rejected", code: "EDGE_VIOLATION", edge: ["a", "c"] });
  });
});

describe("adopt-then-rerank flow", () => {
  it("raises the adopted ordering's popularity component on the next ranking call", async () => {
    const order = ["a", "c"];
    const rankingBefore = {
      orders: [{ nodes: order, score: 0.3, breakdown: { time: 0.1, popularity: 0, coherence: 0 } }],
      truncated: false,
    };
    const rankingAfter = {
      orders: [{ nodes: order, score: 0.8, breakdown: { time: 0.1, popularity: 0.5, coherence: 0 } }],
      truncated: false,
    };
    const { fetcher } = fakeFetch({
      "POST /graphs/latin/linearizations": [
        { status: 200, body: rankingBefore },
        { status: 200, body: rankingAfter },
      ],
      "POST /books": { status: 200, body: { id: "bk_x", order, stubs: [], items: [] } },
    });
    const api = new ApiClient("", fetcher);

    let session = applyRankings(emptySession(), (await api.rankOrderings("latin", closure, 5)).orders);
    const before = popularityOf(session.rankings, order);

    await api.adoptBook("latin", closure, order, []);
    session = applyRankings(session, (await api.rankOrderings("latin", closure, 5)).orders);
    const after = popularityOf(session.rankings, order);

    expect(before).toBe(0);
    expect(after).toBeGreaterThan(before!);
  });
});
