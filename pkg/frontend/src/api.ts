/** Typed client over the curriculum service.
 *
 * Every mutation of UI state flows through these calls: the client never
 * invents closures or orderings, it only relays what the server validated.
 */

import type {
  ApiFailure,
  ChoicePoint,
  ClosureData,
  GraphDetail,
  GraphSummary,
  PlanData,
  RankedOrder,
  StudentStatus,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ApiFailure,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

/** Closure request outcome: resolved, or a dialog's worth of choice points. */
export type ClosureOutcome =
  | { kind: "ok"; closure: ClosureData }
  | { kind: "choices"; choicePoints: ChoicePoint[] };

/** Per-drop validation outcome; a rejection carries the violated edge. */
export type OrderCheckOutcome =
  | { kind: "ok" }
  | { kind: "rejected"; code: string; edge: [string, string] | null };

export class ApiClient {
  constructor(
    private base: string = "",
    private fetcher: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetcher(this.base + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, (await response.json()) as ApiFailure);
    }
    return (await response.json()) as T;
  }

  listGraphs(): Promise<{ graphs: GraphSummary[] }> {
    return this.request("GET", "/graphs");
  }

  getGraph(id: string, version?: number): Promise<GraphDetail> {
    const q = version !== undefined ? `?version=${version}` : "";
    return this.request("GET", `/graphs/${id}${q}`);
  }

  /** Explicit-resolution closure; 409 choice points become a dialog, never an error. */
  async requestClosure(
    graphId: string,
    targets: string[],
    choices: Record<string, string>,
    includeOptional: boolean,
  ): Promise<ClosureOutcome> {
    try {
      const data = await this.request<{ closure: ClosureData }>(
        "POST",
        `/graphs/${graphId}/closure`,
        { targets, choices, include_optional: includeOptional, resolution: "explicit" },
      );
      return { kind: "ok", closure: data.closure };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409 && err.body.code === "UNRESOLVED_GROUPS") {
        return { kind: "choices", choicePoints: err.body.choice_points ?? [] };
      }
      throw err;
    }
  }

  rankOrderings(
    graphId: string,
    closure: ClosureData,
    cap: number,
  ): Promise<{ orders: RankedOrder[]; truncated: boolean }> {
    return this.request("POST", `/graphs/${graphId}/linearizations`, { closure, cap });
  }

  /** Server-side validation of one drag-drop candidate order. */
  async checkOrder(
    graphId: string,
    closure: ClosureData,
    order: string[],
  ): Promise<OrderCheckOutcome> {
    try {
      await this.request("POST", `/graphs/${graphId}/order-check`, { closure, order });
      return { kind: "ok" };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        return { kind: "rejected", code: err.body.code, edge: err.body.edge ?? null };
      }
      throw err;
    }
  }

  adoptBook(
    graphId: string,
    closure: ClosureData,
    order: string[],
    exercises: string[],
    title?: string,
  ): Promise<PlanData> {
    return this.request("POST", "/books", {
      graph_id: graphId,
      closure,
      order,
      exercises,
      title,
    });
  }

  renderBook(planId: string): Promise<string> {
    return this.fetcher(`${this.base}/books/${planId}/render`).then(async (r) => {
      if (!r.ok) throw new ApiError(r.status, (await r.json()) as ApiFailure);
      return r.text();
    });
  }

  getProgress(student: string): Promise<{ student: string; statuses: Record<string, string> }> {
    return this.request("GET", `/students/${student}/progress`);
  }

  setProgress(
    student: string,
    graphId: string,
    nodeId: string,
    status: StudentStatus,
  ): Promise<unknown> {
    return this.request("PUT", `/students/${student}/progress/${nodeId}`, {
      graph_id: graphId,
      status,
    });
  }

  requestReview(student: string, graphId: string, gaps: string[]): Promise<PlanData> {
    return this.request("POST", `/students/${student}/review`, { graph_id: graphId, gaps });
  }
}
