/** Application shell: wires the session state machine to the service API.
 *
 * Ordering edits are pessimistic by design: a drop first asks the server,
 * and only a confirmed candidate replaces the working order — rejected
 * drops snap back and flash the violated edge.
 */

import { ApiClient } from "./api.js";
import { GraphView } from "./graphView.js";
import { dropCandidate, ordersDiffer } from "./ordering.js";
import {
  UiSession,
  applyClosureOutcome,
  applyDropOutcome,
  applyRankings,
  chooseGroupMember,
  emptySession,
  markAdopted,
  pickOrdering,
  popularityOf,
  selectGraph,
  setIncludeOptional,
  toggleTarget,
} from "./session.js";
import type { GraphDetail, NodeInfo, StudentStatus } from "./types.js";

const api = new ApiClient("");

let session: UiSession = emptySession();
let graph: GraphDetail | null = null;
let studentMode = false;
let studentName = "studente";
let studentStatuses: Record<string, string> = {};
let draggedId: string | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function setStatus(text: string, isError = false): void {
  const bar = $("status-bar");
  bar.textContent = text;
  bar.classList.toggle("error", isError);
}

let graphView: GraphView;

async function boot(): Promise<void> {
  graphView = new GraphView($("graph-container"), { onNodeClick: handleNodeClick });
  $("btn-closure").addEventListener("click", () => void computeClosure());
  $("btn-mode").addEventListener("click", toggleMode);
  $("btn-review").addEventListener("click", () => void generateReview());
  ($("opt-optional") as HTMLInputElement).addEventListener("change", (ev) => {
    session = setIncludeOptional(session, (ev.target as HTMLInputElement).checked);
    renderAll();
  });
  await refreshGraphList();
}

async function refreshGraphList(): Promise<void> {
  const { graphs } = await api.listGraphs();
  const select = $("graph-select") as HTMLSelectElement;
  select.innerHTML = "";
  for (const g of graphs.filter((g) => g.latest)) {
    const option = document.createElement("option");
    option.value = `${g.id}@${g.version}`;
    option.textContent = `${g.id} v${g.version} (${g.nodes} units)`;
    select.appendChild(option);
  }
  select.onchange = () => void loadSelectedGraph();
  if (graphs.length) await loadSelectedGraph();
  else setStatus("no graphs in the workspace yet — upload one via the service API");
}

async function loadSelectedGraph(): Promise<void> {
  const select = $("graph-select") as HTMLSelectElement;
  if (!select.value) return;
  const [id, version] = select.value.split("@");
  graph = await api.getGraph(id, Number(version));
  session = selectGraph(session, id, Number(version));
  studentStatuses = {};
  if (studentMode) {
    studentStatuses = (await api.getProgress(studentName)).statuses;
  }
  renderAll();
  setStatus(`loaded ${id} v${version}`);
}

function handleNodeClick(nodeId: string): void {
  if (!graph) return;
  if (studentMode) {
    void cycleStudentStatus(nodeId);
    return;
  }
  session = toggleTarget(session, nodeId);
  showNodeDetails(nodeId);
  renderAll();
}

async function cycleStudentStatus(nodeId: string): Promise<void> {
  const next: Record<string, StudentStatus> = {
    unseen: "mastered",
    mastered: "gap",
    gap: "unseen",
    in_progress: "mastered",
  };
  const current = (studentStatuses[nodeId] ?? "unseen") as StudentStatus;
  const status = next[current] ?? "mastered";
  await api.setProgress(studentName, session.graphId!, nodeId, status);
  studentStatuses = (await api.getProgress(studentName)).statuses;
  renderAll();
  setStatus(`${nodeId}: ${status}`);
}

function showNodeDetails(nodeId: string): void {
  if (!graph) return;
  const node = graph.nodes.find((n) => n.id === nodeId);
  if (!node) return;
  const prereqs = graph.edges.filter((e) => e.head === nodeId);
  $("node-details").innerHTML = `
    <h3>${node.title}</h3>
    <dl>
      <dt>id</dt><dd>${node.id}</dd>
      <dt>cluster</dt><dd>${node.cluster ?? "—"}</dd>
      <dt>duration</dt><dd>${node.duration_minutes} min</dd>
      <dt>prerequisites</dt>
      <dd>${prereqs.length ? prereqs.map((e) => `${e.tail} (${e.kind})`).join(", ") : "none"}</dd>
    </dl>`;
}

async function computeClosure(): Promise<void> {
  const graphId = session.graphId;
  if (!graphId || session.targets.length === 0) {
    setStatus("pick at least one target unit first", true);
    return;
  }
  const outcome = await api.requestClosure(
    graphId,
    session.targets,
    session.choices,
    session.includeOptional,
  );
  session = applyClosureOutcome(session, outcome);
  if (outcome.kind === "ok") {
    const ranked = await api.rankOrderings(graphId, outcome.closure, 25);
    session = applyRankings(session, ranked.orders);
    setStatus(
      `closure: ${outcome.closure.nodes.length} units, ` +
        `${ranked.orders.length}${ranked.truncated ? "+" : ""} valid orders`,
    );
  } else {
    setStatus("alternative groups need a decision");
  }
  renderAll();
}

function renderChoiceDialog(): void {
  const dialog = $("choice-dialog");
  // the dialog is open exactly while choice points are pending
  dialog.classList.toggle("hidden", session.pendingChoicePoints.length === 0);
  if (session.pendingChoicePoints.length === 0) return;
  const body = $("choice-body");
  body.innerHTML = "";
  for (const cp of session.pendingChoicePoints) {
    const block = document.createElement("div");
    block.className = "choice-point";
    block.innerHTML = `<h4>Alternative prerequisites for <code>${cp.head}</code> (group ${cp.group})</h4>`;
    const row = document.createElement("div");
    row.className = "choice-members";
    for (const member of cp.members) {
      const button = document.createElement("button");
      button.innerHTML = `<strong>${member.tail}</strong><br><small>${member.closure_size} unit(s) pulled in</small>`;
      button.addEventListener("click", () => {
        session = chooseGroupMember(session, cp.group, member.tail);
        renderAll();
        void computeClosure(); // loop until every reachable group is resolved
      });
      row.appendChild(button);
    }
    block.appendChild(row);
    body.appendChild(block);
  }
}

function renderRankings(): void {
  const list = $("rankings");
  list.innerHTML = "";
  session.rankings.forEach((entry, index) => {
    const item = document.createElement("li");
    const active = session.workingOrder && !ordersDiffer(entry.nodes, session.workingOrder);
    item.className = active ? "active" : "";
    item.innerHTML =
      `<span class="score">${entry.score.toFixed(4)}</span> ` +
      `<small>t=${entry.breakdown.time.toFixed(4)} ` +
      `p=${entry.breakdown.popularity.toFixed(4)} ` +
      `c=${entry.breakdown.coherence.toFixed(4)}</small><br>` +
      entry.nodes.join(" → ");
    item.addEventListener("click", () => {
      session = pickOrdering(session, index);
      renderAll();
    });
    list.appendChild(item);
  });
}

function renderWorkingOrder(): void {
  const container = $("working-order");
  container.innerHTML = "";
  $("order-panel").classList.toggle("hidden", session.workingOrder === null);
  if (!session.workingOrder || !graph) return;
  const titles = new Map(graph.nodes.map((n: NodeInfo) => [n.id, n.title]));

  session.workingOrder.forEach((nodeId) => {
    const row = document.createElement("li");
    row.draggable = true;
    row.dataset.node = nodeId;
    row.textContent = `${titles.get(nodeId) ?? nodeId}`;
    const violated = session.lastViolation?.edge;
    if (violated && (violated[0] === nodeId || violated[1] === nodeId)) {
      row.classList.add("violated");
    }
    row.addEventListener("dragstart", () => {
      draggedId = nodeId;
    });
    row.addEventListener("dragover", (ev) => ev.preventDefault());
    row.addEventListener("drop", (ev) => {
      ev.preventDefault();
      void handleDrop(nodeId);
    });
    container.appendChild(row);
  });

  const note = $("violation-note");
  if (session.lastViolation) {
    const edge = session.lastViolation.edge;
    note.textContent = edge
      ? `rejected: ${edge[0]} must come before ${edge[1]}`
      : `rejected: ${session.lastViolation.code}`;
    note.classList.remove("hidden");
  } else {
    note.classList.add("hidden");
  }
}

async function handleDrop(targetId: string): Promise<void> {
  if (!draggedId || !session.workingOrder || !session.closure || !session.graphId) return;
  const candidate = dropCandidate(session.workingOrder, draggedId, targetId);
  draggedId = null;
  if (!candidate) return;
  const outcome = await api.checkOrder(session.graphId, session.closure, candidate);
  session = applyDropOutcome(session, candidate, outcome);
  if (outcome.kind === "ok") setStatus("order accepted");
  else setStatus("drop rejected — snapping back", true);
  renderAll();
}

async function adopt(): Promise<void> {
  const { graphId, closure, workingOrder } = session;
  if (!graphId || !closure || !workingOrder) return;
  const plan = await api.adoptBook(graphId, closure, workingOrder, []);
  session = markAdopted(session, plan.id);
  const doc = await api.renderBook(plan.id);
  $("book-preview").textContent = doc;
  // re-rank so the adoption's popularity effect is visible immediately
  const before = popularityOf(session.rankings, workingOrder);
  const ranked = await api.rankOrderings(graphId, closure, 25);
  session = applyRankings(session, ranked.orders);
  const after = popularityOf(session.rankings, workingOrder);
  renderAll();
  setStatus(
    `adopted ${plan.id}; popularity ${before?.toFixed(4) ?? "?"} → ${after?.toFixed(4) ?? "?"}`,
  );
}

function toggleMode(): void {
  studentMode = !studentMode;
  $("btn-mode").textContent = studentMode ? "switch to teacher mode" : "switch to student mode";
  $("teacher-panel").classList.toggle("hidden", studentMode);
  $("student-panel").classList.toggle("hidden", !studentMode);
  if (studentMode && session.graphId) {
    void api.getProgress(studentName).then((p) => {
      studentStatuses = p.statuses;
      renderAll();
    });
  }
  renderAll();
}

async function generateReview(): Promise<void> {
  if (!session.graphId) return;
  const gaps = Object.entries(studentStatuses)
    .filter(([, status]) => status === "gap")
    .map(([nid]) => nid);
  if (!gaps.length) {
    setStatus("mark at least one unit as gap first", true);
    return;
  }
  const plan = await api.requestReview(studentName, session.graphId, gaps);
  const doc = await api.renderBook(plan.id);
  $("book-preview").textContent = doc;
  setStatus(
    `review book ${plan.id}: ${plan.order.length} full unit(s), ` +
      `${plan.stubs.length} collapsed stub(s): ${plan.stubs.join(", ") || "none"}`,
  );
}

function renderStudentBadges(): void {
  const legend = $("student-legend");
  legend.innerHTML = "";
  if (!graph) return;
  for (const [nid, status] of Object.entries(studentStatuses).sort()) {
    if (status === "unseen") continue;
    const badge = document.createElement("span");
    badge.className = `badge ${status}`;
    badge.textContent = `${nid}: ${status}`;
    legend.appendChild(badge);
  }
}

function renderAll(): void {
  if (!graph) return;
  graphView.render(graph, new Set(session.targets), new Set(session.closure?.nodes ?? []));
  $("targets-line").textContent = session.targets.length
    ? `targets: ${session.targets.join(", ")}${session.dirty ? " (closure out of date)" : ""}`
    : "click units in the graph to pick targets";
  renderChoiceDialog();
  renderRankings();
  renderWorkingOrder();
  renderStudentBadges();
  const adoptButton = $("btn-adopt");
  adoptButton.classList.toggle("hidden", session.workingOrder === null);
  adoptButton.onclick = () => void adopt();
}

document.addEventListener("DOMContentLoaded", () => {
  boot().catch((err) => setStatus(String(err), true));
});
