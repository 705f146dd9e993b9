/** SVG rendering of the curriculum graph with closure highlighting. */

import type { GraphDetail } from "./types.js";
import { edgeColor, layoutGraph } from "./layout.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface GraphViewCallbacks {
  onNodeClick: (nodeId: string) => void;
}

export class GraphView {
  private svg: SVGSVGElement | null = null;

  constructor(
    private container: HTMLElement,
    private callbacks: GraphViewCallbacks,
  ) {}

  render(graph: GraphDetail, targets: Set<string>, closureNodes: Set<string>): void {
    const layout = layoutGraph(
      graph.nodes.map((n) => n.id),
      graph.edges,
    );
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
    svg.setAttribute("width", String(layout.width));
    svg.classList.add("graph-svg");

    const marker = document.createElementNS(SVG_NS, "defs");
    marker.innerHTML =
      '<marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" ' +
      'markerWidth="7" markerHeight="7" orient="auto-start-reverse">' +
      '<path d="M 0 0 L 10 5 L 0 10 z" fill="context-stroke"/></marker>';
    svg.appendChild(marker);

    for (const edge of graph.edges) {
      const from = layout.positions.get(edge.tail);
      const to = layout.positions.get(edge.head);
      if (!from || !to) continue;
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(from.x + 140));
      line.setAttribute("y1", String(from.y + 14));
      line.setAttribute("x2", String(to.x));
      line.setAttribute("y2", String(to.y + 14));
      line.setAttribute("stroke", edgeColor(edge.kind));
      line.setAttribute("stroke-width", "1.4");
      line.setAttribute("marker-end", "url(#arrow)");
      if (edge.kind === "optional") line.setAttribute("stroke-dasharray", "6 3");
      const inClosure = closureNodes.has(edge.tail) && closureNodes.has(edge.head);
      line.classList.add("edge");
      if (closureNodes.size && !inClosure) line.classList.add("dimmed");
      svg.appendChild(line);
    }

    for (const node of graph.nodes) {
      const pos = layout.positions.get(node.id);
      if (!pos) continue;
      const group = document.createElementNS(SVG_NS, "g");
      group.classList.add("node");
      if (targets.has(node.id)) group.classList.add("target");
      // the computed closure is highlighted (the walkthrough's green subgraph)
      else if (closureNodes.has(node.id)) group.classList.add("in-closure");
      else if (closureNodes.size) group.classList.add("dimmed");
      group.setAttribute("transform", `translate(${pos.x}, ${pos.y})`);

      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("width", "140");
      rect.setAttribute("height", "28");
      rect.setAttribute("rx", "6");
      group.appendChild(rect);

      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", "70");
      text.setAttribute("y", "18");
      text.setAttribute("text-anchor", "middle");
      text.textContent = node.id.length > 19 ? node.id.slice(0, 18) + "…" : node.id;
      group.appendChild(text);

      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = `${node.title} (${node.duration_minutes} min)`;
      group.appendChild(title);

      group.addEventListener("click", () => this.callbacks.onNodeClick(node.id));
      svg.appendChild(group);
    }

    this.svg?.remove();
    this.svg = svg;
    this.container.appendChild(svg);
  }
}
