/** Longest-path layered layout for the SVG graph view (pure). */

import type { EdgeInfo } from "./types.js";

export interface NodePosition {
  id: string;
  x: number;
  y: number;
  layer: number;
}

export interface LayoutResult {
  positions: Map<string, NodePosition>;
  width: number;
  height: number;
}

const COLUMN_WIDTH = 190;
const ROW_HEIGHT = 64;
const MARGIN = 40;

/** Layer = longest prerequisite chain feeding the node; within a layer,
 * nodes stack alphabetically so the picture is stable across reloads. */
export function layoutGraph(nodeIds: string[], edges: EdgeInfo[]): LayoutResult {
  const layer = new Map<string, number>();
  const incoming = new Map<string, string[]>();
  const ids = [...nodeIds].sort();
  for (const id of ids) incoming.set(id, []);
  for (const e of edges) {
    incoming.get(e.head)?.push(e.tail);
  }

  const resolve = (id: string, trail: Set<string>): number => {
    const known = layer.get(id);
    if (known !== undefined) return known;
    if (trail.has(id)) return 0; // cycles never reach here for valid graphs
    trail.add(id);
    const parents = incoming.get(id) ?? [];
    const value = parents.length
      ? 1 + Math.max(...parents.map((p) => resolve(p, trail)))
      : 0;
    trail.delete(id);
    layer.set(id, value);
    return value;
  };
  for (const id of ids) resolve(id, new Set());

  const byLayer = new Map<number, string[]>();
  for (const id of ids) {
    const l = layer.get(id) ?? 0;
    if (!byLayer.has(l)) byLayer.set(l, []);
    byLayer.get(l)!.push(id);
  }

  const positions = new Map<string, NodePosition>();
  let maxRows = 1;
  for (const [l, members] of byLayer) {
    members.sort();
    maxRows = Math.max(maxRows, members.length);
    members.forEach((id, row) => {
      positions.set(id, {
        id,
        layer: l,
        x: MARGIN + l * COLUMN_WIDTH,
        y: MARGIN + row * ROW_HEIGHT,
      });
    });
  }
  const layers = byLayer.size || 1;
  return {
    positions,
    width: MARGIN * 2 + (layers - 1) * COLUMN_WIDTH + 160,
    height: MARGIN * 2 + (maxRows - 1) * ROW_HEIGHT + 30,
  };
}

/** Prerequisite color language: black = required, green = optional, red = alternative. */
export function edgeColor(kind: EdgeInfo["kind"]): string {
  switch (kind) {
    case "optional":
      return "#008000";
    case "alternative":
      return "#ff0000";
    default:
      return "#000000";
  }
}
