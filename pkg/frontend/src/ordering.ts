/** Pure helpers for the drag-reorder list. */

/** New array with the item at `from` re-inserted so it lands at `to`
 * (indices over the current list; standard splice semantics). */
export function moveItem<T>(items: readonly T[], from: number, to: number): T[] {
  if (from < 0 || from >= items.length) return [...items];
  const out = [...items];
  const [moved] = out.splice(from, 1);
  const clamped = Math.max(0, Math.min(to, out.length));
  out.splice(clamped, 0, moved);
  return out;
}

/** Candidate order for dropping `draggedId` onto the slot of `targetId`. */
export function dropCandidate(
  order: readonly string[],
  draggedId: string,
  targetId: string,
): string[] | null {
  const from = order.indexOf(draggedId);
  const to = order.indexOf(targetId);
  if (from < 0 || to < 0 || from === to) return null;
  return moveItem(order, from, to);
}

/** True when two orders differ (cheap guard before asking the server). */
export function ordersDiffer(a: readonly string[], b: readonly string[]): boolean {
  return a.length !== b.length || a.some((x, i) => x !== b[i]);
}
