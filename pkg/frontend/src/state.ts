// Local challenge state: the current tile order or selected set, the click
// counter the server wants reported, and the rendered-at timestamp. Pure
// data transforms; the DOM layer calls these and re-renders.

export type ChallengeFormat = "arrangement" | "selection";

export interface ChallengePayload {
  challenge_id: string;
  format: ChallengeFormat;
  n: number;
  images: { slot: number; url: string }[];
  question?: string;
}

export interface ChallengeView {
  challengeId: string;
  format: ChallengeFormat;
  n: number;
  question?: string;
  urlBySlot: Map<number, string>;
  // arrangement: left-to-right order the user has built so far
  order: number[];
  // selection: currently highlighted slots
  selected: Set<number>;
  clickCount: number;
  renderedAt: number | null;
}

export function createView(payload: ChallengePayload): ChallengeView {
  return {
    challengeId: payload.challenge_id,
    format: payload.format,
    n: payload.n,
    question: payload.question,
    urlBySlot: new Map(payload.images.map((img) => [img.slot, img.url])),
    order: payload.images.map((img) => img.slot),
    selected: new Set(),
    clickCount: 0,
    renderedAt: null,
  };
}

// Move the dragged tile in front of the drop target. A drop on the tile's
// own position is not a committed gesture and does not count as a click.
export function applyReorder(view: ChallengeView, fromSlot: number, toSlot: number): boolean {
  if (fromSlot === toSlot) return false;
  const from = view.order.indexOf(fromSlot);
  const to = view.order.indexOf(toSlot);
  if (from < 0 || to < 0) return false;
  view.order.splice(from, 1);
  view.order.splice(to, 0, fromSlot);
  view.clickCount += 1;
  return true;
}

export function applyToggle(view: ChallengeView, slot: number): boolean {
  if (!view.urlBySlot.has(slot)) return false;
  if (view.selected.has(slot)) {
    view.selected.delete(slot);
  } else {
    view.selected.add(slot);
  }
  view.clickCount += 1;
  return true;
}

export function markRendered(view: ChallengeView, now: number): void {
  if (view.renderedAt === null) {
    view.renderedAt = now;
  }
}

export function answerBody(view: ChallengeView): { order?: number[]; selected?: number[] } {
  if (view.format === "arrangement") {
    return { order: [...view.order] };
  }
  return { selected: [...view.selected].sort((a, b) => a - b) };
}
