import { describe, expect, it } from "vitest";

import {
  answerBody,
  applyReorder,
  applyToggle,
  createView,
  markRendered,
} from "../src/state";

function arrangementView(n = 4) {
  return createView({
    challenge_id: "c1",
    format: "arrangement",
    n,
    images: Array.from({ length: n }, (_, slot) => ({ slot, url: `/image/c1/${slot}` })),
  });
}

function selectionView(n = 8) {
  return createView({
    challenge_id: "c2",
    format: "selection",
    n,
    question: "What have you not done today?",
    images: Array.from({ length: n }, (_, slot) => ({ slot, url: `/image/c2/${slot}` })),
  });
}

describe("arrangement state", () => {
  it("starts in presentation order with zero clicks", () => {
    const view = arrangementView();
    expect(view.order).toEqual([0, 1, 2, 3]);
    expect(view.clickCount).toBe(0);
  });

  it("reorder moves the dragged slot in front of the target", () => {
    const view = arrangementView();
    expect(applyReorder(view, 3, 0)).toBe(true);
    expect(view.order).toEqual([3, 0, 1, 2]);
    expect(view.clickCount).toBe(1);
  });

  it("dropping a tile on itself is not a committed gesture", () => {
    const view = arrangementView();
    expect(applyReorder(view, 2, 2)).toBe(false);
    expect(view.clickCount).toBe(0);
  });

  it("click count only grows within a challenge", () => {
    const view = arrangementView();
    applyReorder(view, 1, 0);
    applyReorder(view, 2, 0);
    applyReorder(view, 3, 2);
    expect(view.clickCount).toBe(3);
    expect(answerBody(view)).toEqual({ order: view.order });
  });
});

describe("selection state", () => {
  it("toggle flips membership and counts every tap", () => {
    const view = selectionView();
    applyToggle(view, 5);
    expect([...view.selected]).toEqual([5]);
    applyToggle(view, 5);
    expect(view.selected.size).toBe(0);
    expect(view.clickCount).toBe(2);
  });

  it("answer body sorts the selected slots", () => {
    const view = selectionView();
    applyToggle(view, 6);
    applyToggle(view, 2);
    expect(answerBody(view)).toEqual({ selected: [2, 6] });
  });

  it("unknown slots are ignored", () => {
    const view = selectionView(4);
    expect(applyToggle(view, 99)).toBe(false);
    expect(view.clickCount).toBe(0);
  });
});

describe("rendered beacon state", () => {
  it("only the first mark sticks", () => {
    const view = arrangementView();
    markRendered(view, 111);
    markRendered(view, 222);
    expect(view.renderedAt).toBe(111);
  });
});
