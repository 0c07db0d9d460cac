// DOM rendering for both challenge layouts.
//
// Arrangement tiles reorder with a slide-and-swipe gesture: pointerdown on a
// tile starts the drag, pointerup over another tile drops it in front of
// that tile. Selection tiles toggle highlight on click. The rendered-at
// beacon fires once every tile image has finished decoding.

import { ApiClient } from "./api";
import {
  ChallengeView,
  applyReorder,
  applyToggle,
  markRendered,
} from "./state";

export interface TileCallbacks {
  onChange?: (view: ChallengeView) => void;
  onRendered?: (view: ChallengeView) => void;
}

function watchImageLoads(
  container: HTMLElement,
  view: ChallengeView,
  callbacks: TileCallbacks,
): void {
  const images = Array.from(container.querySelectorAll("img"));
  let pending = images.filter((img) => !img.complete).length;
  const fire = () => {
    markRendered(view, Date.now());
    callbacks.onRendered?.(view);
  };
  if (pending === 0) {
    fire();
    return;
  }
  for (const img of images) {
    if (img.complete) continue;
    const done = () => {
      img.removeEventListener("load", done);
      img.removeEventListener("error", done);
      pending -= 1;
      if (pending === 0) fire();
    };
    img.addEventListener("load", done);
    img.addEventListener("error", done);
  }
}

export function renderArrangement(
  container: HTMLElement,
  view: ChallengeView,
  api: ApiClient,
  callbacks: TileCallbacks = {},
): void {
  container.innerHTML = "";
  container.className = "tiles tiles-row";
  let dragSlot: number | null = null;

  const rebuild = () => {
    container.innerHTML = "";
    for (const slot of view.order) {
      const tile = document.createElement("div");
      tile.className = "tile";
      tile.dataset.slot = String(slot);
      const img = document.createElement("img");
      img.src = api.imageUrl(view.urlBySlot.get(slot)!);
      img.draggable = false;
      tile.appendChild(img);

      tile.addEventListener("pointerdown", () => {
        dragSlot = slot;
        tile.classList.add("dragging");
      });
      tile.addEventListener("pointerup", () => {
        if (dragSlot !== null && applyReorder(view, dragSlot, slot)) {
          rebuild();
          callbacks.onChange?.(view);
        }
        dragSlot = null;
        container
          .querySelectorAll(".dragging")
          .forEach((el) => el.classList.remove("dragging"));
      });
      container.appendChild(tile);
    }
  };
  rebuild();
  watchImageLoads(container, view, callbacks);
}

export function renderSelection(
  container: HTMLElement,
  view: ChallengeView,
  api: ApiClient,
  callbacks: TileCallbacks = {},
): void {
  container.innerHTML = "";
  container.className = "tiles tiles-grid";

  for (const [slot, url] of view.urlBySlot) {
    const tile = document.createElement("div");
    tile.className = "tile";
    tile.dataset.slot = String(slot);
    const img = document.createElement("img");
    img.src = api.imageUrl(url);
    img.draggable = false;
    tile.appendChild(img);

    tile.addEventListener("click", () => {
      if (applyToggle(view, slot)) {
        tile.classList.toggle("selected", view.selected.has(slot));
        callbacks.onChange?.(view);
      }
    });
    container.appendChild(tile);
  }
  watchImageLoads(container, view, callbacks);
}

export function renderChallenge(
  container: HTMLElement,
  view: ChallengeView,
  api: ApiClient,
  callbacks: TileCallbacks = {},
): void {
  if (view.format === "arrangement") {
    renderArrangement(container, view, api, callbacks);
  } else {
    renderSelection(container, view, api, callbacks);
  }
}
