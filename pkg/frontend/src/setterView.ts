// Signal setter page: the queue of measures forwarded by dispatchers,
// each with accept (realize) and reject.

import { Store, remainingSeconds } from "./store";

export function renderSetter(root: HTMLElement, store: Store): void {
  root.innerHTML = "";
  const state = store.state;

  if (state.stale) {
    const banner = document.createElement("div");
    banner.className = "banner stale";
    banner.textContent = "connection lost: data may be stale, controls disabled";
    root.appendChild(banner);
  }

  const heading = document.createElement("h2");
  heading.textContent = "Forwarded measures";
  root.appendChild(heading);

  const queue = state.recommendations.filter((r) => r.status === "ForwardedToSetter");
  if (queue.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = "no forwarded recommendations";
    root.appendChild(empty);
    return;
  }

  for (const rec of queue) {
    const el = document.createElement("article");
    el.className = "card";
    el.dataset.rec = rec.id;
    const title = document.createElement("h3");
    title.textContent = `${rec.kind} at ${rec.location}`;
    el.appendChild(title);
    const detail = document.createElement("p");
    detail.textContent = rec.detail;
    el.appendChild(detail);
    const badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = `${remainingSeconds(rec, state.now)}s left`;
    el.appendChild(badge);
    for (const action of ["accept", "reject"] as const) {
      const button = document.createElement("button");
      button.textContent = action;
      button.dataset.action = action;
      button.disabled = state.stale;
      button.addEventListener("click", async () => {
        const updated = await store.api.setterAction(rec.id, action);
        store.absorb(updated);
      });
      el.appendChild(button);
    }
    root.appendChild(el);
  }
}
