// Dispatcher page: station strip with per-train delays, a warning marker
// per conflicted area, and recommendation cards with accept/reject and
// anonymous thumbs feedback.

import { Store, formatDelayMinutes, remainingSeconds } from "./store";
import type { ConsoleState } from "./store";
import type { Recommendation } from "./types";

export function renderDispatcher(root: HTMLElement, store: Store): void {
  root.innerHTML = "";
  const state = store.state;

  if (state.stale) {
    const banner = document.createElement("div");
    banner.className = "banner stale";
    banner.textContent = "connection lost: data may be stale, controls disabled";
    root.appendChild(banner);
  }

  for (const area of state.areas) {
    const section = document.createElement("section");
    section.className = "area";
    const heading = document.createElement("h2");
    heading.textContent = `Area ${area.id}`;
    if (area.conflict_count > 0) {
      const warn = document.createElement("span");
      warn.className = "warning";
      warn.textContent = ` ⚠ ${area.conflict_count}`;
      warn.title = `${area.conflict_count} conflicts`;
      heading.appendChild(warn);
    }
    section.appendChild(heading);

    const strip = document.createElement("div");
    strip.className = "strip";
    const graph = state.timedistance.get(area.id);
    if (graph) {
      for (const train of graph.trains) {
        const chip = document.createElement("span");
        chip.className = "train-chip";
        chip.dataset.train = train.train_id;
        chip.textContent = `${train.train_id} ${formatDelayMinutes(train.delay)}`;
        strip.appendChild(chip);
      }
    }
    section.appendChild(strip);

    for (const rec of state.recommendations.filter((r) => r.area_id === area.id)) {
      section.appendChild(card(rec, state, store));
    }
    root.appendChild(section);
  }
}

function card(rec: Recommendation, state: ConsoleState, store: Store): HTMLElement {
  const el = document.createElement("article");
  el.className = `card status-${rec.status}`;
  el.dataset.rec = rec.id;

  const title = document.createElement("h3");
  title.textContent = `${rec.kind} at ${rec.location}`;
  el.appendChild(title);

  const detail = document.createElement("p");
  detail.className = "detail";
  detail.textContent = `${rec.detail} (trains ${rec.train_ids.join(", ")})`;
  el.appendChild(detail);

  const left = remainingSeconds(rec, state.now);
  const badge = document.createElement("span");
  badge.className = "badge";
  const expired = rec.status === "Expired" || left === 0;
  badge.textContent = expired && rec.status !== "Pending"
    ? rec.status
    : expired
      ? "expired"
      : `${left}s left`;
  el.appendChild(badge);

  const actionable = rec.status === "Pending" && !expired && !state.stale;
  const controls = document.createElement("div");
  controls.className = "controls";
  for (const action of ["accept", "reject"] as const) {
    const button = document.createElement("button");
    button.textContent = action;
    button.dataset.action = action;
    button.disabled = !actionable;
    button.addEventListener("click", async () => {
      const updated = await store.api.dispatcherAction(rec.id, action);
      store.absorb(updated);
    });
    controls.appendChild(button);
  }
  for (const thumb of ["up", "down"] as const) {
    const button = document.createElement("button");
    button.className = "thumb";
    button.dataset.thumb = thumb;
    button.textContent = thumb === "up" ? "👍" : "👎";
    button.disabled = rec.feedback !== null || state.stale;
    button.addEventListener("click", async () => {
      await store.api.feedback(rec.id, thumb);
      await store.poll();
    });
    controls.appendChild(button);
  }
  el.appendChild(controls);
  return el;
}
