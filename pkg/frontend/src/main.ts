// Role switch and poll loop. One app, three hash routes:
// #/dispatcher (default), #/setter, #/graph.

import { ApiClient } from "./api";
import { renderDispatcher } from "./dispatcherView";
import { renderSetter } from "./setterView";
import { renderTimeDistance } from "./timeDistance";
import { Store } from "./store";
import "./styles.css";

const POLL_INTERVAL_MS = 1000;

export function boot(root: HTMLElement, api = new ApiClient()): Store {
  const store = new Store(api);
  const nav = document.createElement("nav");
  nav.innerHTML = `
    <a href="#/dispatcher">dispatcher</a>
    <a href="#/setter">signal setter</a>
    <a href="#/graph">time-distance</a>
    <span class="metrics"></span>`;
  const view = document.createElement("main");
  root.appendChild(nav);
  root.appendChild(view);

  const render = () => {
    const route = window.location.hash || "#/dispatcher";
    if (route.startsWith("#/setter")) {
      renderSetter(view, store);
    } else if (route.startsWith("#/graph")) {
      view.innerHTML = "";
      for (const [areaId, data] of store.state.timedistance) {
        const h = document.createElement("h2");
        h.textContent = `Area ${areaId}`;
        view.appendChild(h);
        renderTimeDistance(view, data);
      }
    } else {
      renderDispatcher(view, store);
    }
    const metrics = store.state.metrics;
    const label = nav.querySelector(".metrics") as HTMLElement;
    if (metrics) {
      label.textContent =
        ` runs ${metrics.runs} | within gap ${(metrics.pct_within_gap * 100).toFixed(0)}%` +
        ` | sim t=${store.state.now}s`;
    }
  };

  store.subscribe(render);
  window.addEventListener("hashchange", render);
  return store;
}

export function startPolling(store: Store): number {
  void store.poll(true);
  return window.setInterval(() => void store.poll(true), POLL_INTERVAL_MS);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const store = boot(document.getElementById("app") as HTMLElement);
  startPolling(store);
}
