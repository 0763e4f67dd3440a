// Single poll loop feeding a snapshot of server state to the views.
// Every status shown is server-confirmed; a failed poll only flags the
// data as stale and never mutates what was last seen.

import { ApiClient } from "./api";
import type { AreaSummary, Metrics, Recommendation, TimeDistance } from "./types";

export interface ConsoleState {
  areas: AreaSummary[];
  recommendations: Recommendation[];
  timedistance: Map<string, TimeDistance>;
  metrics: Metrics | null;
  now: number; // sim time from the API, never the client clock
  stale: boolean;
}

export type Listener = (state: ConsoleState) => void;

export class Store {
  state: ConsoleState = {
    areas: [],
    recommendations: [],
    timedistance: new Map(),
    metrics: null,
    now: 0,
    stale: true,
  };
  private listeners: Listener[] = [];

  constructor(public api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  async poll(withGraphs = false): Promise<void> {
    try {
      const areas = await this.api.areas();
      const recs: Recommendation[] = [];
      let now = 0;
      for (const area of areas) {
        now = Math.max(now, area.now);
        const list = await this.api.recommendations(area.id);
        now = Math.max(now, list.now);
        recs.push(...list.recommendations);
      }
      const graphs = new Map<string, TimeDistance>();
      if (withGraphs) {
        for (const area of areas) {
          graphs.set(area.id, await this.api.timedistance(area.id));
        }
      }
      const metrics = await this.api.metrics();
      this.state = {
        areas,
        recommendations: recs,
        timedistance: withGraphs ? graphs : this.state.timedistance,
        metrics,
        now,
        stale: false,
      };
    } catch {
      this.state = { ...this.state, stale: true };
    }
    this.emit();
  }

  /** Apply a server-confirmed recommendation update in place. */
  absorb(updated: Recommendation): void {
    this.state = {
      ...this.state,
      recommendations: this.state.recommendations.map((r) =>
        r.id === updated.id ? updated : r
      ),
    };
    this.emit();
  }
}

export function remainingSeconds(rec: Recommendation, now: number): number {
  return Math.max(0, rec.deadline - now);
}

export function formatDelayMinutes(seconds: number): string {
  const minutes = Math.round(seconds / 60);
  return `+${minutes}`;
}
