// Thin API client with ETag-aware polling of the recommendation lists.

import type {
  AreaSummary,
  Metrics,
  Recommendation,
  RecommendationList,
  TimeDistance,
} from "./types";

export class ApiClient {
  private etags = new Map<string, string>();
  private cached = new Map<string, RecommendationList>();

  constructor(private base: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(this.base + path);
    if (!res.ok) throw new Error(`GET ${path} -> ${res.status}`);
    return (await res.json()) as T;
  }

  async areas(): Promise<AreaSummary[]> {
    return this.getJson("/areas");
  }

  async recommendations(areaId: string, status?: string): Promise<RecommendationList> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    const path = `/areas/${areaId}/recommendations${query}`;
    const headers: Record<string, string> = {};
    const etag = this.etags.get(path);
    if (etag) headers["If-None-Match"] = etag;
    const res = await fetch(this.base + path, { headers });
    if (res.status === 304) {
      const hit = this.cached.get(path);
      if (hit) return hit;
    }
    if (!res.ok) throw new Error(`GET ${path} -> ${res.status}`);
    const body = (await res.json()) as RecommendationList;
    const tag = res.headers.get("ETag");
    if (tag) {
      this.etags.set(path, tag);
      this.cached.set(path, body);
    }
    return body;
  }

  async timedistance(areaId: string, from?: number, to?: number): Promise<TimeDistance> {
    const params = new URLSearchParams();
    if (from !== undefined) params.set("from", String(from));
    if (to !== undefined) params.set("to", String(to));
    const suffix = params.toString() ? `?${params}` : "";
    return this.getJson(`/areas/${areaId}/timedistance${suffix}`);
  }

  async metrics(): Promise<Metrics> {
    return this.getJson("/metrics");
  }

  private async post(path: string, body: unknown): Promise<Response> {
    return fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async dispatcherAction(recId: string, action: "accept" | "reject"): Promise<Recommendation> {
    const res = await this.post(`/recommendations/${recId}/dispatcher`, { action });
    if (!res.ok) throw new Error(`dispatcher ${action} -> ${res.status}`);
    return (await res.json()) as Recommendation;
  }

  async setterAction(recId: string, action: "accept" | "reject"): Promise<Recommendation> {
    const res = await this.post(`/recommendations/${recId}/setter`, { action });
    if (!res.ok) throw new Error(`setter ${action} -> ${res.status}`);
    return (await res.json()) as Recommendation;
  }

  async feedback(recId: string, thumb: "up" | "down"): Promise<boolean> {
    const res = await this.post(`/recommendations/${recId}/feedback`, { thumb });
    return res.status === 204;
  }
}
