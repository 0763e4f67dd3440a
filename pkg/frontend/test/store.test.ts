import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { Store, formatDelayMinutes, remainingSeconds } from "../src/store";
import { FakeServer } from "./fakeServer";

describe("store and api client", () => {
  let server: FakeServer;

  beforeEach(() => {
    server = new FakeServer();
    vi.stubGlobal("fetch", server.fetch);
  });

  it("poll gathers areas, recommendations and sim time", async () => {
    const store = new Store(new ApiClient());
    await store.poll();
    expect(store.state.stale).toBe(false);
    expect(store.state.areas.map((a) => a.id)).toEqual(["A"]);
    expect(store.state.recommendations).toHaveLength(2);
    expect(store.state.now).toBe(40);
  });

  it("uses ETags for cheap re-polls", async () => {
    const api = new ApiClient();
    const spy = vi.fn(server.fetch);
    vi.stubGlobal("fetch", spy);
    await api.recommendations("A");
    const first = await api.recommendations("A");
    // second call sent If-None-Match and got a 304 served from cache
    const secondCall = spy.mock.calls.at(-1)!;
    expect((secondCall[1]?.headers as Record<string, string>)["If-None-Match"]).toBeDefined();
    expect(first.recommendations).toHaveLength(2);
  });

  it("a failed poll marks state stale but keeps the last data", async () => {
    const store = new Store(new ApiClient());
    await store.poll();
    vi.stubGlobal("fetch", () => Promise.reject(new Error("offline")));
    await store.poll();
    expect(store.state.stale).toBe(true);
    expect(store.state.recommendations).toHaveLength(2);
  });

  it("absorb only replaces the server-confirmed recommendation", async () => {
    const store = new Store(new ApiClient());
    await store.poll();
    const updated = { ...store.state.recommendations[0], status: "ForwardedToSetter" as const };
    store.absorb(updated);
    expect(store.state.recommendations[0].status).toBe("ForwardedToSetter");
    expect(store.state.recommendations[1].status).toBe("Pending");
  });

  it("countdowns derive from sim time, not the wall clock", () => {
    const rec = {
      id: "r",
      kind: "OrderChange" as const,
      train_ids: ["a"],
      location: "X",
      detail: "",
      deadline: 372,
      created_at: 0,
      area_id: "A",
      status: "Pending" as const,
      feedback: null,
    };
    expect(remainingSeconds(rec, 40)).toBe(332)
    expect(remainingSeconds(rec, 400)).toBe(0);
  });

  it("formats delays in whole minutes", () => {
    expect(formatDelayMinutes(0)).toBe("+0");
    expect(formatDelayMinutes(180)).toBe("+3");
    expect(formatDelayMinutes(29)).toBe("+0");
  });
});
