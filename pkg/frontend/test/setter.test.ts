import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { Store } from "../src/store";
import { renderDispatcher } from "../src/dispatcherView";
import { renderSetter } from "../src/setterView";
import { FakeServer } from "./fakeServer";

describe("setter view and cross-role flow (fig7 fixture)", () => {
  let server: FakeServer;
  let dispatcherStore: Store;
  let setterStore: Store;
  let dispatcherRoot: HTMLElement;
  let setterRoot: HTMLElement;

  beforeEach(async () => {
    server = new FakeServer();
    vi.stubGlobal("fetch", server.fetch);
    dispatcherStore = new Store(new ApiClient());
    setterStore = new Store(new ApiClient());
    dispatcherRoot = document.createElement("div");
    setterRoot = document.createElement("div");
    document.body.replaceChildren(dispatcherRoot, setterRoot);
    await dispatcherStore.poll(true);
    await setterStore.poll(true);
  });

  it("starts with an empty queue message", () => {
    renderSetter(setterRoot, setterStore);
    expect(setterRoot.querySelector(".empty")?.textContent).toContain(
      "no forwarded recommendations"
    );
  });

  it("dispatcher accept appears in the setter window within one poll", async () => {
    renderDispatcher(dispatcherRoot, dispatcherStore);
    (
      dispatcherRoot.querySelector(
        '[data-rec="rec-0002"] button[data-action="accept"]'
      ) as HTMLButtonElement
    ).click();
    await vi.waitFor(() => expect(server.recs[1].status).toBe("ForwardedToSetter"));
    await setterStore.poll(true); // exactly one poll interval later
    renderSetter(setterRoot, setterStore);
    const card = setterRoot.querySelector('[data-rec="rec-0002"]');
    expect(card).not.toBeNull();
    expect(card?.textContent).toContain("1234 overtaken by 567 at X");
  });

  it("setter accept realizes the measure and the prognosis order flips", async () => {
    // dispatcher accepts, setter accepts, sim realizes the overtake
    renderDispatcher(dispatcherRoot, dispatcherStore);
    (
      dispatcherRoot.querySelector(
        '[data-rec="rec-0002"] button[data-action="accept"]'
      ) as HTMLButtonElement
    ).click();
    await vi.waitFor(() => expect(server.recs[1].status).toBe("ForwardedToSetter"));
    await setterStore.poll(true);
    renderSetter(setterRoot, setterStore);
    (
      setterRoot.querySelector(
        '[data-rec="rec-0002"] button[data-action="accept"]'
      ) as HTMLButtonElement
    ).click();
    await vi.waitFor(() => expect(server.recs[1].status).toBe("RealizedBySetter"));
    expect(server.overtakeRealized).toBe(true);

    // the subsequent prognosis has 567 ahead of 1234
    await setterStore.poll(true);
    const graph = setterStore.state.timedistance.get("A")!;
    const reach = (id: string) =>
      graph.trains.find((t) => t.train_id === id)!.prognosis.at(-1)![0];
    expect(reach("567")).toBeLessThan(reach("1234"));
  });

  it("setter reject propagates back to the dispatcher card", async () => {
    renderDispatcher(dispatcherRoot, dispatcherStore);
    (
      dispatcherRoot.querySelector(
        '[data-rec="rec-0002"] button[data-action="accept"]'
      ) as HTMLButtonElement
    ).click();
    await vi.waitFor(() => expect(server.recs[1].status).toBe("ForwardedToSetter"));
    await setterStore.poll(true);
    renderSetter(setterRoot, setterStore);
    (
      setterRoot.querySelector(
        '[data-rec="rec-0002"] button[data-action="reject"]'
      ) as HTMLButtonElement
    ).click();
    await vi.waitFor(() => expect(server.recs[1].status).toBe("RejectedBySetter"));
    await dispatcherStore.poll(true);
    renderDispatcher(dispatcherRoot, dispatcherStore);
    const card = dispatcherRoot.querySelector('[data-rec="rec-0002"]') as HTMLElement;
    expect(card.className).toContain("status-RejectedBySetter");
  });
});
