import { describe, expect, it } from "vitest";

import { renderTimeDistance, trainColor } from "../src/timeDistance";
import type { TimeDistance } from "../src/types";

function fig6Fixture(): TimeDistance {
  // red overtaken by blue in area A: blue's planned line crosses red's
  return {
    area_id: "A",
    now: 0,
    trains: [
      {
        train_id: "red",
        prognosis: [[0, 0], [629, 12000], [814, 15700]],
        planned: [[0, 0], [629, 12000], [1251, 15700]],
        delay: 0,
      },
      {
        train_id: "blue",
        prognosis: [[450, 0], [772, 12000], [961, 15700]],
        planned: [[471, 0], [793, 12000], [982, 15700]],
        delay: 0,
      },
      {
        train_id: "green",
        prognosis: [[1066, 15700], [1609, 0]],
        planned: [[1066, 15700], [1609, 0]],
        delay: 0,
      },
    ],
    boundaries: [{ node: "BND", distance: 15700 }],
  };
}

describe("time-distance diagram", () => {
  it("draws three colored train lines with solid prognosis and dashed plan", () => {
    const root = document.createElement("div");
    const svg = renderTimeDistance(root, fig6Fixture());
    const lines = [...svg.querySelectorAll("polyline")];
    const byTrain = new Map<string, Element[]>();
    for (const line of lines) {
      const id = line.getAttribute("data-train")!;
      byTrain.set(id, [...(byTrain.get(id) ?? []), line]);
    }
    expect([...byTrain.keys()].sort()).toEqual(["blue", "green", "red"]);
    for (const [id, pair] of byTrain) {
      expect(pair).toHaveLength(2);
      const dashed = pair.filter((l) => l.getAttribute("stroke-dasharray"));
      expect(dashed).toHaveLength(1);
      expect(dashed[0].getAttribute("data-kind")).toBe("planned");
      for (const l of pair) expect(l.getAttribute("stroke")).toBe(id);
    }
  });

  it("shows the visible order swap: blue exits before red in the plan", () => {
    const fixture = fig6Fixture();
    const exitTime = (id: string) =>
      fixture.trains.find((t) => t.train_id === id)!.planned.at(-1)![0];
    expect(exitTime("blue")).toBeLessThan(exitTime("red"));
    // and the prognosis had them the other way around
    const progExit = (id: string) =>
      fixture.trains.find((t) => t.train_id === id)!.prognosis.at(-1)![0];
    expect(progExit("red")).toBeLessThan(progExit("blue"));
  });

  it("marks the area boundary", () => {
    const root = document.createElement("div");
    const svg = renderTimeDistance(root, fig6Fixture());
    expect(svg.querySelectorAll("line.boundary, line[stroke-dasharray='2 6']").length)
      .toBeGreaterThan(0);
  });

  it("renders a stationary train as a horizontal line", () => {
    const root = document.createElement("div");
    const data: TimeDistance = {
      area_id: "A",
      now: 0,
      trains: [
        { train_id: "parked", prognosis: [[0, 5000], [600, 5000]], planned: [], delay: 0 },
      ],
      boundaries: [],
    };
    const svg = renderTimeDistance(root, data);
    const line = svg.querySelector("polyline")!;
    const ys = line
      .getAttribute("points")!
      .split(" ")
      .map((p) => Number(p.split(",")[1]));
    expect(new Set(ys).size).toBe(1);
  });

  it("clips points outside the zoom window", () => {
    const root = document.createElement("div");
    const svg = renderTimeDistance(root, fig6Fixture(), { from: 400, to: 1000 });
    for (const line of svg.querySelectorAll("polyline")) {
      const xs = line
        .getAttribute("points")!
        .split(" ")
        .map((p) => Number(p.split(",")[0]));
      // all x coordinates live inside the drawable band
      for (const x of xs) {
        expect(x).toBeGreaterThanOrEqual(30 - 1e-9);
        expect(x).toBeLessThanOrEqual(720 - 30 + 1e-9);
      }
    }
    // green is entirely outside the window and disappears
    const ids = [...svg.querySelectorAll("polyline")].map((l) =>
      l.getAttribute("data-train")
    );
    expect(ids).not.toContain("green");
  });

  it("renders axes only for empty data", () => {
    const root = document.createElement("div");
    const svg = renderTimeDistance(root, {
      area_id: "A",
      now: 0,
      trains: [],
      boundaries: [],
    });
    expect(svg.querySelectorAll("polyline")).toHaveLength(0);
    expect(svg.querySelector("path.axes, path[stroke='#444']")).not.toBeNull();
  });

  it("uses the train id as color when it names one", () => {
    expect(trainColor("red", 3)).toBe("red");
    expect(trainColor("ICE-701", 1)).not.toBe("ICE-701");
  });
});
