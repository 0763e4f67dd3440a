// Time-distance diagram: distance over the area vertically, time
// horizontally; solid polyline for the prognosis, dashed for the plan,
// one color per train; area boundaries drawn as horizontal marks.

import type { TimeDistance } from "./types";

const PALETTE = ["#d33", "#36c", "#2a2", "#c80", "#909", "#087"];
const CSS_COLORS = new Set(
  ["red", "blue", "green", "orange", "purple", "teal", "brown", "black"]
);

export function trainColor(trainId: string, index: number): string {
  if (CSS_COLORS.has(trainId)) return trainId;
  return PALETTE[index % PALETTE.length];
}

export interface Window {
  from?: number;
  to?: number;
}

export function renderTimeDistance(
  root: HTMLElement,
  data: TimeDistance,
  window: Window = {},
  width = 720,
  height = 420,
): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "timedistance");

  const points = data.trains.flatMap((t) => [...t.prognosis, ...t.planned]);
  const inWindow = points.filter(
    (p) =>
      (window.from === undefined || p[0] >= window.from) &&
      (window.to === undefined || p[0] <= window.to)
  );
  const ts = inWindow.map((p) => p[0]);
  const ds = points.map((p) => p[1]);
  const t0 = window.from ?? (ts.length ? Math.min(...ts) : 0);
  const t1 = window.to ?? (ts.length ? Math.max(...ts) : 1);
  const d0 = ds.length ? Math.min(...ds) : 0;
  const d1 = ds.length ? Math.max(...ds) : 1;
  const margin = 30;

  const x = (t: number) =>
    margin + ((t - t0) / Math.max(1, t1 - t0)) * (width - 2 * margin);
  const y = (d: number) =>
    height - margin - ((d - d0) / Math.max(1, d1 - d0)) * (height - 2 * margin);

  const axes = document.createElementNS(svg.namespaceURI, "path");
  axes.setAttribute(
    "d",
    `M ${margin} ${margin} L ${margin} ${height - margin} L ${width - margin} ${height - margin}`
  );
  axes.setAttribute("class", "axes");
  axes.setAttribute("fill", "none");
  axes.setAttribute("stroke", "#444");
  svg.appendChild(axes);

  for (const boundary of data.boundaries) {
    const line = document.createElementNS(svg.namespaceURI, "line");
    line.setAttribute("x1", String(margin));
    line.setAttribute("x2", String(width - margin));
    line.setAttribute("y1", String(y(boundary.distance)));
    line.setAttribute("y2", String(y(boundary.distance)));
    line.setAttribute("class", "boundary");
    line.setAttribute("stroke", "#999");
    line.setAttribute("stroke-dasharray", "2 6");
    svg.appendChild(line);
  }

  data.trains.forEach((train, index) => {
    const color = trainColor(train.train_id, index);
    const clip = (pts: [number, number][]) =>
      pts.filter(
        (p) =>
          (window.from === undefined || p[0] >= window.from) &&
          (window.to === undefined || p[0] <= window.to)
      );
    const draw = (pts: [number, number][], dashed: boolean) => {
      const visible = clip(pts);
      if (visible.length === 0) return;
      const line = document.createElementNS(svg.namespaceURI, "polyline");
      line.setAttribute(
        "points",
        visible.map((p) => `${x(p[0])},${y(p[1])}`).join(" ")
      );
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", color);
      line.setAttribute("data-train", train.train_id);
      line.setAttribute("data-kind", dashed ? "planned" : "prognosis");
      if (dashed) line.setAttribute("stroke-dasharray", "6 4");
      svg.appendChild(line);
    };
    draw(train.prognosis, false);
    draw(train.planned, true);
  });

  root.appendChild(svg);
  return svg as SVGSVGElement;
}
