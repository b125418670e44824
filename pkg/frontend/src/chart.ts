import type { SeriesPoint } from "./state.js";

// Pure geometry for the convergence panel: numbers in, SVG path data out.
// Rendering is elsewhere so this stays testable without a DOM.

export const MARGIN = { left: 46, right: 10, top: 8, bottom: 22 };

export interface Marker {
  x: number;
  y: number;
  /** True renders as a dot: an interval of zero width, or none at all. */
  point: boolean;
}

export interface ChartGeometry {
  width: number;
  height: number;
  line: string;
  band: string | null;
  markers: Marker[];
  target: { y0: number; y1: number } | null;
  xTicks: { x: number; label: string }[];
  yTicks: { y: number; label: string }[];
}

function span(values: number[]): [number, number] {
  let low = Math.min(...values);
  let high = Math.max(...values);
  if (low === high) {
    low -= 1;
    high += 1;
  }
  const pad = 0.05 * (high - low);
  return [low - pad, high + pad];
}

function ticks(low: number, high: number, count: number): number[] {
  const out = [];
  for (let i = 0; i < count; i += 1) {
    out.push(low + ((high - low) * i) / (count - 1));
  }
  return out;
}

export function convergenceGeometry(
  points: SeriesPoint[],
  targetBounds: { low: number; high: number } | null,
  width = 420,
  height = 170,
): ChartGeometry | null {
  if (points.length === 0) {
    return null;
  }
  const xs = points.map((p) => p.labeled);
  const ys: number[] = [];
  for (const p of points) {
    ys.push(p.value);
    if (p.ciLow !== null) ys.push(p.ciLow);
    if (p.ciHigh !== null) ys.push(p.ciHigh);
  }
  if (targetBounds) {
    ys.push(targetBounds.low, targetBounds.high);
  }
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  if (x0 === x1) {
    x0 -= 1;
    x1 += 1;
  }
  const [y0, y1] = span(ys);
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const sx = (v: number) => MARGIN.left + ((v - x0) / (x1 - x0)) * plotW;
  const sy = (v: number) => MARGIN.top + (1 - (v - y0) / (y1 - y0)) * plotH;
  const fmt = (v: number) => String(Math.round(v * 100) / 100);

  const line = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${fmt(sx(p.labeled))} ${fmt(sy(p.value))}`)
    .join(" ");

  const withCi = points.filter((p) => p.ciLow !== null && p.ciHigh !== null);
  let band: string | null = null;
  if (withCi.length >= 2) {
    const upper = withCi.map(
      (p, i) => `${i === 0 ? "M" : "L"}${fmt(sx(p.labeled))} ${fmt(sy(p.ciHigh as number))}`,
    );
    const lower = [...withCi]
      .reverse()
      .map((p) => `L${fmt(sx(p.labeled))} ${fmt(sy(p.ciLow as number))}`);
    band = [...upper, ...lower, "Z"].join(" ");
  }

  const markers: Marker[] = points.map((p) => ({
    x: sx(p.labeled),
    y: sy(p.value),
    point: p.ciLow === null || p.ciHigh === null || p.ciLow === p.ciHigh,
  }));

  return {
    width,
    height,
    line,
    band,
    markers,
    target: targetBounds
      ? { y0: sy(targetBounds.high), y1: sy(targetBounds.low) }
      : null,
    xTicks: ticks(x0, x1, 4).map((v) => ({ x: sx(v), label: String(Math.round(v)) })),
    yTicks: ticks(y0, y1, 4).map((v) => ({ y: sy(v), label: v.toPrecision(3) })),
  };
}
