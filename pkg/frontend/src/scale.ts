/**
 * Axis transforms: linear and log10 scales with deterministic tick
 * placement, plus the axis/grid rendering shared by every figure.
 */

import { PLOT, px, tag, text } from "./svg.js";

export interface Scale {
  (value: number): number;
  domain: readonly [number, number];
  range: readonly [number, number];
  ticks: number[];
  log: boolean;
}

function makeScale(
  domain: readonly [number, number],
  range: readonly [number, number],
  ticks: number[],
  log: boolean,
): Scale {
  const [d0, d1] = log ? [Math.log10(domain[0]), Math.log10(domain[1])] : domain;
  const span = d1 - d0 || 1;
  const scale = ((value: number): number => {
    const v = log ? Math.log10(value) : value;
    return range[0] + ((v - d0) / span) * (range[1] - range[0]);
  }) as Scale;
  scale.domain = domain;
  scale.range = range;
  scale.ticks = ticks;
  scale.log = log;
  return scale;
}

/** Round (lo, hi) out to a "nice" step of 1/2/5 x 10^k and tick it. */
export function linearScale(
  lo: number,
  hi: number,
  range: readonly [number, number],
): Scale {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) / 2 : 1;
    [lo, hi] = [lo - pad, lo + pad];
  }
  const rawStep = (hi - lo) / 5;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const mant = rawStep / power;
  const step = (mant >= 5 ? 5 : mant >= 2 ? 2 : 1) * power;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return makeScale([lo, hi], range, ticks, false);
}

/** Log10 scale over positive data; decade ticks (2/5 mantissas if narrow). */
export function logScale(
  lo: number,
  hi: number,
  range: readonly [number, number],
): Scale {
  if (!(lo > 0) || !(hi > 0)) {
    throw new Error(`log scale needs positive bounds, got [${lo}, ${hi}]`);
  }
  if (hi === lo) {
    [lo, hi] = [lo / 10, hi * 10];
  }
  const kLo = Math.ceil(Math.log10(lo) - 1e-9);
  const kHi = Math.floor(Math.log10(hi) + 1e-9);
  const ticks: number[] = [];
  const mantissas = kHi - kLo < 2 ? [1, 2, 5] : [1];
  for (let k = kLo - 1; k <= kHi + 1; k++) {
    for (const m of mantissas) {
      const v = m * Math.pow(10, k);
      if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) ticks.push(v);
    }
  }
  return makeScale([lo, hi], range, ticks, true);
}

export function tickLabel(value: number, log: boolean): string {
  if (value === 0) return "0";
  const exp = Math.floor(Math.log10(Math.abs(value)) + 1e-12);
  if (log || Math.abs(exp) >= 4) {
    const mant = value / Math.pow(10, exp);
    const m = Math.abs(mant - 1) < 1e-9 ? "" : `${mant.toPrecision(1)}x`;
    return `${m}1e${exp}`;
  }
  const digits = Math.max(0, 2 - exp);
  return value.toFixed(Math.min(6, digits)).replace(/\.?0+$/, "");
}

/** Render frame, grid lines, ticks and axis labels for an x/y scale pair. */
export function axes(
  x: Scale,
  y: Scale,
  xLabel: string,
  yLabel: string,
): string[] {
  const out: string[] = [];
  out.push(
    tag("rect", {
      x: px(PLOT.x0),
      y: px(PLOT.y0),
      width: px(PLOT.x1 - PLOT.x0),
      height: px(PLOT.y1 - PLOT.y0),
      fill: "none",
      stroke: "#57606a",
      "stroke-width": 1,
    }),
  );
  for (const v of x.ticks) {
    const gx = x(v);
    out.push(
      tag("line", {
        x1: px(gx), y1: px(PLOT.y0), x2: px(gx), y2: px(PLOT.y1),
        stroke: "#d0d7de", "stroke-width": 0.5,
      }),
      text(gx, PLOT.y1 + 16, tickLabel(v, x.log), {
        "text-anchor": "middle",
      }),
    );
  }
  for (const v of y.ticks) {
    const gy = y(v);
    out.push(
      tag("line", {
        x1: px(PLOT.x0), y1: px(gy), x2: px(PLOT.x1), y2: px(gy),
        stroke: "#d0d7de", "stroke-width": 0.5,
      }),
      text(PLOT.x0 - 6, gy + 4, tickLabel(v, y.log), {
        "text-anchor": "end",
      }),
    );
  }
  out.push(
    text((PLOT.x0 + PLOT.x1) / 2, PLOT.y1 + 34, xLabel, {
      "text-anchor": "middle",
    }),
    text(PLOT.x0, PLOT.y0 - 8, yLabel),
  );
  return out;
}
