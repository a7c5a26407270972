/**
 * Minimal deterministic SVG assembly: fixed figure geometry, fixed number
 * formatting, no timestamps or randomness, so identical inputs give
 * byte-identical output.
 */

export const FIG = {
  width: 640,
  height: 420,
  margin: { left: 64, right: 18, top: 26, bottom: 46 },
} as const;

export const PLOT = {
  x0: FIG.margin.left,
  x1: FIG.width - FIG.margin.right,
  y0: FIG.margin.top,
  y1: FIG.height - FIG.margin.bottom,
} as const;

/** Categorical palette, one colour per series, cycled. */
export const PALETTE = [
  "#1f6feb",
  "#d1242f",
  "#2da44e",
  "#bf8700",
  "#8250df",
  "#57606a",
] as const;

export function seriesColor(index: number): string {
  return PALETTE[index % PALETTE.length] as string;
}

/** Fixed two-decimal coordinate format; normalizes negative zero. */
export function px(value: number): string {
  const s = value.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export function escapeText(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function tag(
  name: string,
  attrs: Record<string, string | number>,
  body = "",
): string {
  const parts = Object.entries(attrs)
    .map(([key, value]) => `${key}="${value}"`)
    .join(" ");
  const open = parts ? `<${name} ${parts}` : `<${name}`;
  return body === "" ? `${open}/>` : `${open}>${body}</${name}>`;
}

export function text(
  x: number,
  y: number,
  content: string,
  attrs: Record<string, string | number> = {},
): string {
  return tag(
    "text",
    {
      x: px(x),
      y: px(y),
      "font-family": "monospace",
      "font-size": 11,
      fill: "#24292f",
      ...attrs,
    },
    escapeText(content),
  );
}

export function polyline(
  points: Array<readonly [number, number]>,
  attrs: Record<string, string | number>,
): string {
  const joined = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
  return tag("polyline", { points: joined, fill: "none", ...attrs });
}

/** Wrap plot content in the fixed-size document with a white background. */
export function document(title: string, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${FIG.width}" ` +
      `height="${FIG.height}" viewBox="0 0 ${FIG.width} ${FIG.height}">`,
    tag("rect", {
      x: 0,
      y: 0,
      width: FIG.width,
      height: FIG.height,
      fill: "#ffffff",
    }),
    text(PLOT.x0, FIG.margin.top - 10, title, { "font-size": 13 }),
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
