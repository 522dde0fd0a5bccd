/**
 * Minimal deterministic SVG building: axes, polylines, rects, error bars.
 *
 * Output is a vector image; width/height are CSS pixels and the optional dpi
 * only sets the physical size attributes. No randomness, no timestamps, so
 * identical inputs reproduce identical files.
 */

export interface Size {
  width: number;
  height: number;
  dpi?: number;
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
  "#bcbd22",
  "#e377c2",
];

export const MARGIN = { left: 64, right: 168, top: 40, bottom: 52 };

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 0.5;
    d1 += 0.5;
  }
  const f = ((value: number) =>
    range[0] + ((value - d0) / (d1 - d0)) * (range[1] - range[0])) as Scale;
  f.domain = [d0, d1];
  return f;
}

export function ticks(domain: [number, number], count = 6): number[] {
  const [lo, hi] = domain;
  const span = hi - lo;
  if (span <= 0) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (count * step) / span;
  const mult = err <= 0.15 ? 10 : err <= 0.35 ? 5 : err <= 0.75 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * Math.abs(s); v += s) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

export class SvgDocument {
  private parts: string[] = [];
  constructor(readonly size: Size) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.add(
      `<line x1="${r(x1)}" y1="${r(y1)}" x2="${r(x2)}" y2="${r(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`
    );
  }

  polyline(points: Array<[number, number]>, stroke: string): void {
    const pts = points.map(([x, y]) => `${r(x)},${r(y)}`).join(" ");
    this.add(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.5"/>`
    );
  }

  circle(x: number, y: number, radius: number, fill: string): void {
    this.add(`<circle cx="${r(x)}" cy="${r(y)}" r="${radius}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, title?: string): void {
    const body = title ? `><title>${escapeXml(title)}</title></rect>` : "/>";
    this.add(
      `<rect x="${r(x)}" y="${r(y)}" width="${r(w)}" height="${r(h)}" fill="${fill}"${body}`
    );
  }

  text(
    x: number,
    y: number,
    content: string,
    opts: { anchor?: string; size?: number; rotate?: number } = {}
  ): void {
    const anchor = opts.anchor ?? "middle";
    const size = opts.size ?? 12;
    const transform =
      opts.rotate !== undefined ? ` transform="rotate(${opts.rotate} ${r(x)} ${r(y)})"` : "";
    this.add(
      `<text x="${r(x)}" y="${r(y)}" text-anchor="${anchor}" ` +
        `font-family="sans-serif" font-size="${size}"${transform}>` +
        `${escapeXml(content)}</text>`
    );
  }

  xAxis(scale: Scale, y: number, label: string, x0: number, x1: number): void {
    this.line(x0, y, x1, y, "#000");
    for (const t of ticks(scale.domain)) {
      const px = scale(t);
      this.line(px, y, px, y + 5, "#000");
      this.text(px, y + 18, formatTick(t), { size: 11 });
    }
    this.text((x0 + x1) / 2, y + 38, label);
  }

  yAxis(scale: Scale, x: number, label: string, y0: number, y1: number): void {
    this.line(x, y0, x, y1, "#000");
    for (const t of ticks(scale.domain)) {
      const py = scale(t);
      this.line(x - 5, py, x, py, "#000");
      this.text(x - 8, py + 4, formatTick(t), { anchor: "end", size: 11 });
    }
    this.text(x - 46, (y0 + y1) / 2, label, { rotate: -90 });
  }

  legend(entries: Array<{ label: string; color: string }>, x: number, y: number): void {
    entries.forEach((entry, i) => {
      const py = y + i * 18;
      this.line(x, py - 4, x + 22, py - 4, entry.color, 2);
      this.text(x + 28, py, entry.label, { anchor: "start", size: 11 });
    });
  }

  render(): string {
    const { width, height, dpi } = this.size;
    const physical =
      dpi !== undefined
        ? ` width="${r((width / dpi) * 96)}px" height="${r((height / dpi) * 96)}px"`
        : ` width="${width}" height="${height}"`;
    return (
      `<?xml version="1.0" encoding="UTF-8"?>\n` +
      `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}"${physical}>\n` +
      `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>\n` +
      this.parts.join("\n") +
      `\n</svg>\n`
    );
  }
}

function r(v: number): string {
  return String(Math.round(v * 100) / 100);
}

/** Blue ramp for heatmaps; v must already be normalized to [0, 1]. */
export function heatColor(v: number): string {
  const clamped = Math.min(1, Math.max(0, v));
  const from = [247, 251, 255];
  const to = [8, 48, 107];
  const mix = from.map((f, i) => Math.round(f + (to[i] - f) * clamped));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}
