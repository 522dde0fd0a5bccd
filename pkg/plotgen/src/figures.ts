/**
 * Figure builders over the harness CSV schemas.
 *
 * Every figure returns a complete SVG string. Series are one-per-grid-value
 * (cutoff for the sweep figure, chi_max for the cutoff figure), heatmaps are
 * indexed (chi_max rows, lambda columns), and axis labels match the CSV
 * column names that fed them.
 */

import {
  CsvError,
  Table,
  columnIndex,
  distinct,
  numericColumn,
  parseCsv,
  requireRows,
  stringColumn,
} from "./csv";
import { MARGIN, PALETTE, Size, SvgDocument, heatColor, linearScale } from "./svg";

export type FigureKind =
  | "chi_vs_sweeps"
  | "chi_vs_cutoff"
  | "heatmap_infidelity"
  | "heatmap_norm"
  | "fit_params";

export const FIGURE_KINDS: FigureKind[] = [
  "chi_vs_sweeps",
  "chi_vs_cutoff",
  "heatmap_infidelity",
  "heatmap_norm",
  "fit_params",
];

export interface FigureOptions extends Size {
  title?: string;
}

const DEFAULT_SIZE: Size = { width: 720, height: 440 };

function frame(options?: Partial<FigureOptions>): FigureOptions {
  const given = options ?? {};
  return {
    width: given.width ?? DEFAULT_SIZE.width,
    height: given.height ?? DEFAULT_SIZE.height,
    dpi: given.dpi,
    title: given.title,
  };
}

function plotArea(size: Size): { x0: number; x1: number; y0: number; y1: number } {
  return {
    x0: MARGIN.left,
    x1: size.width - MARGIN.right,
    y0: size.height - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

function extent(values: number[]): [number, number] {
  return [Math.min(...values), Math.max(...values)];
}

/** Rows of the final sweep within each (chi_max, lambda, run_id) cell. */
function finalSweepRows(table: Table): number[] {
  const sweep = numericColumn(table, "sweep");
  const runId = stringColumn(table, "run_id");
  const best = new Map<string, number>();
  sweep.forEach((s, i) => {
    const key = runId[i];
    const incumbent = best.get(key);
    if (incumbent === undefined || sweep[incumbent] <= s) {
      best.set(key, i);
    }
  });
  return [...best.values()].sort((a, b) => a - b);
}

export function chiVsSweeps(text: string, options?: Partial<FigureOptions>): string {
  const table = parseCsv(text);
  requireRows(table);
  const sweep = numericColumn(table, "sweep");
  const chi = numericColumn(table, "chi_mean");
  const lambda = stringColumn(table, "lambda");
  const size = frame(options);
  const area = plotArea(size);
  const doc = new SvgDocument(size);
  const x = linearScale(extent(sweep), [area.x0, area.x1]);
  const y = linearScale(extent(chi), [area.y0, area.y1]);
  const groups = distinct(lambda);
  const legend: Array<{ label: string; color: string }> = [];
  groups.forEach((value, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    const pts = sweep
      .map((s, i) => ({ s, c: chi[i], ok: lambda[i] === value }))
      .filter((p) => p.ok)
      .sort((a, b) => a.s - b.s)
      .map((p) => [x(p.s), y(p.c)] as [number, number]);
    doc.polyline(pts, color);
    for (const [px, py] of pts) doc.circle(px, py, 2.2, color);
    legend.push({ label: `lambda=${value}`, color });
  });
  doc.xAxis(x, area.y0, "sweep", area.x0, area.x1);
  doc.yAxis(y, area.x0, "chi_mean", area.y0, area.y1);
  doc.legend(legend, area.x1 + 14, MARGIN.top + 10);
  doc.text((area.x0 + area.x1) / 2, 22, options?.title ?? "chi_mean vs sweeps", {
    size: 14,
  });
  return doc.render();
}

export function chiVsCutoff(text: string, options?: Partial<FigureOptions>): string {
  const table = parseCsv(text);
  requireRows(table);
  const rows = finalSweepRows(table);
  const lambda = numericColumn(table, "lambda");
  const chi = numericColumn(table, "chi_mean");
  const chiMax = stringColumn(table, "chi_max");
  const size = frame(options);
  const area = plotArea(size);
  const doc = new SvgDocument(size);
  const x = linearScale(extent(rows.map((i) => lambda[i])), [area.x0, area.x1]);
  const y = linearScale(extent(rows.map((i) => chi[i])), [area.y0, area.y1]);
  const groups = distinct(rows.map((i) => chiMax[i]));
  const legend: Array<{ label: string; color: string }> = [];
  groups.forEach((value, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    const pts = rows
      .filter((i) => chiMax[i] === value)
      .map((i) => ({ l: lambda[i], c: chi[i] }))
      .sort((a, b) => a.l - b.l)
      .map((p) => [x(p.l), y(p.c)] as [number, number]);
    doc.polyline(pts, color);
    for (const [px, py] of pts) doc.circle(px, py, 2.5, color);
    legend.push({ label: `chi_max=${value}`, color });
  });
  doc.xAxis(x, area.y0, "lambda", area.x0, area.x1);
  doc.yAxis(y, area.x0, "chi_mean", area.y0, area.y1);
  doc.legend(legend, area.x1 + 14, MARGIN.top + 10);
  doc.text(
    (area.x0 + area.x1) / 2,
    22,
    options?.title ?? "final chi_mean vs cutoff",
    { size: 14 }
  );
  return doc.render();
}

function heatmap(
  text: string,
  valueOf: (table: Table, row: number) => number,
  valueLabel: string,
  options?: Partial<FigureOptions>
): string {
  const table = parseCsv(text);
  requireRows(table);
  const rows = finalSweepRows(table);
  const lambda = stringColumn(table, "lambda");
  const chiMax = stringColumn(table, "chi_max");
  const lambdas = distinct(rows.map((i) => lambda[i])).sort(
    (a, b) => Number(a) - Number(b)
  );
  const chiMaxes = distinct(rows.map((i) => chiMax[i])).sort(
    (a, b) => Number(a) - Number(b)
  );
  // average the cell value over runs (several seeds may share a cell)
  const sums = new Map<string, { total: number; count: number }>();
  for (const i of rows) {
    const key = `${chiMax[i]}|${lambda[i]}`;
    const cell = sums.get(key) ?? { total: 0, count: 0 };
    cell.total += valueOf(table, i);
    cell.count += 1;
    sums.set(key, cell);
  }
  const size = frame(options);
  const area = plotArea(size);
  const doc = new SvgDocument(size);
  const cellW = (area.x1 - area.x0) / lambdas.length;
  const cellH = (area.y0 - area.y1) / chiMaxes.length;
  let vmax = 0;
  for (const { total, count } of sums.values()) {
    vmax = Math.max(vmax, total / count);
  }
  chiMaxes.forEach((cm, ri) => {
    lambdas.forEach((lv, ci) => {
      const cell = sums.get(`${cm}|${lv}`);
      const value = cell ? cell.total / cell.count : 0;
      const color = heatColor(vmax > 0 ? value / vmax : 0);
      doc.rect(
        area.x0 + ci * cellW,
        area.y1 + ri * cellH,
        cellW,
        cellH,
        color,
        `chi_max=${cm} lambda=${lv}: ${value.toExponential(3)}`
      );
    });
    doc.text(area.x0 - 8, area.y1 + ri * cellH + cellH / 2 + 4, cm, {
      anchor: "end",
      size: 11,
    });
  });
  lambdas.forEach((lv, ci) => {
    doc.text(area.x0 + ci * cellW + cellW / 2, area.y0 + 18, lv, { size: 11 });
  });
  doc.text((area.x0 + area.x1) / 2, area.y0 + 38, "lambda");
  doc.text(area.x0 - 46, (area.y0 + area.y1) / 2, "chi_max", { rotate: -90 });
  // colorbar
  const barX = area.x1 + 24;
  for (let i = 0; i < 40; i++) {
    doc.rect(barX, area.y0 - ((i + 1) * (area.y0 - area.y1)) / 40, 16, (area.y0 - area.y1) / 40, heatColor(i / 39));
  }
  doc.text(barX + 22, area.y1 + 10, vmax.toExponential(2), { anchor: "start", size: 10 });
  doc.text(barX + 22, area.y0, "0", { anchor: "start", size: 10 });
  doc.text((area.x0 + area.x1) / 2, 22, options?.title ?? valueLabel, { size: 14 });
  return doc.render();
}

export function heatmapInfidelity(
  text: string,
  options?: Partial<FigureOptions>
): string {
  return heatmap(
    text,
    (table, row) => {
      const idx = columnIndex(table, "fidelity_vs_initial");
      return Math.abs(1.0 - Number(table.rows[row][idx]));
    },
    "infidelity |1 - fidelity_vs_initial|",
    options
  );
}

export function heatmapNorm(text: string, options?: Partial<FigureOptions>): string {
  return heatmap(
    text,
    (table, row) => {
      const idx = columnIndex(table, "trace_dev");
      return Math.abs(Number(table.rows[row][idx]));
    },
    "norm deviation |trace_dev|",
    options
  );
}

export function fitParams(text: string, options?: Partial<FigureOptions>): string {
  const table = parseCsv(text);
  requireRows(table);
  const params = ["alpha", "beta", "gamma"] as const;
  const values = params.map((p) => numericColumn(table, p));
  const errors = params.map((p) => numericColumn(table, `se_${p}`));
  const size = frame(options);
  const area = plotArea(size);
  const doc = new SvgDocument(size);
  const n = table.rows.length;
  const lo = Math.min(...values.flat().map((v, i) => v - errors.flat()[i]));
  const hi = Math.max(...values.flat().map((v, i) => v + errors.flat()[i]));
  const y = linearScale([lo, hi], [area.y0, area.y1]);
  const x = linearScale([-0.5, params.length - 0.5], [area.x0, area.x1]);
  const legend: Array<{ label: string; color: string }> = [];
  for (let row = 0; row < n; row++) {
    const color = PALETTE[row % PALETTE.length];
    params.forEach((p, pi) => {
      const px = x(pi) + (row - (n - 1) / 2) * 8;
      const v = values[pi][row];
      const e = errors[pi][row];
      doc.line(px, y(v - e), px, y(v + e), color, 1.5);
      doc.line(px - 4, y(v - e), px + 4, y(v - e), color, 1.5);
      doc.line(px - 4, y(v + e), px + 4, y(v + e), color, 1.5);
      doc.circle(px, y(v), 3, color);
    });
    legend.push({ label: `row ${row + 1}`, color });
  }
  params.forEach((p, pi) => doc.text(x(pi), area.y0 + 18, p, { size: 12 }));
  doc.text((area.x0 + area.x1) / 2, area.y0 + 38, "fit parameter");
  doc.yAxis(y, area.x0, "value", area.y0, area.y1);
  if (n > 1) doc.legend(legend, area.x1 + 14, MARGIN.top + 10);
  doc.text((area.x0 + area.x1) / 2, 22, options?.title ?? "exponential fit parameters", {
    size: 14,
  });
  return doc.render();
}

export function renderFigure(
  kind: FigureKind,
  csvText: string,
  options?: Partial<FigureOptions>
): string {
  switch (kind) {
    case "chi_vs_sweeps":
      return chiVsSweeps(csvText, options);
    case "chi_vs_cutoff":
      return chiVsCutoff(csvText, options);
    case "heatmap_infidelity":
      return heatmapInfidelity(csvText, options);
    case "heatmap_norm":
      return heatmapNorm(csvText, options);
    case "fit_params":
      return fitParams(csvText, options);
    default: {
      const never: never = kind;
      throw new CsvError(`unknown figure kind ${String(never)}`);
    }
  }
}
