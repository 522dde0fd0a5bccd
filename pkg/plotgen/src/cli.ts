#!/usr/bin/env node
/**
 * plotgen --figure <kind> --input <csv> --out <path> [--width N --height N --dpi N]
 *
 * Renders one SVG figure from a harness CSV. Exit codes: 0 success,
 * 1 data error (missing column, empty CSV), 2 usage error.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { CsvError } from "./csv";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        figure: { type: "string" },
        input: { type: "string" },
        out: { type: "string" },
        width: { type: "string" },
        height: { type: "string" },
        dpi: { type: "string" },
        title: { type: "string" },
        help: { type: "boolean" },
      },
      allowPositionals: false,
    });
  } catch (err) {
    process.stderr.write(`plotgen: ${(err as Error).message}\n`);
    return 2;
  }
  const values = parsed.values;
  if (values.help) {
    process.stdout.write(
      `usage: plotgen --figure <${FIGURE_KINDS.join("|")}> --input <csv> --out <svg>\n` +
        `               [--width N] [--height N] [--dpi N] [--title TEXT]\n`
    );
    return 0;
  }
  const { figure, input, out } = values;
  if (!figure || !input || !out) {
    process.stderr.write("plotgen: --figure, --input and --out are required\n");
    return 2;
  }
  if (!FIGURE_KINDS.includes(figure as FigureKind)) {
    process.stderr.write(
      `plotgen: unknown figure '${figure}' (expected one of ${FIGURE_KINDS.join(", ")})\n`
    );
    return 2;
  }
  let text: string;
  try {
    text = readFileSync(input, "utf-8");
  } catch (err) {
    process.stderr.write(`plotgen: cannot read ${input}: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const svg = renderFigure(figure as FigureKind, text, {
      width: values.width ? Number(values.width) : undefined,
      height: values.height ? Number(values.height) : undefined,
      dpi: values.dpi ? Number(values.dpi) : undefined,
      title: values.title,
    });
    writeFileSync(out, svg, "utf-8");
  } catch (err) {
    if (err instanceof CsvError) {
      process.stderr.write(`plotgen: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
  process.stdout.write(`wrote ${out}\n`);
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
