/**
 * CSV handling for the harness output files.
 *
 * The harness writes plain comma-separated values without quoting, one
 * header row, repr()-formatted floats. Column access is by name and missing
 * columns are reported by name.
 */

export interface Table {
  columns: string[];
  rows: string[][];
}

export class CsvError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .map((ln) => ln.trim())
    .filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new CsvError("empty CSV: no header row");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((ln) => ln.split(","));
  for (const row of rows) {
    if (row.length !== columns.length) {
      throw new CsvError(
        `malformed CSV row: expected ${columns.length} fields, got ${row.length}`
      );
    }
  }
  return { columns, rows };
}

export function columnIndex(table: Table, name: string): number {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new CsvError(
      `missing column '${name}' (available: ${table.columns.join(", ")})`
    );
  }
  return idx;
}

export function requireRows(table: Table): void {
  if (table.rows.length === 0) {
    throw new CsvError("empty CSV: no data rows");
  }
}

export function numericColumn(table: Table, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row, i) => {
    const value = Number(row[idx]);
    if (!Number.isFinite(value)) {
      throw new CsvError(`non-numeric value '${row[idx]}' in column '${name}' row ${i + 1}`);
    }
    return value;
  });
}

export function stringColumn(table: Table, name: string): string[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row) => row[idx]);
}

/** Distinct values of a column in first-appearance order. */
export function distinct(values: string[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const v of values) {
    if (!seen.has(v)) {
      seen.add(v);
      out.push(v);
    }
  }
  return out;
}
