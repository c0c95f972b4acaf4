/**
 * Minimal CSV reader for the benchmark's two fixed schemas.
 *
 * The harness emits plain comma-separated numeric columns with a single
 * text column (the variant label), no quoting, LF line endings.
 */

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text
    .split("\n")
    .map((line) => line.replace(/\r$/, ""))
    .filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("schema error: empty file (no header row)");
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows = lines.slice(1).map((line, index) => {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `schema error: row ${index + 2} has ${cells.length} cells, expected ${columns.length}`,
      );
    }
    const row: Record<string, string> = {};
    columns.forEach((name, i) => {
      row[name] = cells[i].trim();
    });
    return row;
  });
  return { columns, rows };
}

/** Validate that every required column exists and the table has data rows. */
export function requireColumns(table: Table, required: string[]): void {
  for (const name of required) {
    if (!table.columns.includes(name)) {
      throw new SchemaError(`schema error: missing column '${name}'`);
    }
  }
  if (table.rows.length === 0) {
    throw new SchemaError("schema error: no data rows");
  }
}

export function toNumber(raw: string, column: string): number {
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new SchemaError(`schema error: column '${column}' has non-numeric value '${raw}'`);
  }
  return value;
}
