import * as fs from "fs";

export interface Table {
  header: string[];
  rows: number[][];
}

export class SchemaError extends Error {}

/** Read a solver CSV: header line plus rectangular numeric rows. */
export function readCsv(path: string): Table {
  const text = fs.readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length < 1) {
    throw new SchemaError(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(
        `${path}: row ${i + 1} has ${parts.length} fields, expected ${header.length}`,
      );
    }
    const row = parts.map(Number);
    const bad = row.findIndex((v) => Number.isNaN(v));
    if (bad >= 0) {
      throw new SchemaError(
        `${path}: row ${i + 1}, column '${header[bad]}' is not numeric: '${parts[bad]}'`,
      );
    }
    rows.push(row);
  }
  return { header, rows };
}

/** Check the header matches, naming the first offending column. */
export function requireColumns(table: Table, expected: string[], path: string): void {
  for (let i = 0; i < expected.length; i++) {
    if (table.header[i] !== expected[i]) {
      throw new SchemaError(
        `${path}: expected column ${i + 1} to be '${expected[i]}', found '${table.header[i] ?? "<missing>"}'`,
      );
    }
  }
  if (table.header.length !== expected.length) {
    throw new SchemaError(
      `${path}: unexpected extra column '${table.header[expected.length]}'`,
    );
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column '${name}'`);
  }
  return table.rows.map((r) => r[idx]);
}
