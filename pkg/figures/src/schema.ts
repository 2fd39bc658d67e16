/**
 * Tidy figure-data schema: the CSV contract between the simulation harness
 * and these renderers. Columns are exactly `kind,panel,series,x,y,se`; every
 * plotted number comes straight from a row, never recomputed here.
 */

export interface Row {
  kind: string;
  panel: string;
  series: string;
  x: number;
  y: number;
  se: number;
}

export interface Meta {
  kind?: string;
  alpha?: number;
  switch_at?: number;
  x_label?: string;
}

export const COLUMNS = ["kind", "panel", "series", "x", "y", "se"] as const;

export class SchemaError extends Error {}

export function parseTidyCsv(text: string): Row[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header row");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const missing = COLUMNS.filter((c) => !header.includes(c));
  const extra = header.filter((c) => !(COLUMNS as readonly string[]).includes(c));
  if (missing.length || extra.length) {
    throw new SchemaError(
      `header mismatch: missing [${missing.join(", ")}], unexpected [${extra.join(", ")}]`,
    );
  }
  if (lines.length === 1) {
    throw new SchemaError("empty CSV: header but no data rows");
  }
  const idx = Object.fromEntries(header.map((h, i) => [h, i]));
  const rows: Row[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(`row ${i + 1}: expected ${header.length} fields, got ${parts.length}`);
    }
    const num = (col: string): number => {
      const v = Number(parts[idx[col]]);
      if (!Number.isFinite(v)) {
        throw new SchemaError(`row ${i + 1}: column ${col} is not a finite number: ${parts[idx[col]]}`);
      }
      return v;
    };
    rows.push({
      kind: parts[idx.kind],
      panel: parts[idx.panel],
      series: parts[idx.series],
      x: num("x"),
      y: num("y"),
      se: num("se"),
    });
  }
  return rows;
}

export function parseMeta(text: string): Meta {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`meta sidecar is not valid JSON: ${e}`);
  }
  if (typeof doc !== "object" || doc === null) {
    throw new SchemaError("meta sidecar must be a JSON object");
  }
  return doc as Meta;
}
