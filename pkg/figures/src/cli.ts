/**
 * CLI: render one tidy figure CSV to SVG.
 *
 *   node dist/cli.js <kind> <input.csv> <output.svg> [--meta meta.json]
 *
 * Exits 1 (and writes nothing) on schema mismatch or missing input.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { renderFigure } from "./render.js";
import { Meta, parseMeta, parseTidyCsv } from "./schema.js";

export function main(argv: string[]): number {
  const args = [...argv];
  let metaPath: string | undefined;
  const metaIx = args.indexOf("--meta");
  if (metaIx >= 0) {
    metaPath = args[metaIx + 1];
    if (!metaPath) {
      console.error("error: --meta needs a path");
      return 1;
    }
    args.splice(metaIx, 2);
  }
  if (args.length !== 3) {
    console.error("usage: cli.js <kind> <input.csv> <output.svg> [--meta meta.json]");
    return 1;
  }
  const [kind, inputPath, outputPath] = args;
  try {
    const rows = parseTidyCsv(readFileSync(inputPath, "utf-8"));
    const meta: Meta = metaPath ? parseMeta(readFileSync(metaPath, "utf-8")) : {};
    const svg = renderFigure(kind, rows, meta);
    writeFileSync(outputPath, svg);
    console.error(`wrote ${outputPath}`);
    return 0;
  } catch (e) {
    console.error(`error: ${e instanceof Error ? e.message : e}`);
    return 1;
  }
}

const isDirect =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isDirect) {
  process.exit(main(process.argv.slice(2)));
}
