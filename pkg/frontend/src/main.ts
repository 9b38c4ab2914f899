#!/usr/bin/env node
/** CLI: plot-bench --csv IN.csv --out-dir DIR */

import * as fs from "node:fs";
import * as path from "node:path";

import { renderAll, SchemaError } from "./plot.js";

function parseArgs(argv: string[]): { csv?: string; outDir?: string } {
  const out: { csv?: string; outDir?: string } = {};
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--csv") out.csv = argv[++i];
    else if (argv[i] === "--out-dir") out.outDir = argv[++i];
    else {
      console.error(`unknown argument: ${argv[i]}`);
      process.exit(2);
    }
  }
  return out;
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  if (!args.csv || !args.outDir) {
    console.error("usage: plot-bench --csv IN.csv --out-dir DIR");
    return 2;
  }
  let text: string;
  try {
    text = fs.readFileSync(args.csv, "utf8");
  } catch (e) {
    console.error(`cannot read ${args.csv}: ${e}`);
    return 1;
  }
  let files;
  try {
    files = renderAll(text);
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${e.message}`);
      return 1;
    }
    throw e;
  }
  fs.mkdirSync(args.outDir, { recursive: true });
  for (const f of files) {
    fs.writeFileSync(path.join(args.outDir, f.name), f.content);
    console.log(`wrote ${path.join(args.outDir, f.name)}`);
  }
  if (files.length === 0) {
    console.log("no data rows; nothing to plot");
  }
  return 0;
}

process.exit(main(process.argv.slice(2)));
