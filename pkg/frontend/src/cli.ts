/**
 * Figure renderer for benchmark CSV outputs.
 *
 * Usage: node dist/cli.js --csv <path> --kind <figure_kind> --out <path>
 *
 * Exit codes: 0 success, 2 bad arguments or schema mismatch, 4 I/O failure.
 */

import { readFileSync, writeFileSync } from "fs";

import { SchemaError } from "./csv.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figure.js";

interface Args {
  csv: string;
  kind: FigureKind;
  out: string;
}

export function parseArgs(argv: string[]): Args {
  const values: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`expected --flag value pairs, got '${argv.slice(i).join(" ")}'`);
    }
    values[flag.slice(2)] = value;
  }
  for (const required of ["csv", "kind", "out"]) {
    if (!(required in values)) {
      throw new Error(`missing required flag --${required}`);
    }
  }
  if (!FIGURE_KINDS.includes(values.kind as FigureKind)) {
    throw new Error(
      `unknown kind '${values.kind}', expected one of: ${FIGURE_KINDS.join(", ")}`,
    );
  }
  return { csv: values.csv, kind: values.kind as FigureKind, out: values.out };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (error) {
    console.error(`argument error: ${(error as Error).message}`);
    return 2;
  }

  let text: string;
  try {
    text = readFileSync(args.csv, "utf-8");
  } catch (error) {
    console.error(`cannot read ${args.csv}: ${(error as Error).message}`);
    return 4;
  }

  let svg: string;
  try {
    svg = renderFigure(text, args.kind);
  } catch (error) {
    if (error instanceof SchemaError) {
      console.error(error.message);
      return 2;
    }
    throw error;
  }

  try {
    writeFileSync(args.out, svg, "utf-8");
  } catch (error) {
    console.error(`cannot write ${args.out}: ${(error as Error).message}`);
    return 4;
  }
  console.log(`wrote ${args.out}`);
  return 0;
}

process.exitCode = main(process.argv.slice(2));
