#!/usr/bin/env node
/**
 * Scorer bridge entry point.
 *
 * Launch through the CHULO_SCORER_CMD environment variable of the core
 * pipeline, e.g.
 *
 *   CHULO_SCORER_CMD="node dist/main.js --backend bigram --corpus docs.jsonl"
 *
 * Backends: uniform (analytic constant), replay (recorded trace),
 * bigram (fitted on a JSONL corpus). A backend around a real
 * encoder-decoder language model implements the same ScorerBackend
 * interface; none is bundled because this bridge runs fully offline.
 */

import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { BigramBackend, ReplayBackend, ScorerBackend, UniformBackend } from "./backends.js";
import { serve } from "./server.js";

function buildBackend(values: Record<string, unknown>): ScorerBackend {
  const backend = String(values.backend ?? "uniform");
  switch (backend) {
    case "uniform":
      return new UniformBackend(Number(values["vocab-size"] ?? 10000));
    case "replay": {
      const table = values.table;
      if (typeof table !== "string") {
        throw new Error("--backend replay requires --table <trace.jsonl>");
      }
      return new ReplayBackend(table);
    }
    case "bigram": {
      const corpus = values.corpus;
      if (typeof corpus !== "string") {
        throw new Error("--backend bigram requires --corpus <docs.jsonl>");
      }
      return new BigramBackend(corpus);
    }
    default:
      throw new Error(`unknown backend ${backend}`);
  }
}

export async function main(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      backend: { type: "string", default: "uniform" },
      "vocab-size": { type: "string" },
      table: { type: "string" },
      corpus: { type: "string" },
      "reorder-window": { type: "string" },
    },
  });
  let backend: ScorerBackend;
  try {
    backend = buildBackend(values);
  } catch (error) {
    process.stderr.write(`chulo-scorer-bridge: ${String(error)}\n`);
    return 2;
  }
  const reorderWindow = values["reorder-window"]
    ? Number(values["reorder-window"])
    : 0;
  await serve(backend, process.stdin, process.stdout, { reorderWindow });
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
