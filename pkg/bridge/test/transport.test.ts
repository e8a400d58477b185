/**
 * Transport neutrality: running the core pipeline's keyphrase
 * extraction through this bridge in replay mode must reproduce the
 * in-process output byte for byte. The core records its built-in
 * scorer's traffic in wire format; the bridge replays it; JSON float
 * serialization round-trips exactly in both directions.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

const here = path.dirname(fileURLToPath(import.meta.url));
const mainJs = path.join(here, "..", "dist", "main.js");
const docs = path.join(here, "fixtures", "docs.jsonl");

const PYTHON = process.env.CHULO_PYTHON ?? "python3";

function extract(outPath: string, extraArgs: string[], env: NodeJS.ProcessEnv) {
  execFileSync(
    PYTHON,
    [
      "-m",
      "chulo.cli",
      "extract-keyphrases",
      "--input",
      docs,
      "--top-n",
      "15",
      "--output",
      outPath,
      ...extraArgs,
    ],
    { env: { ...process.env, ...env }, stdio: "pipe" },
  );
}

describe("transport neutrality against the core pipeline", () => {
  let workDir: string;

  beforeAll(() => {
    workDir = mkdtempSync(path.join(tmpdir(), "bridge-transport-"));
  });

  afterAll(() => {
    rmSync(workDir, { recursive: true, force: true });
  });

  it("replaying recorded n-gram values reproduces the ranking bit-identically", () => {
    const builtinOut = path.join(workDir, "keys_builtin.jsonl");
    const trace = path.join(workDir, "trace.jsonl");
    extract(builtinOut, ["--record-scorer", trace], { CHULO_SCORER_CMD: "" });

    const bridgedOut = path.join(workDir, "keys_bridged.jsonl");
    const command = `node ${mainJs} --backend replay --table ${trace}`;
    extract(bridgedOut, [], { CHULO_SCORER_CMD: command });

    const builtin = readFileSync(builtinOut, "utf-8");
    const bridged = readFileSync(bridgedOut, "utf-8");
    expect(bridged).toBe(builtin);
    // sanity: scores really are floats that round-tripped through JSON
    const first = JSON.parse(builtin.split("\n")[0]);
    expect(first.keyphrases.length).toBeGreaterThan(0);
    expect(typeof first.keyphrases[0].score).toBe("number");
  });
});
