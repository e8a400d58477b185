import { execFile } from "node:child_process";
import { readFileSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";
import { describe, expect, it } from "vitest";
import { BigramBackend, UniformBackend } from "../src/backends.js";
import { handleLine } from "../src/server.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const fixture = (name: string) => path.join(here, "fixtures", name);
const mainJs = path.join(here, "..", "dist", "main.js");
const run = promisify(execFile);

async function runBridge(args: string[], input: string): Promise<string[]> {
  const child = run("node", [mainJs, ...args]);
  child.child.stdin!.write(input);
  child.child.stdin!.end();
  const { stdout } = await child;
  return stdout.split("\n").filter((line) => line.trim().length > 0);
}

describe("golden transcript conformance", () => {
  it("answers the frozen request transcript exactly", async () => {
    const requests = readFileSync(fixture("golden_requests.jsonl"), "utf-8");
    const expected = readFileSync(fixture("golden_responses.jsonl"), "utf-8")
      .split("\n")
      .filter((line) => line.trim())
      .map((line) => JSON.parse(line));
    const lines = await runBridge(["--backend", "uniform", "--vocab-size", "100"], requests);
    expect(lines.map((line) => JSON.parse(line))).toEqual(expected);
  });

  it("malformed request gets rid -1, well-formed keep their rid", async () => {
    const requests = readFileSync(fixture("golden_requests.jsonl"), "utf-8");
    const lines = await runBridge(["--backend", "uniform"], requests);
    const rids = lines.map((line) => JSON.parse(line).rid);
    expect(rids).toEqual([0, -1, 2]);
  });
});

describe("rid matching under out-of-order replies", () => {
  const request = (rid: number) =>
    JSON.stringify({
      rid,
      segment: ["seg"],
      prompt: ["about", `topic${rid}`],
      phrase_start: 1,
      phrase_len: 1,
    });

  it("reorder window reverses response order but preserves rids", async () => {
    const input = [0, 1, 2, 3].map(request).join("\n") + "\n";
    const lines = await runBridge(
      ["--backend", "uniform", "--vocab-size", "10", "--reorder-window", "4"],
      input,
    );
    const rids = lines.map((line) => JSON.parse(line).rid);
    expect(rids).toEqual([3, 2, 1, 0]);
    for (const line of lines) {
      expect(JSON.parse(line).token_logprobs).toEqual([-Math.log(10)]);
    }
  });

  it("flushes a partial window at end of input", async () => {
    const input = [7, 8, 9].map(request).join("\n") + "\n";
    const lines = await runBridge(
      ["--backend", "uniform", "--reorder-window", "10"],
      input,
    );
    expect(lines.map((line) => JSON.parse(line).rid)).toEqual([9, 8, 7]);
  });
});

describe("handleLine", () => {
  it("turns backend failures into error responses with the original rid", () => {
    const backend = {
      score() {
        throw new Error("model exploded");
      },
    };
    const response = handleLine(
      backend,
      '{"rid": 5, "segment": [], "prompt": ["x"], "phrase_start": 0, "phrase_len": 1}',
    );
    expect(response).toMatchObject({ rid: 5 });
    expect(response && "error" in response).toBe(true);
  });

  it("skips blank lines", () => {
    expect(handleLine(new UniformBackend(4), "   ")).toBeNull();
  });
});

describe("bigram backend", () => {
  it("is deterministic and emits negative log-probs of phrase length", () => {
    const backend = new BigramBackend(fixture("docs.jsonl"));
    const request = {
      rid: 0,
      segment: ["the", "solar", "panel", "array"],
      prompt: ["the", "document", "mainly", "discusses", "solar", "panel"],
      phrase_start: 4,
      phrase_len: 2,
    };
    const first = backend.score(request);
    const second = backend.score(request);
    expect(first).toEqual(second);
    expect(first).toHaveLength(2);
    for (const value of first) expect(value).toBeLessThan(0);
  });

  it("scores segment-supported tokens higher", () => {
    const backend = new BigramBackend(fixture("docs.jsonl"));
    const base = {
      rid: 0,
      prompt: ["about", "turbine"],
      phrase_start: 1,
      phrase_len: 1,
    };
    const [supported] = backend.score({
      ...base,
      segment: ["wind", "turbine", "farm", "turbine"],
    });
    const [unsupported] = backend.score({ ...base, segment: ["solar", "panel"] });
    expect(supported).toBeGreaterThan(unsupported);
  });
});
