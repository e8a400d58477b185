/**
 * Line-oriented request loop. Responses normally follow request order;
 * with a reorder window the server buffers that many responses and
 * flushes them reversed, exercising clients that must match responses
 * to requests by rid.
 */

import { createInterface } from "node:readline";
import { Readable, Writable } from "node:stream";
import { BackendError, ScorerBackend } from "./backends.js";
import { Response, parseRequest } from "./protocol.js";

export interface ServeOptions {
  reorderWindow?: number;
}

export function handleLine(backend: ScorerBackend, line: string): Response | null {
  if (!line.trim()) return null;
  const parsed = parseRequest(line);
  if (typeof parsed === "string") {
    return { rid: -1, error: parsed };
  }
  try {
    return { rid: parsed.rid, token_logprobs: backend.score(parsed) };
  } catch (error) {
    const message = error instanceof BackendError ? error.message : String(error);
    return { rid: parsed.rid, error: message };
  }
}

export function serve(
  backend: ScorerBackend,
  input: Readable,
  output: Writable,
  options: ServeOptions = {},
): Promise<void> {
  const window = options.reorderWindow ?? 0;
  const pending: Response[] = [];

  const emit = (response: Response) => {
    output.write(JSON.stringify(response) + "\n");
  };
  const flush = () => {
    while (pending.length > 0) {
      emit(pending.pop() as Response);
    }
  };

  return new Promise((resolve) => {
    const lines = createInterface({ input, crlfDelay: Infinity });
    lines.on("line", (line) => {
      const response = handleLine(backend, line);
      if (response === null) return;
      if (window > 1) {
        pending.push(response);
        if (pending.length >= window) flush();
      } else {
        emit(response);
      }
    });
    lines.on("close", () => {
      flush();
      resolve();
    });
  });
}
