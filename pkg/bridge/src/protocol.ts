/**
 * Wire protocol: JSON lines over stdio.
 *
 * request:  {"rid": int, "segment": [str,...], "prompt": [str,...],
 *            "phrase_start": int, "phrase_len": int}
 * response: {"rid": int, "token_logprobs": [float,...]}   // length == phrase_len
 * error:    {"rid": int, "error": str}
 *
 * A request that cannot be interpreted (bad JSON, missing or mistyped
 * fields, span outside the prompt) is answered with rid -1; failures of
 * the scoring backend keep the original rid.
 */

export interface ScoreRequest {
  rid: number;
  segment: string[];
  prompt: string[];
  phrase_start: number;
  phrase_len: number;
}

export interface ScoreResponse {
  rid: number;
  token_logprobs: number[];
}

export interface ErrorResponse {
  rid: number;
  error: string;
}

export type Response = ScoreResponse | ErrorResponse;

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((x) => typeof x === "string");
}

function isInt(value: unknown): value is number {
  return typeof value === "number" && Number.isInteger(value);
}

/** Parse one request line; returns an error string when malformed. */
export function parseRequest(line: string): ScoreRequest | string {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    return `unparseable request: ${line.slice(0, 120)}`;
  }
  if (typeof raw !== "object" || raw === null) {
    return "request is not an object";
  }
  const record = raw as Record<string, unknown>;
  if (!isInt(record.rid)) return "missing integer rid";
  if (!isStringArray(record.segment)) return "segment must be a string array";
  if (!isStringArray(record.prompt)) return "prompt must be a string array";
  if (!isInt(record.phrase_start)) return "missing integer phrase_start";
  if (!isInt(record.phrase_len)) return "missing integer phrase_len";
  const start = record.phrase_start as number;
  const len = record.phrase_len as number;
  const prompt = record.prompt as string[];
  if (len < 1 || start < 0 || start + len > prompt.length) {
    return `phrase span [${start}, ${start + len}) outside prompt of length ${prompt.length}`;
  }
  return {
    rid: record.rid as number,
    segment: record.segment as string[],
    prompt,
    phrase_start: start,
    phrase_len: len,
  };
}

/** Canonical cache key for a request's scoring-relevant content. */
export function requestKey(req: {
  segment: string[];
  prompt: string[];
  phrase_start: number;
  phrase_len: number;
}): string {
  return JSON.stringify([req.segment, req.prompt, req.phrase_start, req.phrase_len]);
}
