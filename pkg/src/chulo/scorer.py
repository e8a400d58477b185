"""Log-probability scorers for prompt-based phrase ranking.

A scorer answers: conditioned on a document segment, what is the natural-log
probability of each phrase token inside a prompt? The built-in n-gram scorer
lives in :mod:`chulo.ngram`; :class:`ExternalScorer` speaks the JSON-lines
wire protocol to a bridge subprocess:

    request:  {"rid": int, "segment": [str,...], "prompt": [str,...],
               "phrase_start": int, "phrase_len": int}
    response: {"rid": int, "token_logprobs": [float,...]}
    error:    {"rid": int, "error": str}

Responses may arrive out of request order; they are matched by rid.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
import time
from abc import ABC, abstractmethod
from typing import Sequence

from .errors import ScorerError

ScoreRequest = tuple[Sequence[str], Sequence[str], int, int]


class LogProbScorer(ABC):
    """Deterministic conditional log-probability source.

    Identical (segment, prompt) pairs must yield bit-identical values
    within one process configuration.
    """

    #: Longest segment the scorer accepts, or None for unlimited.
    max_segment_tokens: int | None = None

    @abstractmethod
    def token_logprobs(
        self,
        segment: Sequence[str],
        prompt: Sequence[str],
        phrase_start: int,
        phrase_len: int,
    ) -> list[float]:
        """Natural-log probabilities of prompt tokens
        phrase_start .. phrase_start + phrase_len - 1, conditioned on the
        segment and on the preceding prompt tokens."""

    def token_logprobs_batch(self, requests: Sequence[ScoreRequest]) -> list[list[float]]:
        """Score many requests; failures carry ``request_index``."""
        out = []
        for i, req in enumerate(requests):
            try:
                out.append(self.token_logprobs(*req))
            except ScorerError as exc:
                exc.request_index = i  # type: ignore[attr-defined]
                raise
        return out

    def close(self) -> None:
        """Release resources; no-op for in-process scorers."""


class ScaledScorer(LogProbScorer):
    """Wrap a scorer, multiplying every log-probability by a constant.

    Scaled values are no longer true log-probabilities; this exists to
    exercise ranking argsort invariance.
    """

    def __init__(self, inner: LogProbScorer, factor: float):
        self.inner = inner
        self.factor = factor
        self.max_segment_tokens = inner.max_segment_tokens

    def token_logprobs(self, segment, prompt, phrase_start, phrase_len):
        vals = self.inner.token_logprobs(segment, prompt, phrase_start, phrase_len)
        return [v * self.factor for v in vals]


class ExternalScorer(LogProbScorer):
    """Client for a scorer bridge subprocess over stdio.

    Requests are pipelined; a reader thread collects responses as they
    arrive so an out-of-order bridge cannot deadlock the pipe.
    """

    def __init__(self, command: str, timeout: float = 120.0,
                 max_segment_tokens: int | None = None):
        self.command = command
        self.timeout = timeout
        self.max_segment_tokens = max_segment_tokens
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ScorerError(f"cannot launch scorer bridge {command!r}: {exc}") from None
        self._write_lock = threading.Lock()
        self._cond = threading.Condition()
        self._responses: dict[int, dict] = {}
        self._eof = False
        self._next_rid = 0
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
            except json.JSONDecodeError:
                msg = {"rid": -1, "error": f"unparseable bridge output: {line[:200]}"}
            with self._cond:
                self._responses[msg.get("rid", -1)] = msg
                self._cond.notify_all()
        with self._cond:
            self._eof = True
            self._cond.notify_all()

    def token_logprobs(self, segment, prompt, phrase_start, phrase_len):
        return self.token_logprobs_batch([(segment, prompt, phrase_start, phrase_len)])[0]

    def token_logprobs_batch(self, requests):
        if self._proc.poll() is not None:
            raise ScorerError("scorer bridge process has exited")
        rids: list[int] = []
        with self._write_lock:
            assert self._proc.stdin is not None
            for segment, prompt, phrase_start, phrase_len in requests:
                rid = self._next_rid
                self._next_rid += 1
                payload = {
                    "rid": rid,
                    "segment": list(segment),
                    "prompt": list(prompt),
                    "phrase_start": int(phrase_start),
                    "phrase_len": int(phrase_len),
                }
                self._proc.stdin.write(json.dumps(payload) + "\n")
                rids.append(rid)
            self._proc.stdin.flush()
        out: list[list[float]] = []
        deadline = time.monotonic() + self.timeout
        with self._cond:
            for i, rid in enumerate(rids):
                phrase_len = int(requests[i][3])
                while rid not in self._responses:
                    if self._eof:
                        raise self._indexed(ScorerError(
                            "scorer bridge closed its output before answering"), i)
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        raise self._indexed(ScorerError(
                            f"timed out waiting for scorer response rid={rid}"), i)
                    self._cond.wait(remaining)
                msg = self._responses.pop(rid)
                if "error" in msg:
                    raise self._indexed(ScorerError(f"scorer error: {msg['error']}"), i)
                vals = msg.get("token_logprobs")
                if not isinstance(vals, list) or len(vals) != phrase_len:
                    raise self._indexed(ScorerError(
                        f"bad token_logprobs for rid={rid}: expected {phrase_len} floats"), i)
                out.append([float(v) for v in vals])
        return out

    @staticmethod
    def _indexed(exc: ScorerError, index: int) -> ScorerError:
        exc.request_index = index  # type: ignore[attr-defined]
        return exc

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()

    def __enter__(self) -> "ExternalScorer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class RecordingScorer(LogProbScorer):
    """Wrap a scorer and log every request/response pair in wire format.

    The trace file can seed a replay bridge for transport-neutrality
    checks; values round-trip exactly because JSON floats are emitted
    with shortest-round-trip repr.
    """

    def __init__(self, inner: LogProbScorer, path):
        self.inner = inner
        self.max_segment_tokens = inner.max_segment_tokens
        self._fh = open(path, "w", encoding="utf-8")
        self._rid = 0

    def token_logprobs(self, segment, prompt, phrase_start, phrase_len):
        vals = self.inner.token_logprobs(segment, prompt, phrase_start, phrase_len)
        record = {
            "request": {
                "rid": self._rid,
                "segment": list(segment),
                "prompt": list(prompt),
                "phrase_start": int(phrase_start),
                "phrase_len": int(phrase_len),
            },
            "response": {"rid": self._rid, "token_logprobs": vals},
        }
        self._fh.write(json.dumps(record) + "\n")
        self._rid += 1
        return vals

    def close(self) -> None:
        self._fh.close()
        self.inner.close()
