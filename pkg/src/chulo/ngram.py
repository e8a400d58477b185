"""Built-in deterministic n-gram scorer.

An interpolated bigram language model with Laplace smoothing, trained on
the experiment corpus. Conditioning on the segment is realized by mixing
in a Laplace-smoothed unigram distribution over the segment's tokens, so
phrases actually discussed in a segment receive higher probability there,
which is the behavior prompt ranking relies on.

Both mixture components are proper distributions over the same event
space (corpus vocabulary plus one out-of-vocabulary bucket), so emitted
values are true log-probabilities, strictly negative.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

from .errors import ConfigError, ScorerError
from .scorer import LogProbScorer

_BOS = "<s>"
_OOV = "<oov>"


class UniformScorer(LogProbScorer):
    """Uniform fallback: every token gets probability 1/vocab_size."""

    def __init__(self, vocab_size: int, max_segment_tokens: int | None = None):
        if vocab_size < 2:
            raise ConfigError(f"vocab_size must be >= 2, got {vocab_size}")
        self.vocab_size = vocab_size
        self.max_segment_tokens = max_segment_tokens
        self._logp = -math.log(vocab_size)

    def token_logprobs(self, segment, prompt, phrase_start, phrase_len):
        _check_bounds(prompt, phrase_start, phrase_len)
        return [self._logp] * phrase_len


class BigramScorer(LogProbScorer):
    """Corpus bigram model interpolated with segment unigram evidence."""

    def __init__(self, bigram_weight: float = 0.75, laplace: float = 1.0,
                 max_segment_tokens: int | None = None):
        if not 0.0 < bigram_weight < 1.0:
            raise ConfigError(f"bigram_weight must be in (0, 1), got {bigram_weight}")
        if laplace <= 0:
            raise ConfigError(f"laplace must be > 0, got {laplace}")
        self.bigram_weight = bigram_weight
        self.laplace = laplace
        self.max_segment_tokens = max_segment_tokens
        self._vocab: frozenset[str] = frozenset()
        self._bigrams: dict[tuple[str, str], int] = {}
        self._context_totals: Counter[str] = Counter()
        self._seg_cache: dict[tuple[str, ...], tuple[dict[str, int], int]] = {}
        self._fitted = False

    @property
    def vocab_size(self) -> int:
        # +1 for the shared out-of-vocabulary bucket
        return len(self._vocab) + 1

    def fit(self, token_seqs: Iterable[Sequence[str]]) -> "BigramScorer":
        vocab: set[str] = set()
        bigrams: dict[tuple[str, str], int] = {}
        context_totals: Counter[str] = Counter()
        for seq in token_seqs:
            prev = _BOS
            for tok in seq:
                tok = tok.lower()
                vocab.add(tok)
                bigrams[(prev, tok)] = bigrams.get((prev, tok), 0) + 1
                context_totals[prev] += 1
                prev = tok
        self._vocab = frozenset(vocab)
        self._bigrams = bigrams
        self._context_totals = context_totals
        self._fitted = True
        self._seg_cache.clear()
        return self

    def token_logprobs(self, segment, prompt, phrase_start, phrase_len):
        if not self._fitted:
            raise ScorerError("BigramScorer used before fit()")
        _check_bounds(prompt, phrase_start, phrase_len)
        seg_counts, seg_len = self._segment_counts(tuple(t.lower() for t in segment))
        v = self.vocab_size
        lam = self.bigram_weight
        kappa = self.laplace
        out: list[float] = []
        for g in range(phrase_start, phrase_start + phrase_len):
            tok = self._map(prompt[g].lower())
            prev = self._map(prompt[g - 1].lower()) if g > 0 else _BOS
            p_bigram = (self._bigrams.get((prev, tok), 0) + kappa) / (
                self._context_totals.get(prev, 0) + kappa * v)
            p_segment = (seg_counts.get(tok, 0) + kappa) / (seg_len + kappa * v)
            out.append(math.log(lam * p_bigram + (1.0 - lam) * p_segment))
        return out

    def _map(self, token: str) -> str:
        return token if token in self._vocab else _OOV

    def _segment_counts(self, segment: tuple[str, ...]) -> tuple[dict[str, int], int]:
        cached = self._seg_cache.get(segment)
        if cached is None:
            if len(self._seg_cache) >= 64:
                self._seg_cache.clear()
            counts = Counter(self._map(t) for t in segment)
            cached = (dict(counts), len(segment))
            self._seg_cache[segment] = cached
        return cached


def _check_bounds(prompt, phrase_start, phrase_len):
    if phrase_len < 1:
        raise ScorerError(f"phrase_len must be >= 1, got {phrase_len}")
    if phrase_start < 0 or phrase_start + phrase_len > len(prompt):
        raise ScorerError(
            f"phrase span [{phrase_start}, {phrase_start + phrase_len}) "
            f"outside prompt of length {len(prompt)}")
