"""Prompt-based keyphrase scoring and ranking.

Each candidate phrase is scored by force-decoding it inside a prompt
("the {category} mainly discusses {phrase}") conditioned on every
document segment in turn:

    penalty   r = L / l_d + gamma / l_d^3      (L = first occurrence)
    per-seg   p = (1 / l_P^alpha) * sum of phrase-token log-probs
    score     s = r * sum of p over segments, in segment order

Log-probabilities are negative, so a larger penalty drags the score
further from zero: candidates are sorted by score descending, best
(closest to zero) first. Ties break on earlier first occurrence, then
lexicographic surface, for determinism.

A tf-idf ranker over the same candidates provides the statistical
ablation arm.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .candidates import CandidatePhrase
from .corpus import Document, tokenize
from .errors import ConfigError, DataError, ScorerError
from .scorer import LogProbScorer

DEFAULT_PROMPT_TEMPLATE = "the {category} mainly discusses {phrase}"


@dataclass(frozen=True)
class SkpConfig:
    """Knobs of the prompt ranker.

    alpha and gamma have no canonical values; the defaults here are the
    package's own and live in configuration, not in stone. alpha = 0
    disables prompt-length normalization.
    """

    alpha: float = 0.6
    gamma: float = 1.2e8
    segment_length: int = 512
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    category: str = "document"
    top_n: int = 15

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.segment_length < 1:
            raise ConfigError(f"segment_length must be >= 1, got {self.segment_length}")
        if self.top_n < 1:
            raise ConfigError(f"top_n must be >= 1, got {self.top_n}")
        for placeholder in ("{category}", "{phrase}"):
            if self.prompt_template.count(placeholder) != 1:
                raise ConfigError(
                    f"prompt_template must contain {placeholder} exactly once: "
                    f"{self.prompt_template!r}")


@dataclass(frozen=True)
class PromptBundle:
    """A tokenized prompt with the phrase span located inside it."""

    tokens: tuple[str, ...]
    phrase_start: int
    phrase_len: int

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass
class RankedKeyphrase:
    phrase: CandidatePhrase
    position_penalty: float
    logprob_sum: float
    score: float


def position_penalty(first_occurrence: int, doc_length: int, gamma: float) -> float:
    """L / l_d + gamma / l_d^3, strictly increasing in L."""
    if doc_length < 1:
        raise DataError(f"document length must be >= 1, got {doc_length}")
    if not 0 <= first_occurrence < doc_length:
        raise DataError(
            f"first occurrence {first_occurrence} outside document of length {doc_length}")
    if gamma < 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    return first_occurrence / doc_length + gamma / doc_length**3


def segment_document(tokens: Sequence[str], segment_length: int) -> list[tuple[str, ...]]:
    """Consecutive non-overlapping token slices; the last may be short."""
    if segment_length < 1:
        raise ConfigError(f"segment_length must be >= 1, got {segment_length}")
    return [tuple(tokens[i:i + segment_length])
            for i in range(0, len(tokens), segment_length)]


def build_prompt(cfg: SkpConfig, phrase: CandidatePhrase) -> PromptBundle:
    """Tokenized prompt with (phrase_start, phrase_len) located inside."""
    phrase_tokens = phrase.tokens
    if len(phrase_tokens) == 0 or phrase.surface == "":
        raise DataError("phrase tokenizes to zero tokens")
    before, after = cfg.prompt_template.split("{phrase}")
    prefix = tokenize(before.replace("{category}", cfg.category))
    suffix = tokenize(after.replace("{category}", cfg.category))
    tokens = tuple(prefix) + phrase_tokens + tuple(suffix)
    return PromptBundle(tokens, len(prefix), len(phrase_tokens))


def score_phrase_on_segment(
    scorer: LogProbScorer,
    segment: Sequence[str],
    bundle: PromptBundle,
    alpha: float,
) -> float:
    """Sum of phrase-token log-probs, scaled by 1 / l_P^alpha."""
    _check_segment_fits(scorer, len(segment))
    logps = scorer.token_logprobs(segment, bundle.tokens, bundle.phrase_start,
                                  bundle.phrase_len)
    return _scale(logps, bundle.length, alpha)


def _scale(logps: Sequence[float], prompt_len: int, alpha: float) -> float:
    total = 0.0
    for v in logps:
        total += v
    return total / prompt_len**alpha


def _check_segment_fits(scorer: LogProbScorer, segment_len: int) -> None:
    cap = scorer.max_segment_tokens
    if cap is not None and segment_len > cap:
        raise ScorerError(
            f"segment of {segment_len} tokens exceeds scorer capability {cap}")


def rank_keyphrases(
    doc: Document,
    candidates: Sequence[CandidatePhrase],
    cfg: SkpConfig,
    scorer: LogProbScorer,
) -> list[RankedKeyphrase]:
    """Score every candidate over all segments and sort best-first.

    Scoring is batched through the scorer (pipelined for subprocess
    scorers); the per-candidate sum always runs in segment order so
    results do not depend on transport concurrency.
    """
    if not candidates:
        return []
    segments = segment_document(doc.tokens, cfg.segment_length)
    for seg in segments:
        _check_segment_fits(scorer, len(seg))
    l_d = len(doc.tokens)
    bundles = [build_prompt(cfg, cand) for cand in candidates]
    requests = [
        (seg, b.tokens, b.phrase_start, b.phrase_len)
        for b in bundles
        for seg in segments
    ]
    try:
        responses = scorer.token_logprobs_batch(requests)
    except ScorerError as exc:
        idx = getattr(exc, "request_index", None)
        if idx is None or not segments:
            raise
        cand = candidates[idx // len(segments)]
        seg_idx = idx % len(segments)
        raise ScorerError(
            f"scoring failed for phrase {cand.surface!r} on segment {seg_idx}: {exc}"
        ) from exc

    ranked: list[RankedKeyphrase] = []
    m = len(segments)
    for i, (cand, bundle) in enumerate(zip(candidates, bundles)):
        r = position_penalty(cand.first_occurrence, l_d, cfg.gamma)
        logprob_sum = 0.0
        for j in range(m):
            logprob_sum += _scale(responses[i * m + j], bundle.length, cfg.alpha)
        ranked.append(RankedKeyphrase(cand, r, logprob_sum, r * logprob_sum))
    ranked.sort(key=_rank_key)
    return ranked


def _rank_key(k: RankedKeyphrase):
    return (-k.score, k.phrase.first_occurrence, k.phrase.surface)


def select_top_n(ranked: Sequence[RankedKeyphrase], top_n: int) -> list[RankedKeyphrase]:
    """First min(top_n, len) entries of an already-sorted ranking."""
    if top_n < 1:
        raise ConfigError(f"top_n must be >= 1, got {top_n}")
    return list(ranked[:top_n])


@dataclass
class CorpusStats:
    """Document frequencies for the tf-idf ablation ranker."""

    n_docs: int
    doc_freq: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_documents(cls, docs: Sequence[Document]) -> "CorpusStats":
        df: Counter[str] = Counter()
        for doc in docs:
            df.update({tok.lower() for tok in doc.tokens})
        return cls(len(docs), dict(df))

    def idf(self, token: str) -> float:
        df = self.doc_freq.get(token.lower(), 0)
        return math.log((1 + self.n_docs) / (1 + df)) + 1.0


def rank_tfidf_baseline(
    doc: Document,
    candidates: Sequence[CandidatePhrase],
    stats: CorpusStats,
) -> list[RankedKeyphrase]:
    """Candidates by summed token tf-idf, descending, SKP tie-breaking.

    Results reuse RankedKeyphrase with a unit position penalty so the
    selection and marking stages downstream are ranker-agnostic.
    """
    if not candidates:
        return []
    tf = Counter(tok.lower() for tok in doc.tokens)
    ranked = []
    for cand in candidates:
        score = sum(tf[tok] * stats.idf(tok) for tok in cand.tokens)
        ranked.append(RankedKeyphrase(cand, 1.0, score, score))
    ranked.sort(key=_rank_key)
    return ranked
