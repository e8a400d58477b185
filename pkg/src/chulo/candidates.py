"""Candidate noun phrases from POS tag sequences.

A candidate span is a maximal leftmost-longest match of the tag pattern

    (NN-any | JJ)* NN-any

scanned left to right without overlap: any run of noun/adjective tags is
trimmed back to its last noun tag. Candidates are deduplicated by
normalized surface form (lowercased, single-space joined), keeping every
occurrence span and the earliest first occurrence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DataError
from .tagging import PosTaggedDocument

DEFAULT_CANDIDATE_CAP = 256


def tag_in_pattern(tag: str) -> bool:
    return tag.startswith("NN") or tag == "JJ"


def tag_is_noun(tag: str) -> bool:
    return tag.startswith("NN")


@dataclass
class CandidatePhrase:
    """A deduplicated candidate with all of its occurrence spans.

    Spans are inclusive (start, end) token indices; ``first_occurrence``
    is the smallest start and ``token_span_length`` the length of the
    first span.
    """

    surface: str
    first_occurrence: int
    token_span_length: int
    all_occurrences: list[tuple[int, int]] = field(default_factory=list)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self.surface.split(" "))


def match_spans(tags: list[str] | tuple[str, ...]) -> list[tuple[int, int]]:
    """Inclusive spans of maximal leftmost-longest pattern matches."""
    spans: list[tuple[int, int]] = []
    i, n = 0, len(tags)
    while i < n:
        if not tag_in_pattern(tags[i]):
            i += 1
            continue
        j = i
        while j < n and tag_in_pattern(tags[j]):
            j += 1
        last_noun = -1
        for k in range(j - 1, i - 1, -1):
            if tag_is_noun(tags[k]):
                last_noun = k
                break
        if last_noun >= 0:
            spans.append((i, last_noun))
        i = j
    return spans


def normalize_surface(tokens) -> str:
    return " ".join(tok.lower() for tok in tokens)


def extract_candidates(
    tagged: PosTaggedDocument,
    max_candidates: int = DEFAULT_CANDIDATE_CAP,
) -> list[CandidatePhrase]:
    """All candidate phrases of a tagged document, by first occurrence.

    Idempotent and overlap-free by construction; the cap (applied after
    dedup, in first-occurrence order) bounds downstream scoring cost.
    """
    if max_candidates < 1:
        raise DataError(f"max_candidates must be >= 1, got {max_candidates}")
    by_surface: dict[str, CandidatePhrase] = {}
    for start, end in match_spans(tagged.tags):
        surface = normalize_surface(tagged.tokens[start:end + 1])
        cand = by_surface.get(surface)
        if cand is None:
            cand = CandidatePhrase(surface, start, end - start + 1)
            by_surface[surface] = cand
        cand.all_occurrences.append((start, end))
    ordered = sorted(by_surface.values(), key=lambda c: c.first_occurrence)
    return ordered[:max_candidates]
