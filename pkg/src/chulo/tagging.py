"""Part-of-speech tagging behind a pluggable interface.

The default tagger combines an embedded word lexicon (shipped as TSV
package data, format "word<TAB>tag") with ordered suffix rules and a noun
default, so unknown words still participate in candidate extraction.
Implementations must be safe for concurrent read-only use.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Protocol, Sequence, runtime_checkable

from .corpus import Document
from .errors import DataError

# Coarse tagset. Candidate extraction only distinguishes NN-prefixed tags
# and bare JJ; everything else is an excluded class.
TAGSET = frozenset({
    "NN", "NNS", "NNP", "NNPS",
    "JJ", "JJR", "JJS",
    "VB", "VBD", "VBG", "VBN", "VBP", "VBZ",
    "MD", "RB", "CD", "PUNCT", "OTHER",
})

_NUMERIC_RE = re.compile(r"\d+(?:\.\d+)*")

_ADJ_SUFFIXES = ("ous", "ful", "ive", "ical", "able", "ible", "less", "ish", "ary")
_NOUN_SUFFIXES = ("ion", "ment", "ness", "ity", "ism", "ist", "ance", "ence",
                  "ship", "hood", "ology", "graphy")


@runtime_checkable
class Tagger(Protocol):
    """Anything that maps a token sequence to one tag per token."""

    def tag(self, tokens: Sequence[str]) -> list[str]:
        ...


@dataclass(frozen=True)
class PosTaggedDocument:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self):
        if len(self.tags) != len(self.tokens):
            raise DataError("tags and tokens must align")
        bad = set(self.tags) - TAGSET
        if bad:
            raise DataError(f"tags outside the declared tagset: {sorted(bad)}")


class LexiconTagger:
    """Lexicon lookup, then suffix rules, then a noun default."""

    def __init__(self, lexicon: dict[str, str] | None = None):
        self.lexicon = dict(_default_lexicon()) if lexicon is None else dict(lexicon)
        bad = set(self.lexicon.values()) - TAGSET
        if bad:
            raise DataError(f"lexicon contains unknown tags: {sorted(bad)}")

    @classmethod
    def from_tsv(cls, path) -> "LexiconTagger":
        lexicon: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    word, tag = line.split("\t")
                except ValueError:
                    raise DataError(f"{path}: line {lineno} is not 'word<TAB>tag'") from None
                lexicon[word] = tag
        return cls(lexicon)

    def tag(self, tokens: Sequence[str]) -> list[str]:
        return [self._tag_one(tok) for tok in tokens]

    def _tag_one(self, surface: str) -> str:
        lower = surface.lower()
        if not any(ch.isalnum() for ch in lower):
            return "PUNCT"
        if _NUMERIC_RE.fullmatch(lower):
            return "CD"
        tag = self.lexicon.get(lower)
        if tag is not None:
            return tag
        capitalized = surface[:1].isupper()
        # Inflected -s forms of known stems.
        if lower.endswith("s") and not lower.endswith("ss") and len(lower) > 2:
            for stem in _s_stems(lower):
                stem_tag = self.lexicon.get(stem)
                if stem_tag in ("NN", "NNP"):
                    return stem_tag + "S"
                if stem_tag == "VB":
                    return "VBZ"
        if capitalized:
            return "NNPS" if lower.endswith("s") and not lower.endswith("ss") else "NNP"
        if lower.endswith("ing") and len(lower) > 4:
            return "VBG"
        if lower.endswith("ed") and len(lower) > 3:
            return "VBD"
        if lower.endswith("ly") and len(lower) > 3:
            return "RB"
        if lower.endswith(_ADJ_SUFFIXES):
            return "JJ"
        if lower.endswith(_NOUN_SUFFIXES):
            return "NN"
        if lower.endswith("s") and not lower.endswith("ss") and len(lower) > 2:
            return "NNS"
        return "NN"


def _s_stems(lower: str):
    yield lower[:-1]
    if lower.endswith("es"):
        yield lower[:-2]
    if lower.endswith("ies"):
        yield lower[:-3] + "y"


@lru_cache(maxsize=1)
def _default_lexicon() -> dict[str, str]:
    lexicon: dict[str, str] = {}
    data = resources.files("chulo.data").joinpath("tag_lexicon.tsv").read_text("utf-8")
    for line in data.splitlines():
        if line:
            word, tag = line.split("\t")
            lexicon[word] = tag
    return lexicon


@lru_cache(maxsize=1)
def default_tagger() -> LexiconTagger:
    return LexiconTagger()


def pos_tag(doc: Document, tagger: Tagger | None = None) -> PosTaggedDocument:
    """Tag every token of a document.

    Raises DataError on an empty document; tags are deterministic for a
    fixed tagger.
    """
    if len(doc.tokens) == 0:
        raise DataError(f"empty document {doc.id!r}")
    tagger = tagger if tagger is not None else default_tagger()
    tags = tagger.tag(doc.tokens)
    return PosTaggedDocument(tuple(doc.tokens), tuple(tags))
