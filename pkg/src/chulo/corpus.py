"""Document ingestion: tokenization, vocabulary, dataset loading, length stats.

Datasets are JSON-lines files, one record per line:

    doc-single: {"id": str, "text": str, "label": str}
    doc-multi:  {"id": str, "text": str, "labels": [str, ...]}
    token:      {"id": str, "tokens": [str, ...], "tags": [str, ...]}

Label names resolve against a LabelSet (a JSON array of names, order
significant). Token ids are assigned in a second pass once a Vocabulary
has been built from the training split.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import DataError

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

# Word-level tokenization: lowercase, punctuation split off, hyphens and
# apostrophes kept word-internal, dotted abbreviations ("u.s.") kept whole.
_TOKEN_RE = re.compile(
    r"""
    \d+(?:\.\d+)+            # decimals and dotted numbers: 3.14, 1.2.3
    | (?:\w\.){2,}           # dotted abbreviations: u.s., e.g.
    | \w+(?:[-'’]\w+)*       # words, incl. internal hyphens/apostrophes
    | \S                     # any other symbol as its own token
    """,
    re.VERBOSE | re.UNICODE,
)


def tokenize(text: str) -> list[str]:
    """Split text into lowercased word tokens.

    Deterministic and idempotent on its own space-joined output. Empty
    input yields an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class LabelSet:
    """Ordered class or tag names. For token tasks these are BIO-style."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise DataError(f"duplicate label names in {self.names}")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown label {name!r}") from None

    @property
    def outside_index(self) -> int | None:
        """Index of the "O" tag when present (BIO tagging), else None."""
        return self.names.index("O") if "O" in self.names else None

    @classmethod
    def from_file(cls, path) -> "LabelSet":
        with open(path, encoding="utf-8") as fh:
            names = json.load(fh)
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise DataError(f"label set file {path} must be a JSON array of strings")
        return cls(tuple(names))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(list(self.names), fh, ensure_ascii=False)


@dataclass
class Document:
    """A tokenized document with one optional labeling mode.

    ``tokens`` holds surface forms; ``token_ids`` is the aligned vocabulary
    encoding, filled in by :meth:`Vocabulary.encode`. Exactly one of
    ``doc_label`` / ``doc_labels`` / ``token_tags`` may be set.
    """

    id: str
    tokens: tuple[str, ...]
    token_ids: tuple[int, ...] | None = None
    doc_label: int | None = None
    doc_labels: frozenset[int] | None = None
    token_tags: tuple[int, ...] | None = None

    def __post_init__(self):
        modes = sum(x is not None for x in (self.doc_label, self.doc_labels, self.token_tags))
        if modes > 1:
            raise DataError(f"record {self.id}: more than one labeling mode set")
        if self.token_tags is not None and len(self.token_tags) != len(self.tokens):
            raise DataError(f"length mismatch, record {self.id}")
        if self.token_ids is not None and len(self.token_ids) != len(self.tokens):
            raise DataError(f"record {self.id}: token_ids misaligned with tokens")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Vocabulary:
    """Token to id map with reserved PAD (0) and UNK (1) slots.

    Ids are assigned in descending corpus frequency, ties broken
    lexicographically, so construction is fully deterministic.
    """

    tokens: tuple[str, ...]
    min_frequency: int = 1
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.tokens[:2] != (PAD_TOKEN, UNK_TOKEN):
            raise DataError("vocabulary must start with PAD and UNK")
        self._index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise DataError("duplicate token in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id_of(self, token: str) -> int:
        """Id of ``token``, falling back to UNK (case-insensitively)."""
        idx = self._index.get(token)
        if idx is None:
            idx = self._index.get(token.lower(), UNK_ID)
        return idx

    def encode(self, doc: Document) -> Document:
        """Return a copy of ``doc`` with token_ids resolved."""
        ids = tuple(self.id_of(tok) for tok in doc.tokens)
        return replace(doc, token_ids=ids)

    def save(self, path) -> None:
        payload = {"min_frequency": self.min_frequency, "tokens": list(self.tokens)}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(tuple(payload["tokens"]), int(payload["min_frequency"]))


def build_vocab(token_seqs: Iterable[Sequence[str]], min_frequency: int = 2) -> Vocabulary:
    """Build a Vocabulary from tokenized texts.

    Tokens with corpus frequency >= ``min_frequency`` get ids after PAD and
    UNK; everything else maps to UNK. Counting is case-insensitive so ids
    stay stable between lowercased text and cased token inputs.
    """
    if min_frequency < 1:
        raise DataError(f"min_frequency must be >= 1, got {min_frequency}")
    counts: Counter[str] = Counter()
    for seq in token_seqs:
        counts.update(tok.lower() for tok in seq)
    kept = [(tok, c) for tok, c in counts.items() if c >= min_frequency]
    kept.sort(key=lambda item: (-item[1], item[0]))
    tokens = (PAD_TOKEN, UNK_TOKEN) + tuple(tok for tok, _ in kept)
    return Vocabulary(tokens, min_frequency)


_SCHEMAS = ("doc-single", "doc-multi", "token")


def load_dataset(path, schema: str, label_set: LabelSet) -> list[Document]:
    """Parse a JSON-lines dataset file into Documents (ids unresolved).

    Raises DataError naming the offending line or record on malformed
    input, unknown labels, or tag/token length mismatches.
    """
    if schema not in _SCHEMAS:
        raise DataError(f"unknown schema {schema!r}, expected one of {_SCHEMAS}")
    docs: list[Document] = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed JSON on line {lineno}: {exc}") from None
            docs.append(_parse_record(record, schema, label_set, lineno))
    return docs


def parse_records(records: Iterable[dict], schema: str, label_set: LabelSet) -> list[Document]:
    """In-memory counterpart of load_dataset for already-parsed records."""
    if schema not in _SCHEMAS:
        raise DataError(f"unknown schema {schema!r}, expected one of {_SCHEMAS}")
    return [_parse_record(record, schema, label_set, lineno)
            for lineno, record in enumerate(records, start=1)]


def _parse_record(record: dict, schema: str, label_set: LabelSet, lineno: int) -> Document:
    try:
        doc_id = str(record["id"])
    except KeyError:
        raise DataError(f"line {lineno}: record missing 'id'") from None
    try:
        if schema == "doc-single":
            tokens = tuple(tokenize(record["text"]))
            label = record["label"]
            return Document(doc_id, tokens, doc_label=_resolve(label_set, label, doc_id))
        if schema == "doc-multi":
            tokens = tuple(tokenize(record["text"]))
            labels = frozenset(_resolve(label_set, name, doc_id) for name in record["labels"])
            return Document(doc_id, tokens, doc_labels=labels)
        tokens = tuple(str(t) for t in record["tokens"])
        raw_tags = record["tags"]
        if len(raw_tags) != len(tokens):
            raise DataError(f"length mismatch, record {doc_id}")
        tags = tuple(_resolve(label_set, name, doc_id) for name in raw_tags)
        return Document(doc_id, tokens, token_tags=tags)
    except KeyError as exc:
        raise DataError(f"record {doc_id}: missing field {exc}") from None


def _resolve(label_set: LabelSet, name: str, doc_id: str) -> int:
    try:
        return label_set.index(name)
    except DataError:
        raise DataError(f"record {doc_id}: unknown label {name!r}") from None


def bucket_filter(docs: Sequence[Document], min_length_exclusive: int) -> tuple[list[Document], int]:
    """Documents with token count strictly above the threshold, plus count.

    Input order is preserved; threshold 0 keeps every non-empty document.
    """
    if min_length_exclusive < 0:
        raise DataError(f"bucket threshold must be >= 0, got {min_length_exclusive}")
    subset = [d for d in docs if len(d) > min_length_exclusive]
    return subset, len(subset)
