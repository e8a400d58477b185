"""Fixed-size chunking and weighted chunk embeddings.

A document of l_D tokens becomes m = ceil(l_D / n) chunks of n token ids,
the last chunk padded with PAD. Tokens inside selected keyphrase spans
are flagged; a chunk's embedding is the weighted average of its real
tokens' embeddings with weight ``a`` on keyphrase tokens and ``b`` on the
rest (a > b > 0). PAD positions carry weight zero so padding never
dilutes a chunk; an all-PAD chunk yields a zero vector and is marked
invalid for downstream attention masking.

``chunks.bin`` files serialize the resulting embedding matrices: one
record per document, little-endian, header (magic "CHLO", version, m, n,
d), length-prefixed document id, row-major float32 matrix, then
byte-packed keyphrase flags, pad mask (both m*n bits) and chunk validity
(m bits), all packed most-significant-bit first.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

from .corpus import PAD_ID, Document
from .errors import ConfigError, DataError
from .skp import RankedKeyphrase

CHUNKS_MAGIC = b"CHLO"
CHUNKS_VERSION = 1


@dataclass(frozen=True)
class WeightConfig:
    """Pooling weights: ``a`` for keyphrase tokens, ``b`` for the rest."""

    a: float = 0.8
    b: float = 0.1

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ConfigError(f"weights must satisfy a >= b > 0, got a={self.a}, b={self.b}")

    @property
    def uniform(self) -> bool:
        return self.a == self.b


@dataclass
class ChunkSequence:
    """m x n grid of token ids with keyphrase flags and a pad mask."""

    doc_id: str
    chunk_size: int
    token_ids: np.ndarray        # (m, n) int64, PAD-filled
    keyphrase_flags: np.ndarray  # (m, n) bool, True => keyphrase token
    pad_mask: np.ndarray         # (m, n) bool, True => real token

    @property
    def n_chunks(self) -> int:
        return self.token_ids.shape[0]

    @property
    def n_real_tokens(self) -> int:
        return int(self.pad_mask.sum())

    @property
    def chunk_valid(self) -> np.ndarray:
        """(m,) bool, False for all-PAD chunks."""
        return self.pad_mask.any(axis=1)

    def flatten_real_ids(self) -> np.ndarray:
        """Real token ids in original document order."""
        return self.token_ids[self.pad_mask]


@dataclass
class ChunkEmbeddingMatrix:
    doc_id: str
    matrix: np.ndarray       # (m, d) float64
    chunk_valid: np.ndarray  # (m,) bool


def chunk_document(doc: Document, n: int) -> ChunkSequence:
    """Split a document into ceil(l_D / n) PAD-padded chunks, flags unset."""
    if n < 1:
        raise ConfigError(f"chunk size must be >= 1, got {n}")
    if doc.token_ids is None:
        raise DataError(f"document {doc.id!r} has no token ids; encode it first")
    l_d = len(doc.token_ids)
    m = -(-l_d // n)
    ids = np.full((m, n), PAD_ID, dtype=np.int64)
    pad_mask = np.zeros((m, n), dtype=bool)
    flat = np.asarray(doc.token_ids, dtype=np.int64)
    ids.reshape(-1)[:l_d] = flat
    pad_mask.reshape(-1)[:l_d] = True
    flags = np.zeros((m, n), dtype=bool)
    return ChunkSequence(doc.id, n, ids, flags, pad_mask)


def mark_keyphrase_tokens(
    cs: ChunkSequence,
    doc: Document,
    keyphrases: Sequence[RankedKeyphrase],
) -> ChunkSequence:
    """Set flags for every token inside any selected keyphrase span.

    Spans are inclusive document-token coordinates recorded at candidate
    extraction; overlapping spans union. Out-of-range spans raise,
    naming the phrase.
    """
    l_d = len(doc.tokens)
    flat = np.zeros(cs.token_ids.size, dtype=bool)
    for ranked in keyphrases:
        phrase = ranked.phrase
        for start, end in phrase.all_occurrences:
            if not (0 <= start <= end < l_d):
                raise DataError(
                    f"keyphrase {phrase.surface!r} span ({start}, {end}) out of "
                    f"range for document {doc.id!r} of length {l_d}")
            flat[start:end + 1] = True
    flags = flat.reshape(cs.token_ids.shape) & cs.pad_mask
    return ChunkSequence(cs.doc_id, cs.chunk_size, cs.token_ids, flags, cs.pad_mask)


def token_weights(flags: np.ndarray, pad_mask: np.ndarray, weights: WeightConfig) -> np.ndarray:
    """Per-position pooling weights: a / b on real tokens, 0 on PAD."""
    w = np.where(flags, weights.a, weights.b)
    return np.where(pad_mask, w, 0.0)


def chunk_embedding(
    token_embeddings: np.ndarray,
    flags: np.ndarray,
    pad_mask: np.ndarray,
    weights: WeightConfig,
) -> tuple[np.ndarray, bool]:
    """Weighted average of one chunk's real-token embeddings.

    Returns (d-vector, valid). An all-PAD chunk gives a zero vector and
    valid=False.
    """
    token_embeddings = np.asarray(token_embeddings, dtype=np.float64)
    if token_embeddings.ndim != 2 or token_embeddings.shape[0] != flags.shape[0]:
        raise DataError("token_embeddings must be (n, d) aligned with flags")
    w = token_weights(np.asarray(flags, bool), np.asarray(pad_mask, bool), weights)
    total = w.sum()
    if total == 0.0:
        return np.zeros(token_embeddings.shape[1], dtype=np.float64), False
    return (w[:, None] * token_embeddings).sum(axis=0) / total, True


def embed_document(
    cs: ChunkSequence,
    embedding_table: np.ndarray,
    weights: WeightConfig,
) -> ChunkEmbeddingMatrix:
    """Stack chunk embeddings for every chunk of a document."""
    table = np.asarray(embedding_table, dtype=np.float64)
    if cs.token_ids.size and int(cs.token_ids.max()) >= table.shape[0]:
        raise DataError(
            f"token id {int(cs.token_ids.max())} outside embedding table of "
            f"{table.shape[0]} rows")
    m = cs.n_chunks
    d = table.shape[1]
    matrix = np.zeros((m, d), dtype=np.float64)
    valid = np.zeros(m, dtype=bool)
    for i in range(m):
        matrix[i], valid[i] = chunk_embedding(
            table[cs.token_ids[i]], cs.keyphrase_flags[i], cs.pad_mask[i], weights)
    return ChunkEmbeddingMatrix(cs.doc_id, matrix, valid)


def unchunk(cs: ChunkSequence) -> np.ndarray:
    """Drop PAD and restore the original token id sequence."""
    return cs.flatten_real_ids()


# ---------------------------------------------------------------------------
# chunks.bin serialization


def write_chunk_record(
    fh: BinaryIO,
    cs: ChunkSequence,
    emb: ChunkEmbeddingMatrix,
) -> None:
    m, n = cs.token_ids.shape
    d = emb.matrix.shape[1]
    doc_id = cs.doc_id.encode("utf-8")
    fh.write(CHUNKS_MAGIC)
    fh.write(struct.pack("<IIIII", CHUNKS_VERSION, m, n, d, len(doc_id)))
    fh.write(doc_id)
    fh.write(np.ascontiguousarray(emb.matrix, dtype="<f4").tobytes())
    fh.write(np.packbits(cs.keyphrase_flags.reshape(-1)).tobytes())
    fh.write(np.packbits(cs.pad_mask.reshape(-1)).tobytes())
    fh.write(np.packbits(emb.chunk_valid).tobytes())


@dataclass
class ChunkRecord:
    doc_id: str
    chunk_size: int
    matrix: np.ndarray           # (m, d) float32
    keyphrase_flags: np.ndarray  # (m, n) bool
    pad_mask: np.ndarray         # (m, n) bool
    chunk_valid: np.ndarray      # (m,) bool


def read_chunk_records(fh: BinaryIO) -> list[ChunkRecord]:
    records = []
    while True:
        magic = fh.read(4)
        if not magic:
            return records
        if magic != CHUNKS_MAGIC:
            raise DataError(f"bad chunks.bin magic {magic!r}")
        version, m, n, d, id_len = struct.unpack("<IIIII", _read_exact(fh, 20))
        if version != CHUNKS_VERSION:
            raise DataError(f"unsupported chunks.bin version {version}")
        doc_id = _read_exact(fh, id_len).decode("utf-8")
        matrix = np.frombuffer(_read_exact(fh, 4 * m * d), dtype="<f4").reshape(m, d)
        grid_bytes = (m * n + 7) // 8
        flags = _unpack_bits(_read_exact(fh, grid_bytes), m * n).reshape(m, n)
        pad = _unpack_bits(_read_exact(fh, grid_bytes), m * n).reshape(m, n)
        valid = _unpack_bits(_read_exact(fh, (m + 7) // 8), m)
        records.append(ChunkRecord(doc_id, n, matrix.copy(), flags, pad, valid))


def _read_exact(fh: BinaryIO, size: int) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise DataError("truncated chunks.bin file")
    return data


def _unpack_bits(data: bytes, count: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=count).astype(bool)
