"""Chunk-attention encoder with a document head and a token decoder.

The encoder runs pre-norm multi-head self-attention over chunk vectors
with a learned CLS chunk prepended and learned absolute chunk-position
embeddings; invalid (all-PAD) chunks are masked to exactly zero attention
weight. The document head is a linear map of the CLS row.

The token decoder re-embeds the full token sequence, adds positional
embeddings that repeat per window, and interleaves window-local
self-attention with cross-attention to all encoder chunk states (the
global memory), then a per-token classification head. Windows are
processed independently; the chunk memory carries document-wide context
between them.

Everything is float64 and seeded, so a forward pass in eval mode is
bit-deterministic and states serialize reproducibly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..chunks import ChunkSequence, WeightConfig, token_weights
from ..corpus import PAD_ID
from ..errors import ConfigError, DataError
from . import autodiff as ad
from .autodiff import Tensor

TaskMode = Literal["doc-single", "doc-multi", "token"]

MASK_BIAS = -1e30  # additive attention bias; exp() underflows to exactly 0
INIT_STD = 0.02


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    num_classes: int
    task_mode: TaskMode
    d_model: int = 64
    n_heads: int = 4
    n_layers_encoder: int = 2
    n_layers_decoder: int = 2
    ffn_dim: int = 256
    max_chunks: int = 512
    dropout_rate: float = 0.1
    window_size: int = 128

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.max_chunks < 1:
            raise ConfigError(f"max_chunks must be >= 1, got {self.max_chunks}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.task_mode not in ("doc-single", "doc-multi", "token"):
            raise ConfigError(f"unknown task_mode {self.task_mode!r}")
        if self.vocab_size < 2 or self.num_classes < 1:
            raise ConfigError("vocab_size must be >= 2 and num_classes >= 1")
        if self.window_size < 1:
            raise ConfigError(f"window_size must be >= 1, got {self.window_size}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads


@dataclass
class ModelState:
    """All trainable parameters plus optimizer moments and step counter."""

    config: ModelConfig
    params: dict[str, np.ndarray]
    moment1: dict[str, np.ndarray] = field(default_factory=dict)
    moment2: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        if not self.moment1:
            self.moment1 = {k: np.zeros_like(v) for k, v in self.params.items()}
        if not self.moment2:
            self.moment2 = {k: np.zeros_like(v) for k, v in self.params.items()}

    def check_finite(self) -> None:
        for name, value in self.params.items():
            ad.check_finite(name, value)

    def copy(self) -> "ModelState":
        return ModelState(
            self.config,
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.moment1.items()},
            {k: v.copy() for k, v in self.moment2.items()},
            self.step,
        )


def _attention_params(shapes: dict[str, tuple], prefix: str, d: int) -> None:
    for proj in ("q", "k", "v", "o"):
        shapes[f"{prefix}.w{proj}"] = (d, d)
        shapes[f"{prefix}.b{proj}"] = (d,)


def _block_params(shapes: dict[str, tuple], prefix: str, d: int, f: int) -> None:
    _attention_params(shapes, f"{prefix}.attn", d)
    shapes[f"{prefix}.attn_ln.g"] = (d,)
    shapes[f"{prefix}.attn_ln.b"] = (d,)
    shapes[f"{prefix}.ffn.w1"] = (d, f)
    shapes[f"{prefix}.ffn.b1"] = (f,)
    shapes[f"{prefix}.ffn.w2"] = (f, d)
    shapes[f"{prefix}.ffn.b2"] = (d,)
    shapes[f"{prefix}.ffn_ln.g"] = (d,)
    shapes[f"{prefix}.ffn_ln.b"] = (d,)


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple]:
    d, f = cfg.d_model, cfg.ffn_dim
    shapes: dict[str, tuple] = {
        "embed.token": (cfg.vocab_size, d),
        "embed.chunk_pos": (cfg.max_chunks + 1, d),  # row 0 is the CLS slot
        "embed.cls": (d,),
    }
    for i in range(cfg.n_layers_encoder):
        _block_params(shapes, f"enc.{i}", d, f)
    shapes["enc.final_ln.g"] = (d,)
    shapes["enc.final_ln.b"] = (d,)
    if cfg.task_mode == "token":
        shapes["dec.token_pos"] = (cfg.window_size, d)
        for i in range(cfg.n_layers_decoder):
            _attention_params(shapes, f"dec.{i}.self_attn", d)
            shapes[f"dec.{i}.self_ln.g"] = (d,)
            shapes[f"dec.{i}.self_ln.b"] = (d,)
            _attention_params(shapes, f"dec.{i}.cross_attn", d)
            shapes[f"dec.{i}.cross_ln.g"] = (d,)
            shapes[f"dec.{i}.cross_ln.b"] = (d,)
            shapes[f"dec.{i}.ffn.w1"] = (d, f)
            shapes[f"dec.{i}.ffn.b1"] = (f,)
            shapes[f"dec.{i}.ffn.w2"] = (f, d)
            shapes[f"dec.{i}.ffn.b2"] = (d,)
            shapes[f"dec.{i}.ffn_ln.g"] = (d,)
            shapes[f"dec.{i}.ffn_ln.b"] = (d,)
        shapes["dec.final_ln.g"] = (d,)
        shapes["dec.final_ln.b"] = (d,)
        shapes["head.token.w"] = (d, cfg.num_classes)
        shapes["head.token.b"] = (cfg.num_classes,)
    else:
        shapes["head.doc.w"] = (d, cfg.num_classes)
        shapes["head.doc.b"] = (cfg.num_classes,)
    return shapes


def init_state(cfg: ModelConfig, rng: np.random.Generator) -> ModelState:
    """Seeded initialization: N(0, 0.02) weights, unit LN gains, zero biases."""
    params: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(cfg).items():
        if name.endswith("_ln.g"):
            params[name] = np.ones(shape)
        elif name.endswith((".b", "_ln.b", ".b1", ".b2", ".bq", ".bk", ".bv", ".bo")):
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.normal(0.0, INIT_STD, size=shape)
    return ModelState(cfg, params)


# ---------------------------------------------------------------------------
# tensor-path forward


class Forward:
    """One forward construction over a batch; owns dropout RNG and params."""

    def __init__(self, state: ModelState, train: bool, rng: np.random.Generator | None = None):
        self.cfg = state.config
        self.train = train and state.config.dropout_rate > 0.0
        self.rng = rng
        if self.train and rng is None:
            raise ConfigError("training forward with dropout requires an RNG")
        self.p = {name: ad.param(value) for name, value in state.params.items()}

    def _dropout(self, x: Tensor) -> Tensor:
        if self.train:
            return ad.dropout(x, self.cfg.dropout_rate, self.rng)
        return x

    def _ln(self, x: Tensor, prefix: str) -> Tensor:
        return ad.layer_norm(x, self.p[f"{prefix}.g"], self.p[f"{prefix}.b"])

    def _heads_split(self, x: Tensor) -> Tensor:
        h, dh = self.cfg.n_heads, self.cfg.head_dim
        shape = x.data.shape  # (..., T, d)
        x = ad.reshape(x, shape[:-1] + (h, dh))
        ndim = x.data.ndim
        axes = tuple(range(ndim - 3)) + (ndim - 2, ndim - 3, ndim - 1)
        return ad.transpose(x, axes)  # (..., h, T, dh)

    def _heads_merge(self, x: Tensor) -> Tensor:
        ndim = x.data.ndim
        axes = tuple(range(ndim - 3)) + (ndim - 2, ndim - 3, ndim - 1)
        x = ad.transpose(x, axes)
        shape = x.data.shape
        return ad.reshape(x, shape[:-2] + (self.cfg.d_model,))

    def _attention(self, prefix: str, queries: Tensor, keys_values: Tensor,
                   key_mask_bias: np.ndarray) -> Tensor:
        """Multi-head attention; key_mask_bias broadcasts over score shape."""
        q = ad.add(ad.matmul(queries, self.p[f"{prefix}.wq"]), self.p[f"{prefix}.bq"])
        k = ad.add(ad.matmul(keys_values, self.p[f"{prefix}.wk"]), self.p[f"{prefix}.bk"])
        v = ad.add(ad.matmul(keys_values, self.p[f"{prefix}.wv"]), self.p[f"{prefix}.bv"])
        q = self._heads_split(q)
        k = self._heads_split(k)
        v = self._heads_split(v)
        scores = ad.scale(ad.matmul(q, ad.transpose(k, _swap_last(k.data.ndim))),
                          1.0 / np.sqrt(self.cfg.head_dim))
        scores = ad.add(scores, ad.const(key_mask_bias))
        attn = ad.softmax(scores)
        attn = self._dropout(attn)
        merged = self._heads_merge(ad.matmul(attn, v))
        out = ad.add(ad.matmul(merged, self.p[f"{prefix}.wo"]), self.p[f"{prefix}.bo"])
        return self._dropout(out)

    def _ffn(self, prefix: str, x: Tensor) -> Tensor:
        hidden = ad.gelu(ad.add(ad.matmul(x, self.p[f"{prefix}.w1"]), self.p[f"{prefix}.b1"]))
        out = ad.add(ad.matmul(hidden, self.p[f"{prefix}.w2"]), self.p[f"{prefix}.b2"])
        return self._dropout(out)

    # -- chunk pooling + encoder

    def pool_chunks(self, token_grid: np.ndarray, norm_weights: np.ndarray) -> Tensor:
        """Weighted chunk vectors from (B, m, n) ids and normalized weights."""
        emb = ad.embedding(self.p["embed.token"], token_grid)  # (B, m, n, d)
        weighted = ad.mul(emb, ad.const(norm_weights[..., None]))
        return ad.reduce_sum(weighted, axis=2)  # (B, m, d)

    def encode(self, chunk_vecs: Tensor, chunk_valid: np.ndarray) -> Tensor:
        """(B, m, d) chunk vectors -> (B, m+1, d) contextual states."""
        cfg = self.cfg
        batch, m, d = chunk_vecs.data.shape
        if m > cfg.max_chunks:
            raise ConfigError(
                f"{m} chunks exceed max_chunks={cfg.max_chunks}; increase the "
                f"chunk size n to shorten the chunk sequence")
        cls_row = ad.add(ad.const(np.zeros((batch, 1, d))),
                         ad.reshape(self.p["embed.cls"], (1, 1, d)))
        x = ad.concat([cls_row, chunk_vecs], axis=1)
        positions = ad.getitem(self.p["embed.chunk_pos"], slice(0, m + 1))
        x = ad.add(x, ad.reshape(positions, (1, m + 1, d)))
        x = self._dropout(x)
        key_ok = np.concatenate(
            [np.ones((batch, 1), dtype=bool), chunk_valid.astype(bool)], axis=1)
        mask_bias = np.where(key_ok, 0.0, MASK_BIAS)[:, None, None, :]  # (B,1,1,m+1)
        for i in range(cfg.n_layers_encoder):
            normed = self._ln(x, f"enc.{i}.attn_ln")
            x = ad.add(x, self._attention(f"enc.{i}.attn", normed, normed, mask_bias))
            x = ad.add(x, self._ffn(f"enc.{i}.ffn", self._ln(x, f"enc.{i}.ffn_ln")))
        return self._ln(x, "enc.final_ln")

    def doc_logits(self, encoded: Tensor) -> Tensor:
        cls = ad.getitem(encoded, (slice(None), 0))  # (B, d)
        return ad.add(ad.matmul(cls, self.p["head.doc.w"]), self.p["head.doc.b"])

    # -- token decoder

    def decode_tokens(self, token_ids: np.ndarray, token_real: np.ndarray,
                      memory: Tensor, memory_valid: np.ndarray) -> Tensor:
        """Per-token logits (B, L, K) from ids (B, L) and encoder memory.

        Self-attention is local to consecutive windows of width
        ``window_size``; cross-attention sees all memory rows (CLS plus
        valid chunks).
        """
        cfg = self.cfg
        batch, length = token_ids.shape
        w = cfg.window_size
        n_windows = max(1, -(-length // w))
        padded_len = n_windows * w
        ids = np.full((batch, padded_len), PAD_ID, dtype=np.int64)
        ids[:, :length] = token_ids
        real = np.zeros((batch, padded_len), dtype=bool)
        real[:, :length] = token_real

        x = ad.embedding(self.p["embed.token"], ids)  # (B, Lp, d)
        pos = ad.reshape(self.p["dec.token_pos"], (1, 1, w, cfg.d_model))
        x = ad.reshape(x, (batch, n_windows, w, cfg.d_model))
        x = ad.add(x, pos)
        x = self._dropout(x)

        self_bias = np.where(real, 0.0, MASK_BIAS).reshape(
            batch, n_windows, 1, 1, w)  # key mask within each window
        mem_ok = np.concatenate(
            [np.ones((batch, 1), dtype=bool), memory_valid.astype(bool)], axis=1)
        mem_bias = np.where(mem_ok, 0.0, MASK_BIAS)[:, None, None, :]  # (B,1,1,m+1)

        for i in range(cfg.n_layers_decoder):
            normed = self._ln(x, f"dec.{i}.self_ln")
            x = ad.add(x, self._attention(f"dec.{i}.self_attn", normed, normed, self_bias))
            flat = ad.reshape(x, (batch, padded_len, cfg.d_model))
            normed_flat = self._ln(flat, f"dec.{i}.cross_ln")
            cross = self._attention(f"dec.{i}.cross_attn", normed_flat, memory, mem_bias)
            x = ad.reshape(ad.add(flat, cross), (batch, n_windows, w, cfg.d_model))
            x = ad.add(x, self._ffn(f"dec.{i}.ffn", self._ln(x, f"dec.{i}.ffn_ln")))
        x = ad.reshape(x, (batch, padded_len, cfg.d_model))
        x = self._ln(x, "dec.final_ln")
        logits = ad.add(ad.matmul(x, self.p["head.token.w"]), self.p["head.token.b"])
        return ad.getitem(logits, (slice(None), slice(0, length)))


def _swap_last(ndim: int) -> tuple[int, ...]:
    axes = list(range(ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return tuple(axes)


# ---------------------------------------------------------------------------
# batches and losses


@dataclass
class Batch:
    """Model-ready arrays for a list of documents (padded to batch max)."""

    token_grid: np.ndarray | None = None      # (B, m, n) ids for doc tasks
    norm_weights: np.ndarray | None = None    # (B, m, n) normalized pool weights
    chunk_valid: np.ndarray | None = None     # (B, m) bool
    token_ids: np.ndarray | None = None       # (B, L) ids for token tasks
    token_real: np.ndarray | None = None      # (B, L) bool
    doc_targets: np.ndarray | None = None     # (B,) int or (B, K) multi-hot
    token_targets: np.ndarray | None = None   # (B, L) int

    @property
    def size(self) -> int:
        grid = self.token_grid if self.token_grid is not None else self.token_ids
        return grid.shape[0]


def make_batch(
    sequences: list[ChunkSequence],
    weights: WeightConfig,
    doc_targets: np.ndarray | None = None,
    token_docs: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> Batch:
    """Pad chunk sequences (and token tasks' id/tag arrays) to a batch.

    ``token_docs`` pairs are (token_ids, token_tags) per document; pass
    None for document-level tasks.
    """
    batch_size = len(sequences)
    m_max = max(1, max(cs.n_chunks for cs in sequences))
    n = sequences[0].chunk_size
    grid = np.full((batch_size, m_max, n), PAD_ID, dtype=np.int64)
    norm_w = np.zeros((batch_size, m_max, n))
    valid = np.zeros((batch_size, m_max), dtype=bool)
    for b, cs in enumerate(sequences):
        m = cs.n_chunks
        if m == 0:
            continue
        grid[b, :m] = cs.token_ids
        w = token_weights(cs.keyphrase_flags, cs.pad_mask, weights)
        totals = w.sum(axis=1, keepdims=True)
        np.divide(w, totals, out=w, where=totals > 0)
        norm_w[b, :m] = w
        valid[b, :m] = cs.chunk_valid
    batch = Batch(token_grid=grid, norm_weights=norm_w, chunk_valid=valid,
                  doc_targets=doc_targets)
    if token_docs is not None:
        l_max = max(1, max(len(ids) for ids, _ in token_docs))
        ids = np.full((batch_size, l_max), PAD_ID, dtype=np.int64)
        real = np.zeros((batch_size, l_max), dtype=bool)
        tags = np.zeros((batch_size, l_max), dtype=np.int64)
        for b, (doc_ids, doc_tags) in enumerate(token_docs):
            ids[b, :len(doc_ids)] = doc_ids
            real[b, :len(doc_ids)] = True
            tags[b, :len(doc_tags)] = doc_tags
        batch.token_ids = ids
        batch.token_real = real
        batch.token_targets = tags
    return batch


def forward_logits(fwd: Forward, batch: Batch) -> Tensor:
    """Logits for the batch under the forward's task mode."""
    chunk_vecs = fwd.pool_chunks(batch.token_grid, batch.norm_weights)
    encoded = fwd.encode(chunk_vecs, batch.chunk_valid)
    if fwd.cfg.task_mode == "token":
        return fwd.decode_tokens(batch.token_ids, batch.token_real,
                                 encoded, batch.chunk_valid)
    return fwd.doc_logits(encoded)


def loss_from_logits(logits: Tensor, batch: Batch, task_mode: TaskMode) -> Tensor:
    """Scalar training loss: mean CE (doc/token) or mean sigmoid BCE."""
    if task_mode == "doc-single":
        n = logits.data.shape[0]
        weights = np.full(n, 1.0 / n)
        return ad.softmax_cross_entropy(logits, batch.doc_targets, weights)
    if task_mode == "doc-multi":
        return ad.sigmoid_bce(logits, batch.doc_targets)
    if task_mode == "token":
        flat_logits = ad.reshape(logits, (-1, logits.data.shape[-1]))
        mask = batch.token_real.reshape(-1).astype(np.float64)
        total = mask.sum()
        if total == 0:
            raise DataError("token batch contains no real tokens")
        return ad.softmax_cross_entropy(flat_logits, batch.token_targets.reshape(-1),
                                        mask / total)
    raise ConfigError(f"unknown task mode {task_mode!r}")


def batch_loss(state: ModelState, batch: Batch, train: bool = False,
               rng: np.random.Generator | None = None) -> tuple[Tensor, Tensor, Forward]:
    """(loss, logits, forward); run loss.backward() then collect_gradients."""
    fwd = Forward(state, train, rng)
    logits = forward_logits(fwd, batch)
    loss = loss_from_logits(logits, batch, state.config.task_mode)
    return loss, logits, fwd


def collect_gradients(fwd: Forward) -> dict[str, np.ndarray]:
    grads = {}
    for name, tensor in fwd.p.items():
        grad = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        ad.check_finite(f"grad:{name}", grad)
        grads[name] = grad
    return grads


# ---------------------------------------------------------------------------
# single-document convenience wrappers (eval mode, numpy in / numpy out)


def forward_chunk_encoder(
    chunk_embeddings: np.ndarray,
    chunk_valid: np.ndarray,
    state: ModelState,
    train_flag: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """(m, d) chunk embeddings -> (m+1, d) contextual states, CLS first."""
    fwd = Forward(state, train_flag, rng)
    vecs = ad.const(np.asarray(chunk_embeddings, dtype=np.float64)[None])
    out = fwd.encode(vecs, np.asarray(chunk_valid, dtype=bool)[None])
    return out.data[0]


def forward_doc_head(encoder_output: np.ndarray, state: ModelState) -> np.ndarray:
    """Class scores from the CLS row of a single document's encoding."""
    if state.config.task_mode not in ("doc-single", "doc-multi"):
        raise ConfigError(f"document head not available in {state.config.task_mode} mode")
    cls = np.asarray(encoder_output, dtype=np.float64)[0]
    return cls @ state.params["head.doc.w"] + state.params["head.doc.b"]


def forward_token_decoder(
    token_ids: np.ndarray,
    encoder_states: np.ndarray,
    chunk_valid: np.ndarray,
    state: ModelState,
    train_flag: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """(l_D,) token ids + (m+1, d) chunk states -> (l_D, K) label scores."""
    if state.config.task_mode != "token":
        raise ConfigError(f"token decoder not available in {state.config.task_mode} mode")
    token_ids = np.asarray(token_ids, dtype=np.int64)
    if token_ids.size == 0:
        return np.zeros((0, state.config.num_classes))
    fwd = Forward(state, train_flag, rng)
    memory = ad.const(np.asarray(encoder_states, dtype=np.float64)[None])
    out = fwd.decode_tokens(token_ids[None], np.ones((1, token_ids.size), dtype=bool),
                            memory, np.asarray(chunk_valid, dtype=bool)[None])
    return out.data[0]
