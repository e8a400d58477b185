"""End-to-end orchestration: extraction -> chunking -> training -> metrics.

The stages before training are pure per-document functions; training is
a sequential loop whose shuffling, initialization and dropout all derive
from one seed, so a fixed seed reproduces per-epoch losses and the final
report bitwise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .candidates import extract_candidates
from .chunks import ChunkSequence, chunk_document, mark_keyphrase_tokens
from .config import ExperimentConfig
from .corpus import (
    Document,
    LabelSet,
    Vocabulary,
    bucket_filter,
    build_vocab,
    load_dataset,
)
from .errors import ChuloError, ConfigError, DataError
from .metrics import (
    BucketMetric,
    MetricsReport,
    accuracy,
    config_fingerprint,
    micro_f1,
)
from .ngram import BigramScorer
from .nn import (
    Batch,
    ModelConfig,
    ModelState,
    adamw_step,
    batch_loss,
    collect_gradients,
    init_state,
    make_batch,
    save_checkpoint,
)
from .scorer import ExternalScorer, LogProbScorer
from .skp import (
    CorpusStats,
    RankedKeyphrase,
    SkpConfig,
    rank_keyphrases,
    rank_tfidf_baseline,
    select_top_n,
)
from .tagging import Tagger, pos_tag

SCORER_ENV_VAR = "CHULO_SCORER_CMD"


def scorer_from_env(corpus_docs: Sequence[Document],
                    max_segment_tokens: int | None = None) -> LogProbScorer:
    """External bridge when CHULO_SCORER_CMD is set, else the built-in
    n-gram scorer fitted on the given corpus."""
    command = os.environ.get(SCORER_ENV_VAR)
    if command:
        return ExternalScorer(command, max_segment_tokens=max_segment_tokens)
    scorer = BigramScorer(max_segment_tokens=max_segment_tokens)
    scorer.fit([doc.tokens for doc in corpus_docs])
    return scorer


@dataclass
class KeyphrasePipeline:
    """Shared extraction + chunking stages, fitted on a training corpus."""

    skp: SkpConfig = field(default_factory=SkpConfig)
    method: str = "skp"
    candidate_cap: int = 256
    tagger: Tagger | None = None
    scorer: LogProbScorer | None = None
    stats: CorpusStats | None = None

    def fit(self, docs: Sequence[Document]) -> "KeyphrasePipeline":
        if self.scorer is None:
            self.scorer = scorer_from_env(docs)
        if self.stats is None:
            self.stats = CorpusStats.from_documents(docs)
        return self

    def keyphrases(self, doc: Document) -> list[RankedKeyphrase]:
        """Selected top-n keyphrases of one document under the configured
        ranking method; the average arm selects none."""
        if self.method == "average":
            return []
        if len(doc.tokens) == 0:
            return []
        candidates = extract_candidates(pos_tag(doc, self.tagger), self.candidate_cap)
        if self.method == "skp":
            if self.scorer is None:
                raise ConfigError("pipeline not fitted: scorer missing")
            ranked = rank_keyphrases(doc, candidates, self.skp, self.scorer)
        elif self.method == "tfidf":
            if self.stats is None:
                raise ConfigError("pipeline not fitted: corpus stats missing")
            ranked = rank_tfidf_baseline(doc, candidates, self.stats)
        else:
            raise ConfigError(f"unknown ranking method {self.method!r}")
        return select_top_n(ranked, self.skp.top_n)

    def chunk(self, doc: Document, n: int) -> ChunkSequence:
        cs = chunk_document(doc, n)
        keys = self.keyphrases(doc)
        if keys:
            cs = mark_keyphrase_tokens(cs, doc, keys)
        return cs

    def close(self) -> None:
        if self.scorer is not None:
            self.scorer.close()


# ---------------------------------------------------------------------------
# targets and prediction


def doc_targets(docs: Sequence[Document], num_classes: int, schema: str) -> np.ndarray:
    if schema == "doc-single":
        # unlabeled documents (prediction time) get a dummy class 0
        return np.array([0 if d.doc_label is None else d.doc_label
                         for d in docs], dtype=np.int64)
    multi = np.zeros((len(docs), num_classes))
    for row, doc in enumerate(docs):
        for idx in doc.doc_labels or ():
            multi[row, idx] = 1.0
    return multi


def predict_batch(state: ModelState, batch: Batch):
    """Per-document predictions in eval mode (forward only)."""
    from .nn.model import Forward, forward_logits

    logits = forward_logits(Forward(state, train=False), batch)
    mode = state.config.task_mode
    if mode == "doc-single":
        return list(np.argmax(logits.data, axis=-1))
    if mode == "doc-multi":
        return [frozenset(np.flatnonzero(row > 0.0)) for row in logits.data]
    out = []
    labels = np.argmax(logits.data, axis=-1)
    for row in range(batch.size):
        length = int(batch.token_real[row].sum())
        out.append(list(labels[row, :length]))
    return out


@dataclass
class PreparedDataset:
    docs: list[Document]
    sequences: list[ChunkSequence]
    lengths: list[int]

    def __len__(self) -> int:
        return len(self.docs)


def prepare_dataset(
    docs: Sequence[Document],
    vocab: Vocabulary,
    pipeline: KeyphrasePipeline,
    chunk_size: int,
) -> PreparedDataset:
    encoded = [vocab.encode(doc) for doc in docs]
    sequences = [pipeline.chunk(doc, chunk_size) for doc in encoded]
    return PreparedDataset(encoded, sequences, [len(d) for d in docs])


def _batches(indices: np.ndarray, batch_size: int):
    for start in range(0, len(indices), batch_size):
        yield indices[start:start + batch_size]


def _make_model_batch(data: PreparedDataset, idx: np.ndarray, cfg: ExperimentConfig,
                      num_classes: int) -> Batch:
    seqs = [data.sequences[i] for i in idx]
    docs = [data.docs[i] for i in idx]
    if cfg.schema == "token":
        token_docs = [(np.asarray(d.token_ids, dtype=np.int64),
                       np.asarray(d.token_tags, dtype=np.int64)) for d in docs]
        batch = make_batch(seqs, cfg.weights, token_docs=token_docs)
    else:
        targets = doc_targets(docs, num_classes, cfg.schema)
        batch = make_batch(seqs, cfg.weights, doc_targets=targets)
    return batch


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    state: ModelState
    best_state: ModelState
    best_epoch: int
    best_metric: float
    history: list[dict]
    vocab: Vocabulary
    label_set: LabelSet
    model_config: ModelConfig
    fingerprint: str


def fit_model(
    train_data: PreparedDataset,
    dev_data: PreparedDataset,
    label_set: LabelSet,
    vocab: Vocabulary,
    cfg: ExperimentConfig,
    progress: bool = False,
) -> TrainResult:
    """Training loop with patience-based early stopping.

    Tracks the dev metric each epoch; stops after ``patience`` epochs
    without improvement or at max_epochs, and keeps the state from the
    best dev epoch.
    """
    tcfg = cfg.train
    num_classes = len(label_set)
    model_cfg = ModelConfig(
        vocab_size=len(vocab),
        num_classes=num_classes,
        task_mode=cfg.task_mode,
        d_model=cfg.d_model,
        n_heads=cfg.n_heads,
        n_layers_encoder=cfg.n_layers_encoder,
        n_layers_decoder=cfg.n_layers_decoder,
        ffn_dim=cfg.ffn_dim,
        max_chunks=cfg.max_chunks,
        dropout_rate=cfg.dropout_rate,
        window_size=cfg.window_size,
    )
    seed_seq = np.random.SeedSequence(tcfg.seed)
    init_rng, shuffle_rng, dropout_rng = (
        np.random.default_rng(s) for s in seed_seq.spawn(3))
    state = init_state(model_cfg, init_rng)

    n_train = len(train_data)
    steps_per_epoch = -(-n_train // tcfg.batch_size)
    total_steps = steps_per_epoch * tcfg.max_epochs
    best_metric = -np.inf
    best_state = state.copy()
    best_epoch = 0
    epochs_without_improvement = 0
    history: list[dict] = []
    global_step = 0

    for epoch in range(1, tcfg.max_epochs + 1):
        order = shuffle_rng.permutation(n_train)
        epoch_loss = 0.0
        for idx in _batches(order, tcfg.batch_size):
            batch = _make_model_batch(train_data, idx, cfg, num_classes)
            loss, _, fwd = batch_loss(state, batch, train=True, rng=dropout_rng)
            loss.backward()
            grads = collect_gradients(fwd)
            adamw_step(state, grads, tcfg, global_step, total_steps)
            global_step += 1
            epoch_loss += float(loss.data) * batch.size
        epoch_loss /= n_train
        dev_metric = evaluate_prepared(state, dev_data, label_set, cfg).overall
        history.append({"epoch": epoch, "train_loss": epoch_loss,
                        "dev_metric": dev_metric})
        if progress:
            print(f"epoch {epoch:>3}  loss {epoch_loss:.6f}  dev {dev_metric:.4f}")
        if dev_metric > best_metric:
            best_metric = dev_metric
            best_state = state.copy()
            best_epoch = epoch
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= tcfg.patience:
                break
    state.check_finite()
    fingerprint = config_fingerprint(cfg.to_payload())
    return TrainResult(state, best_state, best_epoch, best_metric, history,
                       vocab, label_set, model_cfg, fingerprint)


# ---------------------------------------------------------------------------
# evaluation


def _metric_name(schema: str) -> str:
    return "accuracy" if schema == "doc-single" else "micro_f1"


def _gold_and_predictions(state: ModelState, data: PreparedDataset,
                          label_set: LabelSet, cfg: ExperimentConfig):
    num_classes = len(label_set)
    predictions: list = []
    for idx in _batches(np.arange(len(data)), cfg.train.batch_size):
        batch = _make_model_batch(data, idx, cfg, num_classes)
        predictions.extend(predict_batch(state, batch))
    if cfg.schema == "doc-single":
        golds: list = [d.doc_label for d in data.docs]
    elif cfg.schema == "doc-multi":
        golds = [frozenset(d.doc_labels or ()) for d in data.docs]
    else:
        golds = [list(d.token_tags) for d in data.docs]
    return golds, predictions


def _subset_metric(golds, predictions, keep: list[int], cfg: ExperimentConfig,
                   label_set: LabelSet) -> float | None:
    if not keep:
        return None
    sub_gold = [golds[i] for i in keep]
    sub_pred = [predictions[i] for i in keep]
    if cfg.schema == "doc-single":
        return accuracy(sub_pred, sub_gold)
    if cfg.schema == "doc-multi":
        return micro_f1(sub_pred, sub_gold)
    flat_gold = [tag for doc in sub_gold for tag in doc]
    flat_pred = [tag for doc in sub_pred for tag in doc]
    exclude = label_set.outside_index if cfg.exclude_outside_label else None
    return micro_f1(flat_pred, flat_gold, exclude_label=exclude)


def evaluate_prepared(
    state: ModelState,
    data: PreparedDataset,
    label_set: LabelSet,
    cfg: ExperimentConfig,
    buckets: Sequence[int] = (),
) -> MetricsReport:
    """Metric over a prepared dataset, plus per-bucket breakdown."""
    golds, predictions = _gold_and_predictions(state, data, label_set, cfg)
    everything = list(range(len(data)))
    overall = _subset_metric(golds, predictions, everything, cfg, label_set)
    report = MetricsReport(
        metric_name=_metric_name(cfg.schema),
        overall=overall if overall is not None else 0.0,
        seed=cfg.train.seed,
        config_fingerprint=config_fingerprint(cfg.to_payload()),
    )
    for threshold in buckets:
        kept_docs, count = bucket_filter(data.docs, threshold)
        kept_ids = {id(d) for d in kept_docs}
        keep = [i for i, d in enumerate(data.docs) if id(d) in kept_ids]
        metric = _subset_metric(golds, predictions, keep, cfg, label_set)
        report.buckets.append(BucketMetric(threshold, count, metric))
    return report


# ---------------------------------------------------------------------------
# file-level train / eval entry points


def load_labeled_documents(cfg: ExperimentConfig):
    label_set = LabelSet.from_file(cfg.labels_path)
    train_docs = load_dataset(cfg.train_path, cfg.schema, label_set)
    dev_docs = (load_dataset(cfg.dev_path, cfg.schema, label_set)
                if cfg.dev_path else [])
    test_docs = (load_dataset(cfg.test_path, cfg.schema, label_set)
                 if cfg.test_path else [])
    return label_set, train_docs, dev_docs, test_docs


def train_experiment(cfg: ExperimentConfig, progress: bool = False,
                     scorer: LogProbScorer | None = None):
    """Full training run from an experiment config.

    Returns (TrainResult, dev report, pipeline). Any stage failure
    surfaces with the stage name and document id attached.
    """
    label_set, train_docs, dev_docs, test_docs = load_labeled_documents(cfg)
    if not train_docs:
        raise DataError(f"{cfg.train_path}: empty training set")
    if not dev_docs:
        # hold out a deterministic tail slice for early stopping
        n_dev = max(1, len(train_docs) // 10)
        dev_docs = train_docs[-n_dev:]
        train_docs = train_docs[:-n_dev]
    vocab = build_vocab([d.tokens for d in train_docs], cfg.min_frequency)
    pipeline = KeyphrasePipeline(
        skp=cfg.skp, method=cfg.ranking_method, candidate_cap=cfg.candidate_cap,
        scorer=scorer)
    pipeline.fit(train_docs)
    train_data = _staged("prepare-train", lambda: prepare_dataset(
        train_docs, vocab, pipeline, cfg.chunk_size))
    dev_data = _staged("prepare-dev", lambda: prepare_dataset(
        dev_docs, vocab, pipeline, cfg.chunk_size))
    result = _staged("train", lambda: fit_model(
        train_data, dev_data, label_set, vocab, cfg, progress=progress))
    dev_report = evaluate_prepared(result.best_state, dev_data, label_set, cfg,
                                   buckets=cfg.buckets)
    dev_report.train_curve = result.history
    dev_report.best_epoch = result.best_epoch
    return result, dev_report, pipeline


def evaluate_experiment(
    state: ModelState,
    extra: dict,
    cfg: ExperimentConfig,
    docs: Sequence[Document] | None = None,
    pipeline: KeyphrasePipeline | None = None,
) -> MetricsReport:
    """Evaluate a (loaded) checkpoint against the configured test split.

    The checkpoint's label names and task mode must match the config;
    the keyphrase pipeline is refitted on the training corpus when not
    supplied, which reproduces extraction deterministically.
    """
    label_set = LabelSet.from_file(cfg.labels_path)
    if list(extra.get("labels", label_set.names)) != list(label_set.names):
        raise ConfigError("label-set mismatch between checkpoint and config")
    if extra.get("schema", cfg.schema) != cfg.schema:
        raise ConfigError(
            f"checkpoint task {extra.get('schema')!r} does not match config "
            f"schema {cfg.schema!r}")
    if extra.get("chunk_size", cfg.chunk_size) != cfg.chunk_size:
        raise ConfigError(
            f"checkpoint was trained at chunk size {extra['chunk_size']}, "
            f"config asks for {cfg.chunk_size}")
    vocab_tokens = extra.get("vocab")
    if vocab_tokens is None:
        raise ConfigError("checkpoint carries no vocabulary")
    vocab = Vocabulary(tuple(vocab_tokens), int(extra.get("min_frequency", 1)))
    if docs is None:
        if not cfg.test_path:
            raise ConfigError("no test split configured")
        docs = load_dataset(cfg.test_path, cfg.schema, label_set)
    if pipeline is None:
        train_docs = load_dataset(cfg.train_path, cfg.schema, label_set)
        pipeline = KeyphrasePipeline(
            skp=cfg.skp, method=cfg.ranking_method,
            candidate_cap=cfg.candidate_cap).fit(train_docs)
    data = prepare_dataset(docs, vocab, pipeline, cfg.chunk_size)
    return evaluate_prepared(state, data, label_set, cfg, buckets=cfg.buckets)


def checkpoint_extra(result: TrainResult, cfg: ExperimentConfig) -> dict:
    return {
        "schema": cfg.schema,
        "labels": list(result.label_set.names),
        "vocab": list(result.vocab.tokens),
        "min_frequency": result.vocab.min_frequency,
        "chunk_size": cfg.chunk_size,
        "weight_a": cfg.weights.a,
        "weight_b": cfg.weights.b,
        "ranking_method": cfg.ranking_method,
        "best_epoch": result.best_epoch,
        "config_fingerprint": result.fingerprint,
    }


def save_result(path, result: TrainResult, cfg: ExperimentConfig) -> None:
    save_checkpoint(path, result.best_state, checkpoint_extra(result, cfg))


def _staged(stage: str, fn):
    try:
        return fn()
    except ChuloError as exc:
        raise type(exc)(f"[stage {stage}] {exc}") from exc
