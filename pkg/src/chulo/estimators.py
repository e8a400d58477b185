"""Scikit-learn style estimators wrapping the pipeline.

These accept raw texts (or pre-split token sequences for tagging), so
they compose with the usual sklearn tooling: ``get_params`` /
``set_params``, cloning, and cross-validation over lists of strings.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .config import ExperimentConfig
from .corpus import Document, LabelSet, build_vocab, tokenize
from .chunks import WeightConfig
from .harness import (
    KeyphrasePipeline,
    fit_model,
    predict_batch,
    prepare_dataset,
    _batches,
    _make_model_batch,
)
from .metrics import micro_f1
from .ngram import BigramScorer
from .nn import batch_loss
from .nn.optim import TrainConfig
from .skp import DEFAULT_PROMPT_TEMPLATE, SkpConfig
from .validation import (
    check_aligned_lengths,
    check_text_list,
    check_token_lists,
)


class KeyphraseExtractor(BaseEstimator, TransformerMixin):
    """Unsupervised keyphrase extraction as a transformer.

    fit() trains the built-in n-gram scorer and corpus statistics on the
    input texts; transform() returns, per text, the selected keyphrases
    as (surface, score, first_occurrence) tuples.
    """

    def __init__(self, method="skp", top_n=15, alpha=0.6, gamma=1.2e8,
                 segment_length=512, prompt_template=DEFAULT_PROMPT_TEMPLATE,
                 category="document", candidate_cap=256):
        self.method = method
        self.top_n = top_n
        self.alpha = alpha
        self.gamma = gamma
        self.segment_length = segment_length
        self.prompt_template = prompt_template
        self.category = category
        self.candidate_cap = candidate_cap

    def fit(self, X, y=None):
        texts = check_text_list(X)
        docs = [Document(str(i), tuple(tokenize(t))) for i, t in enumerate(texts)]
        self.pipeline_ = KeyphrasePipeline(
            skp=self._skp_config(), method=self.method,
            candidate_cap=self.candidate_cap,
            scorer=BigramScorer().fit([d.tokens for d in docs]))
        self.pipeline_.fit(docs)
        return self

    def transform(self, X):
        if not hasattr(self, "pipeline_"):
            raise NotFittedError("KeyphraseExtractor is not fitted yet")
        texts = check_text_list(X)
        out = []
        for i, text in enumerate(texts):
            doc = Document(str(i), tuple(tokenize(text)))
            ranked = self.pipeline_.keyphrases(doc)
            out.append([(k.phrase.surface, k.score, k.phrase.first_occurrence)
                        for k in ranked])
        return out

    def _skp_config(self) -> SkpConfig:
        return SkpConfig(alpha=self.alpha, gamma=self.gamma,
                         segment_length=self.segment_length,
                         prompt_template=self.prompt_template,
                         category=self.category, top_n=self.top_n)


class _ChuloBase(BaseEstimator):
    """Shared fit machinery for the document and token estimators."""

    def _experiment_config(self, schema: str) -> ExperimentConfig:
        return ExperimentConfig(
            schema=schema,
            min_frequency=self.min_frequency,
            ranking_method=self.ranking_method,
            candidate_cap=self.candidate_cap,
            skp=SkpConfig(alpha=self.alpha, gamma=self.gamma,
                          segment_length=self.segment_length,
                          prompt_template=self.prompt_template,
                          category=self.category, top_n=self.top_n),
            chunk_size=self.chunk_size,
            weights=WeightConfig(self.weight_a, self.weight_b),
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers_encoder=self.n_layers_encoder,
            n_layers_decoder=self.n_layers_decoder,
            ffn_dim=self.ffn_dim,
            max_chunks=self.max_chunks,
            dropout_rate=self.dropout_rate,
            window_size=self.window_size,
            train=TrainConfig(
                learning_rate=self.learning_rate, batch_size=self.batch_size,
                max_epochs=self.max_epochs, patience=self.patience,
                warmup_fraction=self.warmup_fraction,
                warmup_shape=self.warmup_shape,
                weight_decay=self.weight_decay, beta1=self.beta1,
                beta2=self.beta2, seed=self.random_state),
        )

    def _fit_docs(self, docs: list[Document], label_set: LabelSet, cfg) -> None:
        rng = np.random.default_rng(self.random_state)
        order = rng.permutation(len(docs))
        n_dev = max(1, int(round(self.validation_fraction * len(docs))))
        dev_idx = set(order[:n_dev].tolist())
        train_docs = [docs[i] for i in range(len(docs)) if i not in dev_idx]
        dev_docs = [docs[i] for i in sorted(dev_idx)]
        if not train_docs:
            raise ValueError("not enough samples left after the validation split")
        vocab = build_vocab([d.tokens for d in train_docs], cfg.min_frequency)
        pipeline = KeyphrasePipeline(
            skp=cfg.skp, method=cfg.ranking_method,
            candidate_cap=cfg.candidate_cap,
            scorer=BigramScorer().fit([d.tokens for d in train_docs]))
        pipeline.fit(train_docs)
        train_data = prepare_dataset(train_docs, vocab, pipeline, cfg.chunk_size)
        dev_data = prepare_dataset(dev_docs, vocab, pipeline, cfg.chunk_size)
        result = fit_model(train_data, dev_data, label_set, vocab, cfg)
        self.cfg_ = cfg
        self.pipeline_ = pipeline
        self.vocab_ = vocab
        self.label_set_ = label_set
        self.state_ = result.best_state
        self.best_epoch_ = result.best_epoch
        self.history_ = result.history

    def _check_fitted(self):
        if not hasattr(self, "state_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def _predict_docs(self, docs: list[Document]) -> list:
        data = prepare_dataset(docs, self.vocab_, self.pipeline_, self.cfg_.chunk_size)
        predictions: list = []
        for idx in _batches(np.arange(len(data)), self.cfg_.train.batch_size):
            batch = _make_model_batch(data, idx, self.cfg_, len(self.label_set_))
            predictions.extend(predict_batch(self.state_, batch))
        return predictions


class ChuloDocumentClassifier(_ChuloBase, ClassifierMixin):
    """Long-document classifier over keyphrase-weighted chunk attention.

    ``multi_label=False``: y holds one label per text and predict returns
    labels. ``multi_label=True``: y holds collections of labels and
    predict returns sorted label lists (sigmoid decisions at 0.5).
    """

    def __init__(self, chunk_size=50, weight_a=0.8, weight_b=0.1,
                 ranking_method="skp", top_n=15, alpha=0.6, gamma=1.2e8,
                 segment_length=512, prompt_template=DEFAULT_PROMPT_TEMPLATE,
                 category="document", candidate_cap=256, min_frequency=2,
                 d_model=64, n_heads=4, n_layers_encoder=2, n_layers_decoder=2,
                 ffn_dim=256, max_chunks=512, dropout_rate=0.1, window_size=128,
                 learning_rate=5e-5, batch_size=16, max_epochs=50, patience=10,
                 warmup_fraction=0.1, warmup_shape="linear", weight_decay=1e-2,
                 beta1=0.9, beta2=0.999, validation_fraction=0.1,
                 multi_label=False, random_state=0):
        self.chunk_size = chunk_size
        self.weight_a = weight_a
        self.weight_b = weight_b
        self.ranking_method = ranking_method
        self.top_n = top_n
        self.alpha = alpha
        self.gamma = gamma
        self.segment_length = segment_length
        self.prompt_template = prompt_template
        self.category = category
        self.candidate_cap = candidate_cap
        self.min_frequency = min_frequency
        self.d_model = d_model
        self.n_heads = n_heads
        self.n_layers_encoder = n_layers_encoder
        self.n_layers_decoder = n_layers_decoder
        self.ffn_dim = ffn_dim
        self.max_chunks = max_chunks
        self.dropout_rate = dropout_rate
        self.window_size = window_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.warmup_fraction = warmup_fraction
        self.warmup_shape = warmup_shape
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.validation_fraction = validation_fraction
        self.multi_label = multi_label
        self.random_state = random_state

    def fit(self, X, y):
        texts = check_text_list(X)
        y = list(y)
        check_aligned_lengths(texts, y)
        if self.multi_label:
            names = sorted({str(label) for labels in y for label in labels})
        else:
            names = sorted({str(label) for label in y})
        label_set = LabelSet(tuple(names))
        self.classes_ = np.array(names)
        schema = "doc-multi" if self.multi_label else "doc-single"
        docs = []
        for i, (text, label) in enumerate(zip(texts, y)):
            tokens = tuple(tokenize(text))
            if self.multi_label:
                ids = frozenset(label_set.index(str(name)) for name in label)
                docs.append(Document(str(i), tokens, doc_labels=ids))
            else:
                docs.append(Document(str(i), tokens,
                                     doc_label=label_set.index(str(label))))
        self._fit_docs(docs, label_set, self._experiment_config(schema))
        return self

    def predict(self, X):
        self._check_fitted()
        texts = check_text_list(X)
        docs = [Document(str(i), tuple(tokenize(t))) for i, t in enumerate(texts)]
        raw = self._predict_docs(docs)
        if self.multi_label:
            return [sorted(self.classes_[sorted(indices)]) for indices in raw]
        return self.classes_[np.asarray(raw, dtype=int)]

    def predict_proba(self, X):
        self._check_fitted()
        if self.multi_label:
            raise ValueError("predict_proba is defined for single-label mode only")
        texts = check_text_list(X)
        docs = [Document(str(i), tuple(tokenize(t))) for i, t in enumerate(texts)]
        data = prepare_dataset(docs, self.vocab_, self.pipeline_, self.cfg_.chunk_size)
        probs = []
        for idx in _batches(np.arange(len(data)), self.cfg_.train.batch_size):
            batch = _make_model_batch(data, idx, self.cfg_, len(self.label_set_))
            _, logits, _ = batch_loss(self.state_, batch)
            z = logits.data - logits.data.max(axis=-1, keepdims=True)
            e = np.exp(z)
            probs.append(e / e.sum(axis=-1, keepdims=True))
        return np.concatenate(probs, axis=0)

    def score(self, X, y):
        predictions = self.predict(X)
        y = list(y)
        if self.multi_label:
            gold = [frozenset(str(n) for n in labels) for labels in y]
            pred = [frozenset(p) for p in predictions]
            return micro_f1(pred, gold)
        correct = sum(str(a) == str(b) for a, b in zip(predictions, y))
        return correct / len(y) if y else 0.0


class ChuloTokenTagger(_ChuloBase):
    """Per-token tagger: windowed decoding over chunk-attention memory."""

    def __init__(self, chunk_size=20, weight_a=0.8, weight_b=0.1,
                 ranking_method="skp", top_n=15, alpha=0.6, gamma=1.2e8,
                 segment_length=512, prompt_template=DEFAULT_PROMPT_TEMPLATE,
                 category="document", candidate_cap=256, min_frequency=2,
                 d_model=64, n_heads=4, n_layers_encoder=2, n_layers_decoder=2,
                 ffn_dim=256, max_chunks=512, dropout_rate=0.1, window_size=128,
                 learning_rate=5e-5, batch_size=8, max_epochs=50, patience=10,
                 warmup_fraction=0.1, warmup_shape="linear", weight_decay=1e-2,
                 beta1=0.9, beta2=0.999, validation_fraction=0.1,
                 random_state=0):
        self.chunk_size = chunk_size
        self.weight_a = weight_a
        self.weight_b = weight_b
        self.ranking_method = ranking_method
        self.top_n = top_n
        self.alpha = alpha
        self.gamma = gamma
        self.segment_length = segment_length
        self.prompt_template = prompt_template
        self.category = category
        self.candidate_cap = candidate_cap
        self.min_frequency = min_frequency
        self.d_model = d_model
        self.n_heads = n_heads
        self.n_layers_encoder = n_layers_encoder
        self.n_layers_decoder = n_layers_decoder
        self.ffn_dim = ffn_dim
        self.max_chunks = max_chunks
        self.dropout_rate = dropout_rate
        self.window_size = window_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.warmup_fraction = warmup_fraction
        self.warmup_shape = warmup_shape
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def fit(self, X, y):
        token_lists = check_token_lists(X)
        tag_lists = [list(map(str, tags)) for tags in y]
        check_aligned_lengths(token_lists, tag_lists)
        names = sorted({tag for tags in tag_lists for tag in tags})
        label_set = LabelSet(tuple(names))
        self.classes_ = np.array(names)
        docs = []
        for i, (tokens, tags) in enumerate(zip(token_lists, tag_lists)):
            if len(tokens) != len(tags):
                raise ValueError(f"sample {i}: {len(tokens)} tokens but "
                                 f"{len(tags)} tags")
            indices = tuple(label_set.index(t) for t in tags)
            docs.append(Document(str(i), tuple(tokens), token_tags=indices))
        self._fit_docs(docs, label_set, self._experiment_config("token"))
        return self

    def predict(self, X):
        self._check_fitted()
        token_lists = check_token_lists(X)
        docs = []
        for i, tokens in enumerate(token_lists):
            # placeholder tags: prediction batches require aligned targets
            docs.append(Document(str(i), tuple(tokens),
                                 token_tags=tuple([0] * len(tokens))))
        raw = self._predict_docs(docs)
        return [[str(self.classes_[j]) for j in row] for row in raw]

    def score(self, X, y):
        """Micro-F1 over all tokens, outside label included."""
        predictions = self.predict(X)
        flat_pred = [t for row in predictions for t in row]
        flat_gold = [str(t) for row in y for t in row]
        return micro_f1(flat_pred, flat_gold)
