"""Keyphrase-prioritized chunk representations for long documents.

The pipeline: extract and rank candidate keyphrases with a prompt-based
scorer, chunk the document, pool token embeddings with higher weight on
keyphrase tokens, and train a chunk-attention model for document- or
token-level classification.
"""

from .candidates import CandidatePhrase, extract_candidates
from .chunks import (
    ChunkEmbeddingMatrix,
    ChunkSequence,
    WeightConfig,
    chunk_document,
    chunk_embedding,
    embed_document,
    mark_keyphrase_tokens,
)
from .config import ExperimentConfig, load_experiment_config
from .corpus import (
    Document,
    LabelSet,
    Vocabulary,
    bucket_filter,
    build_vocab,
    load_dataset,
    parse_records,
    tokenize,
)
from .errors import ChuloError, ConfigError, DataError, NumericError, ScorerError
from .estimators import ChuloDocumentClassifier, ChuloTokenTagger, KeyphraseExtractor
from .harness import (
    KeyphrasePipeline,
    evaluate_experiment,
    evaluate_prepared,
    fit_model,
    prepare_dataset,
    scorer_from_env,
    train_experiment,
)
from .metrics import MetricsReport, accuracy, micro_f1, render_report
from .ngram import BigramScorer, UniformScorer
from .nn import (
    ModelConfig,
    ModelState,
    TrainConfig,
    adamw_step,
    backward_and_check,
    forward_chunk_encoder,
    forward_doc_head,
    forward_token_decoder,
    init_state,
    load_checkpoint,
    save_checkpoint,
    schedule_multiplier,
)
from .scorer import ExternalScorer, LogProbScorer
from .skp import (
    CorpusStats,
    RankedKeyphrase,
    SkpConfig,
    build_prompt,
    position_penalty,
    rank_keyphrases,
    rank_tfidf_baseline,
    score_phrase_on_segment,
    segment_document,
    select_top_n,
)
from .tagging import LexiconTagger, PosTaggedDocument, pos_tag

__version__ = "0.1.0"

__all__ = [
    "BigramScorer",
    "CandidatePhrase",
    "ChuloDocumentClassifier",
    "ChuloError",
    "ChuloTokenTagger",
    "ChunkEmbeddingMatrix",
    "ChunkSequence",
    "ConfigError",
    "CorpusStats",
    "DataError",
    "Document",
    "ExperimentConfig",
    "ExternalScorer",
    "KeyphraseExtractor",
    "KeyphrasePipeline",
    "LabelSet",
    "LexiconTagger",
    "LogProbScorer",
    "MetricsReport",
    "ModelConfig",
    "ModelState",
    "NumericError",
    "PosTaggedDocument",
    "RankedKeyphrase",
    "ScorerError",
    "SkpConfig",
    "TrainConfig",
    "UniformScorer",
    "Vocabulary",
    "WeightConfig",
    "accuracy",
    "adamw_step",
    "backward_and_check",
    "bucket_filter",
    "build_prompt",
    "build_vocab",
    "chunk_document",
    "chunk_embedding",
    "embed_document",
    "evaluate_experiment",
    "evaluate_prepared",
    "extract_candidates",
    "fit_model",
    "forward_chunk_encoder",
    "forward_doc_head",
    "forward_token_decoder",
    "init_state",
    "load_checkpoint",
    "load_dataset",
    "load_experiment_config",
    "mark_keyphrase_tokens",
    "micro_f1",
    "parse_records",
    "pos_tag",
    "position_penalty",
    "prepare_dataset",
    "rank_keyphrases",
    "rank_tfidf_baseline",
    "render_report",
    "save_checkpoint",
    "schedule_multiplier",
    "score_phrase_on_segment",
    "scorer_from_env",
    "segment_document",
    "select_top_n",
    "tokenize",
    "train_experiment",
]
