"""Experiment configuration.

Config files are flat key-value text, one ``section.key = value`` pair
per line, ``#`` comments allowed; chosen over nested formats so diffs
stay line-local. Unknown keys are rejected to catch typos.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .nn.optim import TrainConfig
from .skp import SkpConfig
from .chunks import WeightConfig

RANKING_METHODS = ("skp", "tfidf", "average")


def parse_kv_file(path) -> dict[str, str]:
    pairs: dict[str, str] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or "." not in key:
                raise ConfigError(f"{path}:{lineno}: key must look like 'section.key'")
            if key in pairs:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            pairs[key] = value
    return pairs


def _coerce(value: str, kind: type):
    try:
        if kind is bool:
            lowered = value.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(value)
        return kind(value)
    except ValueError:
        raise ConfigError(f"cannot parse {value!r} as {kind.__name__}") from None


@dataclass
class ExperimentConfig:
    """Everything one run needs: data paths, pipeline, model, training."""

    # data
    train_path: str = ""
    dev_path: str = ""
    test_path: str = ""
    labels_path: str = ""
    schema: str = "doc-single"
    min_frequency: int = 2
    # keyphrase ranking
    ranking_method: str = "skp"
    candidate_cap: int = 256
    skp: SkpConfig = field(default_factory=SkpConfig)
    # chunk representation
    chunk_size: int = 50
    weights: WeightConfig = field(default_factory=WeightConfig)
    # model dims (vocab/classes/task mode are data-derived)
    d_model: int = 64
    n_heads: int = 4
    n_layers_encoder: int = 2
    n_layers_decoder: int = 2
    ffn_dim: int = 256
    max_chunks: int = 512
    dropout_rate: float = 0.1
    window_size: int = 128
    # training
    train: TrainConfig = field(default_factory=TrainConfig)
    # reporting
    buckets: tuple[int, ...] = ()
    exclude_outside_label: bool = False

    def __post_init__(self):
        if self.schema not in ("doc-single", "doc-multi", "token"):
            raise ConfigError(f"unknown data schema {self.schema!r}")
        if self.ranking_method not in RANKING_METHODS:
            raise ConfigError(
                f"ranking method must be one of {RANKING_METHODS}, "
                f"got {self.ranking_method!r}")
        if self.ranking_method == "average" and not self.weights.uniform:
            # the average arm is exactly weight equality
            self.weights = WeightConfig(1.0, 1.0)
        if list(self.buckets) != sorted(self.buckets):
            raise ConfigError(f"report buckets must be ascending, got {self.buckets}")

    @property
    def task_mode(self) -> str:
        return self.schema

    def to_payload(self) -> dict:
        """Stable nested dict for fingerprinting and checkpoints."""
        payload = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (SkpConfig, WeightConfig, TrainConfig)):
                payload[f.name] = {g.name: getattr(value, g.name)
                                   for g in fields(value)}
            else:
                payload[f.name] = list(value) if isinstance(value, tuple) else value
        return payload


_KEYMAP = {
    "data.train": ("train_path", str),
    "data.dev": ("dev_path", str),
    "data.test": ("test_path", str),
    "data.labels": ("labels_path", str),
    "data.schema": ("schema", str),
    "vocab.min_frequency": ("min_frequency", int),
    "ranking.method": ("ranking_method", str),
    "ranking.candidate_cap": ("candidate_cap", int),
    "skp.alpha": ("skp.alpha", float),
    "skp.gamma": ("skp.gamma", float),
    "skp.segment_length": ("skp.segment_length", int),
    "skp.prompt_template": ("skp.prompt_template", str),
    "skp.category": ("skp.category", str),
    "skp.top_n": ("skp.top_n", int),
    "chunk.size": ("chunk_size", int),
    "chunk.weight_a": ("weights.a", float),
    "chunk.weight_b": ("weights.b", float),
    "model.d_model": ("d_model", int),
    "model.n_heads": ("n_heads", int),
    "model.n_layers_encoder": ("n_layers_encoder", int),
    "model.n_layers_decoder": ("n_layers_decoder", int),
    "model.ffn_dim": ("ffn_dim", int),
    "model.max_chunks": ("max_chunks", int),
    "model.dropout_rate": ("dropout_rate", float),
    "model.window_size": ("window_size", int),
    "train.learning_rate": ("train.learning_rate", float),
    "train.batch_size": ("train.batch_size", int),
    "train.max_epochs": ("train.max_epochs", int),
    "train.patience": ("train.patience", int),
    "train.warmup_fraction": ("train.warmup_fraction", float),
    "train.warmup_shape": ("train.warmup_shape", str),
    "train.weight_decay": ("train.weight_decay", float),
    "train.beta1": ("train.beta1", float),
    "train.beta2": ("train.beta2", float),
    "train.seed": ("train.seed", int),
    "report.buckets": ("buckets", str),
    "metrics.exclude_outside_label": ("exclude_outside_label", bool),
}


def experiment_from_pairs(pairs: dict[str, str], base_dir: str = ".") -> ExperimentConfig:
    plain: dict[str, object] = {}
    nested: dict[str, dict[str, object]] = {"skp": {}, "weights": {}, "train": {}}
    for key, raw in pairs.items():
        if key not in _KEYMAP:
            raise ConfigError(f"unknown config key {key!r}")
        target, kind = _KEYMAP[key]
        if target == "buckets":
            plain["buckets"] = tuple(
                _coerce(part.strip(), int) for part in raw.split(",") if part.strip())
            continue
        value = _coerce(raw, kind)
        if "." in target:
            group, attr = target.split(".")
            nested[group][attr] = value
        else:
            plain[target] = value
    for path_field in ("train_path", "dev_path", "test_path", "labels_path"):
        if plain.get(path_field):
            plain[path_field] = os.path.join(base_dir, str(plain[path_field]))
    cfg = ExperimentConfig(
        **plain,
        skp=SkpConfig(**nested["skp"]),
        weights=WeightConfig(**nested["weights"]),
        train=TrainConfig(**nested["train"]),
    )
    return cfg


def load_experiment_config(path, require_data: bool = True) -> ExperimentConfig:
    pairs = parse_kv_file(path)
    cfg = experiment_from_pairs(pairs, base_dir=os.path.dirname(os.path.abspath(path)))
    if require_data:
        for name, value in (("data.train", cfg.train_path),
                            ("data.labels", cfg.labels_path)):
            if not value:
                raise ConfigError(f"config {path} is missing {name}")
        for value in (cfg.train_path, cfg.dev_path, cfg.test_path, cfg.labels_path):
            if value and not os.path.exists(value):
                raise ConfigError(f"referenced file does not exist: {value}")
    return cfg


def skp_config_from_file(path) -> SkpConfig:
    """Read only the skp.* keys of a config file (for the extraction CLI)."""
    pairs = parse_kv_file(path)
    kwargs = {}
    for key, raw in pairs.items():
        if not key.startswith("skp."):
            continue
        target, kind = _KEYMAP[key]
        kwargs[target.split(".")[1]] = _coerce(raw, kind)
    return SkpConfig(**kwargs)
