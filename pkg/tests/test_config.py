import pytest

from chulo.config import (
    ExperimentConfig,
    load_experiment_config,
    parse_kv_file,
    skp_config_from_file,
)
from chulo.errors import ConfigError

SAMPLE = """
# experiment settings
data.train = train.jsonl
data.labels = labels.json
data.schema = doc-single
skp.alpha = 0.5
skp.gamma = 2e8
skp.top_n = 10
ranking.method = skp
chunk.size = 25
chunk.weight_a = 0.7
chunk.weight_b = 0.2
model.d_model = 32
train.learning_rate = 1e-4
train.seed = 11
report.buckets = 256, 1024
"""


def write_config(tmp_path, text=SAMPLE, with_files=True):
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    if with_files:
        (tmp_path / "train.jsonl").write_text(
            '{"id":"a","text":"x y","label":"l0"}\n')
        (tmp_path / "labels.json").write_text('["l0"]')
    return path


class TestParser:
    def test_parses_sections_and_values(self, tmp_path):
        cfg = load_experiment_config(write_config(tmp_path))
        assert cfg.skp.alpha == 0.5
        assert cfg.skp.gamma == 2e8
        assert cfg.skp.top_n == 10
        assert cfg.chunk_size == 25
        assert cfg.weights.a == 0.7
        assert cfg.d_model == 32
        assert cfg.train.learning_rate == 1e-4
        assert cfg.train.seed == 11
        assert cfg.buckets == (256, 1024)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path, SAMPLE + "\nmystery.key = 1\n")
        with pytest.raises(ConfigError, match="mystery.key"):
            load_experiment_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = write_config(tmp_path, SAMPLE + "\nchunk.size = 30\n")
        with pytest.raises(ConfigError, match="duplicate"):
            load_experiment_config(path)

    def test_missing_referenced_file(self, tmp_path):
        path = write_config(tmp_path, with_files=False)
        with pytest.raises(ConfigError, match="does not exist"):
            load_experiment_config(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("just some words\n")
        with pytest.raises(ConfigError):
            parse_kv_file(path)

    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# comment\n\nchunk.size = 5\n")
        assert parse_kv_file(path) == {"chunk.size": "5"}

    def test_skp_only_view(self, tmp_path):
        path = write_config(tmp_path)
        skp = skp_config_from_file(path)
        assert skp.alpha == 0.5
        assert skp.top_n == 10


class TestExperimentConfig:
    def test_average_method_forces_equal_weights(self):
        cfg = ExperimentConfig(ranking_method="average")
        assert cfg.weights.uniform

    def test_bad_schema(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(schema="doc-weird")

    def test_bad_method(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(ranking_method="magic")

    def test_buckets_must_ascend(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(buckets=(100, 50))

    def test_payload_covers_nested_configs(self):
        payload = ExperimentConfig().to_payload()
        assert payload["skp"]["alpha"] == 0.6
        assert payload["train"]["learning_rate"] == 5e-5
        assert payload["weights"]["a"] == 0.8
