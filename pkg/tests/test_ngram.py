import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chulo.errors import ConfigError, ScorerError
from chulo.ngram import BigramScorer, UniformScorer

CORPUS = [
    "the solar panel powers the grid".split(),
    "the grid stores solar energy".split(),
    "wind turbine energy flows into the grid".split(),
]


@pytest.fixture(scope="module")
def scorer():
    return BigramScorer().fit(CORPUS)


class TestUniformScorer:
    def test_analytic_value(self):
        uniform = UniformScorer(vocab_size=50)
        vals = uniform.token_logprobs(["seg"], ["a", "b", "c"], 1, 2)
        assert vals == [-math.log(50)] * 2

    def test_vocab_size_validation(self):
        with pytest.raises(ConfigError):
            UniformScorer(vocab_size=1)


class TestBigramScorer:
    def test_true_log_probabilities(self, scorer):
        vals = scorer.token_logprobs(CORPUS[0], ["the", "grid", "stores"], 0, 3)
        assert all(v < 0.0 for v in vals)

    def test_deterministic(self, scorer):
        args = (CORPUS[1], ("a", "solar", "panel"), 1, 2)
        assert scorer.token_logprobs(*args) == scorer.token_logprobs(*args)

    def test_distribution_normalizes(self, scorer):
        # summing p(tok | prev, segment) over the event space gives 1
        segment = CORPUS[2]
        vocab = sorted({t for seq in CORPUS for t in seq}) + ["<oov>"]
        total = 0.0
        for tok in vocab:
            (lp,) = scorer.token_logprobs(segment, ["solar", tok], 1, 1)
            total += math.exp(lp)
        assert total == pytest.approx(1.0, rel=1e-12)

    def test_segment_evidence_raises_probability(self, scorer):
        prompt = ["discusses", "turbine"]
        (in_seg,) = scorer.token_logprobs(CORPUS[2], prompt, 1, 1)
        (out_seg,) = scorer.token_logprobs(CORPUS[0], prompt, 1, 1)
        assert in_seg > out_seg

    def test_unfitted_raises(self):
        with pytest.raises(ScorerError):
            BigramScorer().token_logprobs(["x"], ["a"], 0, 1)

    def test_case_insensitive(self, scorer):
        lower = scorer.token_logprobs(CORPUS[0], ["the", "grid"], 1, 1)
        upper = scorer.token_logprobs([t.upper() for t in CORPUS[0]], ["The", "GRID"], 1, 1)
        assert lower == upper

    def test_bounds_checked(self, scorer):
        with pytest.raises(ScorerError):
            scorer.token_logprobs(CORPUS[0], ["a", "b"], 1, 2)
        with pytest.raises(ScorerError):
            scorer.token_logprobs(CORPUS[0], ["a", "b"], 0, 0)

    def test_parameter_validation(self):
        with pytest.raises(ConfigError):
            BigramScorer(bigram_weight=0.0)
        with pytest.raises(ConfigError):
            BigramScorer(laplace=0.0)

    @given(st.integers(min_value=0, max_value=2), st.integers(min_value=0, max_value=2))
    @settings(max_examples=20, deadline=None)
    def test_batch_matches_singles(self, seg_idx, tok_idx):
        scorer = BigramScorer().fit(CORPUS)
        prompt = ("the", CORPUS[seg_idx][tok_idx], "matters")
        requests = [(CORPUS[seg_idx], prompt, 1, 2), (CORPUS[0], prompt, 0, 3)]
        batch = scorer.token_logprobs_batch(requests)
        singles = [scorer.token_logprobs(*r) for r in requests]
        assert batch == singles
