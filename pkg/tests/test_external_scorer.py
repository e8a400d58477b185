import json
import math
import os
import shlex
import sys

import pytest

from chulo.candidates import extract_candidates
from chulo.corpus import Document, tokenize
from chulo.errors import ScorerError
from chulo.ngram import BigramScorer
from chulo.scorer import ExternalScorer, RecordingScorer
from chulo.skp import SkpConfig, rank_keyphrases
from chulo.synthetic import synthetic_doc_corpus
from chulo.tagging import pos_tag

BRIDGE = os.path.join(os.path.dirname(__file__), "mock_bridge.py")


def bridge_cmd(*args) -> str:
    return " ".join([shlex.quote(sys.executable), shlex.quote(BRIDGE), *args])


class TestExternalScorer:
    def test_uniform_bridge_values(self):
        with ExternalScorer(bridge_cmd("--mode", "uniform", "--vocab-size", "50")) as scorer:
            vals = scorer.token_logprobs(["seg"], ["a", "b", "c"], 1, 2)
        assert vals == [-math.log(50)] * 2

    def test_out_of_order_responses_matched_by_rid(self):
        cmd = bridge_cmd("--mode", "reverse-batch", "--batch", "3")
        with ExternalScorer(cmd) as scorer:
            requests = [(["seg"], ["w", f"p{i}"], 1, 1) for i in range(3)]
            out = scorer.token_logprobs_batch(requests)
        assert len(out) == 3
        assert all(len(vals) == 1 for vals in out)

    def test_error_response_raises_with_index(self):
        with ExternalScorer(bridge_cmd("--mode", "error")) as scorer:
            with pytest.raises(ScorerError, match="mock failure"):
                scorer.token_logprobs(["seg"], ["a", "b"], 0, 1)

    def test_missing_executable(self):
        with pytest.raises(ScorerError):
            ExternalScorer("/definitely/not/here --flag")

    def test_timeout_on_silent_bridge(self):
        cmd = " ".join([shlex.quote(sys.executable), "-c",
                        shlex.quote("import time; time.sleep(30)")])
        scorer = ExternalScorer(cmd, timeout=0.5)
        try:
            with pytest.raises(ScorerError, match="timed out|closed its output"):
                scorer.token_logprobs(["seg"], ["a"], 0, 1)
        finally:
            scorer.close()


class TestTransportNeutrality:
    def test_replayed_bridge_reproduces_in_process_ranking(self, tmp_path):
        records, _, _ = synthetic_doc_corpus(n_train=4, n_test=0, seed=11,
                                             min_len=60, max_len=120)
        docs = [Document(r["id"], tuple(tokenize(r["text"]))) for r in records]
        base = BigramScorer().fit([d.tokens for d in docs])
        cfg = SkpConfig(segment_length=48, top_n=15)
        trace_path = tmp_path / "trace.jsonl"
        recording = RecordingScorer(base, trace_path)
        in_process = {}
        for doc in docs:
            cands = extract_candidates(pos_tag(doc), 25)
            in_process[doc.id] = rank_keyphrases(doc, cands, cfg, recording)
        recording.close()

        cmd = bridge_cmd("--mode", "replay", "--trace", str(trace_path))
        with ExternalScorer(cmd) as scorer:
            for doc in docs:
                cands = extract_candidates(pos_tag(doc), 25)
                external = rank_keyphrases(doc, cands, cfg, scorer)
                reference = in_process[doc.id]
                assert [r.phrase.surface for r in external] == \
                       [r.phrase.surface for r in reference]
                # bit-identical scores: JSON float round-trip is exact
                for mine, ref in zip(external, reference):
                    assert mine.score == ref.score
                    assert mine.logprob_sum == ref.logprob_sum

    def test_trace_is_wire_format(self, tmp_path):
        base = BigramScorer().fit([("a", "b", "c")])
        trace_path = tmp_path / "trace.jsonl"
        recording = RecordingScorer(base, trace_path)
        recording.token_logprobs(["a", "b"], ["the", "a"], 1, 1)
        recording.close()
        record = json.loads(trace_path.read_text().splitlines()[0])
        assert set(record["request"]) == {"rid", "segment", "prompt",
                                          "phrase_start", "phrase_len"}
        assert len(record["response"]["token_logprobs"]) == 1
