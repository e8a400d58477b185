import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chulo.candidates import CandidatePhrase, extract_candidates
from chulo.corpus import Document
from chulo.errors import ConfigError, DataError, ScorerError
from chulo.ngram import BigramScorer, UniformScorer
from chulo.scorer import LogProbScorer, ScaledScorer
from chulo.skp import (
    CorpusStats,
    SkpConfig,
    build_prompt,
    position_penalty,
    rank_keyphrases,
    rank_tfidf_baseline,
    score_phrase_on_segment,
    segment_document,
    select_top_n,
)
from chulo.synthetic import synthetic_doc_corpus
from chulo.tagging import pos_tag


def brute_force_ranking(doc, candidates, cfg, scorer):
    """Straight-line re-reading of the ranking procedure: per-candidate
    penalty, per-segment scaled log-prob sums, final product, sort."""
    l_d = len(doc.tokens)
    segments = [list(doc.tokens[i:i + cfg.segment_length])
                for i in range(0, l_d, cfg.segment_length)]
    rows = []
    for cand in candidates:
        r = cand.first_occurrence / l_d + cfg.gamma / l_d**3
        prefix, suffix = cfg.prompt_template.split("{phrase}")
        from chulo.corpus import tokenize

        prompt = (tokenize(prefix.replace("{category}", cfg.category))
                  + list(cand.tokens)
                  + tokenize(suffix.replace("{category}", cfg.category)))
        h = len(tokenize(prefix.replace("{category}", cfg.category)))
        l_k = len(cand.tokens)
        l_p = len(prompt)
        p_total = 0.0
        per_segment = []
        for seg in segments:
            logps = scorer.token_logprobs(seg, prompt, h, l_k)
            p_ij = sum(logps) / l_p**cfg.alpha
            per_segment.append(p_ij)
            p_total += p_ij
        rows.append({"cand": cand, "r": r, "p": per_segment, "s": r * p_total,
                     "sum": p_total})
    rows.sort(key=lambda row: (-row["s"], row["cand"].first_occurrence,
                               row["cand"].surface))
    return rows


class TestPositionPenalty:
    def test_zero_first_position_zero_gamma(self):
        assert position_penalty(0, 100, 0.0) == 0.0

    def test_midpoint(self):
        assert position_penalty(50, 100, 0.0) == 0.5

    def test_gamma_term(self):
        assert position_penalty(10, 1000, 1.2e8) == pytest.approx(0.13, rel=1e-12)

    def test_empty_document_rejected(self):
        with pytest.raises(DataError):
            position_penalty(0, 0, 0.0)

    def test_out_of_range_position(self):
        with pytest.raises(DataError):
            position_penalty(5, 5, 0.0)

    @given(st.integers(min_value=2, max_value=5000),
           st.floats(min_value=0.0, max_value=1e9, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_strictly_increasing_in_position(self, l_d, gamma):
        values = [position_penalty(L, l_d, gamma) for L in range(0, l_d, max(1, l_d // 7))]
        assert all(a < b for a, b in zip(values, values[1:]))


class TestSegmentDocument:
    def test_uneven_split(self):
        segs = segment_document(list("abcdefghij"), 4)
        assert [len(s) for s in segs] == [4, 4, 2]

    def test_exact_fit(self):
        assert len(segment_document(list("abcd"), 4)) == 1

    def test_empty(self):
        assert segment_document([], 4) == []

    def test_concatenation_identity(self):
        tokens = [f"t{i}" for i in range(23)]
        segs = segment_document(tokens, 5)
        assert [t for seg in segs for t in seg] == tokens

    def test_validation(self):
        with pytest.raises(ConfigError):
            segment_document(["a"], 0)


class TestBuildPrompt:
    def _phrase(self, surface, first=0):
        n = len(surface.split(" "))
        return CandidatePhrase(surface, first, n, [(first, first + n - 1)])

    def test_two_token_phrase(self):
        cfg = SkpConfig(category="news")
        bundle = build_prompt(cfg, self._phrase("tax cuts"))
        assert bundle.tokens == ("the", "news", "mainly", "discusses", "tax", "cuts")
        assert bundle.phrase_start == 4
        assert bundle.phrase_len == 2
        assert bundle.length == 6

    def test_single_token_phrase(self):
        bundle = build_prompt(SkpConfig(category="news"), self._phrase("economy"))
        assert bundle.phrase_start == 4
        assert bundle.phrase_len == 1
        assert bundle.length == 5

    def test_empty_phrase_rejected(self):
        with pytest.raises(DataError):
            build_prompt(SkpConfig(), CandidatePhrase("", 0, 0, [(0, 0)]))

    def test_template_validation(self):
        with pytest.raises(ConfigError):
            SkpConfig(prompt_template="no placeholders")
        with pytest.raises(ConfigError):
            SkpConfig(prompt_template="{category} {phrase} {phrase}")


class TestScorePhraseOnSegment:
    class MinusOne(LogProbScorer):
        def token_logprobs(self, segment, prompt, phrase_start, phrase_len):
            return [-1.0] * phrase_len

    def _bundle(self):
        return build_prompt(SkpConfig(category="news"),
                            CandidatePhrase("tax cuts", 0, 2, [(0, 1)]))

    def test_closed_form(self):
        value = score_phrase_on_segment(self.MinusOne(), ["seg"], self._bundle(), 1.0)
        assert value == pytest.approx(-2.0 / 6.0, rel=1e-15)

    def test_alpha_zero_disables_normalization(self):
        value = score_phrase_on_segment(self.MinusOne(), ["seg"], self._bundle(), 0.0)
        assert value == -2.0

    def test_uniform_scorer_analytic(self):
        v = 50
        bundle = self._bundle()
        alpha = 0.6
        value = score_phrase_on_segment(UniformScorer(v), ["seg"], bundle, alpha)
        assert value == pytest.approx(-2 * math.log(v) / 6**alpha, rel=1e-12)

    def test_segment_capability_enforced(self):
        scorer = self.MinusOne()
        scorer.max_segment_tokens = 2
        with pytest.raises(ScorerError):
            score_phrase_on_segment(scorer, ["a", "b", "c"], self._bundle(), 1.0)


def make_corpus_docs(seed=0, n_docs=8):
    records, _, _ = synthetic_doc_corpus(n_train=n_docs, n_test=0, seed=seed,
                                         min_len=60, max_len=160)
    docs = []
    for rec in records:
        from chulo.corpus import tokenize

        docs.append(Document(rec["id"], tuple(tokenize(rec["text"]))))
    return docs


class TestRankKeyphrases:
    def test_empty_candidates(self):
        doc = Document("d", ("some", "tokens"))
        assert rank_keyphrases(doc, [], SkpConfig(), UniformScorer(10)) == []

    def test_single_candidate_score_is_product(self):
        doc = Document("d", tuple("the solar panel works".split()))
        cand = CandidatePhrase("solar panel", 1, 2, [(1, 2)])
        cfg = SkpConfig(segment_length=3, top_n=5)
        (ranked,) = rank_keyphrases(doc, [cand], cfg, UniformScorer(32))
        assert ranked.score == pytest.approx(
            ranked.position_penalty * ranked.logprob_sum, rel=1e-15)

    def test_earlier_candidate_wins_ties(self):
        # identical log-prob sums, L=0 vs L=10: smaller penalty ranks first
        doc = Document("d", tuple(f"w{i}" for i in range(20)))
        early = CandidatePhrase("w0", 0, 1, [(0, 0)])
        late = CandidatePhrase("w10", 10, 1, [(10, 10)])
        cfg = SkpConfig(gamma=1.0, segment_length=20)
        ranked = rank_keyphrases(doc, [late, early], cfg, UniformScorer(64))
        assert [r.phrase.surface for r in ranked] == ["w0", "w10"]

    def test_matches_brute_force_oracle(self):
        docs = make_corpus_docs(seed=3)
        scorer = BigramScorer().fit([d.tokens for d in docs])
        cfg = SkpConfig(segment_length=40, top_n=15)
        for doc in docs:
            candidates = extract_candidates(pos_tag(doc), 30)
            ranked = rank_keyphrases(doc, candidates, cfg, scorer)
            oracle = brute_force_ranking(doc, candidates, cfg, scorer)
            assert [r.phrase.surface for r in ranked] == \
                   [row["cand"].surface for row in oracle]
            for mine, ref in zip(ranked, oracle):
                assert mine.position_penalty == pytest.approx(ref["r"], rel=1e-12)
                assert mine.logprob_sum == pytest.approx(ref["sum"], rel=1e-12)
                assert mine.score == pytest.approx(ref["s"], rel=1e-12)

    def test_output_is_permutation_of_input(self):
        docs = make_corpus_docs(seed=4, n_docs=3)
        scorer = BigramScorer().fit([d.tokens for d in docs])
        for doc in docs:
            candidates = extract_candidates(pos_tag(doc), 30)
            ranked = rank_keyphrases(doc, candidates, SkpConfig(segment_length=50), scorer)
            assert sorted(r.phrase.surface for r in ranked) == \
                   sorted(c.surface for c in candidates)

    def test_argsort_invariance_under_scaling(self):
        docs = make_corpus_docs(seed=5, n_docs=4)
        scorer = BigramScorer().fit([d.tokens for d in docs])
        cfg = SkpConfig(segment_length=64)
        for doc in docs:
            candidates = extract_candidates(pos_tag(doc), 25)
            base = [r.phrase.surface
                    for r in rank_keyphrases(doc, candidates, cfg, scorer)]
            for factor in (0.5, 2.0, 10.0):
                scaled = [r.phrase.surface for r in rank_keyphrases(
                    doc, candidates, cfg, ScaledScorer(scorer, factor))]
                assert scaled == base

    def test_single_segment_alpha0_equal_penalty_sorts_by_loglik(self):
        # all candidates share the first-occurrence position, one segment,
        # alpha 0: ranking must equal sorting by raw phrase log-likelihood
        tokens = tuple("solar panel output and wind turbine output".split())
        doc = Document("d", tokens)
        shared = [
            CandidatePhrase("solar panel", 0, 2, [(0, 1)]),
            CandidatePhrase("wind turbine", 0, 2, [(4, 5)]),
            CandidatePhrase("output", 0, 1, [(2, 2)]),
        ]
        scorer = BigramScorer().fit([tokens])
        cfg = SkpConfig(alpha=0.0, segment_length=100)
        ranked = rank_keyphrases(doc, shared, cfg, scorer)
        loglik = {}
        for cand in shared:
            bundle = build_prompt(cfg, cand)
            loglik[cand.surface] = sum(scorer.token_logprobs(
                list(tokens), bundle.tokens, bundle.phrase_start, bundle.phrase_len))
        expected = sorted(shared, key=lambda c: (-loglik[c.surface], c.surface))
        assert [r.phrase.surface for r in ranked] == [c.surface for c in expected]

    def test_earlier_occurrence_never_lowers_rank(self):
        docs = make_corpus_docs(seed=8, n_docs=3)
        scorer = BigramScorer().fit([d.tokens for d in docs])
        cfg = SkpConfig(gamma=5.0, segment_length=64)
        for doc in docs:
            candidates = extract_candidates(pos_tag(doc), 20)
            if len(candidates) < 3:
                continue
            ranked = rank_keyphrases(doc, candidates, cfg, scorer)
            surfaces = [r.phrase.surface for r in ranked]
            target = candidates[-1]
            if target.first_occurrence == 0:
                continue
            moved = CandidatePhrase(target.surface, 0, target.token_span_length,
                                    target.all_occurrences)
            swapped = [moved if c is target else c for c in candidates]
            reranked = rank_keyphrases(doc, swapped, cfg, scorer)
            new_surfaces = [r.phrase.surface for r in reranked]
            assert new_surfaces.index(target.surface) <= \
                   surfaces.index(target.surface)

    def test_scorer_failure_names_phrase_and_segment(self):
        class Broken(LogProbScorer):
            def token_logprobs(self, segment, prompt, phrase_start, phrase_len):
                raise ScorerError("boom")

        doc = Document("d", tuple(f"w{i}" for i in range(10)))
        cand = CandidatePhrase("w3", 3, 1, [(3, 3)])
        with pytest.raises(ScorerError, match="'w3' on segment 0"):
            rank_keyphrases(doc, [cand], SkpConfig(segment_length=5), Broken())


class TestSelectTopN:
    def _ranked(self, n):
        docs = make_corpus_docs(seed=6, n_docs=1)
        doc = docs[0]
        candidates = extract_candidates(pos_tag(doc), n)
        scorer = BigramScorer().fit([doc.tokens])
        return rank_keyphrases(doc, candidates, SkpConfig(segment_length=64), scorer)

    def test_truncates_to_top_n(self):
        ranked = self._ranked(30)
        assume_enough = len(ranked) >= 15
        selected = select_top_n(ranked, 15)
        if assume_enough:
            assert len(selected) == 15
        assert selected == list(ranked[:len(selected)])

    def test_short_list_returned_whole(self):
        ranked = self._ranked(3)
        assert select_top_n(ranked, 15) == list(ranked)

    def test_empty(self):
        assert select_top_n([], 15) == []

    def test_validation(self):
        with pytest.raises(ConfigError):
            select_top_n([], 0)


class TestTfidfBaseline:
    def test_frequent_rare_token_wins(self):
        # candidate A: 3 occurrences, df 1/10; candidate B: 1 occurrence, df 10/10
        docs = [Document(str(i), ("common",)) for i in range(9)]
        target = Document("t", ("rare", "rare", "rare", "common"))
        docs.append(target)
        stats = CorpusStats.from_documents(docs)
        a = CandidatePhrase("rare", 0, 1, [(0, 0), (1, 1), (2, 2)])
        b = CandidatePhrase("common", 3, 1, [(3, 3)])
        ranked = rank_tfidf_baseline(target, [b, a], stats)
        assert ranked[0].phrase.surface == "rare"
        tf_idf_a = 3 * (math.log(11 / 2) + 1)
        assert ranked[0].score == pytest.approx(tf_idf_a, rel=1e-12)

    def test_identical_stats_fall_back_to_position(self):
        doc = Document("d", ("x", "y"))
        stats = CorpusStats.from_documents([doc])
        first = CandidatePhrase("x", 0, 1, [(0, 0)])
        second = CandidatePhrase("y", 1, 1, [(1, 1)])
        ranked = rank_tfidf_baseline(doc, [second, first], stats)
        assert [r.phrase.surface for r in ranked] == ["x", "y"]

    def test_empty(self):
        stats = CorpusStats.from_documents([])
        assert rank_tfidf_baseline(Document("d", ("a",)), [], stats) == []
