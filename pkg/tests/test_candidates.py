import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chulo.candidates import extract_candidates, match_spans, normalize_surface
from chulo.errors import DataError
from chulo.tagging import PosTaggedDocument

NOUNY = ("NN", "NNS", "NNP", "NNPS")
TAG_POOL = NOUNY + ("JJ", "JJR", "VB", "OTHER", "PUNCT", "RB")


def spans_by_re(tags):
    """Independent oracle: leftmost-longest matching via the re module."""
    symbols = "".join("N" if t.startswith("NN") else "J" if t == "JJ" else "O"
                      for t in tags)
    return [(m.start(), m.end() - 1) for m in re.finditer(r"[NJ]*N", symbols)]


class TestMatchSpans:
    def test_adjective_noun(self):
        assert match_spans(["OTHER", "JJ", "NN"]) == [(1, 2)]

    def test_bare_adjective_rejected(self):
        assert match_spans(["JJ"]) == []

    def test_trailing_adjectives_trimmed(self):
        assert match_spans(["JJ", "NN", "JJ"]) == [(0, 1)]

    def test_longest_run(self):
        assert match_spans(["NN", "JJ", "NNS", "OTHER", "NN"]) == [(0, 2), (4, 4)]

    def test_comparatives_excluded(self):
        # only bare JJ participates, not JJR/JJS
        assert match_spans(["JJR", "NN"]) == [(1, 1)]

    @given(st.lists(st.sampled_from(TAG_POOL), max_size=40))
    @settings(max_examples=300, deadline=None)
    def test_agrees_with_re_oracle(self, tags):
        assert match_spans(tags) == spans_by_re(tags)

    @given(st.lists(st.sampled_from(TAG_POOL), max_size=40))
    @settings(max_examples=100, deadline=None)
    def test_spans_never_overlap_and_match_pattern(self, tags):
        spans = match_spans(tags)
        last_end = -1
        for start, end in spans:
            assert start > last_end
            last_end = end
            assert tags[end].startswith("NN")
            for k in range(start, end + 1):
                assert tags[k].startswith("NN") or tags[k] == "JJ"


class TestExtractCandidates:
    def _tagged(self, tokens, tags):
        return PosTaggedDocument(tuple(tokens), tuple(tags))

    def test_adjective_noun_phrase(self):
        cands = extract_candidates(self._tagged(["the", "big", "dog"],
                                                ["OTHER", "JJ", "NN"]))
        assert len(cands) == 1
        assert cands[0].surface == "big dog"
        assert cands[0].first_occurrence == 1
        assert cands[0].token_span_length == 2

    def test_no_candidates(self):
        assert extract_candidates(self._tagged(["big"], ["JJ"])) == []

    def test_dedupe_keeps_earliest_and_all_spans(self):
        cands = extract_candidates(self._tagged(["tax", "and", "tax"],
                                                ["NN", "OTHER", "NN"]))
        assert len(cands) == 1
        assert cands[0].first_occurrence == 0
        assert cands[0].all_occurrences == [(0, 0), (2, 2)]

    def test_dedupe_is_case_insensitive(self):
        cands = extract_candidates(self._tagged(["Tax", "and", "tax"],
                                                ["NN", "OTHER", "NN"]))
        assert len(cands) == 1
        assert cands[0].surface == "tax"

    def test_ordered_by_first_occurrence(self):
        cands = extract_candidates(self._tagged(
            ["zeta", "the", "alpha"], ["NN", "OTHER", "NN"]))
        assert [c.surface for c in cands] == ["zeta", "alpha"]

    def test_cap_applies_after_dedupe(self):
        tokens, tags = [], []
        for i in range(10):
            tokens.extend([f"w{i}", "."])
            tags.extend(["NN", "PUNCT"])
        cands = extract_candidates(self._tagged(tokens, tags), max_candidates=3)
        assert [c.surface for c in cands] == ["w0", "w1", "w2"]

    def test_cap_validation(self):
        with pytest.raises(DataError):
            extract_candidates(self._tagged(["dog"], ["NN"]), max_candidates=0)

    def test_idempotent(self):
        tagged = self._tagged(["big", "dog", "runs", "big", "dog"],
                              ["JJ", "NN", "VBZ", "JJ", "NN"])
        first = extract_candidates(tagged)
        second = extract_candidates(tagged)
        assert [(c.surface, c.first_occurrence, c.all_occurrences) for c in first] == \
               [(c.surface, c.first_occurrence, c.all_occurrences) for c in second]

    def test_first_occurrence_is_minimum_span_start(self):
        tagged = self._tagged(["dog", "the", "dog"], ["NN", "OTHER", "NN"])
        cand = extract_candidates(tagged)[0]
        assert cand.first_occurrence == min(s for s, _ in cand.all_occurrences)

    def test_normalize_surface(self):
        assert normalize_surface(("Big", "Dog")) == "big dog"
