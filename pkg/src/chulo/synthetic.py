"""Synthetic corpora for self-tests and desk-scale training checks.

Documents are built from invented noun-like words (shaped so the default
tagger files them as nouns) mixed with real function words. For the
classification corpus the class is determined entirely by which planted
phrase family appears; for the tagging corpus, entity surfaces are drawn
from per-type pools and annotated with BIO tags.
"""

from __future__ import annotations

import numpy as np

ONSETS = ["br", "cr", "dr", "fl", "gl", "kr", "pl", "sk", "tr", "vr",
          "z", "m", "n", "d", "t", "k", "v", "g", "p", "l"]
VOWELS = ["a", "e", "i", "o", "u"]
CODAS = ["x", "n", "r", "l", "k", "t", "m", "p"]

FUNCTION_WORDS = ["the", "of", "and", "to", "in", "a", "for", "on", "with",
                  "as", "by", "at", "from", "or", "but"]

# lexicon verbs/adverbs: excluded from candidate spans by the tagger
ACTION_WORDS = ["said", "made", "took", "saw", "came", "looked", "run",
                "move", "turn", "play", "help", "quickly", "often", "never",
                "really", "still", "walked", "started", "seemed", "talked"]


def _fake_noun(rng: np.random.Generator) -> str:
    # two syllables ending in a consonant, so suffix rules stay inert
    parts = []
    for _ in range(2):
        parts.append(ONSETS[rng.integers(len(ONSETS))])
        parts.append(VOWELS[rng.integers(len(VOWELS))])
    parts.append(CODAS[rng.integers(len(CODAS))])
    return "".join(parts)


def _word_pool(rng: np.random.Generator, size: int, taken: set[str]) -> list[str]:
    pool: list[str] = []
    while len(pool) < size:
        word = _fake_noun(rng)
        if word not in taken:
            taken.add(word)
            pool.append(word)
    return pool


def synthetic_doc_corpus(
    n_train: int = 500,
    n_test: int = 100,
    n_classes: int = 3,
    seed: int = 0,
    phrases_per_class: int = 6,
    min_len: int = 250,
    max_len: int = 500,
    noun_noise_share: float = 0.10,
) -> tuple[list[dict], list[dict], list[str]]:
    """(train records, test records, label names) for doc-single data.

    Each document plants 2-4 phrases of exactly one class family (one
    occurrence forced near the start) inside shared distractor text
    that is mostly non-noun, so candidate extraction concentrates on
    the planted phrases while most chunks carry no class signal.
    """
    rng = np.random.default_rng(seed)
    taken: set[str] = set()
    distractors = _word_pool(rng, 12, taken)
    families = []
    for _ in range(n_classes):
        stems = _word_pool(rng, 2 * phrases_per_class, taken)
        families.append([(stems[2 * i], stems[2 * i + 1])
                         for i in range(phrases_per_class)])
    labels = [f"family-{c}" for c in range(n_classes)]

    def make_record(index: int, split: str) -> dict:
        cls = index % n_classes
        length = int(rng.integers(min_len, max_len + 1))
        n_phrases = int(rng.integers(2, 5))
        chosen = rng.choice(phrases_per_class, size=min(n_phrases, phrases_per_class),
                            replace=False)
        units: list[tuple[str, ...] | None] = []
        for phrase_idx in chosen:
            for _ in range(int(rng.integers(2, 5))):
                units.append(families[cls][phrase_idx])
        n_filler = max(10, length - 2 * len(units))
        units.extend([None] * n_filler)
        order = rng.permutation(len(units))
        # force one planted phrase into the first few units
        first_phrase = next(i for i in range(len(order)) if units[order[i]] is not None)
        early = int(rng.integers(0, 4))
        order[early], order[first_phrase] = order[first_phrase], order[early]
        tokens: list[str] = []
        for unit_idx in order:
            unit = units[unit_idx]
            if unit is None:
                draw = rng.random()
                if draw < noun_noise_share:
                    tokens.append(distractors[rng.integers(len(distractors))])
                elif draw < noun_noise_share + 0.5:
                    tokens.append(FUNCTION_WORDS[rng.integers(len(FUNCTION_WORDS))])
                else:
                    tokens.append(ACTION_WORDS[rng.integers(len(ACTION_WORDS))])
            else:
                tokens.extend(unit)
        return {"id": f"{split}-{index}", "text": " ".join(tokens),
                "label": labels[cls]}

    train = [make_record(i, "train") for i in range(n_train)]
    test = [make_record(i, "test") for i in range(n_test)]
    return train, test, labels


def synthetic_token_corpus(
    n_docs: int = 200,
    n_types: int = 3,
    seed: int = 0,
    min_len: int = 200,
    max_len: int = 600,
    entity_rate: float = 0.16,
) -> tuple[list[dict], list[str]]:
    """(records, BIO label names) for token-schema data.

    Entity surfaces come from disjoint per-type pools (1-3 tokens each);
    roughly three tokens in ten belong to an entity, so an all-outside
    baseline stays far below 0.9 micro-F1.
    """
    rng = np.random.default_rng(seed)
    taken: set[str] = set()
    filler_nouns = _word_pool(rng, 60, taken)
    pools = []
    for _ in range(n_types):
        # begin and continuation stems are disjoint so BIO labels are
        # recoverable from token identity plus local context
        begin_stems = _word_pool(rng, 6, taken)
        cont_stems = _word_pool(rng, 6, taken)
        surfaces = []
        for i in range(8):
            n_tok = int(rng.integers(1, 4))
            surface = [begin_stems[i % len(begin_stems)]]
            surface.extend(cont_stems[(i + j) % len(cont_stems)]
                           for j in range(n_tok - 1))
            surfaces.append(tuple(surface))
        pools.append(surfaces)
    labels = ["O"]
    for t in range(n_types):
        labels.extend([f"B-T{t}", f"I-T{t}"])

    records = []
    for index in range(n_docs):
        length = int(rng.integers(min_len, max_len + 1))
        tokens: list[str] = []
        tags: list[str] = []
        while len(tokens) < length:
            if rng.random() < entity_rate:
                ent_type = int(rng.integers(n_types))
                surface = pools[ent_type][rng.integers(len(pools[ent_type]))]
                tokens.extend(surface)
                tags.append(f"B-T{ent_type}")
                tags.extend([f"I-T{ent_type}"] * (len(surface) - 1))
            elif rng.random() < 0.55:
                tokens.append(FUNCTION_WORDS[rng.integers(len(FUNCTION_WORDS))])
                tags.append("O")
            else:
                tokens.append(filler_nouns[rng.integers(len(filler_nouns))])
                tags.append("O")
        tokens = tokens[:length]
        tags = tags[:length]
        records.append({"id": f"doc-{index}", "tokens": tokens, "tags": tags})
    return records, labels


def synthetic_multilabel_corpus(
    n_docs: int = 120,
    n_classes: int = 4,
    seed: int = 0,
) -> tuple[list[dict], list[str]]:
    """Doc-multi records: each document carries 1-2 planted families."""
    rng = np.random.default_rng(seed)
    train, _, labels = synthetic_doc_corpus(
        n_train=n_docs, n_test=0, n_classes=n_classes, seed=seed)
    records = []
    for i, base in enumerate(train):
        extra = int(rng.integers(0, n_classes))
        label_set = {base["label"]}
        if labels[extra] != base["label"] and rng.random() < 0.5:
            donor = train[(i + extra + 1) % len(train)]
            if donor["label"] == labels[extra]:
                base = dict(base)
                base["text"] = base["text"] + " " + " ".join(
                    donor["text"].split()[:40])
                label_set.add(labels[extra])
        records.append({"id": f"multi-{i}", "text": base["text"],
                        "labels": sorted(label_set)})
    return records, labels
