"""Input validation helpers for the estimator API."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def check_text_list(X, name: str = "X") -> list[str]:
    if isinstance(X, str):
        raise ValueError(f"{name} must be a sequence of texts, not a single string")
    texts = list(X)
    for i, item in enumerate(texts):
        if not isinstance(item, str):
            raise ValueError(f"{name}[{i}] is {type(item).__name__}, expected str")
    return texts


def check_token_lists(X, name: str = "X") -> list[list[str]]:
    rows = list(X)
    out = []
    for i, row in enumerate(rows):
        if isinstance(row, str):
            raise ValueError(
                f"{name}[{i}] is a string; pass pre-split token sequences")
        tokens = [str(t) for t in row]
        if not tokens:
            raise ValueError(f"{name}[{i}] is empty")
        out.append(tokens)
    return out


def check_aligned_lengths(X: Sequence, y: Sequence, x_name="X", y_name="y") -> None:
    if len(X) != len(y):
        raise ValueError(
            f"{x_name} and {y_name} differ in length: {len(X)} vs {len(y)}")


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
