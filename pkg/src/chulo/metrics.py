"""Evaluation metrics and length-bucketed reports.

Micro-F1 pools true/false positives and false negatives over every
(item, label) decision. For single-label token tagging with no excluded
label this reduces to token accuracy; excluding a designated label
(typically "O") removes it from both prediction and gold pools.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence


def accuracy(predictions: Sequence[int], golds: Sequence[int]) -> float:
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds differ in length")
    if not golds:
        warnings.warn("accuracy of empty input defined as 0", stacklevel=2)
        return 0.0
    correct = sum(1 for p, g in zip(predictions, golds) if p == g)
    return correct / len(golds)


def micro_f1(
    predictions: Sequence,
    golds: Sequence,
    exclude_label: int | str | None = None,
) -> float:
    """Micro-averaged F1 over (item, label) decisions.

    Items may be single labels (one decision each) or collections of
    labels (multi-label decisions, compared as sets).
    """
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds differ in length")
    if not golds:
        warnings.warn("micro-F1 of empty input defined as 0", stacklevel=2)
        return 0.0
    tp = fp = fn = 0
    for pred, gold in zip(predictions, golds):
        if isinstance(pred, (set, frozenset)) or isinstance(gold, (set, frozenset)):
            pred_set, gold_set = set(pred), set(gold)
            if exclude_label is not None:
                pred_set.discard(exclude_label)
                gold_set.discard(exclude_label)
            tp += len(pred_set & gold_set)
            fp += len(pred_set - gold_set)
            fn += len(gold_set - pred_set)
        else:
            if pred == gold:
                if exclude_label is None or gold != exclude_label:
                    tp += 1
            else:
                if exclude_label is None or pred != exclude_label:
                    fp += 1
                if exclude_label is None or gold != exclude_label:
                    fn += 1
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


@dataclass
class BucketMetric:
    threshold: int
    count: int
    metric: float | None  # None for an empty bucket


@dataclass
class MetricsReport:
    metric_name: str  # "accuracy" or "micro_f1"
    overall: float
    buckets: list[BucketMetric] = field(default_factory=list)
    train_curve: list[dict] = field(default_factory=list)  # per-epoch rows
    seed: int = 0
    config_fingerprint: str = ""
    best_epoch: int | None = None

    def to_dict(self) -> dict:
        return {
            "metric_name": self.metric_name,
            "overall": self.overall,
            "buckets": [
                {"threshold": b.threshold, "count": b.count, "metric": b.metric}
                for b in self.buckets
            ],
            "train_curve": self.train_curve,
            "seed": self.seed,
            "config_fingerprint": self.config_fingerprint,
            "best_epoch": self.best_epoch,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MetricsReport":
        buckets = [BucketMetric(b["threshold"], b["count"], b["metric"])
                   for b in payload.get("buckets", [])]
        return cls(
            metric_name=payload["metric_name"],
            overall=payload["overall"],
            buckets=buckets,
            train_curve=payload.get("train_curve", []),
            seed=payload.get("seed", 0),
            config_fingerprint=payload.get("config_fingerprint", ""),
            best_epoch=payload.get("best_epoch"),
        )

    def fingerprint(self) -> str:
        """Digest of the report content; equal runs hash equal."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def render_report(report: MetricsReport) -> str:
    """Human-readable table, one row per length bucket."""
    lines = [f"{report.metric_name}: {report.overall:.4f}"]
    if report.buckets:
        width = max(len(f"> {b.threshold}") for b in report.buckets)
        for b in report.buckets:
            label = f"> {b.threshold}".ljust(width)
            value = "n/a" if b.metric is None else f"{b.metric:.4f}"
            lines.append(f"{label} ({b.count:>5}): {value}")
    if report.best_epoch is not None:
        lines.append(f"best epoch: {report.best_epoch}")
    if report.config_fingerprint:
        lines.append(f"config fingerprint: {report.config_fingerprint}")
    return "\n".join(lines)


def config_fingerprint(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
