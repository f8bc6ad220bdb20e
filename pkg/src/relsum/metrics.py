"""Evaluation metrics for relation extraction.

micro_f1 excludes NA from both sides of the confusion counts: predicted
positives, gold positives, and their overlap drive precision and recall,
and a zero denominator yields 0 (not the lenient 100%-precision convention
some scorers use).

macro_f1_directed reimplements the documented semantics of direction-aware
macro scoring: directed labels like "Cause-Effect(e1,e2)" collapse to
their base class for aggregation, but a prediction only counts as correct
when the full directed label matches. The designated "other" class is
excluded, and the mean runs over the base classes present in the data.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    predicted_positive: int
    gold_positive: int
    correct_positive: int
    per_class: dict[str, tuple[float, float, float]] | None = None

    def to_json(self) -> dict:
        out: dict = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": {
                "predicted_positive": self.predicted_positive,
                "gold_positive": self.gold_positive,
                "correct_positive": self.correct_positive,
            },
        }
        if self.per_class is not None:
            out["per_class"] = {
                label: {"precision": p, "recall": r, "f1": f}
                for label, (p, r, f) in self.per_class.items()
            }
        return out


def _prf(correct: int, predicted: int, gold: int) -> tuple[float, float, float]:
    precision = correct / predicted if predicted else 0.0
    recall = correct / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def _check_lengths(preds: Sequence[str], golds: Sequence[str]) -> None:
    if len(preds) != len(golds):
        raise ValidationError(
            f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")


def micro_f1(preds: Sequence[str], golds: Sequence[str], na_label: str) -> EvalReport:
    preds, golds = list(preds), list(golds)
    _check_lengths(preds, golds)
    predicted = sum(1 for p in preds if p != na_label)
    gold = sum(1 for g in golds if g != na_label)
    correct = sum(1 for p, g in zip(preds, golds) if p == g != na_label)
    precision, recall, f1 = _prf(correct, predicted, gold)
    per_class: dict[str, tuple[float, float, float]] = {}
    for label in sorted((set(preds) | set(golds)) - {na_label}):
        per_class[label] = _prf(
            sum(1 for p, g in zip(preds, golds) if p == g == label),
            sum(1 for p in preds if p == label),
            sum(1 for g in golds if g == label))
    return EvalReport(precision, recall, f1, predicted, gold, correct, per_class)


_DIRECTED = re.compile(r"^(.+)\((e1,e2|e2,e1)\)$")


def _base_class(label: str, other_label: str) -> str:
    if label == other_label:
        return label
    match = _DIRECTED.match(label)
    if not match:
        raise ValidationError(
            f"label {label!r} is neither {other_label!r} nor directed like 'Class(e1,e2)'")
    return match.group(1)


def macro_f1_directed(preds: Sequence[str], golds: Sequence[str],
                      other_label: str = "Other") -> EvalReport:
    preds, golds = list(preds), list(golds)
    _check_lengths(preds, golds)
    pred_base = [_base_class(l, other_label) for l in preds]
    gold_base = [_base_class(l, other_label) for l in golds]
    classes = sorted((set(pred_base) | set(gold_base)) - {other_label})
    per_class: dict[str, tuple[float, float, float]] = {}
    precisions: list[float] = []
    recalls: list[float] = []
    f1s: list[float] = []
    total_predicted = total_gold = total_correct = 0
    for cls in classes:
        predicted = sum(1 for b in pred_base if b == cls)
        gold = sum(1 for b in gold_base if b == cls)
        # correctness needs the full directed label to match
        correct = sum(1 for p, g, b in zip(preds, golds, pred_base)
                      if b == cls and p == g)
        p, r, f = _prf(correct, predicted, gold)
        per_class[cls] = (p, r, f)
        precisions.append(p)
        recalls.append(r)
        f1s.append(f)
        total_predicted += predicted
        total_gold += gold
        total_correct += correct
    if not classes:
        return EvalReport(0.0, 0.0, 0.0, 0, 0, 0, {})
    n = len(classes)
    return EvalReport(sum(precisions) / n, sum(recalls) / n, sum(f1s) / n,
                      total_predicted, total_gold, total_correct, per_class)
