"""Type-constrained prediction with NA calibration.

p(NA) is the NA template's renormalized trie score, so it lives on the
same scale as the positive relations. An instance is predicted NA exactly
when p(NA) > threshold; otherwise the best-scoring positive relation wins,
with ties broken toward the earliest label in score order.

The threshold is picked on a dev set by exhaustive sweep: micro F1 is a
step function of the threshold, so only the observed p(NA) values and the
two infinities can matter. -inf means "always NA" (every p(NA) beats it),
+inf means "never NA"; both sentinels are representable in the saved
artifact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .convert import ConversionScheme, coerce_scheme, construct_source, fill_templates
from .corpus import REInstance, TemplateSet, TypeConstraintMap
from .errors import BackendError, ValidationError
from .metrics import micro_f1
from .scoring import DEFAULT_PROB_FLOOR, ScoreVector, ScorerBackend, trie_score
from .trie import build_trie


@dataclass(frozen=True)
class CalibrationModel:
    """The NA threshold plus enough context to reuse it consistently."""

    threshold: float
    scale: str = "renormalized"
    dev_f1: float | None = None
    template_style: str | None = None
    scheme: str | None = None

    def __post_init__(self) -> None:
        if self.scale != "renormalized":
            raise ValidationError(f"unsupported calibration scale {self.scale!r}")
        if math.isnan(self.threshold):
            raise ValidationError("calibration threshold must not be NaN")


@dataclass(frozen=True)
class Prediction:
    id: str
    relation: str
    scores: ScoreVector


def _score_table(scores: ScoreVector | Mapping[str, float]) -> Mapping[str, float]:
    return scores.scores if isinstance(scores, ScoreVector) else scores


def _argmax_positive(table: Mapping[str, float], na_label: str) -> str | None:
    """Best positive label, earliest in mapping order on ties; None if no positives."""
    best_label: str | None = None
    best_score = -1.0
    for label, score in table.items():
        if label != na_label and score > best_score:
            best_label, best_score = label, score
    return best_label


def predict(scores: ScoreVector | Mapping[str, float], na_label: str,
            threshold: float) -> str:
    """NA iff p(NA) > threshold (strict); otherwise argmax over positives."""
    table = _score_table(scores)
    if na_label not in table:
        raise ValidationError(f"score vector lacks the NA label {na_label!r}")
    best = _argmax_positive(table, na_label)
    if best is None:
        raise ValidationError("score vector has no positive relations")
    if table[na_label] > threshold:
        return na_label
    return best


def calibrate(dev_scores: Sequence[tuple[ScoreVector | Mapping[str, float], str]],
              na_label: str) -> CalibrationModel:
    """Pick the threshold maximizing dev micro F1; ties go to the largest
    candidate (fewest abstentions)."""
    if not dev_scores:
        raise ValidationError("empty dev set")
    p_na: list[float] = []
    best_pos: list[str | None] = []
    golds: list[str] = []
    for vector, gold in dev_scores:
        table = _score_table(vector)
        if na_label not in table:
            raise ValidationError(f"dev score vector lacks the NA label {na_label!r}")
        p_na.append(table[na_label])
        # NA-only vectors (type pair never seen with a positive) predict NA
        # at every threshold
        best_pos.append(_argmax_positive(table, na_label))
        golds.append(gold)
    candidates = [-math.inf] + sorted(set(p_na)) + [math.inf]
    best_threshold, best_f1 = -math.inf, -1.0
    for s in candidates:
        preds = [na_label if best is None or p > s else best
                 for p, best in zip(p_na, best_pos)]
        f1 = micro_f1(preds, golds, na_label).f1
        if f1 >= best_f1:  # ascending sweep, >= keeps the largest optimum
            best_threshold, best_f1 = s, f1
    return CalibrationModel(threshold=best_threshold, dev_f1=best_f1)


def score_instance(backend: ScorerBackend, inst: REInstance, templates: TemplateSet,
                   tmap: TypeConstraintMap | None,
                   scheme: str | ConversionScheme,
                   mode: str = "renormalized",
                   prob_floor: float | None = DEFAULT_PROB_FLOOR) -> ScoreVector:
    """Renormalized (by default) trie scores over the instance's allowed relations.

    The trie is built from the allowed subset directly, one backend
    tokenize per template plus one next-token query per forky node. A type
    pair observed only with NA short-circuits to {NA: 1.0}.
    """
    ontology = templates.ontology
    scheme = coerce_scheme(scheme)
    allowed = (tmap.allowed_for(inst, ontology) if tmap is not None
               else ontology.labels)
    if allowed == (ontology.na_label,):
        return ScoreVector(scores={ontology.na_label: 1.0}, mode=mode)
    source = construct_source(inst, scheme)
    filled = fill_templates(inst, templates, allowed)
    try:
        token_ids = {label: backend.tokenize(text) for label, text in filled.items()}
        trie = build_trie(token_ids, backend.eos_id)
        return trie_score(backend, source, trie, mode=mode, prob_floor=prob_floor)
    except BackendError as exc:
        raise type(exc)(f"instance {inst.id!r}: {exc}") from exc


def constrained_predict(backend: ScorerBackend, inst: REInstance,
                        templates: TemplateSet, tmap: TypeConstraintMap | None,
                        calib: CalibrationModel,
                        scheme: str | ConversionScheme,
                        prob_floor: float | None = DEFAULT_PROB_FLOOR) -> Prediction:
    """Score the allowed relations and apply the calibrated NA rule."""
    vector = score_instance(backend, inst, templates, tmap, scheme,
                            mode="renormalized", prob_floor=prob_floor)
    na_label = templates.ontology.na_label
    if set(vector.scores) == {na_label}:
        return Prediction(id=inst.id, relation=na_label, scores=vector)
    relation = predict(vector, na_label, calib.threshold)
    return Prediction(id=inst.id, relation=relation, scores=vector)


def _encode_threshold(value: float) -> float | str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def save_calibration(model: CalibrationModel, path: str | Path) -> None:
    payload = {
        "threshold": _encode_threshold(model.threshold),
        "scale": model.scale,
        "dev_f1": model.dev_f1,
        "template_style": model.template_style,
        "scheme": model.scheme,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_calibration(path: str | Path) -> CalibrationModel:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot parse calibration artifact: {exc}") from exc
    try:
        threshold = float(data["threshold"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: bad calibration threshold: {exc}") from exc
    return CalibrationModel(
        threshold=threshold,
        scale=data.get("scale", "renormalized"),
        dev_f1=data.get("dev_f1"),
        template_style=data.get("template_style"),
        scheme=data.get("scheme"),
    )


def with_context(model: CalibrationModel, template_style: str | None,
                 scheme: str | None) -> CalibrationModel:
    """Attach provenance fields before saving the artifact."""
    return replace(model, template_style=template_style, scheme=scheme)
