"""Sentence and relation verbalization.

Instances become scorer source strings by highlighting the two mentions:
either inline markers wrapped around the mention tokens, or a verbalized
context prepended before the sentence that names the entities and their
types ("The subject entity is ... ."), or both. Relation templates become
target strings by substituting the mention texts for {subj} and {obj}.

Detokenization is plain space-joining throughout; the corpora involved are
pre-tokenized and no attempt is made to reattach punctuation.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import REInstance, TemplateSet
from .errors import ValidationError

logger = logging.getLogger(__name__)


class ConversionScheme(str, enum.Enum):
    VERBALIZE = "verbalize"
    MARKER = "marker"
    TYPED_MARKER = "typed_marker"
    TYPED_MARKER_PUNCT = "typed_marker_punct"
    VERBALIZE_PLUS_TYPED_MARKER = "verbalize_plus_typed_marker"
    VERBALIZE_PLUS_TYPED_MARKER_PUNCT = "verbalize_plus_typed_marker_punct"

    @property
    def needs_types(self) -> bool:
        """Typed markers cannot degrade; plain markers and verbalize can."""
        return self in (ConversionScheme.TYPED_MARKER,
                        ConversionScheme.TYPED_MARKER_PUNCT,
                        ConversionScheme.VERBALIZE_PLUS_TYPED_MARKER,
                        ConversionScheme.VERBALIZE_PLUS_TYPED_MARKER_PUNCT)

    @property
    def verbalizes(self) -> bool:
        return self in (ConversionScheme.VERBALIZE,
                        ConversionScheme.VERBALIZE_PLUS_TYPED_MARKER,
                        ConversionScheme.VERBALIZE_PLUS_TYPED_MARKER_PUNCT)


SCHEMES = tuple(s.value for s in ConversionScheme)


def coerce_scheme(scheme: str | ConversionScheme) -> ConversionScheme:
    try:
        return ConversionScheme(scheme)
    except ValueError:
        raise ValidationError(
            f"unknown conversion scheme {scheme!r} (expected one of {SCHEMES})") from None


@dataclass(frozen=True)
class ConvertedPair:
    """One scorer input and, when the gold relation is known, its target."""

    source: str
    target: str | None = None
    relation: str | None = None


def mention_text(inst: REInstance, which: str) -> str:
    """Tokens of the subject or object span joined by single spaces."""
    if which == "subj":
        start, end = inst.subj_span
    elif which == "obj":
        start, end = inst.obj_span
    else:
        raise ValidationError(f"which must be 'subj' or 'obj', got {which!r}")
    return " ".join(inst.tokens[start:end])


def _verbalized_context(inst: REInstance) -> str:
    subj, obj = mention_text(inst, "subj"), mention_text(inst, "obj")
    sentences = [f"The subject entity is {subj} .", f"The object entity is {obj} ."]
    if inst.subj_type is not None:
        sentences.append(f"The type of {subj} is {inst.subj_type} .")
    if inst.obj_type is not None:
        sentences.append(f"The type of {obj} is {inst.obj_type} .")
    return " ".join(sentences) + " "


def _marker_wraps(inst: REInstance, scheme: ConversionScheme
                  ) -> tuple[list[str], list[str], list[str], list[str]]:
    """(subj prefix, subj suffix, obj prefix, obj suffix) marker token lists."""
    if scheme is ConversionScheme.MARKER:
        return ["<e1>"], ["</e1>"], ["<e2>"], ["</e2>"]
    if scheme in (ConversionScheme.TYPED_MARKER,
                  ConversionScheme.VERBALIZE_PLUS_TYPED_MARKER):
        return ([f"<e1-{inst.subj_type}>"], [f"</e1-{inst.subj_type}>"],
                [f"<e2-{inst.obj_type}>"], [f"</e2-{inst.obj_type}>"])
    # typed marker with punctuation
    return (["@", "*", inst.subj_type, "*"], ["@"],
            ["#", "^", inst.obj_type, "^"], ["#"])


def _marked_tokens(inst: REInstance, scheme: ConversionScheme) -> list[str]:
    subj_pre, subj_suf, obj_pre, obj_suf = _marker_wraps(inst, scheme)
    collisions = set(subj_pre + subj_suf + obj_pre + obj_suf) & set(inst.tokens)
    if collisions:
        logger.warning("instance %r: marker tokens %s also occur in the sentence",
                       inst.id, sorted(collisions))
    out: list[str] = []
    for i, token in enumerate(inst.tokens):
        if i == inst.subj_span[0]:
            out += subj_pre
        if i == inst.obj_span[0]:
            out += obj_pre
        out.append(token)
        if i == inst.subj_span[1] - 1:
            out += subj_suf
        if i == inst.obj_span[1] - 1:
            out += obj_suf
    return out


def construct_source(inst: REInstance, scheme: str | ConversionScheme) -> str:
    """Deterministic scorer input for one instance under one scheme."""
    scheme = coerce_scheme(scheme)
    if scheme.needs_types and not inst.has_types:
        raise ValidationError(
            f"instance {inst.id!r}: scheme {scheme.value!r} requires entity types")
    context = _verbalized_context(inst) if scheme.verbalizes else ""
    if scheme is ConversionScheme.VERBALIZE:
        body = " ".join(inst.tokens)
    else:
        body = " ".join(_marked_tokens(inst, scheme))
    return context + body


def verbalize_relation(template: str, inst: REInstance) -> str:
    """Fill {subj} and {obj} with the instance's mention texts."""
    return (template
            .replace("{subj}", mention_text(inst, "subj"))
            .replace("{obj}", mention_text(inst, "obj")))


def build_training_pairs(instances: Iterable[REInstance], templates: TemplateSet,
                         scheme: str | ConversionScheme) -> list[ConvertedPair]:
    """One (source, filled gold template) pair per instance; golds required."""
    scheme = coerce_scheme(scheme)
    pairs: list[ConvertedPair] = []
    for inst in instances:
        if inst.gold_relation is None:
            raise ValidationError(
                f"instance {inst.id!r}: gold relation required for training pairs")
        template = templates.templates.get(inst.gold_relation)
        if template is None:
            raise ValidationError(
                f"instance {inst.id!r}: no template for relation {inst.gold_relation!r}")
        pairs.append(ConvertedPair(
            source=construct_source(inst, scheme),
            target=verbalize_relation(template, inst),
            relation=inst.gold_relation,
        ))
    return pairs


def fill_templates(inst: REInstance, templates: TemplateSet,
                   labels: Sequence[str] | None = None) -> dict[str, str]:
    """Mention-filled template strings for the given labels (default: all),
    in the order given."""
    if labels is None:
        labels = templates.ontology.labels
    out: dict[str, str] = {}
    for label in labels:
        template = templates.templates.get(label)
        if template is None:
            raise ValidationError(f"no template for relation {label!r}")
        out[label] = verbalize_relation(template, inst)
    return out
