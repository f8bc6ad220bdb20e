"""Shared builders and the independent scoring oracle used by the tests."""

from __future__ import annotations

from pathlib import Path

from relsum import (DEFAULT_PROB_FLOOR, REInstance, RelationOntology,
                    TemplateSet, load_templates, shipped_file,
                    template_file_labels)

DATA_DIR = Path(__file__).resolve().parent / "data"


def tacred_ontology() -> RelationOntology:
    labels = template_file_labels(shipped_file("tacred_semantic1.tsv"))
    return RelationOntology(labels=tuple(labels), na_label="no_relation")


def semantic1_templates(ontology: RelationOntology | None = None) -> TemplateSet:
    ontology = ontology or tacred_ontology()
    return load_templates(shipped_file("tacred_semantic1.tsv"), ontology)


def semeval_ontology() -> RelationOntology:
    labels = template_file_labels(shipped_file("semeval_semantic.tsv"))
    return RelationOntology(labels=tuple(labels), na_label="Other")


def make_instance(id_: str = "t0", tokens=("Anna", "Kim", "visited", "Oslo", "."),
                  subj_span=(0, 2), obj_span=(3, 4), subj_type="PERSON",
                  obj_type="CITY", gold_relation=None) -> REInstance:
    return REInstance(id=id_, tokens=tuple(tokens), subj_span=subj_span,
                      obj_span=obj_span, subj_type=subj_type, obj_type=obj_type,
                      gold_relation=gold_relation)


def brute_force_scores(backend, source: str, sequences: dict[str, list[int]],
                       eos_id: int, mode: str = "raw",
                       prob_floor: float | None = DEFAULT_PROB_FLOOR) -> dict[str, float]:
    """Score every relation independently, one position at a time, with no
    trie and no caching. At each position the sibling set is recomputed from
    the raw sequence map: the distinct next tokens of all sequences that
    share the prefix. Positions with a single continuation cost nothing;
    positions with two or more multiply in the chosen token's probability
    (divided by the sibling mass in renormalized mode). The floor is applied
    to every sibling before the division, matching the scorer contract."""
    seqs = {rel: list(ids) + [eos_id] for rel, ids in sequences.items()}
    out: dict[str, float] = {}
    for rel, seq in seqs.items():
        score = 1.0
        for k, token in enumerate(seq):
            prefix = seq[:k]
            siblings = sorted({s[k] for s in seqs.values()
                               if len(s) > k and s[:k] == prefix})
            if len(siblings) < 2:
                continue
            probs = backend.next_token(source, prefix, siblings)
            by_token = dict(zip(siblings, probs))
            chosen = by_token[token]
            if prob_floor is not None:
                chosen = max(chosen, prob_floor)
                mass = sum(max(p, prob_floor) for p in probs)
            else:
                mass = sum(probs)
            if mode == "renormalized":
                score *= chosen / mass
            else:
                score *= chosen
        out[rel] = score
    return out
