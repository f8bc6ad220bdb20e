"""Source construction and relation verbalization, byte-for-byte."""

import logging
import random

import pytest

from relsum import (ConvertedPair, REInstance, ValidationError,
                    build_training_pairs, construct_source, fill_templates,
                    mention_text, verbalize_relation)
from relsum.convert import SCHEMES, coerce_scheme

from helpers import make_instance, semantic1_templates, tacred_ontology

CURIE = REInstance(id="curie", tokens=("Marie", "Curie", "worked", "in",
                                       "Paris", "."),
                   subj_span=(0, 2), obj_span=(4, 5),
                   subj_type="person", obj_type="city",
                   gold_relation="per:cities_of_residence")


class TestMentionText:
    """Mention extraction is a plain space join over the span."""

    def test_multi_token_subject(self):
        assert mention_text(CURIE, "subj") == "Marie Curie"

    def test_single_token_object(self):
        assert mention_text(CURIE, "obj") == "Paris"

    def test_bad_selector_rejected(self):
        with pytest.raises(ValidationError):
            mention_text(CURIE, "subject")


class TestConstructSource:
    """Each scheme's exact output string on a small fixed instance."""

    def test_verbalize(self):
        assert construct_source(CURIE, "verbalize") == (
            "The subject entity is Marie Curie . The object entity is Paris . "
            "The type of Marie Curie is person . The type of Paris is city . "
            "Marie Curie worked in Paris .")

    def test_marker(self):
        assert construct_source(CURIE, "marker") == (
            "<e1> Marie Curie </e1> worked in <e2> Paris </e2> .")

    def test_typed_marker(self):
        assert construct_source(CURIE, "typed_marker") == (
            "<e1-person> Marie Curie </e1-person> worked in "
            "<e2-city> Paris </e2-city> .")

    def test_typed_marker_punct(self):
        assert construct_source(CURIE, "typed_marker_punct") == (
            "@ * person * Marie Curie @ worked in # ^ city ^ Paris # .")

    def test_verbalize_plus_typed_marker_puts_context_first(self):
        out = construct_source(CURIE, "verbalize_plus_typed_marker")
        assert out == (
            "The subject entity is Marie Curie . The object entity is Paris . "
            "The type of Marie Curie is person . The type of Paris is city . "
            "<e1-person> Marie Curie </e1-person> worked in "
            "<e2-city> Paris </e2-city> .")

    def test_verbalize_plus_typed_marker_punct(self):
        out = construct_source(CURIE, "verbalize_plus_typed_marker_punct")
        assert out.endswith("@ * person * Marie Curie @ worked in "
                            "# ^ city ^ Paris # .")
        assert out.startswith("The subject entity is Marie Curie .")

    def test_verbalize_omits_type_sentences_for_untyped_entities(self):
        inst = make_instance(subj_type=None, obj_type="city",
                             tokens=("Anna", "Kim", "visited", "Oslo", "."),
                             subj_span=(0, 2), obj_span=(3, 4))
        assert construct_source(inst, "verbalize") == (
            "The subject entity is Anna Kim . The object entity is Oslo . "
            "The type of Oslo is city . "
            "Anna Kim visited Oslo .")

    def test_typed_schemes_reject_untyped_instances(self):
        inst = make_instance(subj_type=None)
        for scheme in ("typed_marker", "typed_marker_punct",
                       "verbalize_plus_typed_marker",
                       "verbalize_plus_typed_marker_punct"):
            with pytest.raises(ValidationError, match="types"):
                construct_source(inst, scheme)

    def test_plain_marker_and_verbalize_accept_untyped_instances(self):
        inst = make_instance(subj_type=None, obj_type=None)
        assert "<e1>" in construct_source(inst, "marker")
        assert construct_source(inst, "verbalize").startswith("The subject")

    def test_object_before_subject_layout(self):
        inst = make_instance(tokens=("Oslo", "welcomed", "Anna", "."),
                             subj_span=(2, 3), obj_span=(0, 1),
                             subj_type="person", obj_type="city")
        assert construct_source(inst, "marker") == (
            "<e2> Oslo </e2> welcomed <e1> Anna </e1> .")

    def test_adjacent_spans_close_then_open(self):
        inst = make_instance(tokens=("Anna", "Oslo", "again", "."),
                             subj_span=(0, 1), obj_span=(1, 2))
        assert construct_source(inst, "marker") == (
            "<e1> Anna </e1> <e2> Oslo </e2> again .")

    def test_marker_collision_logs_warning(self, caplog):
        inst = make_instance(tokens=("<e1>", "Anna", "likes", "Oslo", "."),
                             subj_span=(1, 2), obj_span=(3, 4))
        with caplog.at_level(logging.WARNING, logger="relsum.convert"):
            out = construct_source(inst, "marker")
        assert "marker tokens" in caplog.text
        assert out == "<e1> <e1> Anna </e1> likes <e2> Oslo </e2> ."

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValidationError):
            coerce_scheme("fancy")


class TestSchemeTokenCounts:
    """Marker schemes add a fixed number of tokens; seeded property loop."""

    def test_added_token_counts(self):
        rng = random.Random(7411)
        words = ["w%d" % k for k in range(12)]
        added = {"marker": 4, "typed_marker": 4, "typed_marker_punct": 10}
        for _ in range(50):
            n = rng.randint(4, 10)
            tokens = [rng.choice(words) for _ in range(n)]
            s0 = rng.randrange(0, n - 2)
            s1 = s0 + 1
            o0 = rng.randrange(s1, n - 1)
            o1 = o0 + 1
            inst = make_instance(tokens=tokens, subj_span=(s0, s1),
                                 obj_span=(o0, o1), subj_type="person",
                                 obj_type="city")
            for scheme, extra in added.items():
                out = construct_source(inst, scheme).split()
                assert len(out) == n + extra, scheme

    def test_verbalize_keeps_sentence_tokens_verbatim(self):
        rng = random.Random(90125)
        for _ in range(25):
            n = rng.randint(4, 9)
            tokens = ["t%d" % rng.randrange(40) for _ in range(n)]
            inst = make_instance(tokens=tokens, subj_span=(0, 1),
                                 obj_span=(n - 2, n - 1))
            out = construct_source(inst, "verbalize")
            assert out.endswith(" ".join(tokens))


class TestVerbalizeRelation:
    """Template filling substitutes both placeholders."""

    def test_fills_both_slots(self):
        assert verbalize_relation("{subj} is the spouse of {obj}", CURIE) == (
            "Marie Curie is the spouse of Paris")

    def test_fill_templates_covers_whole_ontology_in_order(self):
        templates = semantic1_templates()
        filled = fill_templates(CURIE, templates)
        assert list(filled) == list(templates.ontology.labels)
        assert filled["per:cities_of_residence"] == (
            "Marie Curie lives in the city Paris")

    def test_fill_templates_with_label_subset_preserves_given_order(self):
        templates = semantic1_templates()
        filled = fill_templates(CURIE, templates,
                                labels=["per:age", "no_relation"])
        assert list(filled) == ["per:age", "no_relation"]

    def test_fill_templates_unknown_label_rejected(self):
        templates = semantic1_templates()
        with pytest.raises(ValidationError):
            fill_templates(CURIE, templates, labels=["per:age", "made_up"])


class TestFilledTargetShape:
    """Filled targets keep the mention placement the template set promises."""

    def test_every_filled_target_contains_both_mentions(self):
        templates = semantic1_templates()
        rng = random.Random(8080)
        words = ("alpha", "beta", "gamma", "delta", "omega", "park", "unit")
        for _ in range(30):
            n = rng.randint(4, 10)
            tokens = tuple(f"{rng.choice(words)}{i}" for i in range(n))
            mid = n // 2
            subj_span = (0, rng.randint(1, mid))
            obj_start = rng.randint(mid, n - 1)
            obj_span = (obj_start, rng.randint(obj_start + 1, n))
            inst = REInstance(id="p", tokens=tokens, subj_span=subj_span,
                              obj_span=obj_span)
            subj = mention_text(inst, "subj")
            obj = mention_text(inst, "obj")
            for label, text in fill_templates(inst, templates).items():
                assert subj in text and obj in text, label

    def test_shipped_positive_targets_run_subject_first_object_last(self):
        templates = semantic1_templates()
        filled = fill_templates(CURIE, templates)
        for label, text in filled.items():
            if label == templates.ontology.na_label:
                # the NA sentence uses the relation-neutral wording instead
                continue
            assert text.startswith("Marie Curie"), label
            assert text.rstrip(" .").endswith("Paris"), label


class TestBuildTrainingPairs:
    """Gold-labeled instances become (source, target) pairs."""

    def test_pair_contents(self):
        templates = semantic1_templates()
        (pair,) = build_training_pairs([CURIE], templates, "typed_marker_punct")
        assert pair == ConvertedPair(
            source="@ * person * Marie Curie @ worked in # ^ city ^ Paris # .",
            target="Marie Curie lives in the city Paris",
            relation="per:cities_of_residence")

    def test_gold_relation_required(self):
        templates = semantic1_templates()
        with pytest.raises(ValidationError, match="gold"):
            build_training_pairs([make_instance()], templates, "marker")

    def test_gold_outside_template_set_rejected(self):
        ont = tacred_ontology()
        templates = semantic1_templates(ont)
        inst = make_instance(gold_relation="per:title")
        odd = REInstance(id="odd", tokens=inst.tokens, subj_span=inst.subj_span,
                         obj_span=inst.obj_span, gold_relation="not:a:relation")
        with pytest.raises(ValidationError, match="not:a:relation"):
            build_training_pairs([odd], templates, "marker")
