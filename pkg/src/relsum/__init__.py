"""Relation extraction by scoring verbalized relation templates.

Instances carry a sentence plus two entity spans. Each candidate relation
is rendered through a template into a short sentence, the filled sentences
are arranged in a token trie, and a sequence scorer is queried only at the
trie's branch points. The per-relation path probabilities, raw or
renormalized, drive an argmax with a calibrated abstention threshold.
"""

from .convert import (SCHEMES, ConversionScheme, ConvertedPair,
                      build_training_pairs, construct_source, fill_templates,
                      mention_text, verbalize_relation)
from .corpus import (INSTANCE_FORMATS, TEMPLATE_STYLES, REInstance,
                     RelationOntology, TemplateSet, TypeConstraintMap,
                     build_type_constraint_map, load_instances, load_labels,
                     load_templates, load_type_constraint_map, save_instances,
                     save_type_constraint_map, shipped_file,
                     template_file_labels)
from .errors import (BackendError, CapabilityError,
                     DegenerateDistributionError, RelsumError, ValidationError)
from .inference import (CalibrationModel, Prediction, calibrate,
                        constrained_predict, load_calibration, predict,
                        save_calibration, score_instance, with_context)
from .metrics import EvalReport, macro_f1_directed, micro_f1
from .protocol import CommandBackend, TcpBackend, create_backend
from .scoring import (DEFAULT_PROB_FLOOR, SCORE_MODES, CountingBackend,
                      MockScorer, ScoreVector, ScorerBackend,
                      full_sequence_loglik, rouge_l, rouge_rank, trie_score)
from .trie import (PathDecision, TokenTrie, build_trie, prune, render_debug,
                   trie_equal)

__version__ = "0.1.0"

__all__ = [
    "BackendError", "CalibrationModel", "CapabilityError", "CommandBackend",
    "ConversionScheme", "ConvertedPair", "CountingBackend",
    "DEFAULT_PROB_FLOOR", "DegenerateDistributionError", "EvalReport",
    "INSTANCE_FORMATS", "MockScorer", "PathDecision", "Prediction",
    "REInstance", "RelationOntology", "RelsumError", "SCHEMES", "SCORE_MODES",
    "ScoreVector", "ScorerBackend", "TEMPLATE_STYLES", "TcpBackend",
    "TemplateSet", "TokenTrie", "TypeConstraintMap", "ValidationError",
    "build_training_pairs", "build_trie", "build_type_constraint_map",
    "calibrate", "constrained_predict", "construct_source", "create_backend",
    "fill_templates", "full_sequence_loglik", "load_calibration",
    "load_instances", "load_labels", "load_templates",
    "load_type_constraint_map", "macro_f1_directed", "mention_text",
    "micro_f1", "predict", "prune", "render_debug", "rouge_l", "rouge_rank",
    "save_calibration", "save_instances", "save_type_constraint_map",
    "score_instance", "shipped_file", "template_file_labels", "trie_equal",
    "trie_score", "verbalize_relation", "with_context", "__version__",
]
