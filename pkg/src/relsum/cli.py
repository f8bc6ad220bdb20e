"""Command-line surface: convert, calibrate, predict, evaluate, probe-backend.

Exit codes: 0 success, 1 validation error (bad data, files, arguments),
2 backend or protocol error. Diagnostics go to standard error; command
output (evaluate's report, probe-backend's summary) goes to standard
output. A config file of key = value lines may supply any flag
(--config file); explicit flags override it.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from .convert import SCHEMES, coerce_scheme, construct_source, verbalize_relation
from .corpus import (INSTANCE_FORMATS, TEMPLATE_STYLES, RelationOntology,
                     load_instances, load_labels, load_templates,
                     load_type_constraint_map, template_file_labels)
from .errors import BackendError, ValidationError
from .inference import (calibrate, load_calibration, predict, save_calibration,
                        score_instance, with_context)
from .metrics import macro_f1_directed, micro_f1
from .protocol import create_backend
from .scoring import DEFAULT_PROB_FLOOR

_FLAG_ONLY_KEYS = frozenset({"no-prob-floor"})


def _read_config(path: str) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            key, value = key.strip(), value.strip()
            if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
                value = value[1:-1]
            if not key:
                raise ValidationError(f"{path}:{lineno}: empty key")
            pairs.append((key, value))
    return pairs


def _expand_config(argv: list[str]) -> list[str]:
    """Replace `--config file` with the file's flags, inserted right after the
    subcommand so that explicit command-line flags override them."""
    while True:
        index = path = None
        for i, token in enumerate(argv):
            if token == "--config":
                if i + 1 >= len(argv):
                    raise ValidationError("--config needs a file path")
                index, path, width = i, argv[i + 1], 2
                break
            if token.startswith("--config="):
                index, path, width = i, token.split("=", 1)[1], 1
                break
        if index is None:
            return argv
        argv = argv[:index] + argv[index + width:]
        if not argv or argv[0].startswith("-"):
            raise ValidationError("--config requires a subcommand")
        flags: list[str] = []
        for key, value in _read_config(path):
            name = key.replace("_", "-")
            flag = "--" + name
            if name in _FLAG_ONLY_KEYS:
                truthy = value.lower() in ("1", "true", "yes", "on")
                falsy = value.lower() in ("0", "false", "no", "off")
                if not truthy and not falsy:
                    raise ValidationError(f"config key {key!r} must be true or false")
                if truthy:
                    flags.append(flag)
            else:
                flags += [flag, value]
        argv = [argv[0]] + flags + argv[1:]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems are validation errors
        raise ValidationError(message)


def _add_data_flags(p: argparse.ArgumentParser, need_input: bool = True) -> None:
    p.add_argument("--templates", required=True,
                   help="label<TAB>template file covering the ontology")
    p.add_argument("--template-style", choices=TEMPLATE_STYLES,
                   help="template style; inferred from the file name when omitted")
    p.add_argument("--labels",
                   help="one relation label per line; defaults to the template file order")
    p.add_argument("--na-label", default="no_relation",
                   help="the abstention label (default: no_relation)")
    if need_input:
        p.add_argument("--in", dest="infile", required=True, help="instance file")
        p.add_argument("--format", choices=INSTANCE_FORMATS, default="unified_jsonl",
                       help="instance file format (default: unified_jsonl)")


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", required=True,
                   help='scorer backend: "mock[:seed]", "cmd:<command>", or "tcp:host:port"')
    p.add_argument("--seed", type=int, default=None,
                   help="seed for a bare mock backend spec")
    p.add_argument("--workers", type=int, default=1,
                   help="scoring worker threads, one backend connection each (default: 1)")
    p.add_argument("--no-prob-floor", action="store_true",
                   help=f"disable the {DEFAULT_PROB_FLOOR:g} clamp on raw probabilities")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relsum",
                     description="Relation extraction by scoring verbalized templates.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("convert", help="write scorer sources (and targets when gold is known)")
    _add_data_flags(p)
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("calibrate", help="pick the NA threshold on a dev split")
    _add_data_flags(p)
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--type-map", help="type-constraint map JSON")
    _add_backend_flags(p)
    p.add_argument("--out", required=True, help="calibration artifact JSON path")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("predict", help="emit one relation per instance")
    _add_data_flags(p)
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--type-map", help="type-constraint map JSON")
    p.add_argument("--calibration", help="calibration artifact from `calibrate`")
    p.add_argument("--threshold-override",
                   help="use this NA threshold instead (accepts inf and -inf)")
    p.add_argument("--mode", choices=("renorm", "raw"), default="renorm",
                   help="score scale written to the output (default: renorm)")
    _add_backend_flags(p)
    p.add_argument("--out", required=True, help="predictions JSONL path")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("--pred", required=True, help="predictions JSONL (id, relation)")
    p.add_argument("--gold", required=True, help="gold JSONL (id, relation)")
    p.add_argument("--metric", choices=("micro", "macro-directed"), default="micro")
    p.add_argument("--na-label", default="no_relation")
    p.add_argument("--other-label", default="Other",
                   help="excluded class for --metric macro-directed")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("probe-backend", help="handshake and a fixed round-trip")
    _add_backend_flags(p)
    p.set_defaults(func=_cmd_probe)

    return parser


def _build_ontology_and_templates(args):
    if args.labels:
        labels = load_labels(args.labels)
    else:
        labels = template_file_labels(args.templates)
    ontology = RelationOntology(labels=tuple(labels), na_label=args.na_label)
    templates = load_templates(args.templates, ontology, style=args.template_style)
    return ontology, templates


def _load_tmap(args, ontology):
    if getattr(args, "type_map", None):
        return load_type_constraint_map(args.type_map, ontology)
    return None


def _score_all(args, instances, templates, tmap, mode: str):
    prob_floor = None if args.no_prob_floor else DEFAULT_PROB_FLOOR

    def score_with(backend, inst):
        return score_instance(backend, inst, templates, tmap, args.scheme,
                              mode=mode, prob_floor=prob_floor)

    if args.workers <= 1:
        backend = create_backend(args.backend, seed=args.seed)
        try:
            return [score_with(backend, inst) for inst in instances]
        finally:
            backend.close()

    local = threading.local()
    opened: list = []
    opened_lock = threading.Lock()

    def get_backend():
        backend = getattr(local, "backend", None)
        if backend is None:
            backend = create_backend(args.backend, seed=args.seed)
            local.backend = backend
            with opened_lock:
                opened.append(backend)
        return backend

    try:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            # pool.map preserves input order regardless of completion order
            return list(pool.map(lambda inst: score_with(get_backend(), inst), instances))
    finally:
        for backend in opened:
            backend.close()


def _cmd_convert(args) -> int:
    ontology, templates = _build_ontology_and_templates(args)
    instances = load_instances(args.infile, args.format)
    scheme = coerce_scheme(args.scheme)
    with open(args.out, "w", encoding="utf-8") as fh:
        for inst in instances:
            rec: dict = {"id": inst.id, "source": construct_source(inst, scheme)}
            if inst.gold_relation is not None:
                template = templates.templates.get(inst.gold_relation)
                if template is None:
                    raise ValidationError(
                        f"instance {inst.id!r}: no template for {inst.gold_relation!r}")
                rec["target"] = verbalize_relation(template, inst)
                rec["relation"] = inst.gold_relation
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(f"convert: wrote {len(instances)} records to {args.out}", file=sys.stderr)
    return 0


def _cmd_calibrate(args) -> int:
    ontology, templates = _build_ontology_and_templates(args)
    instances = load_instances(args.infile, args.format)
    for inst in instances:
        if inst.gold_relation is None:
            raise ValidationError(f"instance {inst.id!r}: calibration needs gold relations")
        if inst.gold_relation not in ontology:
            raise ValidationError(
                f"instance {inst.id!r}: gold relation {inst.gold_relation!r} not in ontology")
    tmap = _load_tmap(args, ontology)
    vectors = _score_all(args, instances, templates, tmap, "renormalized")
    model = calibrate([(v, inst.gold_relation) for v, inst in zip(vectors, instances)],
                      ontology.na_label)
    model = with_context(model, templates.style, coerce_scheme(args.scheme).value)
    save_calibration(model, args.out)
    print(f"calibrate: threshold={model.threshold} dev_f1={model.dev_f1} -> {args.out}",
          file=sys.stderr)
    return 0


def _parse_threshold(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"bad threshold {text!r}") from None


def _cmd_predict(args) -> int:
    ontology, templates = _build_ontology_and_templates(args)
    instances = load_instances(args.infile, args.format)
    tmap = _load_tmap(args, ontology)
    if args.threshold_override is not None:
        threshold = _parse_threshold(args.threshold_override)
    elif args.calibration:
        calib = load_calibration(args.calibration)
        threshold = calib.threshold
        if calib.scheme and calib.scheme != args.scheme:
            print(f"warning: calibration was made with scheme {calib.scheme!r}, "
                  f"predicting with {args.scheme!r}", file=sys.stderr)
        if calib.template_style and calib.template_style != templates.style:
            print(f"warning: calibration was made with style {calib.template_style!r}, "
                  f"predicting with {templates.style!r}", file=sys.stderr)
    else:
        raise ValidationError("predict needs --calibration or --threshold-override")
    mode = "renormalized" if args.mode == "renorm" else "raw"
    if mode == "raw":
        print("warning: --mode raw; the NA threshold is calibrated on the "
              "renormalized scale", file=sys.stderr)
    vectors = _score_all(args, instances, templates, tmap, mode)
    na_label = ontology.na_label
    with open(args.out, "w", encoding="utf-8") as fh:
        for inst, vector in zip(instances, vectors):
            if set(vector.scores) == {na_label}:
                relation = na_label
            else:
                relation = predict(vector, na_label, threshold)
            fh.write(json.dumps({"id": inst.id, "relation": relation,
                                 "scores": vector.scores}, ensure_ascii=False) + "\n")
    print(f"predict: wrote {len(instances)} predictions to {args.out}", file=sys.stderr)
    return 0


def _read_labeled_jsonl(path: str) -> list[tuple[str, str]]:
    """(id, relation) pairs from any JSONL whose records carry both fields."""
    out: list[tuple[str, str]] = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    with fh:
        for index, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: record {index}: invalid JSON ({exc})") from exc
            if "id" not in rec or "relation" not in rec:
                raise ValidationError(
                    f"{path}: record {index}: needs 'id' and 'relation' fields")
            out.append((str(rec["id"]), str(rec["relation"])))
    return out


def _cmd_evaluate(args) -> int:
    pred_pairs = _read_labeled_jsonl(args.pred)
    gold_pairs = _read_labeled_jsonl(args.gold)
    gold_map: dict[str, str] = {}
    for id_, relation in gold_pairs:
        if id_ in gold_map:
            raise ValidationError(f"{args.gold}: duplicate id {id_!r}")
        gold_map[id_] = relation
    seen: set[str] = set()
    preds: list[str] = []
    golds: list[str] = []
    for id_, relation in pred_pairs:
        if id_ in seen:
            raise ValidationError(f"{args.pred}: duplicate id {id_!r}")
        seen.add(id_)
        if id_ not in gold_map:
            raise ValidationError(f"prediction id {id_!r} has no gold record")
        preds.append(relation)
        golds.append(gold_map[id_])
    missing = sorted(set(gold_map) - seen)
    if missing:
        raise ValidationError(f"no predictions for gold ids {missing[:5]}"
                              + (" ..." if len(missing) > 5 else ""))
    if args.metric == "micro":
        report = micro_f1(preds, golds, args.na_label)
    else:
        report = macro_f1_directed(preds, golds, args.other_label)
    print(json.dumps(report.to_json(), ensure_ascii=False))
    return 0


def _cmd_probe(args) -> int:
    backend = create_backend(args.backend, seed=args.seed)
    try:
        required = {"tokenize", "next_token"}
        if not required <= backend.caps:
            raise BackendError(
                f"backend lacks required capabilities {sorted(required - backend.caps)}; "
                f"has {sorted(backend.caps)}")
        if backend.vocab_size <= 0:
            raise BackendError(f"backend reports vocab_size={backend.vocab_size}")
        text = "the quick brown fox"
        ids = backend.tokenize(text)
        again = backend.tokenize(text)
        if ids != again:
            raise BackendError("tokenize is not deterministic")
        cands = ([int(ids[0])] if ids else []) + [backend.eos_id]
        probs = backend.next_token(text, [], cands)
        if len(probs) != len(cands) or any(not 0.0 <= p <= 1.0 for p in probs):
            raise BackendError(f"malformed next-token probabilities: {probs!r}")
        summary = {
            "ok": True,
            "caps": sorted(backend.caps),
            "vocab_size": backend.vocab_size,
            "eos_id": backend.eos_id,
            "tokenize_ids": len(ids),
            "next_probs": len(probs),
        }
        if "generate" in backend.caps:
            summary["generate_chars"] = len(backend.generate(text, 8))
        print(json.dumps(summary, ensure_ascii=False))
        return 0
    finally:
        backend.close()


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
