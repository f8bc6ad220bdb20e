"""Datasets, ontologies, templates, and type constraints.

An instance is one pre-tokenized sentence with a subject and an object
mention span, optional entity types, and an optional gold relation. All
span indices are half-open internally; the TACRED on-disk format uses
inclusive end indices and is converted exactly once at load time.

Loading is single-threaded per file and every produced value is immutable
afterwards, so instances, ontologies, template sets, and type-constraint
maps can be shared freely across scoring workers.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError

logger = logging.getLogger(__name__)

INSTANCE_FORMATS = ("tacred_json", "unified_jsonl")


@dataclass(frozen=True)
class REInstance:
    """One sentence with subject/object mentions and an optional gold relation."""

    id: str
    tokens: tuple[str, ...]
    subj_span: tuple[int, int]
    obj_span: tuple[int, int]
    subj_type: str | None = None
    obj_type: str | None = None
    gold_relation: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "subj_span", tuple(self.subj_span))
        object.__setattr__(self, "obj_span", tuple(self.obj_span))
        for name, (start, end) in (("subj_span", self.subj_span),
                                   ("obj_span", self.obj_span)):
            if not (0 <= start < end <= len(self.tokens)):
                raise ValidationError(
                    f"instance {self.id!r}: {name} [{start},{end}) out of bounds "
                    f"for {len(self.tokens)} tokens")
        (s0, s1), (o0, o1) = self.subj_span, self.obj_span
        if s0 < o1 and o0 < s1:
            raise ValidationError(
                f"instance {self.id!r}: subj_span and obj_span overlap")

    @property
    def has_types(self) -> bool:
        return self.subj_type is not None and self.obj_type is not None


@dataclass(frozen=True)
class RelationOntology:
    """Ordered relation labels with a designated NA (abstention) label."""

    labels: tuple[str, ...]
    na_label: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        seen: set[str] = set()
        dupes = sorted({l for l in self.labels if l in seen or seen.add(l)})
        if dupes:
            raise ValidationError(f"duplicate relation labels: {dupes}")
        if self.na_label not in self.labels:
            raise ValidationError(f"na_label {self.na_label!r} not among labels")
        if len(self.labels) < 2:
            raise ValidationError("ontology needs at least one positive relation")

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def positives(self) -> tuple[str, ...]:
        return tuple(l for l in self.labels if l != self.na_label)


TEMPLATE_STYLES = ("semantic1", "semantic2", "structural", "semeval")


@dataclass(frozen=True)
class TemplateSet:
    """Relation label -> template string with {subj}/{obj} placeholders."""

    style: str
    templates: dict[str, str]
    ontology: RelationOntology

    def __post_init__(self) -> None:
        if self.style not in TEMPLATE_STYLES:
            raise ValidationError(
                f"unknown template style {self.style!r} (expected one of {TEMPLATE_STYLES})")
        missing = [l for l in self.ontology.labels if l not in self.templates]
        extra = [l for l in self.templates if l not in self.ontology]
        if missing or extra:
            raise ValidationError(
                f"templates do not cover the ontology (missing: {missing}, extra: {extra})")
        for label, template in self.templates.items():
            for placeholder in ("{subj}", "{obj}"):
                if template.count(placeholder) != 1:
                    raise ValidationError(
                        f"template for {label!r} must contain {placeholder} exactly once: "
                        f"{template!r}")


@dataclass(frozen=True)
class TypeConstraintMap:
    """(subject type, object type) -> allowed relation labels.

    Every allowed set contains the NA label so abstention stays available
    regardless of types.
    """

    entries: dict[tuple[str, str], frozenset[str]]
    na_label: str

    def __post_init__(self) -> None:
        for pair, allowed in self.entries.items():
            if self.na_label not in allowed:
                raise ValidationError(
                    f"type pair {pair}: allowed set must contain {self.na_label!r}")

    def allowed_for(self, inst: REInstance, ontology: RelationOntology) -> tuple[str, ...]:
        """Allowed labels in ontology order; the full ontology when the pair is
        unseen or the instance is typeless."""
        if not inst.has_types:
            return ontology.labels
        allowed = self.entries.get((inst.subj_type, inst.obj_type))
        if allowed is None:
            return ontology.labels
        return tuple(l for l in ontology.labels if l in allowed)


def _tacred_record(index: int, rec: dict) -> REInstance:
    for field in ("id", "token", "subj_start", "subj_end",
                  "obj_start", "obj_end", "relation"):
        if field not in rec:
            raise ValidationError(f"record {index}: missing field {field!r}")
    return REInstance(
        id=str(rec["id"]),
        tokens=tuple(rec["token"]),
        subj_span=(int(rec["subj_start"]), int(rec["subj_end"]) + 1),
        obj_span=(int(rec["obj_start"]), int(rec["obj_end"]) + 1),
        subj_type=rec.get("subj_type"),
        obj_type=rec.get("obj_type"),
        gold_relation=rec.get("relation"),
    )


def _unified_record(index: int, rec: dict) -> REInstance:
    for field in ("id", "tokens", "subj_start", "subj_end", "obj_start", "obj_end"):
        if field not in rec:
            raise ValidationError(f"record {index}: missing field {field!r}")
    return REInstance(
        id=str(rec["id"]),
        tokens=tuple(rec["tokens"]),
        subj_span=(int(rec["subj_start"]), int(rec["subj_end"])),
        obj_span=(int(rec["obj_start"]), int(rec["obj_end"])),
        subj_type=rec.get("subj_type"),
        obj_type=rec.get("obj_type"),
        gold_relation=rec.get("relation"),
    )


def load_instances(path: str | Path, format: str = "unified_jsonl") -> list[REInstance]:
    """Load instances; TACRED's inclusive end indices become half-open here."""
    if format not in INSTANCE_FORMATS:
        raise ValidationError(
            f"unknown instance format {format!r} (expected one of {INSTANCE_FORMATS})")
    out: list[REInstance] = []
    if format == "tacred_json":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"{path}: cannot parse TACRED JSON: {exc}") from exc
        if not isinstance(data, list):
            raise ValidationError(f"{path}: expected a top-level JSON array")
        for index, rec in enumerate(data):
            try:
                out.append(_tacred_record(index, rec))
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"record {index}: {exc}") from exc
        return out
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
                raise ValidationError(f"record {index}: invalid JSON ({exc})") from exc
            try:
                out.append(_unified_record(index, rec))
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"record {index}: {exc}") from exc
    return out


def save_instances(instances: Iterable[REInstance], path: str | Path) -> None:
    """Write unified JSONL; load_instances(path) round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            rec: dict = {
                "id": inst.id,
                "tokens": list(inst.tokens),
                "subj_start": inst.subj_span[0],
                "subj_end": inst.subj_span[1],
                "obj_start": inst.obj_span[0],
                "obj_end": inst.obj_span[1],
            }
            if inst.subj_type is not None:
                rec["subj_type"] = inst.subj_type
            if inst.obj_type is not None:
                rec["obj_type"] = inst.obj_type
            if inst.gold_relation is not None:
                rec["relation"] = inst.gold_relation
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _data_lines(path: str | Path) -> Iterable[tuple[int, str]]:
    """Non-blank, non-comment lines of a UTF-8 text file, with line numbers."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def load_labels(path: str | Path) -> list[str]:
    """One label per line, '#' comments ignored."""
    return [line.strip() for _, line in _data_lines(path)]


def template_file_labels(path: str | Path) -> list[str]:
    """Label column of a template file, in file order."""
    return [line.split("\t", 1)[0].strip() for _, line in _data_lines(path)]


def _infer_style(path: str | Path) -> str:
    stem = Path(path).stem.lower()
    for style in TEMPLATE_STYLES:
        if style in stem:
            return style
    raise ValidationError(
        f"cannot infer template style from {Path(path).name!r}; pass one of {TEMPLATE_STYLES}")


def load_templates(path: str | Path, ontology: RelationOntology,
                   style: str | None = None) -> TemplateSet:
    """Parse a 'label<TAB>template' file and validate it against the ontology."""
    templates: dict[str, str] = {}
    for lineno, line in _data_lines(path):
        if "\t" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'label<TAB>template'")
        label, template = line.split("\t", 1)
        label, template = label.strip(), template.strip()
        if label in templates:
            raise ValidationError(f"{path}:{lineno}: duplicate template for {label!r}")
        templates[label] = template
    if style is None:
        style = _infer_style(path)
    return TemplateSet(style=style, templates=templates, ontology=ontology)


def build_type_constraint_map(train: Sequence[REInstance],
                              ontology: RelationOntology) -> TypeConstraintMap:
    """Group gold relations by (subj_type, obj_type); NA joins every group.

    Typeless instances are skipped with a warning counter (some corpora carry
    no entity types at all, in which case the map comes out empty).
    """
    grouped: dict[tuple[str, str], set[str]] = {}
    skipped = 0
    for inst in train:
        if inst.gold_relation is None:
            raise ValidationError(
                f"instance {inst.id!r}: gold relation required to build type constraints")
        if inst.gold_relation not in ontology:
            raise ValidationError(
                f"instance {inst.id!r}: gold relation {inst.gold_relation!r} not in ontology")
        if not inst.has_types:
            skipped += 1
            continue
        grouped.setdefault((inst.subj_type, inst.obj_type), set()).add(inst.gold_relation)
    if skipped:
        logger.warning("build_type_constraint_map: skipped %d typeless instance(s)", skipped)
    entries = {pair: frozenset(rels | {ontology.na_label})
               for pair, rels in grouped.items()}
    return TypeConstraintMap(entries=entries, na_label=ontology.na_label)


def save_type_constraint_map(tmap: TypeConstraintMap, path: str | Path) -> None:
    entries = [{"subj_type": st, "obj_type": ot, "relations": sorted(rels)}
               for (st, ot), rels in sorted(tmap.entries.items())]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"na_label": tmap.na_label, "entries": entries}, fh,
                  ensure_ascii=False, indent=2)
        fh.write("\n")


def load_type_constraint_map(path: str | Path,
                             ontology: RelationOntology) -> TypeConstraintMap:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot parse type map: {exc}") from exc
    if data.get("na_label") != ontology.na_label:
        raise ValidationError(
            f"{path}: type map NA label {data.get('na_label')!r} does not match "
            f"ontology NA label {ontology.na_label!r}")
    entries: dict[tuple[str, str], frozenset[str]] = {}
    for e in data.get("entries", []):
        unknown = [r for r in e["relations"] if r not in ontology]
        if unknown:
            raise ValidationError(f"{path}: labels not in ontology: {unknown}")
        entries[(e["subj_type"], e["obj_type"])] = frozenset(e["relations"])
    return TypeConstraintMap(entries=entries, na_label=ontology.na_label)


def shipped_file(name: str) -> Path:
    """Filesystem path of a template or label file shipped with the package."""
    path = Path(str(resources.files("relsum").joinpath("data", name)))
    if not path.exists():
        available = sorted(p.name for p in path.parent.iterdir()) if path.parent.exists() else []
        raise ValidationError(f"no shipped data file {name!r} (available: {available})")
    return path
