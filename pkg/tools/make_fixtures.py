"""Regenerate the synthetic corpora under tests/data/.

The files are committed; rerun this only when the shapes need to change:

    python3 tools/make_fixtures.py

Everything is drawn from a fixed-seed Random, so reruns are byte-stable.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"
NA = "no_relation"

MENTIONS = {
    "PERSON": ["Anna Kowalska", "Ben Ortiz", "Chen Wei", "Dara Singh", "Elif Aydin",
               "Farid Khan", "Grace Park", "Henrik Dahl", "Ines Costa", "Jonas Bergman"],
    "ORGANIZATION": ["Acme Corp", "Borealis Group", "Cobalt Labs", "Delta Mills",
                     "Eastfield University", "Fennel Media", "Granite Bank"],
    "CITY": ["Lisbon", "Oslo", "Kyoto", "Dakar", "Quito", "Tallinn"],
    "COUNTRY": ["Portugal", "Norway", "Japan", "Senegal", "Ecuador", "Estonia"],
    "DATE": ["1987", "March 2001", "12 June 1954", "2019"],
    "TITLE": ["chairman", "chief engineer", "press secretary", "professor"],
}

# Which positive relations a (subject type, object type) pair can host.
POOLS = {
    ("PERSON", "PERSON"): ["per:spouse", "per:siblings", "per:parents",
                           "per:children", "per:other_family"],
    ("PERSON", "CITY"): ["per:city_of_birth", "per:city_of_death",
                         "per:cities_of_residence"],
    ("PERSON", "COUNTRY"): ["per:country_of_birth", "per:countries_of_residence",
                            "per:origin"],
    ("PERSON", "DATE"): ["per:date_of_birth", "per:date_of_death"],
    ("PERSON", "TITLE"): ["per:title"],
    ("PERSON", "ORGANIZATION"): ["per:employee_of", "per:schools_attended"],
    ("ORGANIZATION", "PERSON"): ["org:founded_by", "org:top_members/employees"],
    ("ORGANIZATION", "ORGANIZATION"): ["org:subsidiaries", "org:parents",
                                       "org:member_of", "org:members"],
    ("ORGANIZATION", "CITY"): ["org:city_of_headquarters"],
    ("ORGANIZATION", "COUNTRY"): ["org:country_of_headquarters"],
    ("ORGANIZATION", "DATE"): ["org:founded", "org:dissolved"],
}

FILLER = ("the report said that during spring while analysts watched closely "
          "and nothing else changed over several quiet months").split()


def make_instance(rng: random.Random, id_: str) -> dict:
    subj_type, obj_type = rng.choice(list(POOLS))
    pool = POOLS[(subj_type, obj_type)]
    relation = NA if rng.random() < 0.3 else rng.choice(pool)
    subj = rng.choice(MENTIONS[subj_type]).split()
    obj = rng.choice(MENTIONS[obj_type]).split()
    pre = rng.sample(FILLER, rng.randint(0, 3))
    mid = rng.sample(FILLER, rng.randint(1, 4))
    post = rng.sample(FILLER, rng.randint(0, 3)) + ["."]
    if rng.random() < 0.25:  # object mention first now and then
        tokens = pre + obj + mid + subj + post
        obj_start = len(pre)
        obj_end = obj_start + len(obj)
        subj_start = obj_end + len(mid)
        subj_end = subj_start + len(subj)
    else:
        tokens = pre + subj + mid + obj + post
        subj_start = len(pre)
        subj_end = subj_start + len(subj)
        obj_start = subj_end + len(mid)
        obj_end = obj_start + len(obj)
    return {
        "id": id_,
        "tokens": tokens,
        "subj_start": subj_start,
        "subj_end": subj_end,
        "obj_start": obj_start,
        "obj_end": obj_end,
        "subj_type": subj_type,
        "obj_type": obj_type,
        "relation": relation,
    }


def write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(f"wrote {len(records):4d} -> {path}")


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240613)
    write_jsonl(OUT_DIR / "synth_train.jsonl",
                [make_instance(rng, f"synth-train-{i:03d}") for i in range(100)])
    write_jsonl(OUT_DIR / "synth_dev.jsonl",
                [make_instance(rng, f"synth-dev-{i:03d}") for i in range(30)])
    write_jsonl(OUT_DIR / "synth_test.jsonl",
                [make_instance(rng, f"synth-test-{i:03d}") for i in range(20)])
    entries = [{"subj_type": st, "obj_type": ot,
                "relations": sorted(set(pool) | {NA})}
               for (st, ot), pool in sorted(POOLS.items())]
    tmap_path = OUT_DIR / "e2e_type_map.json"
    with open(tmap_path, "w", encoding="utf-8") as fh:
        json.dump({"na_label": NA, "entries": entries}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote type map -> {tmap_path}")


if __name__ == "__main__":
    main()
