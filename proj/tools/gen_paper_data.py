#!/usr/bin/env python3
"""Regenerates paper-data/ from the published Defects4J 2.0 workability results.

Only aggregate, published information goes in here: the active bug ids of
each project, the non-workable ranges with their reasons, the jGenProg
fix-rate inputs and the adequacy counts.
"""
import json
import pathlib
import sys

# Active bug ids per project in Defects4J 2.0 (deprecated ids left out).
PROJECTS = {
    "Chart": (26, []),
    "Cli": (40, [6]),
    "Closure": (176, [63, 93]),
    "Codec": (18, []),
    "Collections": ((25, 28), []),
    "Compress": (47, []),
    "Csv": (16, []),
    "Gson": (18, []),
    "JacksonCore": (26, []),
    "JacksonDatabind": (112, []),
    "JacksonXml": (6, []),
    "Jsoup": (93, []),
    "JxPath": (22, []),
    "Lang": (65, [2]),
    "Math": (106, []),
    "Mockito": (38, []),
    "Time": (27, [21]),
}

# project, first, last, outcome
NON_WORKABLE = [
    ("Chart", 5, 26, "InconsistentSuite"),
    ("Cli", 7, 7, "InconsistentSuite"),
    ("Cli", 13, 16, "InconsistentSuite"),
    ("Cli", 21, 21, "InconsistentSuite"),
    ("Codec", 17, 18, "ResultDiffers"),
    ("Collections", 25, 25, "InconsistentSuite"),
    ("Collections", 26, 27, "CompilationFails"),
    ("Collections", 28, 28, "InconsistentSuite"),
    ("Compress", 30, 47, "InconsistentSuite"),
    ("JacksonCore", 19, 19, "ResultDiffers"),
    ("JacksonCore", 25, 25, "ResultDiffers"),
    ("JacksonDatabind", 1, 6, "Flaky"),
    ("JacksonDatabind", 95, 95, "Flaky"),
    ("Jsoup", 67, 93, "InconsistentSuite"),
    ("Lang", 1, 1, "InconsistentSuite"),
    ("Lang", 3, 4, "InconsistentSuite"),
    ("Lang", 42, 65, "CompilationFails"),
    ("Math", 1, 28, "InconsistentSuite"),
    ("Math", 29, 37, "Flaky"),
    ("Math", 40, 40, "Flaky"),
    ("Math", 53, 54, "Flaky"),
    ("Math", 59, 59, "Flaky"),
    ("Math", 62, 63, "Flaky"),
    ("Math", 70, 70, "Flaky"),
    ("Mockito", 1, 11, "InconsistentSuite"),
    ("Mockito", 18, 26, "InconsistentSuite"),
    ("Time", 27, 27, "ResultDiffers"),
]


def active_ids():
    for project, (span, deprecated) in PROJECTS.items():
        lo, hi = span if isinstance(span, tuple) else (1, span)
        for n in range(lo, hi + 1):
            if n not in deprecated:
                yield f"{project}/{n}"


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = list(active_ids())
    assert len(ids) == 835, len(ids)

    manifest = {
        "dataset": {"name": "Defects4J", "version": "2.0.0"},
        "kind": "published-summary",
        "entries": [{"id": i} for i in ids],
    }
    (out / "defects4j-2.0-summary.json").write_text(json.dumps(manifest, indent=1) + "\n")

    outcome = {i: "Workable" for i in ids}
    for project, lo, hi, reason in NON_WORKABLE:
        for n in range(lo, hi + 1):
            key = f"{project}/{n}"
            assert key in outcome, key
            outcome[key] = reason
    with open(out / "verdicts.tsv", "w") as f:
        f.write("# defect id\toutcome\n")
        for i in ids:
            f.write(f"{i}\t{outcome[i]}\n")

    fix_rates = {
        "title": "jGenProg fix rate on Defects4J 1.0 subsets",
        "population": {
            "label": "Original Defects4J 1.0",
            "ids": ["Chart/1-26", "Closure/1-133", "Lang/1-65", "Math/1-106", "Time/1-27"],
        },
        "fixed": 49,
        "stages": [
            {"label": "excl. not in Defects4J 2.0", "remove": "not-in-dataset", "removed_fixed": 0},
            {"label": "excl. non-workable", "remove": "non-workable", "removed_fixed": 18},
            # Which 20 defects these are is not published, only the counts.
            {"label": "excl. trivial", "removed": 20, "removed_fixed": 12},
        ],
    }
    (out / "fix-rates.json").write_text(json.dumps(fix_rates, indent=2) + "\n")

    adequacy = {"trivially_plausible": 69, "deletion_only_patches": 10}
    (out / "adequacy.json").write_text(json.dumps(adequacy, indent=2) + "\n")

    figures = {"total": 835, "workable_label": 666, "not_workable": 180}
    (out / "figures.json").write_text(json.dumps(figures, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "paper-data")
