"""Regenerate the bundled synthetic raw-score fixture.

The four source projects never published their per-project binary matrices,
so the repo ships a deterministic synthetic stand-in with the same schema:
every project scores each of its crosswalked facet labels for every NBS it
contributes to. Latent propensities are tied to the classification branch so
the downstream statistics have realistic structure to chew on.

Run from the repo root:  python scripts/make_fixture.py
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from nbskit.catalogue import load_bundled_catalogue, bundled_data_dir

SEED = 20210306

BRANCH_BIAS = {
    # (level-2 code, facet prefix) -> added propensity
    ("NBS_tu", "uc_water"): 0.35,
    ("NBS_tu", "es_water"): 0.35,
    ("NBS_su", "uc_social_justice"): 0.35,
    ("NBS_su", "uc_health"): 0.3,
    ("NBS_su", "es_recreation"): 0.4,
    ("NBS_su", "es_aesthetic"): 0.35,
    ("NBS_su", "uc_green_space"): 0.3,
    ("NBS_ir", "uc_water"): 0.45,
    ("NBS_ir", "es_erosion_regulation"): 0.45,
    ("NBS_is", "es_soil_formation"): 0.5,
    ("NBS_is", "es_erosion_regulation"): 0.35,
    ("NBS_ib", "es_habitats"): 0.5,
    ("NBS_ib", "es_pollination"): 0.4,
}

BASE = {
    "uc_climate": 0.55,
    "uc_water": 0.45,
    "uc_coastal": 0.25,
    "uc_green_space": 0.7,
    "uc_air": 0.5,
    "uc_regeneration": 0.45,
    "uc_participatory": 0.1,
    "uc_social_justice": 0.3,
    "uc_health": 0.45,
    "uc_economy": 0.25,
}


def propensity(rng: np.random.Generator, level2: str, facet: str) -> float:
    base = BASE.get(facet, 0.25 if facet.startswith("es_f") or facet.startswith("es_b") else 0.45)
    for (code, prefix), bump in BRANCH_BIAS.items():
        if code == level2 and facet.startswith(prefix):
            base += bump
    return float(np.clip(base + rng.normal(0, 0.08), 0.02, 0.98))


def main() -> None:
    catalogue = load_bundled_catalogue()
    rng = np.random.default_rng(SEED)
    labels_by_project: dict[str, list[tuple[str, str]]] = {}
    for rule in catalogue.crosswalk:
        labels_by_project.setdefault(rule.project, []).append(
            (rule.project_facet_label, rule.baseline_facet)
        )

    all_facets = sorted({f for labels in labels_by_project.values() for _, f in labels})
    rows: list[tuple[str, str, str, int]] = []
    for entry in catalogue.entries:
        level2 = catalogue.taxonomy.ancestor_at_level(entry.taxonomy_leaf, 2)
        # sorted order keeps the RNG stream independent of set-iteration order
        theta = {facet: propensity(rng, level2, facet) for facet in all_facets}
        for project, source_labels in entry.project_labels.items():
            for source_label in source_labels:
                for project_label, baseline in labels_by_project[project]:
                    value = int(rng.random() < theta[baseline])
                    rows.append((project, source_label, project_label, value))

    out = bundled_data_dir() / "scores" / "raw_scores.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["project", "source_nbs_label", "project_facet_label", "value"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} records to {out}")


if __name__ == "__main__":
    main()
