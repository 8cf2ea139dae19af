"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v`` for one pass/fail line per
criterion. Criteria tied to the published tool's score dataset are skipped
unless that dataset is supplied (NBSKIT_PUBLISHED_MATRIX or
data/external/published_scores.csv).
"""

import json
import math
import random
import shutil
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from nbskit.catalogue import bundled_data_dir, load_bundled_catalogue
from nbskit.consensus import load_consensus_data, resolve_all
from nbskit.pca import CorrelationPCA, IterativePCAImputer, aggregate_es_categories, pretreat_for_pca
from nbskit.scoring import RawScoreRecord, ScoreMatrix, build_matrix
from nbskit.service import SnapshotStore, create_app
from nbskit.stats import chi_square_one_sample, evenness_for_row
from conftest import published_matrix_path, requires_published_matrix

def _report(criterion: str) -> None:
    print(f"PASS: {criterion}")


# --- criterion: chi-square reproduction -------------------------------------

SECOND_SURVEY = [
    # (majority %, total valid, published X2, published p)
    ("NBS1", 64.0, 86, 6.70, 0.01),
    ("NBS4", 56.1, 66, 0.97, 0.32),
    ("NBS5", 51.7, 87, 0.10, 0.75),
    ("NBS6", 59.3, 81, 2.78, 0.10),
    ("NBS17", 61.2, 85, 4.25, 0.04),
    ("NBS26", 62.0, 79, 4.57, 0.03),
    ("NBS27", 72.8, 81, 16.90, 3.94e-5),
    ("NBS28", 52.6, 78, 0.21, 0.65),
    ("NBS29", 81.0, 58, 22.34, 2.3e-6),
    ("NBS30", 53.8, 80, 0.45, 0.50),
    ("NBS31", 63.2, 68, 4.76, 0.03),
    ("NBS32", 61.5, 78, 4.15, 0.04),
]


def test_criterion_chi_square_reproduction():
    """All 12 second-survey rows: X2 within 0.01, p within 10% relative, < 1 s."""
    started = time.perf_counter()
    for nbs, percent, total, expected_stat, expected_p in SECOND_SURVEY:
        a = math.floor(percent / 100 * total + 0.5)
        b = total - a
        result = chi_square_one_sample(a, b)
        assert abs(result.statistic - expected_stat) <= 0.01, nbs
        assert abs(result.p_value - expected_p) / expected_p <= 0.10, nbs
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"chi-square reproduction took {elapsed:.3f}s"
    _report("chi-square reproduction (12 rows, X2 +/-0.01, p +/-10% rel, < 1 s)")


# --- criterion: name-resolution replay ---------------------------------------

TABLE_OF_NAMES = [
    "Infiltration basin", "(Wet) Retention Pond", "Rain garden", "Swale",
    "Constructed wetland", "Green facade", "Green wall system", "Vertical mobile garden",
    "Planter green wall", "Vegetated pergola", "Extensive green roof", "Intensive green roof",
    "Semi-intensive green roof", "Create and preserve habitats and shelters for biodiversity",
    "Street trees", "Green corridors", "Large urban park", "Pocket garden/park",
    "Urban forest", "Heritage garden", "Private gardens", "Community garden",
    "Urban Orchard", "Use of pre-existing vegetation", "Composting", "Soil improvement",
    "Systems for erosion control", "Riverbank engineering",
    "Rivers or streams, including re-meandering, re-opening Blue corridors",
    "Reprofiling/Extending floodplain area", "Diverting and deflecting elements",
    "Vegetated grid pave",
]


def test_criterion_name_resolution_replay():
    """32 published names, path counts {Round1: 20, Round2: 7, beyond: 5}, < 1 s."""
    data = load_consensus_data(bundled_data_dir() / "consensus")
    started = time.perf_counter()
    decisions = resolve_all(data)
    elapsed = time.perf_counter() - started
    assert [d.final_name for d in decisions] == TABLE_OF_NAMES
    paths: dict[str, list[str]] = {}
    for d in decisions:
        paths.setdefault(d.path, []).append(d.nbs)
    assert len(paths["Round1"]) == 20
    assert len(paths["Round2"]) == 7
    beyond = sorted(
        paths.get("CitationArbitration", []) + paths.get("ExpertOverride", []),
        key=lambda s: int(s[3:]),
    )
    assert beyond == ["NBS4", "NBS5", "NBS6", "NBS28", "NBS30"]
    assert elapsed < 1.0, f"name resolution took {elapsed:.3f}s"
    _report("name-resolution replay (32 names, paths 20/7/5, < 1 s)")


# --- criterion: taxonomy structure -------------------------------------------

def test_criterion_taxonomy_structure():
    """Leaves partition the 32 ids; group sizes 23/14/9/9; every leaf reachable."""
    catalogue = load_bundled_catalogue()
    taxonomy = catalogue.taxonomy
    collected: list[str] = []
    for leaf in taxonomy.leaves():
        members = catalogue.taxonomy_members(leaf)
        assert not set(members) & set(collected), "leaf sets overlap"
        collected.extend(members)
    assert sorted(collected, key=lambda s: int(s[3:])) == [f"NBS{i}" for i in range(1, 33)]
    assert len(catalogue.taxonomy_members("NBS_u")) == 23
    assert len(catalogue.taxonomy_members("NBS_tu")) == 14
    assert len(catalogue.taxonomy_members("NBS_su")) == 9
    assert len(catalogue.taxonomy_members("NBS_i")) == 9
    reached = {taxonomy.classify(taxonomy.answers_to(leaf)) for leaf in taxonomy.leaves()}
    assert reached == set(taxonomy.leaves())
    _report("taxonomy structure (partition, 23/14/9/9, all leaves reachable)")


# --- criterion: evenness properties ------------------------------------------

def test_criterion_evenness_properties():
    """Uniform rows 1.0 to 1e-12; oracle row to 1e-6; degenerate support undefined."""
    for width in (2, 5, 14):
        result = evenness_for_row("x", [0.37] * width)
        assert result.evenness is not None
        assert abs(result.evenness - 1.0) <= 1e-12
    # independent oracle: H = -(0.9 ln 0.9 + 0.1 ln 0.1), J = H / ln 2
    oracle = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1)) / math.log(2)
    result = evenness_for_row("x", [0.9, 0.1, 0.0])
    assert abs(result.evenness - oracle) <= 1e-6
    assert abs(result.evenness - 0.46899559358928117) <= 1e-6
    assert evenness_for_row("x", [0.7, 0.0, 0.0]).evenness is None
    assert evenness_for_row("x", [0.0, 0.0, 0.0]).evenness is None
    _report("evenness properties (uniform=1, oracle row, degenerate undefined)")


@requires_published_matrix
def test_criterion_evenness_published_band():
    """With the published dataset every NBS falls in [0.85, 1]."""
    catalogue = load_bundled_catalogue()
    matrix = ScoreMatrix.from_csv(published_matrix_path())
    grouped = aggregate_es_categories(matrix, catalogue.facets)
    for i, nbs in enumerate(grouped.nbs_ids):
        result = evenness_for_row(nbs, grouped.values[i])
        assert result.evenness is not None and 0.85 <= result.evenness <= 1.0, nbs
    _report("published evenness band [0.85, 1]")


# --- criterion: scoring oracle ------------------------------------------------

def _brute_force(entries, crosswalk, records):
    per_project = {}
    for entry_id, project_labels in entries.items():
        for project, labels in project_labels.items():
            bucket = {}
            for r in records:
                if r.project != project or r.source_nbs_label not in labels:
                    continue
                facet = crosswalk[(r.project, r.project_facet_label)]
                bucket.setdefault(facet, []).append(r.value)
            for facet, values in bucket.items():
                per_project.setdefault((entry_id, facet), []).append(sum(values) / len(values))
    return {key: sum(v) / len(v) for key, v in per_project.items()}


def test_criterion_scoring_oracle():
    """100 random fixtures: pipeline equals brute-force recomputation to 1e-12."""
    rng = random.Random(20210306)
    catalogue = load_bundled_catalogue()
    crosswalk = catalogue.crosswalk_map()
    for trial in range(100):
        entry_ids = rng.sample(list(catalogue.nbs_ids), rng.randint(2, 5))
        entries = {e: dict(catalogue.entry(e).project_labels) for e in entry_ids}
        records = []
        for entry_id, project_labels in entries.items():
            for project, labels in list(project_labels.items())[:3]:
                eligible = [(p, label) for (p, label) in crosswalk if p == project][:4]
                for _, label in eligible:
                    for source in labels:
                        if rng.random() < 0.7:
                            records.append(RawScoreRecord(project, source, label, rng.randint(0, 1)))
        rng.shuffle(records)
        matrix = build_matrix(catalogue, records)
        oracle = _brute_force(entries, crosswalk, records)
        for (entry_id, facet), expected in oracle.items():
            got = matrix.cell(entry_id, facet)
            assert got is not None and abs(got - expected) <= 1e-12, (trial, entry_id, facet)
    _report("scoring oracle (100 random fixtures, 1e-12)")


@requires_published_matrix
def test_criterion_published_medians():
    """Published dataset medians match the reported values within 0.005."""
    catalogue = load_bundled_catalogue()
    matrix = ScoreMatrix.from_csv(published_matrix_path())
    expectations = {
        "uc_water": 0.77,
        "uc_green_space": 0.90,
        "uc_climate": 0.61,
        "uc_participatory": 0.0,
    }
    for facet, expected in expectations.items():
        column = matrix.column(facet)
        median = float(np.median(column[~np.isnan(column)]))
        assert abs(median - expected) <= 0.005, facet
    grouped = aggregate_es_categories(matrix, catalogue.facets)
    provisioning = grouped.column("es_provisioning")
    median = float(np.median(provisioning[~np.isnan(provisioning)]))
    assert abs(median - 0.08) <= 0.005
    _report("published facet medians (water/green/climate/participatory/provisioning)")


# --- criterion: PCA properties -------------------------------------------------

def test_criterion_pca_properties():
    """Eigen-oracle match, full-rank reconstruction, trace, rank-1 imputation."""
    from scipy import linalg as scipy_linalg

    for seed in range(5):
        X = np.random.default_rng(seed).random((5, 4))
        model = CorrelationPCA().fit(X)
        corr = np.corrcoef(X, rowvar=False)
        expected_vals, expected_vecs = scipy_linalg.eigh(corr)
        expected_vals, expected_vecs = expected_vals[::-1], expected_vecs[:, ::-1]
        assert np.max(np.abs(model.eigenvalues_ - expected_vals)) <= 1e-9
        for k in range(4):
            delta = min(
                np.max(np.abs(model.loadings_[:, k] - expected_vecs[:, k])),
                np.max(np.abs(model.loadings_[:, k] + expected_vecs[:, k])),
            )
            assert delta <= 1e-9, (seed, k)
        Z = (X - model.mean_) / model.scale_
        assert np.max(np.abs(model.transform(X) @ model.loadings_.T - Z)) <= 1e-9
        assert abs(model.eigenvalues_.sum() - 4.0) <= 1e-9

    X = np.array([[1.0, 2.0, 4.0], [2.0, 4.0, 8.0], [3.0, 6.0, np.nan]])
    imputer = IterativePCAImputer(n_components=1, tol=1e-10, max_iter=5000)
    completed = imputer.fit_transform(X)
    assert abs(completed[2, 2] - 12.0) <= 1e-6

    rng = np.random.default_rng(42)
    Y = rng.random((8, 5))
    Y[1, 3] = np.nan
    observed_mask = ~np.isnan(Y)
    completed = IterativePCAImputer(n_components=2).fit_transform(Y)
    assert np.array_equal(completed[observed_mask], Y[observed_mask])
    _report("PCA properties (eigen-oracle 1e-9, reconstruction, trace, rank-1 imputation)")


@requires_published_matrix
def test_criterion_published_two_dimension_variance():
    """First two dimensions accumulate 49.4% +/- 1.0 point on the published data."""
    catalogue = load_bundled_catalogue()
    matrix = ScoreMatrix.from_csv(published_matrix_path())
    from nbskit.pca import run_pca

    result = run_pca(pretreat_for_pca(matrix, catalogue.facets))
    two_dim = float(result.variance_fraction[:2].sum()) * 100
    assert abs(two_dim - 49.4) <= 1.0
    _report("published two-dimension variance (49.4 +/- 1.0)")


# --- criterion: service consistency --------------------------------------------

def test_criterion_service_consistency(tmp_path):
    """Concurrent reloads never produce a mixed-version response; GETs deterministic."""
    import csv as csv_module

    variant = tmp_path / "variant"
    shutil.copytree(bundled_data_dir(), variant)
    raw = variant / "scores" / "raw_scores.csv"
    rows = list(csv_module.reader(raw.open()))
    for row in rows[1:]:
        if row[0] == "TN":
            row[3] = "1" if row[3] == "0" else "0"
    with raw.open("w", newline="") as fh:
        csv_module.writer(fh).writerows(rows)

    store = SnapshotStore(bundled_data_dir())
    client = TestClient(create_app(store))

    baseline = client.get("/scores")
    assert baseline.content == client.get("/scores").content  # deterministic at fixed version

    content_by_version: dict[int, str] = {}
    lock = threading.Lock()
    failures: list[str] = []
    stop = threading.Event()

    def reader():
        while not stop.is_set():
            response = client.get("/scores")
            body = response.json()
            if int(response.headers["X-Snapshot-Version"]) != body["version"]:
                failures.append("header/body version mismatch")
                return
            digest = json.dumps(body["cells"])
            with lock:
                previous = content_by_version.setdefault(body["version"], digest)
                if previous != digest:
                    failures.append(f"mixed content under version {body['version']}")
                    return

    threads = [threading.Thread(target=reader) for _ in range(4)]
    for t in threads:
        t.start()
    try:
        for i in range(6):
            store.reload(variant if i % 2 == 0 else bundled_data_dir())
    finally:
        stop.set()
        for t in threads:
            t.join(timeout=10)
    assert not failures, failures
    assert len(content_by_version) >= 2
    _report("service consistency (no mixed-version responses, deterministic GETs)")
