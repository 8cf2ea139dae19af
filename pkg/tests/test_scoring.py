"""Scoring pipeline tests, checked against brute-force oracles that never
touch the implementation's own grouping or averaging code."""

import math
import random

import numpy as np
import pytest

from nbskit.catalogue import load_bundled_catalogue
from nbskit.errors import ComputationError, CrosswalkError, UnknownIdError, ValidationError
from nbskit.scoring import (
    RawScoreRecord,
    NormalizedScore,
    ScoreMatrix,
    build_matrix,
    cross_scores,
    facet_summary,
    map_to_baseline,
    normalize_all,
    normalize_project,
    unmatched_records,
)

UNL_WATER = {
    ("UNL", "Water scarcity"): "uc_water",
    ("UNL", "Flood management"): "uc_water",
    ("UNL", "Water pollution"): "uc_water",
}


class TestMapToBaseline:
    def test_flood_management_maps_to_water(self):
        record = RawScoreRecord("UNL", "Infiltration basin", "Flood management", 1)
        assert map_to_baseline(record, UNL_WATER) == ("uc_water", 1)

    def test_value_passes_through(self):
        record = RawScoreRecord("UNL", "Infiltration basin", "Water scarcity", 0)
        assert map_to_baseline(record, UNL_WATER) == ("uc_water", 0)

    def test_unmapped_label_raises(self):
        record = RawScoreRecord("GU", "Rain gardens", "unknown label", 1)
        with pytest.raises(CrosswalkError, match="no crosswalk"):
            map_to_baseline(record, UNL_WATER)


class TestNormalizeProject:
    def _records(self, values):
        return [
            RawScoreRecord("UNL", "Infiltration basin", label, v)
            for label, v in zip(("Water scarcity", "Flood management", "Water pollution"), values)
        ]

    def test_mean_of_three(self):
        score = normalize_project("NBS1", "uc_water", self._records([1, 1, 0]))
        assert score is not None
        assert abs(score.value - 2 / 3) < 1e-12

    def test_single_record(self):
        score = normalize_project("NBS1", "uc_water", self._records([1])[:1])
        assert score.value == 1.0

    def test_all_zero(self):
        assert normalize_project("NBS1", "uc_water", self._records([0, 0, 0])).value == 0.0

    def test_empty_is_missing(self):
        assert normalize_project("NBS1", "uc_water", []) is None

    def test_mixed_projects_rejected(self):
        records = self._records([1]) + [RawScoreRecord("GU", "x", "y", 1)]
        with pytest.raises(ValidationError, match="several projects"):
            normalize_project("NBS1", "uc_water", records)

    def test_non_binary_value_rejected(self):
        with pytest.raises(ValidationError, match="binary"):
            RawScoreRecord("UNL", "x", "y", 2)


class TestCrossScores:
    def test_mean_of_contributions(self):
        scores = [
            NormalizedScore("P1", "NBS1", "f", 1.0),
            NormalizedScore("P2", "NBS1", "f", 0.5),
        ]
        m = cross_scores(scores, ["NBS1"], ["f"])
        assert m.cell("NBS1", "f") == pytest.approx(0.75, abs=1e-15)

    def test_single_contribution(self):
        m = cross_scores([NormalizedScore("P1", "NBS1", "f", 1.0)], ["NBS1"], ["f"])
        assert m.cell("NBS1", "f") == 1.0

    def test_three_contributions_oracle(self):
        # brute-force mean oracle: (2/3 + 1 + 0) / 3 = 5/9
        contributions = [2 / 3, 1.0, 0.0]
        expected = sum(contributions) / len(contributions)
        scores = [
            NormalizedScore(f"P{i}", "NBS1", "f", v) for i, v in enumerate(contributions)
        ]
        m = cross_scores(scores, ["NBS1"], ["f"])
        assert m.cell("NBS1", "f") == pytest.approx(expected, abs=1e-12)
        assert m.cell("NBS1", "f") == pytest.approx(5 / 9, abs=1e-12)

    def test_no_contribution_stays_missing(self):
        m = cross_scores([], ["NBS1"], ["f"])
        assert m.cell("NBS1", "f") is None

    def test_unknown_ids_rejected(self):
        with pytest.raises(UnknownIdError):
            cross_scores([NormalizedScore("P", "NBS9", "f", 1.0)], ["NBS1"], ["f"])


def _pipeline_oracle(entries, crosswalk, records):
    """Independent recomputation: plain dict/loop arithmetic, no shared code."""
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


class TestPipelineOracle:
    def test_random_fixtures_match_brute_force(self):
        rng = random.Random(1234)
        catalogue = load_bundled_catalogue()
        crosswalk = catalogue.crosswalk_map()
        # restrict to a small sub-universe: <=5 NBS, <=4 facets, <=3 projects
        for trial in range(100):
            entry_ids = rng.sample(list(catalogue.nbs_ids), rng.randint(2, 5))
            entries = {
                e: dict(catalogue.entry(e).project_labels)
                for e in entry_ids
            }
            records = []
            for entry_id, project_labels in entries.items():
                for project, labels in list(project_labels.items())[:3]:
                    eligible = [
                        (p, label) for (p, label) in crosswalk if p == project
                    ][:4]
                    for label_tuple in eligible:
                        for source in labels:
                            if rng.random() < 0.7:
                                records.append(
                                    RawScoreRecord(project, source, label_tuple[1], rng.randint(0, 1))
                                )
            rng.shuffle(records)
            matrix = build_matrix(catalogue, records)
            oracle = _pipeline_oracle(entries, crosswalk, records)
            for (entry_id, facet), expected in oracle.items():
                assert matrix.cell(entry_id, facet) == pytest.approx(expected, abs=1e-12), (
                    trial, entry_id, facet,
                )

    def test_permutation_invariance(self, catalogue, raw_records):
        shuffled = list(raw_records)
        random.Random(99).shuffle(shuffled)
        a = build_matrix(catalogue, raw_records)
        b = build_matrix(catalogue, shuffled)
        assert np.array_equal(a.values, b.values, equal_nan=True)

    def test_binary_single_project_idempotent(self, catalogue):
        # one project, one record per (nbs, facet): values pass through unmodified
        entry = catalogue.entry("NBS21")  # N4C + TN
        records = []
        wanted = {}
        for (project, label), facet in catalogue.crosswalk_map().items():
            if project != "N4C" or facet in wanted:
                continue
            value = len(wanted) % 2
            records.append(RawScoreRecord("N4C", entry.project_labels["N4C"][0], label, value))
            wanted[facet] = value
            if len(wanted) == 4:
                break
        matrix = build_matrix(catalogue, records)
        for facet, value in wanted.items():
            assert matrix.cell("NBS21", facet) == float(value)

    def test_range_invariant(self, matrix):
        present = matrix.values[~np.isnan(matrix.values)]
        assert present.min() >= 0.0 and present.max() <= 1.0

    def test_missing_iff_no_contributor(self, catalogue, raw_records):
        matrix = build_matrix(catalogue, raw_records)
        crosswalk = catalogue.crosswalk_map()
        for entry in catalogue.entries:
            assessed = {
                crosswalk[(project, label)]
                for project in entry.project_labels
                for (p, label) in crosswalk
                if p == project
            }
            for facet in matrix.facet_ids:
                cell = matrix.cell(entry.id, facet)
                assert (cell is None) == (facet not in assessed), (entry.id, facet)

    def test_unmatched_records_reported(self, catalogue):
        stray = RawScoreRecord("GU", "Cooling trees", "Air quality", 1)
        assert unmatched_records(catalogue, [stray]) == [stray]


class TestFacetSummary:
    def _matrix(self, column):
        values = np.array(column, dtype=float).reshape(-1, 1)
        return ScoreMatrix([f"NBS{i+1}" for i in range(len(column))], ["f"], values)

    def test_odd_count_median(self):
        s = facet_summary(self._matrix([0.2, 0.6, 1.0]), "f")
        assert s.median == pytest.approx(0.6)
        assert s.count_nonmissing == 3

    def test_even_count_midpoint(self):
        s = facet_summary(self._matrix([0.0, 1.0]), "f")
        assert s.median == pytest.approx(0.5)

    def test_missing_excluded(self):
        s = facet_summary(self._matrix([0.0, float("nan"), 1.0, float("nan")]), "f")
        assert s.median == pytest.approx(0.5)
        assert s.count_nonmissing == 2

    def test_all_missing_raises(self):
        with pytest.raises(ComputationError, match="no data"):
            facet_summary(self._matrix([float("nan"), float("nan")]), "f")


class TestMatrixRoundTrip:
    def test_csv_round_trip_preserves_missing(self, tmp_path, matrix):
        path = tmp_path / "matrix.csv"
        matrix.to_csv(path)
        loaded = ScoreMatrix.from_csv(path)
        assert loaded.nbs_ids == matrix.nbs_ids
        assert loaded.facet_ids == matrix.facet_ids
        assert np.allclose(loaded.values, matrix.values, atol=1e-9, equal_nan=True)

    def test_out_of_range_cell_rejected(self):
        with pytest.raises(ValidationError, match=r"\[0, 1\]"):
            ScoreMatrix(["NBS1"], ["f"], np.array([[1.5]]))
