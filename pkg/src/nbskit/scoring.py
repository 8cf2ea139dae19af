"""Crossed performance scores: binary records in, NBS-by-facet matrix out.

The pipeline has three stages, each a pure function:

1. every raw record is mapped from its project's own facet label onto the
   common baseline (:func:`map_to_baseline`);
2. per project, the binary values of all sub-facets crosswalked to one
   baseline facet (over the NBS's whole source-label group) are averaged
   (:func:`normalize_project`);
3. the per-project normalized scores are averaged again, unweighted, across
   the projects contributing to each (NBS, facet) pair (:func:`cross_scores`).

Missing stays missing throughout: a matrix cell exists iff at least one
project assessed that pair.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .catalogue import Catalogue, nbs_sort_key
from .errors import ComputationError, CrosswalkError, DataFormatError, UnknownIdError, ValidationError


@dataclass(frozen=True)
class RawScoreRecord:
    """One binary judgement: did this source NBS address this project facet?"""

    project: str
    source_nbs_label: str
    project_facet_label: str
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise ValidationError(
                f"raw score must be binary, got {self.value!r} "
                f"({self.project}/{self.source_nbs_label}/{self.project_facet_label})"
            )


@dataclass(frozen=True)
class NormalizedScore:
    """Per-project score for one (NBS, baseline facet) pair, already in [0, 1]."""

    project: str
    nbs: str
    facet: str
    value: float


@dataclass(frozen=True)
class FacetSummary:
    facet: str
    median: float
    mean: float
    count_nonmissing: int


class ScoreMatrix:
    """NBS x facet crossed scores; NaN cells mean "not assessed by any project"."""

    def __init__(self, nbs_ids: Sequence[str], facet_ids: Sequence[str], values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(nbs_ids), len(facet_ids)):
            raise ValidationError(
                f"matrix shape {values.shape} does not match {len(nbs_ids)} ids x {len(facet_ids)} facets"
            )
        present = values[~np.isnan(values)]
        if present.size and (present.min() < 0 or present.max() > 1):
            raise ValidationError("score cells must lie in [0, 1]")
        if len(set(nbs_ids)) != len(nbs_ids) or len(set(facet_ids)) != len(facet_ids):
            raise ValidationError("duplicate row or column id")
        self._nbs_ids = tuple(nbs_ids)
        self._facet_ids = tuple(facet_ids)
        self._values = values
        self._values.setflags(write=False)
        self._row_index = {n: i for i, n in enumerate(self._nbs_ids)}
        self._col_index = {f: j for j, f in enumerate(self._facet_ids)}

    @property
    def nbs_ids(self) -> tuple[str, ...]:
        return self._nbs_ids

    @property
    def facet_ids(self) -> tuple[str, ...]:
        return self._facet_ids

    @property
    def values(self) -> np.ndarray:
        """Read-only float array, NaN marking missing cells."""
        return self._values

    def row_position(self, nbs: str) -> int:
        try:
            return self._row_index[nbs]
        except KeyError:
            raise UnknownIdError(f"matrix has no row for {nbs!r}") from None

    def column_position(self, facet: str) -> int:
        try:
            return self._col_index[facet]
        except KeyError:
            raise UnknownIdError(f"matrix has no column for {facet!r}") from None

    def cell(self, nbs: str, facet: str) -> float | None:
        v = self._values[self.row_position(nbs), self.column_position(facet)]
        return None if math.isnan(v) else float(v)

    def row(self, nbs: str) -> np.ndarray:
        return self._values[self.row_position(nbs)]

    def column(self, facet: str) -> np.ndarray:
        return self._values[:, self.column_position(facet)]

    def to_csv(self, path: str | Path) -> None:
        """Tabular export: one row per NBS, missing serialized as empty field.

        Cells use the shortest round-tripping representation so re-ingesting
        the file reproduces bit-identical downstream numbers.
        """
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["nbs", *self._facet_ids])
            for i, nbs in enumerate(self._nbs_ids):
                writer.writerow(
                    [nbs, *("" if math.isnan(v) else repr(float(v)) for v in self._values[i])]
                )

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScoreMatrix":
        path = Path(path)
        if not path.is_file():
            raise DataFormatError("file not found", source=str(path))
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataFormatError("empty matrix file", source=str(path)) from None
            if not header or header[0] != "nbs":
                raise DataFormatError("first column must be 'nbs'", source=str(path), line=1)
            facet_ids = header[1:]
            nbs_ids: list[str] = []
            rows: list[list[float]] = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise DataFormatError(
                        f"expected {len(header)} fields, got {len(row)}", source=str(path), line=lineno
                    )
                nbs_ids.append(row[0])
                try:
                    rows.append([float("nan") if cell == "" else float(cell) for cell in row[1:]])
                except ValueError as exc:
                    raise DataFormatError(f"bad cell value: {exc}", source=str(path), line=lineno) from exc
        return cls(nbs_ids, facet_ids, np.array(rows, dtype=float).reshape(len(nbs_ids), len(facet_ids)))


def map_to_baseline(
    record: RawScoreRecord, crosswalk: Mapping[tuple[str, str], str]
) -> tuple[str, int]:
    """Resolve a record's project facet label to its baseline facet.

    The value passes through unchanged; an unmapped label is a hard error,
    records are never silently dropped.
    """
    key = (record.project, record.project_facet_label)
    try:
        return crosswalk[key], record.value
    except KeyError:
        raise CrosswalkError(
            f"no crosswalk rule for project facet label {record.project_facet_label!r} "
            f"of project {record.project!r}"
        ) from None


def normalize_project(
    nbs: str, facet: str, records: Sequence[RawScoreRecord]
) -> NormalizedScore | None:
    """Average the binary values of one project's label group for one baseline facet.

    An empty record set means the project did not assess the facet: returns
    None (missing), never a number.
    """
    if not records:
        return None
    projects = {r.project for r in records}
    if len(projects) > 1:
        raise ValidationError(f"normalize_project got records from several projects: {sorted(projects)}")
    value = sum(r.value for r in records) / len(records)
    return NormalizedScore(project=records[0].project, nbs=nbs, facet=facet, value=value)


def cross_scores(
    normalized: Iterable[NormalizedScore],
    nbs_ids: Sequence[str],
    facet_ids: Sequence[str],
) -> ScoreMatrix:
    """Unweighted mean of per-project scores; cells nobody contributed to stay missing."""
    sums = np.zeros((len(nbs_ids), len(facet_ids)))
    counts = np.zeros_like(sums)
    row_index = {n: i for i, n in enumerate(nbs_ids)}
    col_index = {f: j for j, f in enumerate(facet_ids)}
    for score in normalized:
        if score.nbs not in row_index:
            raise UnknownIdError(f"normalized score references unknown NBS id {score.nbs!r}")
        if score.facet not in col_index:
            raise UnknownIdError(f"normalized score references unknown facet id {score.facet!r}")
        sums[row_index[score.nbs], col_index[score.facet]] += score.value
        counts[row_index[score.nbs], col_index[score.facet]] += 1
    with np.errstate(invalid="ignore"):
        values = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return ScoreMatrix(nbs_ids, facet_ids, values)


def normalize_all(catalogue: Catalogue, records: Sequence[RawScoreRecord]) -> list[NormalizedScore]:
    """Stage-2 output for every (project, NBS, facet) the records cover.

    Records are routed through each entry's per-project source-label group;
    a used record whose facet label lacks a crosswalk rule raises. Records
    whose source label belongs to no catalogue entry are left alone (they
    are data for excluded items) - see :func:`unmatched_records`.
    """
    crosswalk = catalogue.crosswalk_map()
    grouped: dict[tuple[str, str], dict[str, list[RawScoreRecord]]] = {}
    # a source label may be shared by several common NBS (grouped/paired lists
    # split one project NBS across entries), so membership is a multimap
    membership: dict[tuple[str, str], list[str]] = {}
    for entry in catalogue.entries:
        for project, labels in entry.project_labels.items():
            for label in labels:
                membership.setdefault((project, label), []).append(entry.id)
    for record in records:
        owners = membership.get((record.project, record.source_nbs_label))
        if not owners:
            continue
        facet, _ = map_to_baseline(record, crosswalk)
        for nbs in owners:
            grouped.setdefault((record.project, nbs), {}).setdefault(facet, []).append(record)
    out: list[NormalizedScore] = []
    for (project, nbs), per_facet in sorted(grouped.items()):
        for facet, recs in sorted(per_facet.items()):
            score = normalize_project(nbs, facet, recs)
            assert score is not None  # groups are never created empty
            out.append(score)
    return out


def build_matrix(catalogue: Catalogue, records: Sequence[RawScoreRecord]) -> ScoreMatrix:
    """Full pipeline: records -> normalized per project -> crossed matrix."""
    nbs_ids = sorted(catalogue.nbs_ids, key=nbs_sort_key)
    facet_ids = [f.id for f in catalogue.facets]
    return cross_scores(normalize_all(catalogue, records), nbs_ids, facet_ids)


def unmatched_records(catalogue: Catalogue, records: Sequence[RawScoreRecord]) -> list[RawScoreRecord]:
    """Records whose (project, source label) belongs to no catalogue entry."""
    membership = {
        (project, label)
        for entry in catalogue.entries
        for project, labels in entry.project_labels.items()
        for label in labels
    }
    return [r for r in records if (r.project, r.source_nbs_label) not in membership]


def facet_summary(matrix: ScoreMatrix, facet: str) -> FacetSummary:
    """Median (midpoint rule on even counts), mean and support of one column."""
    column = matrix.column(facet)
    present = column[~np.isnan(column)]
    if present.size == 0:
        raise ComputationError(f"facet {facet!r} has no data: every cell is missing")
    return FacetSummary(
        facet=facet,
        median=float(np.median(present)),
        mean=float(present.mean()),
        count_nonmissing=int(present.size),
    )


def load_raw_scores(path: str | Path) -> list[RawScoreRecord]:
    """Read the raw-score file: project, source label, project facet label, 0/1."""
    path = Path(path)
    if not path.is_file():
        raise DataFormatError("file not found", source=str(path))
    records = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = ["project", "source_nbs_label", "project_facet_label", "value"]
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise DataFormatError(f"missing columns {missing}", source=str(path), line=1)
        for lineno, row in enumerate(reader, start=2):
            try:
                value = int(row["value"])
            except (TypeError, ValueError):
                raise DataFormatError(
                    f"value must be 0 or 1, got {row['value']!r}", source=str(path), line=lineno
                ) from None
            try:
                records.append(
                    RawScoreRecord(
                        project=row["project"],
                        source_nbs_label=row["source_nbs_label"],
                        project_facet_label=row["project_facet_label"],
                        value=value,
                    )
                )
            except ValidationError as exc:
                raise DataFormatError(str(exc), source=str(path), line=lineno) from exc
    return records
