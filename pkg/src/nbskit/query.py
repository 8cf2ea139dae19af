"""Decision-support queries over a catalogue plus crossed-score matrix.

Rankings must be total orders, so missing cells count as zero there and the
affected facets are flagged per entry instead of silently vanishing. Profile
aggregates, by contrast, summarize only what was actually assessed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .catalogue import ES_CATEGORIES, Catalogue, nbs_sort_key
from .errors import QueryError
from .pca import PcaResult, aggregate_es_categories
from .scoring import ScoreMatrix
from .stats import EvennessResult, evenness_for_row


@dataclass(frozen=True)
class NbsProfile:
    nbs: str
    final_name: str
    uc_scores: Mapping[str, float | None]
    es_scores: Mapping[str, float | None]
    es_category_means: Mapping[str, float | None]
    evenness: EvennessResult
    taxonomy_path: tuple[str, ...]


@dataclass(frozen=True)
class RankingRequest:
    """Exactly one target: a facet id, an ES category, or a weight map."""

    facet: str | None = None
    es_category: str | None = None
    weights: Mapping[str, float] | None = None
    filter: str | None = None
    top_n: int = 10

    def __post_init__(self):
        targets = sum(x is not None for x in (self.facet, self.es_category, self.weights))
        if targets != 1:
            raise QueryError("a ranking request needs exactly one of facet, es_category or weights")
        if self.top_n < 1:
            raise QueryError("top_n must be at least 1")
        if self.weights is not None:
            if any(w < 0 for w in self.weights.values()):
                raise QueryError("weights must be non-negative")
            if not any(w > 0 for w in self.weights.values()):
                raise QueryError("at least one weight must be positive")


@dataclass(frozen=True)
class RankedEntry:
    nbs: str
    value: float
    unassessed: tuple[str, ...] = ()


@dataclass(frozen=True)
class RankedList:
    entries: tuple[RankedEntry, ...]
    request: RankingRequest


@dataclass(frozen=True)
class ScatterPoint:
    nbs: str
    x: float
    y: float
    color_code: str  # level-2 classification code


@dataclass(frozen=True)
class ScatterData:
    points: tuple[ScatterPoint, ...]
    dims: tuple[int, int]
    variance_fraction: tuple[float, float]


def evenness_input_matrix(catalogue: Catalogue, matrix: ScoreMatrix) -> ScoreMatrix:
    """The variable set the pipeline computes evenness on: all UC + 4 ES aggregates."""
    return aggregate_es_categories(matrix, catalogue.facets)


def profile(catalogue: Catalogue, matrix: ScoreMatrix, nbs: str) -> NbsProfile:
    """Everything the explorer shows for one NBS; missing stays distinct from 0."""
    entry = catalogue.entry(nbs)
    uc_scores = {f: matrix.cell(nbs, f) for f in catalogue.facet_ids(kind="UrbanChallenge")}
    es_scores = {f: matrix.cell(nbs, f) for f in catalogue.facet_ids(kind="EcosystemService")}
    category_means: dict[str, float | None] = {}
    for category in ES_CATEGORIES:
        cells = [matrix.cell(nbs, f) for f in catalogue.facet_ids(es_category=category)]
        present = [c for c in cells if c is not None]
        category_means[category] = sum(present) / len(present) if present else None
    grouped = evenness_input_matrix(catalogue, matrix)
    return NbsProfile(
        nbs=nbs,
        final_name=entry.final_name,
        uc_scores=uc_scores,
        es_scores=es_scores,
        es_category_means=category_means,
        evenness=evenness_for_row(nbs, grouped.row(nbs)),
        taxonomy_path=catalogue.taxonomy.path_to_root(entry.taxonomy_leaf),
    )


def _effective_weights(catalogue: Catalogue, request: RankingRequest) -> dict[str, float]:
    if request.facet is not None:
        catalogue.facet(request.facet)
        return {request.facet: 1.0}
    if request.es_category is not None:
        members = catalogue.facet_ids(es_category=request.es_category)
        if not members:
            raise QueryError(f"unknown ES category {request.es_category!r}")
        return {f: 1.0 for f in members}
    assert request.weights is not None
    for facet_id in request.weights:
        catalogue.facet(facet_id)
    total = sum(request.weights.values())
    return {f: w / total for f, w in request.weights.items() if w > 0}


def rank(catalogue: Catalogue, matrix: ScoreMatrix, request: RankingRequest) -> RankedList:
    """Composite = sum of normalized weight x score, missing scored as 0 and flagged."""
    weights = _effective_weights(catalogue, request)
    if request.filter is not None:
        pool = catalogue.taxonomy_members(request.filter)
        if not pool:
            raise QueryError(f"no catalogue entry falls under {request.filter!r}")
    else:
        pool = tuple(sorted(catalogue.nbs_ids, key=nbs_sort_key))
    entries = []
    for nbs in pool:
        value = 0.0
        unassessed = []
        for facet_id, weight in weights.items():
            cell = matrix.cell(nbs, facet_id)
            if cell is None:
                unassessed.append(facet_id)
                cell = 0.0
            value += weight * cell
        entries.append(RankedEntry(nbs=nbs, value=value, unassessed=tuple(unassessed)))
    entries.sort(key=lambda e: (-e.value, nbs_sort_key(e.nbs)))
    return RankedList(entries=tuple(entries[: request.top_n]), request=request)


def scatter_data(catalogue: Catalogue, result: PcaResult, dims: tuple[int, int] = (1, 2)) -> ScatterData:
    """Component coordinates keyed by the level-2 classification for coloring."""
    m1, m2 = dims
    for m in (m1, m2):
        if not 1 <= m <= result.n_components:
            raise QueryError(f"component {m} out of range 1..{result.n_components}")
    points = []
    for i, nbs in enumerate(result.nbs_ids):
        leaf = catalogue.entry(nbs).taxonomy_leaf
        points.append(
            ScatterPoint(
                nbs=nbs,
                x=float(result.component_scores[i, m1 - 1]),
                y=float(result.component_scores[i, m2 - 1]),
                color_code=catalogue.taxonomy.ancestor_at_level(leaf, 2),
            )
        )
    return ScatterData(
        points=tuple(points),
        dims=dims,
        variance_fraction=(
            float(result.variance_fraction[m1 - 1]),
            float(result.variance_fraction[m2 - 1]),
        ),
    )
