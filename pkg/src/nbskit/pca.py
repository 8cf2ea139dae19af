"""Multivariate analysis: pretreatment, iterative PCA imputation, correlation PCA.

The two numeric workhorses are scikit-learn compatible transformers so they
compose with pipelines and grid search:

- :class:`IterativePCAImputer` completes a matrix with missing entries by
  alternating standardization, rank-k reconstruction from the leading
  eigenvectors, and overwriting only the missing cells, until the imputed
  values stop moving. Observed cells are never touched.
- :class:`CorrelationPCA` is standardized PCA: center, scale by the sample
  standard deviation, eigendecompose the correlation matrix. Eigenvalues come
  out non-increasing and the loadings orthonormal with a deterministic sign.

Pretreatment for the bundled pipeline drops urban-challenge columns with more
than one missing cell and collapses the ecosystem services to their four
per-category row means.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .catalogue import ES_CATEGORIES, FacetDef
from .errors import ComputationError, UnknownIdError
from .scoring import ScoreMatrix

ES_AGGREGATE_IDS = tuple(f"es_{category.lower()}" for category in ES_CATEGORIES)


@dataclass(frozen=True)
class PcaInput:
    """Pretreated matrix: retained UC columns plus the 4 ES category aggregates."""

    matrix: ScoreMatrix
    variable_ids: tuple[str, ...]
    dropped_columns: tuple[str, ...]
    standardized: bool = True


@dataclass(frozen=True)
class PcaResult:
    eigenvalues: np.ndarray
    loadings: np.ndarray
    component_scores: np.ndarray
    variance_fraction: np.ndarray
    nbs_ids: tuple[str, ...]
    variable_ids: tuple[str, ...]
    imputed_cells: tuple[tuple[str, str, float], ...]
    converged: bool

    @property
    def n_components(self) -> int:
        return len(self.eigenvalues)


def aggregate_es_categories(matrix: ScoreMatrix, facets: Sequence[FacetDef]) -> ScoreMatrix:
    """Replace the ES columns by per-category row means (over present cells).

    UC columns pass through untouched. A category with every cell missing in
    a row stays missing in that row.
    """
    facet_by_id = {f.id: f for f in facets}
    unknown = [f for f in matrix.facet_ids if f not in facet_by_id]
    if unknown:
        raise UnknownIdError(f"matrix columns are not baseline facets: {unknown[:5]}")
    uc_ids = [f for f in matrix.facet_ids if facet_by_id[f].kind == "UrbanChallenge"]
    out_ids = [*uc_ids, *ES_AGGREGATE_IDS]
    n = len(matrix.nbs_ids)
    values = np.full((n, len(out_ids)), np.nan)
    for j, uc in enumerate(uc_ids):
        values[:, j] = matrix.column(uc)
    for k, category in enumerate(ES_CATEGORIES):
        member_ids = [
            f for f in matrix.facet_ids
            if facet_by_id[f].kind == "EcosystemService" and facet_by_id[f].es_category == category
        ]
        if not member_ids:
            continue
        block = np.stack([matrix.column(f) for f in member_ids], axis=1)
        present = ~np.isnan(block)
        counts = present.sum(axis=1)
        sums = np.where(present, block, 0.0).sum(axis=1)
        with np.errstate(invalid="ignore"):
            values[:, len(uc_ids) + k] = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return ScoreMatrix(matrix.nbs_ids, out_ids, values)


def pretreat_for_pca(matrix: ScoreMatrix, facets: Sequence[FacetDef]) -> PcaInput:
    """Group ES per category, then drop UC columns with more than 1 missing cell."""
    grouped = aggregate_es_categories(matrix, facets)
    facet_by_id = {f.id: f for f in facets}
    keep: list[str] = []
    dropped: list[str] = []
    for facet_id in grouped.facet_ids:
        column = grouped.column(facet_id)
        is_uc = facet_id in facet_by_id and facet_by_id[facet_id].kind == "UrbanChallenge"
        if is_uc and int(np.isnan(column).sum()) > 1:
            dropped.append(facet_id)
        else:
            keep.append(facet_id)
    if not keep:
        raise ComputationError("pretreatment left no variables to analyse")
    values = np.stack([grouped.column(f) for f in keep], axis=1)
    return PcaInput(
        matrix=ScoreMatrix(grouped.nbs_ids, keep, values),
        variable_ids=tuple(keep),
        dropped_columns=tuple(dropped),
    )


class IterativePCAImputer(BaseEstimator, TransformerMixin):
    """Complete missing cells via iterative rank-k PCA reconstruction.

    Parameters
    ----------
    n_components : rank of the reconstruction, ``1 <= k < min(n_rows, n_cols)``.
    tol : stop once the largest absolute change of any imputed cell falls
        below this.
    max_iter : iteration cap; hitting it leaves ``converged_`` False instead
        of raising.
    """

    def __init__(self, n_components: int = 2, tol: float = 1e-8, max_iter: int = 1000):
        self.n_components = n_components
        self.tol = tol
        self.max_iter = max_iter

    def _complete(self, X: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int, float]], int, bool]:
        X = check_array(X, dtype=float, ensure_all_finite="allow-nan", copy=True)
        n, p = X.shape
        mask = np.isnan(X)
        if not mask.any():
            return X, [], 0, True
        if self.n_components < 1 or self.n_components >= min(n, p):
            raise ComputationError(
                f"n_components must satisfy 1 <= k < min(rows, columns) = {min(n, p)}, got {self.n_components}"
            )
        if mask.all(axis=0).any():
            raise ComputationError("a column has no observed value; nothing to impute from")
        if mask.all(axis=1).any():
            raise ComputationError("a row has no observed value; nothing to impute from")

        column_means = np.nanmean(X, axis=0)
        X[mask] = np.broadcast_to(column_means, X.shape)[mask]

        converged = False
        iterations = 0
        for iterations in range(1, self.max_iter + 1):
            mu = X.mean(axis=0)
            sd = X.std(axis=0, ddof=1)
            if (sd == 0).any():
                flat = int(np.flatnonzero(sd == 0)[0])
                raise ComputationError(f"column {flat} became constant during imputation; cannot standardize")
            Z = (X - mu) / sd
            corr = (Z.T @ Z) / (n - 1)
            eigenvalues, eigenvectors = np.linalg.eigh(corr)
            leading = eigenvectors[:, ::-1][:, : self.n_components]
            reconstructed = (Z @ leading) @ leading.T * sd + mu
            previous = X[mask]
            X[mask] = reconstructed[mask]
            if np.max(np.abs(X[mask] - previous)) < self.tol:
                converged = True
                break
        imputed = [(int(i), int(j), float(X[i, j])) for i, j in zip(*np.nonzero(mask))]
        return X, imputed, iterations, converged

    def fit(self, X, y=None):
        completed, imputed, iterations, converged = self._complete(X)
        self.completed_ = completed
        self.imputed_cells_ = imputed
        self.n_iter_ = iterations
        self.converged_ = converged
        return self

    def transform(self, X) -> np.ndarray:
        # completion is a pure function of X; no state from fit is needed
        completed, _, _, _ = self._complete(X)
        return completed

    def fit_transform(self, X, y=None, **fit_params) -> np.ndarray:
        return self.fit(X, y).completed_


class CorrelationPCA(BaseEstimator, TransformerMixin):
    """Standardized (correlation-matrix) principal component analysis.

    ``fit`` centers each variable, divides by its sample standard deviation
    and eigendecomposes the resulting correlation matrix. ``transform`` maps
    data to component scores. All components are kept; callers slice.
    """

    def __init__(self, ddof: int = 1):
        self.ddof = ddof

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n, p = X.shape
        if n < 2 or p < 2:
            raise ComputationError(f"PCA needs at least 2 rows and 2 variables, got {n}x{p}")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0, ddof=self.ddof)
        zero = np.flatnonzero(self.scale_ == 0)
        if zero.size:
            raise ComputationError(f"variable {int(zero[0])} has zero variance; cannot standardize")
        Z = (X - self.mean_) / self.scale_
        corr = (Z.T @ Z) / (n - self.ddof)
        eigenvalues, eigenvectors = np.linalg.eigh(corr)
        order = np.argsort(eigenvalues)[::-1]
        eigenvalues = np.clip(eigenvalues[order], 0.0, None)
        eigenvectors = eigenvectors[:, order]
        # deterministic sign: the largest-magnitude entry of each loading is positive
        anchor = np.argmax(np.abs(eigenvectors), axis=0)
        signs = np.sign(eigenvectors[anchor, np.arange(p)])
        signs[signs == 0] = 1.0
        self.eigenvalues_ = eigenvalues
        self.loadings_ = eigenvectors * signs
        self.variance_fraction_ = eigenvalues / eigenvalues.sum()
        self.n_features_in_ = p
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "loadings_")
        X = check_array(X, dtype=float)
        return ((X - self.mean_) / self.scale_) @ self.loadings_

    def inverse_transform(self, scores) -> np.ndarray:
        check_is_fitted(self, "loadings_")
        scores = check_array(scores, dtype=float)
        return scores @ self.loadings_.T * self.scale_ + self.mean_


def run_pca(
    pca_input: PcaInput,
    n_components: int = 2,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> PcaResult:
    """Impute the pretreated matrix (rank ``n_components``), then full-rank PCA."""
    matrix = pca_input.matrix
    X = np.array(matrix.values, dtype=float)
    if np.isnan(X).any():
        imputer = IterativePCAImputer(n_components=n_components, tol=tol, max_iter=max_iter)
        X = imputer.fit_transform(X)
        imputed = tuple(
            (matrix.nbs_ids[i], matrix.facet_ids[j], value) for i, j, value in imputer.imputed_cells_
        )
        converged = imputer.converged_
    else:
        imputed = ()
        converged = True
    model = CorrelationPCA().fit(X)
    return PcaResult(
        eigenvalues=model.eigenvalues_,
        loadings=model.loadings_,
        component_scores=model.transform(X),
        variance_fraction=model.variance_fraction_,
        nbs_ids=matrix.nbs_ids,
        variable_ids=pca_input.variable_ids,
        imputed_cells=imputed,
        converged=converged,
    )
