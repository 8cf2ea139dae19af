"""HTTP API over an immutable snapshot of catalogue, scores, statistics and names.

Every request handler captures the current snapshot exactly once and builds
its whole response from it, so a concurrent reload can never mix versions
inside one response. Reload builds and validates a complete new snapshot
before an atomic swap; a failed reload leaves the serving snapshot untouched.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .catalogue import Catalogue, load_catalogue, nbs_sort_key
from .consensus import NameDecision, load_consensus_data, resolve_all
from .errors import NbskitError, UnknownIdError
from .pca import PcaResult, pretreat_for_pca, run_pca
from .query import RankingRequest, evenness_input_matrix, profile, rank, scatter_data
from .scoring import ScoreMatrix, build_matrix, load_raw_scores
from .stats import EvennessResult, evenness_table


@dataclass(frozen=True)
class Snapshot:
    version: int
    catalogue: Catalogue
    matrix: ScoreMatrix
    pca: PcaResult
    evenness: tuple[EvennessResult, ...]
    decisions: Mapping[str, NameDecision]


def build_snapshot(data_dir: str | Path, version: int) -> Snapshot:
    """Load and validate everything; raises instead of producing a bad snapshot."""
    root = Path(data_dir)
    catalogue = load_catalogue(root / "catalogue")
    matrix_file = root / "scores" / "matrix.csv"
    if matrix_file.is_file():
        matrix = ScoreMatrix.from_csv(matrix_file)
    else:
        matrix = build_matrix(catalogue, load_raw_scores(root / "scores" / "raw_scores.csv"))
    unknown_rows = [n for n in matrix.nbs_ids if n not in catalogue]
    unknown_cols = [f for f in matrix.facet_ids if f not in {x.id for x in catalogue.facets}]
    if unknown_rows or unknown_cols:
        raise UnknownIdError(
            f"score matrix does not resolve against the catalogue "
            f"(rows {unknown_rows[:3]}, columns {unknown_cols[:3]})"
        )
    decisions = {d.nbs: d for d in resolve_all(load_consensus_data(root / "consensus"))}
    pca = run_pca(pretreat_for_pca(matrix, catalogue.facets))
    even = tuple(evenness_table(evenness_input_matrix(catalogue, matrix)))
    return Snapshot(
        version=version,
        catalogue=catalogue,
        matrix=matrix,
        pca=pca,
        evenness=even,
        decisions=decisions,
    )


class SnapshotStore:
    """Holds the live snapshot; readers get a consistent reference, reload swaps."""

    def __init__(self, data_dir: str | Path):
        self._data_dir = Path(data_dir)
        self._lock = threading.Lock()
        self._snapshot = build_snapshot(self._data_dir, version=1)

    def current(self) -> Snapshot:
        return self._snapshot

    def reload(self, data_dir: str | Path | None = None) -> int:
        """Atomically replace the snapshot; on failure the old one keeps serving."""
        with self._lock:
            if data_dir is not None:
                candidate_dir = Path(data_dir)
            else:
                candidate_dir = self._data_dir
            fresh = build_snapshot(candidate_dir, version=self._snapshot.version + 1)
            self._data_dir = candidate_dir
            self._snapshot = fresh
            return fresh.version


class RankBody(BaseModel):
    facet: str | None = None
    es_category: str | None = None
    weights: dict[str, float] | None = None
    filter: str | None = None
    top_n: int = Field(default=10, ge=1)

    @field_validator("weights")
    @classmethod
    def _non_negative(cls, value):
        if value is not None and any(w < 0 for w in value.values()):
            raise ValueError("weights must be non-negative")
        return value


def _cell(v: float | None) -> float | None:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return v


def _entry_payload(catalogue: Catalogue, nbs: str, full: bool = False) -> dict:
    entry = catalogue.entry(nbs)
    payload = {
        "id": entry.id,
        "final_name": entry.final_name,
        "taxonomy_leaf": entry.taxonomy_leaf,
        "name_provenance": entry.name_provenance,
    }
    if full:
        payload.update(
            {
                "aliases": list(entry.aliases),
                "description": entry.description,
                "project_labels": {p: list(v) for p, v in entry.project_labels.items()},
                "taxonomy_inferred": entry.taxonomy_inferred,
                "taxonomy_path": list(catalogue.taxonomy.path_to_root(entry.taxonomy_leaf)),
            }
        )
    return payload


def _evenness_payload(result: EvennessResult) -> dict:
    return {
        "nbs": result.nbs,
        "diversity": result.diversity,
        "facet_count": result.facet_count,
        "evenness": result.evenness,
    }


def _pca_payload(snapshot: Snapshot) -> dict:
    result: PcaResult = snapshot.pca
    points = scatter_data(snapshot.catalogue, result, (1, 2))
    return {
        "variable_ids": list(result.variable_ids),
        "nbs_ids": list(result.nbs_ids),
        "eigenvalues": [float(x) for x in result.eigenvalues],
        "variance_fraction": [float(x) for x in result.variance_fraction],
        "loadings": [[float(x) for x in row] for row in result.loadings],
        "component_scores": [[float(x) for x in row] for row in result.component_scores],
        "imputed_cells": [
            {"nbs": n, "variable": v, "value": float(x)} for n, v, x in result.imputed_cells
        ],
        "converged": result.converged,
        "points": [
            {"nbs": p.nbs, "x": p.x, "y": p.y, "color_code": p.color_code} for p in points.points
        ],
    }


def create_app(store: SnapshotStore) -> FastAPI:
    app = FastAPI(title="nbskit", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )
    app.state.store = store

    def respond(snapshot: Snapshot, payload: dict, status_code: int = 200) -> JSONResponse:
        payload = {"version": snapshot.version, **payload}
        return JSONResponse(
            payload, status_code=status_code, headers={"X-Snapshot-Version": str(snapshot.version)}
        )

    @app.exception_handler(NbskitError)
    async def _domain_error(request: Request, exc: NbskitError):
        status = 404 if isinstance(exc, UnknownIdError) else 422
        code = "not_found" if status == 404 else "invalid_request"
        return JSONResponse(
            {"code": code, "message": type(exc).__name__, "detail": str(exc)}, status_code=status
        )

    @app.exception_handler(RequestValidationError)
    async def _body_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            {"code": "invalid_request", "message": "RequestValidationError", "detail": str(exc.errors())},
            status_code=422,
        )

    @app.get("/nbs")
    def list_nbs():
        snapshot = store.current()
        ids = sorted(snapshot.catalogue.nbs_ids, key=nbs_sort_key)
        return respond(
            snapshot, {"items": [_entry_payload(snapshot.catalogue, n) for n in ids]}
        )

    @app.get("/nbs/{nbs_id}")
    def get_nbs(nbs_id: str):
        snapshot = store.current()
        return respond(snapshot, _entry_payload(snapshot.catalogue, nbs_id, full=True))

    @app.get("/nbs/{nbs_id}/profile")
    def get_profile(nbs_id: str):
        snapshot = store.current()
        p = profile(snapshot.catalogue, snapshot.matrix, nbs_id)
        return respond(
            snapshot,
            {
                "nbs": p.nbs,
                "final_name": p.final_name,
                "uc_scores": {k: _cell(v) for k, v in p.uc_scores.items()},
                "es_scores": {k: _cell(v) for k, v in p.es_scores.items()},
                "es_category_means": {k: _cell(v) for k, v in p.es_category_means.items()},
                "evenness": _evenness_payload(p.evenness),
                "taxonomy_path": list(p.taxonomy_path),
            },
        )

    @app.get("/taxonomy")
    def get_taxonomy():
        snapshot = store.current()
        taxonomy = snapshot.catalogue.taxonomy
        return respond(
            snapshot,
            {
                "nodes": [
                    {
                        "code": taxonomy.node(c).code,
                        "parent": taxonomy.node(c).parent,
                        "level": taxonomy.node(c).level,
                        "question": taxonomy.node(c).question,
                        "leaf": taxonomy.is_leaf(c),
                        "members": list(snapshot.catalogue.taxonomy_members(c)),
                    }
                    for c in taxonomy.codes
                ]
            },
        )

    @app.get("/facets")
    def get_facets():
        snapshot = store.current()
        return respond(
            snapshot,
            {
                "items": [
                    {"id": f.id, "kind": f.kind, "es_category": f.es_category, "label": f.label}
                    for f in snapshot.catalogue.facets
                ]
            },
        )

    @app.get("/scores")
    def get_scores():
        snapshot = store.current()
        matrix = snapshot.matrix
        cells = [[_cell(float(v)) for v in row] for row in matrix.values]
        return respond(
            snapshot,
            {"nbs_ids": list(matrix.nbs_ids), "facet_ids": list(matrix.facet_ids), "cells": cells},
        )

    @app.get("/evenness")
    def get_evenness():
        snapshot = store.current()
        return respond(snapshot, {"items": [_evenness_payload(e) for e in snapshot.evenness]})

    @app.get("/pca")
    def get_pca():
        snapshot = store.current()
        return respond(snapshot, _pca_payload(snapshot))

    @app.get("/names/{nbs_id}/decision")
    def get_decision(nbs_id: str):
        snapshot = store.current()
        decision = snapshot.decisions.get(nbs_id)
        if decision is None:
            raise UnknownIdError(f"no name decision for {nbs_id!r}")
        return respond(
            snapshot,
            {
                "nbs": decision.nbs,
                "final_name": decision.final_name,
                "path": decision.path,
                "audit": [
                    {"stage": s.stage, "rule": s.rule, "outcome": s.outcome} for s in decision.audit
                ],
            },
        )

    @app.post("/rank")
    def post_rank(body: RankBody):
        snapshot = store.current()
        request = RankingRequest(
            facet=body.facet,
            es_category=body.es_category,
            weights=body.weights,
            filter=body.filter,
            top_n=body.top_n,
        )
        result = rank(snapshot.catalogue, snapshot.matrix, request)
        return respond(
            snapshot,
            {
                "entries": [
                    {"nbs": e.nbs, "value": e.value, "unassessed": list(e.unassessed)}
                    for e in result.entries
                ],
                "request": {
                    "facet": body.facet,
                    "es_category": body.es_category,
                    "weights": body.weights,
                    "filter": body.filter,
                    "top_n": body.top_n,
                },
            },
        )

    return app


def serve(data_dir: str | Path, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Validate, load and serve; refuses to start on bad data."""
    import uvicorn

    store = SnapshotStore(data_dir)
    uvicorn.run(create_app(store), host=host, port=port)
