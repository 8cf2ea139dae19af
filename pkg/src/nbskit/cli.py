"""Batch driver: validate data, run the pipeline, export plot tables, serve HTTP."""

from __future__ import annotations

import csv
import functools
import json
import math
import sys
from pathlib import Path

import click

from .catalogue import Catalogue, bundled_data_dir, load_catalogue, nbs_sort_key
from .consensus import load_consensus_data, resolve_all
from .errors import NbskitError
from .pca import pretreat_for_pca, run_pca
from .query import RankingRequest, evenness_input_matrix, rank as run_rank, scatter_data
from .scoring import ScoreMatrix, build_matrix, facet_summary, load_raw_scores, unmatched_records
from .stats import chi_square_one_sample, evenness_table

FMT = ".9g"


def _data_dir(value: str) -> Path:
    return bundled_data_dir() if value == "bundled" else Path(value)


def _load_all(data: str) -> tuple[Path, Catalogue, ScoreMatrix]:
    root = _data_dir(data)
    catalogue = load_catalogue(root / "catalogue")
    matrix_file = root / "scores" / "matrix.csv"
    if matrix_file.is_file():
        matrix = ScoreMatrix.from_csv(matrix_file)
    else:
        matrix = build_matrix(catalogue, load_raw_scores(root / "scores" / "raw_scores.csv"))
    return root, catalogue, matrix


def _matrix_for(data: str, matrix_path: str | None) -> tuple[Catalogue, ScoreMatrix]:
    root = _data_dir(data)
    catalogue = load_catalogue(root / "catalogue")
    if matrix_path:
        return catalogue, ScoreMatrix.from_csv(matrix_path)
    return catalogue, _load_all(data)[2]


def _fail_on_domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NbskitError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _print_table(headers: list[str], rows: list[list[str]]) -> None:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    click.echo("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    for row in rows:
        click.echo("  ".join(c.ljust(w) for c, w in zip(row, widths)))


data_option = click.option("--data", default="bundled", show_default=True,
                           help="Data directory ('bundled' = packaged dataset).")
format_option = click.option("--format", "fmt", type=click.Choice(["table", "structured"]),
                             default="table", show_default=True)
matrix_option = click.option("--matrix", "matrix_path", default=None,
                             help="Re-ingest a previously exported score matrix instead of raw scores.")


@click.group()
def main():
    """Decision-support toolkit for the common NBS catalogue."""


@main.command()
@data_option
@_fail_on_domain_errors
def validate(data):
    """Check every structural invariant of the catalogue and bundled inputs."""
    root = _data_dir(data)
    catalogue = load_catalogue(root / "catalogue")
    click.echo(f"catalogue: {len(catalogue.entries)} entries, "
               f"{len(catalogue.taxonomy.codes)} taxonomy nodes, {len(catalogue.facets)} facets")
    raw_path = root / "scores" / "raw_scores.csv"
    if raw_path.is_file():
        records = load_raw_scores(raw_path)
        matrix = build_matrix(catalogue, records)
        stray = unmatched_records(catalogue, records)
        missing = int(sum(1 for v in matrix.values.flat if math.isnan(v)))
        click.echo(f"raw scores: {len(records)} records, {len(stray)} for excluded items, "
                   f"{missing} matrix cells unassessed")
    consensus = load_consensus_data(root / "consensus")
    decisions = resolve_all(consensus)
    click.echo(f"consensus: {len(decisions)} name decisions replayed")
    click.echo("ok")


@main.command()
@data_option
@format_option
@click.option("--out", default=None, help="Write the crossed matrix as CSV.")
@_fail_on_domain_errors
def score(data, fmt, out):
    """Run the crossed-score pipeline and emit the NBS x facet matrix."""
    _, catalogue, matrix = _load_all(data)
    if out:
        matrix.to_csv(out)
        click.echo(f"wrote {out}")
        return
    if fmt == "structured":
        payload = {
            "nbs_ids": list(matrix.nbs_ids),
            "facet_ids": list(matrix.facet_ids),
            "cells": [[None if math.isnan(v) else v for v in row] for row in matrix.values],
        }
        click.echo(json.dumps(payload, indent=2))
        return
    rows = []
    for facet in matrix.facet_ids:
        s = facet_summary(matrix, facet)
        rows.append([facet, format(s.median, ".3f"), format(s.mean, ".3f"), str(s.count_nonmissing)])
    _print_table(["facet", "median", "mean", "n"], rows)


@main.command()
@data_option
@format_option
@matrix_option
@click.option("--nbs", default="all", show_default=True, help="One NBS id or 'all'.")
@click.option("--out", default=None, help="Write results as CSV.")
@_fail_on_domain_errors
def evenness(data, fmt, matrix_path, nbs, out):
    """Balance of each NBS across challenges and service categories."""
    catalogue, matrix = _matrix_for(data, matrix_path)
    table = evenness_table(evenness_input_matrix(catalogue, matrix))
    if nbs != "all":
        table = [r for r in table if r.nbs == nbs]
        if not table:
            raise NbskitError(f"unknown NBS id {nbs!r}")
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["nbs", "diversity", "facet_count", "evenness"])
            for r in table:
                writer.writerow([
                    r.nbs, format(r.diversity, FMT), r.facet_count,
                    "" if r.evenness is None else format(r.evenness, FMT),
                ])
        click.echo(f"wrote {out}")
        return
    if fmt == "structured":
        click.echo(json.dumps([
            {"nbs": r.nbs, "diversity": r.diversity, "facet_count": r.facet_count, "evenness": r.evenness}
            for r in table
        ], indent=2))
        return
    _print_table(
        ["nbs", "diversity", "S", "evenness"],
        [[r.nbs, format(r.diversity, ".6f"), str(r.facet_count),
          "undefined" if r.evenness is None else format(r.evenness, ".6f")] for r in table],
    )


@main.command()
@data_option
@format_option
@matrix_option
@click.option("--k", default=2, show_default=True, help="Rank of the imputation reconstruction.")
@click.option("--tol", default=1e-8, show_default=True)
@click.option("--max-iter", default=1000, show_default=True)
@click.option("--out", default=None, help="Directory for eigenvalue/score/loading tables.")
@_fail_on_domain_errors
def pca(data, fmt, matrix_path, k, tol, max_iter, out):
    """Standardized PCA of the pretreated matrix (with iterative imputation)."""
    catalogue, matrix = _matrix_for(data, matrix_path)
    pretreated = pretreat_for_pca(matrix, catalogue.facets)
    result = run_pca(pretreated, n_components=k, tol=tol, max_iter=max_iter)
    if out:
        directory = Path(out)
        directory.mkdir(parents=True, exist_ok=True)
        with (directory / "pca_eigenvalues.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["component", "eigenvalue", "variance_fraction"])
            for m, (ev, vf) in enumerate(zip(result.eigenvalues, result.variance_fraction), start=1):
                writer.writerow([m, format(ev, FMT), format(vf, FMT)])
        with (directory / "pca_scores.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["nbs", *(f"comp{m+1}" for m in range(result.n_components))])
            for i, nbs_id in enumerate(result.nbs_ids):
                writer.writerow([nbs_id, *(format(v, FMT) for v in result.component_scores[i])])
        with (directory / "pca_loadings.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variable", *(f"comp{m+1}" for m in range(result.n_components))])
            for j, var in enumerate(result.variable_ids):
                writer.writerow([var, *(format(v, FMT) for v in result.loadings[j])])
        click.echo(f"wrote {directory}/pca_eigenvalues.csv, pca_scores.csv, pca_loadings.csv")
        return
    if fmt == "structured":
        click.echo(json.dumps({
            "variable_ids": list(result.variable_ids),
            "eigenvalues": list(map(float, result.eigenvalues)),
            "variance_fraction": list(map(float, result.variance_fraction)),
            "dropped_columns": list(pretreated.dropped_columns),
            "imputed_cells": [{"nbs": n, "variable": v, "value": x} for n, v, x in result.imputed_cells],
            "converged": result.converged,
        }, indent=2))
        return
    click.echo(f"variables: {', '.join(result.variable_ids)}")
    if pretreated.dropped_columns:
        click.echo(f"dropped (more than 1 missing): {', '.join(pretreated.dropped_columns)}")
    if result.imputed_cells:
        cells = ", ".join(f"{n}/{v}={x:.4f}" for n, v, x in result.imputed_cells)
        click.echo(f"imputed: {cells} (converged: {result.converged})")
    rows = [
        [str(m + 1), format(ev, ".6f"), format(vf * 100, ".1f") + "%"]
        for m, (ev, vf) in enumerate(zip(result.eigenvalues, result.variance_fraction))
    ]
    _print_table(["component", "eigenvalue", "variance"], rows)
    two_dim = float(result.variance_fraction[:2].sum()) * 100
    click.echo(f"first two dimensions: {two_dim:.1f}% of variance")


@main.command()
@click.argument("a", type=int)
@click.argument("b", type=int)
@_fail_on_domain_errors
def chisq(a, b):
    """One-sample chi-square of two counts against a 50/50 split."""
    result = chi_square_one_sample(a, b)
    click.echo(f"X2={result.statistic:.2f} p={result.p_value:.2g}")


@main.command()
@data_option
@format_option
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--nbs", default="all", show_default=True)
@click.option("--out", default=None, help="Write decisions (with audits) as JSON.")
@_fail_on_domain_errors
def names(data, fmt, alpha, nbs, out):
    """Replay the terminology decisions with their audit trails."""
    root = _data_dir(data)
    consensus = load_consensus_data(root / "consensus")
    decisions = resolve_all(consensus, alpha=alpha)
    if nbs != "all":
        decisions = [d for d in decisions if d.nbs == nbs]
        if not decisions:
            raise NbskitError(f"unknown NBS id {nbs!r}")
    payload = [
        {
            "nbs": d.nbs,
            "final_name": d.final_name,
            "path": d.path,
            "audit": [{"stage": s.stage, "rule": s.rule, "outcome": s.outcome} for s in d.audit],
        }
        for d in decisions
    ]
    if out:
        Path(out).write_text(json.dumps(payload, indent=2), encoding="utf-8")
        click.echo(f"wrote {out}")
        return
    if fmt == "structured":
        click.echo(json.dumps(payload, indent=2))
        return
    _print_table(
        ["nbs", "path", "final name"],
        [[d.nbs, d.path, d.final_name] for d in decisions],
    )


@main.command("rank")
@data_option
@format_option
@matrix_option
@click.option("--facet", default=None, help="Rank by a single baseline facet.")
@click.option("--category", default=None, help="Rank by an ES category (uniform weights).")
@click.option("--weights", default=None, help="Weighted composite, e.g. 'uc_water=2,es_habitats=1'.")
@click.option("--filter", "filter_code", default=None, help="Restrict to a taxonomy subtree.")
@click.option("--top-n", default=10, show_default=True)
@_fail_on_domain_errors
def rank_command(data, fmt, matrix_path, facet, category, weights, filter_code, top_n):
    """Top-N ranking by facet, category or what-if weights."""
    catalogue, matrix = _matrix_for(data, matrix_path)
    weight_map = None
    if weights:
        weight_map = {}
        for part in weights.split(","):
            key, _, value = part.partition("=")
            if not value:
                raise NbskitError(f"malformed weight {part!r}; expected facet=value")
            try:
                weight_map[key.strip()] = float(value)
            except ValueError:
                raise NbskitError(f"malformed weight {part!r}; expected facet=value") from None
    request = RankingRequest(
        facet=facet, es_category=category, weights=weight_map, filter=filter_code, top_n=top_n
    )
    result = run_rank(catalogue, matrix, request)
    if fmt == "structured":
        click.echo(json.dumps({
            "entries": [
                {"nbs": e.nbs, "value": e.value, "unassessed": list(e.unassessed)}
                for e in result.entries
            ]
        }, indent=2))
        return
    rows = []
    for position, entry in enumerate(result.entries, start=1):
        name = catalogue.entry(entry.nbs).final_name
        note = " (unassessed: " + ",".join(entry.unassessed) + ")" if entry.unassessed else ""
        rows.append([str(position), entry.nbs, format(entry.value, ".4f"), name + note])
    _print_table(["#", "nbs", "score", "name"], rows)


@main.command()
@data_option
@matrix_option
@click.option("--out", required=True, help="Directory for the plot-ready tables.")
@click.option("--top-n", default=10, show_default=True)
@_fail_on_domain_errors
def export(data, matrix_path, out, top_n):
    """Write the plot-data tables behind the profile/top-N/PCA/evenness views."""
    catalogue, matrix = _matrix_for(data, matrix_path)
    directory = Path(out)
    directory.mkdir(parents=True, exist_ok=True)

    matrix.to_csv(directory / "scores_matrix.csv")

    with (directory / "facet_summaries.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["facet", "kind", "median", "mean", "count_nonmissing"])
        for facet_def in catalogue.facets:
            column = matrix.column(facet_def.id)
            if all(math.isnan(v) for v in column):
                continue
            s = facet_summary(matrix, facet_def.id)
            writer.writerow([s.facet, facet_def.kind, format(s.median, FMT),
                             format(s.mean, FMT), s.count_nonmissing])

    with (directory / "rankings.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "position", "nbs", "value"])
        targets = [("facet", f.id) for f in catalogue.facets if f.kind == "UrbanChallenge"]
        targets += [("es_category", c) for c in ("Provisioning", "Regulating", "Cultural", "Supporting")]
        for kind, target in targets:
            request = (
                RankingRequest(facet=target, top_n=top_n)
                if kind == "facet"
                else RankingRequest(es_category=target, top_n=top_n)
            )
            for position, entry in enumerate(run_rank(catalogue, matrix, request).entries, start=1):
                writer.writerow([target, position, entry.nbs, format(entry.value, FMT)])

    pretreated = pretreat_for_pca(matrix, catalogue.facets)
    result = run_pca(pretreated)
    points = scatter_data(catalogue, result, (1, 2))
    with (directory / "pca_scatter.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["nbs", "x", "y", "color_code"])
        for p in points.points:
            writer.writerow([p.nbs, format(p.x, FMT), format(p.y, FMT), p.color_code])

    with (directory / "evenness.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["nbs", "evenness", "color_code"])
        table = evenness_table(evenness_input_matrix(catalogue, matrix))
        level2 = {
            e.id: catalogue.taxonomy.ancestor_at_level(e.taxonomy_leaf, 2) for e in catalogue.entries
        }
        for r in sorted(table, key=lambda r: -(r.evenness if r.evenness is not None else -1)):
            writer.writerow([
                r.nbs,
                "" if r.evenness is None else format(r.evenness, FMT),
                level2[r.nbs],
            ])

    click.echo(f"wrote 5 tables to {directory}")


@main.command()
@data_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@_fail_on_domain_errors
def serve(data, host, port):
    """Start the HTTP service over the given dataset."""
    from .service import serve as run_service

    run_service(_data_dir(data), host=host, port=port)


if __name__ == "__main__":
    main()
