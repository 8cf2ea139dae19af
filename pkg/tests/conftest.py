import os
from pathlib import Path

import pytest

from nbskit.catalogue import bundled_data_dir, load_bundled_catalogue
from nbskit.consensus import load_consensus_data
from nbskit.scoring import build_matrix, load_raw_scores


@pytest.fixture(scope="session")
def catalogue():
    return load_bundled_catalogue()


@pytest.fixture(scope="session")
def raw_records():
    return load_raw_scores(bundled_data_dir() / "scores" / "raw_scores.csv")


@pytest.fixture(scope="session")
def matrix(catalogue, raw_records):
    return build_matrix(catalogue, raw_records)


@pytest.fixture(scope="session")
def consensus_data():
    return load_consensus_data(bundled_data_dir() / "consensus")


def published_matrix_path() -> Path | None:
    """The published tool's crossed-score matrix, if the user supplied it."""
    env = os.environ.get("NBSKIT_PUBLISHED_MATRIX")
    if env:
        p = Path(env)
        if p.is_file():
            return p
    default = Path(__file__).resolve().parent.parent / "data" / "external" / "published_scores.csv"
    return default if default.is_file() else None


requires_published_matrix = pytest.mark.skipif(
    published_matrix_path() is None,
    reason="published crossed-score dataset not supplied (set NBSKIT_PUBLISHED_MATRIX)",
)
