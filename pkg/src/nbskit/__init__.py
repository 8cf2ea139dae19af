"""Decision-support toolkit for a cross-project catalogue of urban nature-based solutions."""

from .catalogue import Catalogue, load_bundled_catalogue, load_catalogue
from .scoring import ScoreMatrix, build_matrix, load_raw_scores
from .stats import chi_square_one_sample, evenness, shannon_diversity
from .pca import CorrelationPCA, IterativePCAImputer, pretreat_for_pca, run_pca
from .consensus import load_consensus_data, resolve_all, resolve_name
from .query import RankingRequest, profile, rank, scatter_data

__version__ = "0.1.0"

__all__ = [
    "Catalogue",
    "CorrelationPCA",
    "IterativePCAImputer",
    "RankingRequest",
    "ScoreMatrix",
    "build_matrix",
    "chi_square_one_sample",
    "evenness",
    "load_bundled_catalogue",
    "load_catalogue",
    "load_consensus_data",
    "load_raw_scores",
    "pretreat_for_pca",
    "profile",
    "rank",
    "resolve_all",
    "resolve_name",
    "run_pca",
    "scatter_data",
    "shannon_diversity",
    "__version__",
]
