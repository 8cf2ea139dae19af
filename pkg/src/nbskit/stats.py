"""Shannon diversity, Pielou-style evenness over score rows, one-sample chi-square.

Evenness of an NBS row is H / ln(S): Shannon diversity of the row treated as
relative abundances over the number S of variables it scores above zero.
Missing cells are replaced by zeros first; with S <= 1 the ratio is 0/0 and
the result is reported as undefined rather than coerced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ComputationError
from .scoring import ScoreMatrix


@dataclass(frozen=True)
class EvennessResult:
    nbs: str
    diversity: float
    facet_count: int
    evenness: float | None

    @property
    def defined(self) -> bool:
        return self.evenness is not None


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    df: int = 1


def shannon_diversity(scores: Sequence[float] | np.ndarray) -> float:
    """Shannon index H = -sum p ln p of a non-negative vector, natural log.

    The vector is normalized to proportions; zero entries contribute nothing.
    All-zero (or empty) input has no distribution to speak of and raises.
    """
    values = np.asarray(scores, dtype=float)
    if values.ndim != 1:
        raise ComputationError("shannon_diversity expects a 1-D vector")
    if np.isnan(values).any():
        raise ComputationError("shannon_diversity got NaN; replace missing values first")
    if (values < 0).any():
        raise ComputationError("shannon_diversity requires non-negative scores")
    total = values.sum()
    if total <= 0:
        raise ComputationError("shannon_diversity of an all-zero vector is undefined")
    p = values[values > 0] / total
    p = p[p > 0]  # proportions of subnormal entries can underflow to exact 0
    return float(-(p * np.log(p)).sum())


def evenness_for_row(nbs: str, row: Sequence[float] | np.ndarray) -> EvennessResult:
    """Eq.-1 evenness for one row of scores; NaN cells count as zero."""
    values = np.asarray(row, dtype=float).copy()
    values[np.isnan(values)] = 0.0
    if (values < 0).any():
        raise ComputationError(f"{nbs}: negative score in evenness input")
    support = int((values > 0).sum())
    if support <= 1:
        # single or empty support: H = 0 and Eq. 1 is 0/0, left undefined
        return EvennessResult(nbs=nbs, diversity=0.0, facet_count=support, evenness=None)
    diversity = shannon_diversity(values)
    return EvennessResult(
        nbs=nbs,
        diversity=diversity,
        facet_count=support,
        evenness=diversity / math.log(support),
    )


def evenness(nbs: str, matrix: ScoreMatrix) -> EvennessResult:
    """Evenness of one NBS row of ``matrix`` (raises on unknown id)."""
    return evenness_for_row(nbs, matrix.row(nbs))


def evenness_table(matrix: ScoreMatrix) -> list[EvennessResult]:
    return [evenness_for_row(nbs, matrix.values[i]) for i, nbs in enumerate(matrix.nbs_ids)]


def chi_square_one_sample(a: int, b: int) -> ChiSquareResult:
    """Goodness-of-fit of two observed counts against a 50/50 expectation.

    With expected halves e = (a+b)/2 the statistic collapses to
    (a-b)^2 / (a+b); df = 1, no continuity correction. The tail probability
    uses the exact df=1 identity P(X >= x) = erfc(sqrt(x/2)) rather than a
    table.
    """
    if a < 0 or b < 0:
        raise ComputationError("counts must be non-negative")
    if int(a) != a or int(b) != b:
        raise ComputationError("counts must be integers")
    total = a + b
    if total == 0:
        raise ComputationError("chi-square of zero total count is undefined")
    statistic = (a - b) ** 2 / total
    return ChiSquareResult(statistic=float(statistic), p_value=float(math.erfc(math.sqrt(statistic / 2.0))))
