"""Utility metrics comparing a synthetic table against real data.

Similarity metrics discretize both tables to the same uniform bins (public
bounds) and live in [0, 1]; 1 means identical statistics.
"""

import itertools, logging, math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from src.config import config
from src.errors import InputError
from src.tabular_domain import Table, discretize, marginal, mutual_information, to_distribution, tvd_similarity

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    metric: str
    value: float
    dataset: str
    model: str
    epsilon: float
    n: int
    d: int
    training: int
    sample: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InputError(f"metric {self.metric} has non-finite value {self.value}")


def _continuous_values(table: Table) -> np.ndarray:
    indices = table.schema.continuous_indices
    if not indices:
        raise InputError("statistics need at least one continuous column")
    return table.rows[:, indices]


def stat_mean(table: Table) -> float:
    """Average of the per-column means of the continuous columns."""
    return float(np.mean(_continuous_values(table).mean(axis=0)))


def stat_correlations(table: Table) -> tuple[float, float]:
    """Mean Pearson correlation of neighbouring columns (i, i+1) and of every other distinct pair."""
    values = _continuous_values(table)
    d = values.shape[1]
    if d < 3:
        raise InputError(f"correlation split needs at least three continuous columns, got {d}")
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.corrcoef(values, rowvar=False)
    # constant columns have no defined correlation
    corr = np.nan_to_num(corr, nan=0.0)
    i, j = np.triu_indices(d, k=1)
    neighbours = (j - i) == 1
    return float(corr[i[neighbours], j[neighbours]].mean()), float(corr[i[~neighbours], j[~neighbours]].mean())


def _binned_pair(real: Table, synth: Table, bins: int) -> tuple[Table, Table]:
    if real.schema != synth.schema:
        raise InputError("real and synthetic tables must share a schema")
    return discretize(real, bins), discretize(synth, bins)


def marginal_similarity(real: Table, synth: Table, bins: int | None = None) -> float:
    """Mean over columns of 1 - TVD of the binned 1-way marginals."""
    real_b, synth_b = _binned_pair(real, synth, bins or config.default_bins)
    scores = [tvd_similarity(to_distribution(marginal(real_b, (i,))), to_distribution(marginal(synth_b, (i,))))
              for i in range(real.d)]
    return float(np.mean(scores))


def pair_mi_similarity(mi_real: float, mi_synth: float) -> float:
    """1 - relative MI error, clamped to [0, 1]."""
    scale = max(mi_real, mi_synth, config.mi_similarity_floor)
    return float(min(1.0, max(0.0, 1.0 - abs(mi_real - mi_synth) / scale)))


def _pair_scores(real: Table, synth: Table, bins: int | None,
                 pairs: Iterable[tuple[int, int]] | None = None) -> dict[tuple[int, int], float]:
    if real.d < 2:
        raise InputError("mutual information similarity needs at least two columns")
    real_b, synth_b = _binned_pair(real, synth, bins or config.default_bins)
    pairs = itertools.combinations(range(real.d), 2) if pairs is None else pairs
    return {(i, j): pair_mi_similarity(mutual_information(real_b, i, j), mutual_information(synth_b, i, j))
            for i, j in pairs}


def mi_similarity(real: Table, synth: Table, bins: int | None = None) -> float:
    """Mean pairwise MI similarity over all column pairs i < j."""
    return float(np.mean(list(_pair_scores(real, synth, bins).values())))


def mi_similarity_by_edges(real: Table, synth: Table, edges: Sequence[tuple[int, int]],
                           bins: int | None = None) -> tuple[float | None, float | None]:
    """Pairwise MI similarity averaged over pairs joined by a model edge, and over the rest.

    A group without pairs yields None.
    """
    scores = _pair_scores(real, synth, bins)
    linked = {tuple(sorted(e)) for e in edges}
    connected = [s for pair, s in scores.items() if pair in linked]
    unconnected = [s for pair, s in scores.items() if pair not in linked]
    logger.debug("MI similarity split: %d connected, %d unconnected pairs", len(connected), len(unconnected))
    return (float(np.mean(connected)) if connected else None,
            float(np.mean(unconnected)) if unconnected else None)
