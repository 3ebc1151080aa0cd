"""Significance backbones of projections and the weight-threshold baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .community import detect_communities
from .graph import BipartiteGraph, DegreeMoments
from .nullmodel import EdgeStatisticsTable, edge_statistics_table
from .projection import WeightedProjection

DEFAULT_SIGMA = 3.0


@dataclass(frozen=True, eq=False)
class Backbone:
    """Unweighted subgraph of a projection.

    Exactly one of ``threshold_sigma`` (significance rule) and ``min_weight``
    (plain weight cut) is set. ``per_edge_stats`` covers every tested edge,
    kept or not, and is ``None`` for the weight cut.
    """

    node_count: int
    rows: np.ndarray
    cols: np.ndarray
    labels: tuple[str, ...]
    threshold_sigma: float | None = None
    min_weight: int | None = None
    per_edge_stats: EdgeStatisticsTable | None = None
    sigma_zero_pairs: tuple[tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def edge_count(self) -> int:
        return len(self.rows)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in zip(self.rows, self.cols)}

    def adjacency(self) -> sp.csr_matrix:
        n = self.node_count
        ones = np.ones(2 * len(self.rows))
        return sp.coo_matrix(
            (ones, (np.concatenate([self.rows, self.cols]), np.concatenate([self.cols, self.rows]))),
            shape=(n, n),
        ).tocsr()

    def to_tsv(self) -> str:
        pairs = sorted(
            tuple(sorted((self.labels[i], self.labels[j]))) for i, j in zip(self.rows, self.cols)
        )
        return "".join(f"{a}\t{b}\n" for a, b in pairs)


def _check_pair(g: BipartiteGraph, p: WeightedProjection) -> None:
    if p.node_count != g.primary_count:
        raise ValueError(
            f"projection has {p.node_count} nodes but the graph has {g.primary_count} primaries"
        )


def projection_statistics(
    g: BipartiteGraph, p: WeightedProjection, moments: DegreeMoments | None = None
) -> EdgeStatisticsTable:
    """Null-model statistics for every edge of the projection."""
    _check_pair(g, p)
    return edge_statistics_table(g, p.rows, p.cols, p.weights, moments)


def extract_backbone(
    g: BipartiteGraph,
    p: WeightedProjection,
    threshold_sigma: float = DEFAULT_SIGMA,
    stats: EdgeStatisticsTable | None = None,
) -> Backbone:
    """Keep projection edges whose weight exceeds mu + threshold_sigma * sigma.

    Pairs absent from the projection have weight 0 and can never pass, so only
    projection edges are tested. Pairs with sigma = 0 are excluded and listed
    in ``sigma_zero_pairs``.
    """
    if threshold_sigma < 0 or math.isnan(threshold_sigma):
        raise ValueError("threshold_sigma must be non-negative")
    if stats is None:
        stats = projection_statistics(g, p)
    scored = stats.scored
    keep = scored & (stats.observed > stats.mu + threshold_sigma * stats.sigma)
    zero = tuple(
        (int(i), int(j)) for i, j in zip(stats.rows[~scored], stats.cols[~scored])
    )
    return Backbone(
        p.node_count, stats.rows[keep], stats.cols[keep], p.labels,
        threshold_sigma=float(threshold_sigma), per_edge_stats=stats, sigma_zero_pairs=zero,
    )


def weight_threshold_baseline(p: WeightedProjection, min_weight: int) -> Backbone:
    """Keep projection edges with weight >= ``min_weight``, ignoring the null model."""
    if min_weight < 1:
        raise ValueError("min_weight must be at least 1")
    keep = p.weights >= min_weight
    return Backbone(p.node_count, p.rows[keep], p.cols[keep], p.labels, min_weight=int(min_weight))


def pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    """Pearson correlation, or None when fewer than two points or zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        return None
    dx, dy = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0:
        return None
    return float(dx @ dy / denom)


def significance_report(
    g: BipartiteGraph, p: WeightedProjection, stats: EdgeStatisticsTable | None = None
) -> tuple[EdgeStatisticsTable, float | None]:
    """Per-edge statistics and the Pearson correlation of weight with significance."""
    if stats is None:
        stats = projection_statistics(g, p)
    ok = stats.scored
    return stats, pearson(stats.observed[ok], stats.significance[ok])


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    modularity: float | None
    community_count: int
    component_count: int
    edge_count: int


def _component_count(graph) -> int:
    n, _ = connected_components(graph.adjacency(), directed=False)
    return int(n)


def threshold_sweep(
    g: BipartiteGraph,
    p: WeightedProjection,
    thresholds,
    mode: str = "sigma",
) -> list[SweepRow]:
    """Community structure of backbones over a range of thresholds.

    ``mode="sigma"`` uses the significance rule, ``mode="weight"`` the plain
    weight cut. Modularity is None for a threshold that leaves no edges.
    """
    thresholds = list(thresholds)
    if not thresholds:
        raise ValueError("no thresholds given")
    if mode not in ("sigma", "weight"):
        raise ValueError(f"unknown sweep mode {mode!r}")
    stats = projection_statistics(g, p) if mode == "sigma" else None
    rows = []
    for t in thresholds:
        if mode == "sigma":
            bb = extract_backbone(g, p, float(t), stats=stats)
        else:
            bb = weight_threshold_baseline(p, int(t))
        part = detect_communities(bb)
        q = None if bb.edge_count == 0 else part.modularity
        rows.append(SweepRow(float(t), q, part.community_count, _component_count(bb), bb.edge_count))
    return rows

