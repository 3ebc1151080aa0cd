"""Weighted one-mode projections of bipartite graphs."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .graph import PRIMARY, BipartiteGraph

THREADS_ENV = "BACKBONE_THREADS"


def worker_count(workers: int | None = None) -> int:
    """Resolve a worker count; ``None`` reads ``BACKBONE_THREADS`` (0 = auto)."""
    if workers is None:
        try:
            workers = int(os.environ.get(THREADS_ENV, "0"))
        except ValueError:
            workers = 0
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


@dataclass(frozen=True, eq=False)
class WeightedProjection:
    """Symmetric weighted graph on one node set, stored as upper-triangle arrays.

    ``rows[e] < cols[e]`` for every edge ``e`` and edges are sorted by
    ``(row, col)``. ``weights`` holds shared-neighbour counts.
    """

    node_count: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    labels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    def as_dict(self) -> dict[tuple[int, int], int]:
        return {(int(i), int(j)): int(w) for i, j, w in zip(self.rows, self.cols, self.weights)}

    def labelled_dict(self) -> dict[tuple[str, str], int]:
        return {
            (self.labels[i], self.labels[j]): w for (i, j), w in self.as_dict().items()
        }

    def weight(self, i: int, j: int) -> int:
        if i == j:
            return 0
        i, j = min(i, j), max(i, j)
        lo = np.searchsorted(self.rows, i, side="left")
        hi = np.searchsorted(self.rows, i, side="right")
        pos = lo + np.searchsorted(self.cols[lo:hi], j)
        if pos < hi and self.cols[pos] == j:
            return int(self.weights[pos])
        return 0

    def adjacency(self) -> sp.csr_matrix:
        """Full symmetric adjacency (float) with zero diagonal."""
        n = self.node_count
        w = self.weights.astype(float)
        a = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([self.rows, self.cols]),
                                      np.concatenate([self.cols, self.rows]))),
            shape=(n, n),
        )
        return a.tocsr()

    def to_tsv(self) -> str:
        lines = []
        for i, j, w in zip(self.rows, self.cols, self.weights):
            a, b = sorted((self.labels[i], self.labels[j]))
            lines.append((a, b, int(w)))
        lines.sort()
        return "".join(f"{a}\t{b}\t{w}\n" for a, b, w in lines)


def _upper_triangle(m: sp.spmatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    coo = sp.triu(m, k=1).tocoo()
    keep = coo.data != 0
    rows, cols, data = coo.row[keep], coo.col[keep], coo.data[keep]
    order = np.lexsort((cols, rows))
    return (
        rows[order].astype(np.int64),
        cols[order].astype(np.int64),
        data[order].astype(np.int64),
    )


def _co_occurrence(b: sp.csr_matrix, workers: int) -> sp.csr_matrix:
    """B @ B.T, with secondary nodes (columns) partitioned across workers.

    Integer accumulation makes the merged result identical to the serial one.
    """
    nv = b.shape[1]
    if workers <= 1 or nv < 2 * workers or b.nnz < 50_000:
        return (b @ b.T).tocsr()
    bc = b.tocsc()
    bounds = np.linspace(0, nv, workers + 1).astype(int)
    chunks = [bc[:, lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    def partial(chunk):
        c = chunk.tocsr()
        return c @ c.T

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(partial, chunks))
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total.tocsr()


def project(g: BipartiteGraph, side: str = PRIMARY, workers: int | None = None) -> WeightedProjection:
    """One-mode projection onto ``side``.

    Each pair sharing at least one neighbour gets an edge whose weight is the
    number of shared neighbours. Work is proportional to the sum of squared
    degrees on the opposite side, not to the dense matrix size.
    """
    h = g.oriented(side)
    b = h.adjacency.astype(np.int64)
    co = _co_occurrence(b, worker_count(workers))
    rows, cols, weights = _upper_triangle(co)
    return WeightedProjection(h.primary_count, rows, cols, weights, h.primary_labels)


def binarize(p: WeightedProjection) -> WeightedProjection:
    return replace(p, weights=np.ones_like(p.weights))
