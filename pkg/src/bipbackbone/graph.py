"""Bipartite graph container, edge-list ingestion, degrees and degree moments.

Primary nodes index the rows of the biadjacency matrix, secondary nodes the
columns. All internal arithmetic works on dense integer indices; string labels
are only used at I/O boundaries.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateGraphError, ParseError

PRIMARY = "primary"
SECONDARY = "secondary"
SIDES = (PRIMARY, SECONDARY)

Source = Union[str, os.PathLike, IO[bytes], IO[str]]


def _check_side(side: str) -> str:
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    return side


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Immutable bipartite graph stored as a binary CSR biadjacency matrix.

    Use :meth:`from_edges` rather than the constructor; it enforces the
    binary / in-range / unique-label invariants.
    """

    adjacency: sp.csr_matrix
    primary_labels: tuple[str, ...]
    secondary_labels: tuple[str, ...]

    @classmethod
    def from_edges(
        cls,
        rows: Iterable[int],
        cols: Iterable[int],
        primary_labels: Sequence[str] | None = None,
        secondary_labels: Sequence[str] | None = None,
        shape: tuple[int, int] | None = None,
    ) -> "BipartiteGraph":
        rows = np.asarray(list(rows) if not isinstance(rows, np.ndarray) else rows, dtype=np.int64)
        cols = np.asarray(list(cols) if not isinstance(cols, np.ndarray) else cols, dtype=np.int64)
        if rows.shape != cols.shape:
            raise ValueError("rows and cols must have the same length")
        if shape is None:
            nu = len(primary_labels) if primary_labels is not None else int(rows.max(initial=-1)) + 1
            nv = len(secondary_labels) if secondary_labels is not None else int(cols.max(initial=-1)) + 1
        else:
            nu, nv = shape
        if rows.size and (rows.min() < 0 or rows.max() >= nu or cols.min() < 0 or cols.max() >= nv):
            raise ValueError("edge index out of range")
        if primary_labels is None:
            primary_labels = [f"u{i}" for i in range(nu)]
        if secondary_labels is None:
            secondary_labels = [f"v{i}" for i in range(nv)]
        if len(primary_labels) != nu or len(secondary_labels) != nv:
            raise ValueError("label count does not match node count")
        for name, labels in (("primary", primary_labels), ("secondary", secondary_labels)):
            if len(set(labels)) != len(labels):
                raise ValueError(f"{name} labels are not unique")
        adj = sp.coo_matrix(
            (np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=(nu, nv)
        ).tocsr()
        adj.sum_duplicates()
        adj.data[:] = 1
        adj.sort_indices()
        return cls(adj, tuple(map(str, primary_labels)), tuple(map(str, secondary_labels)))

    @property
    def primary_count(self) -> int:
        return self.adjacency.shape[0]

    @property
    def secondary_count(self) -> int:
        return self.adjacency.shape[1]

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.nnz)

    def primary_index(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.primary_labels)}

    def secondary_index(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.secondary_labels)}

    def transpose(self) -> "BipartiteGraph":
        """Swap the roles of the two node sets."""
        return BipartiteGraph(
            self.adjacency.T.tocsr(), self.secondary_labels, self.primary_labels
        )

    def oriented(self, side: str) -> "BipartiteGraph":
        """Return the graph with ``side`` as the primary set."""
        return self if _check_side(side) == PRIMARY else self.transpose()

    def edges(self) -> list[tuple[str, str]]:
        coo = self.adjacency.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [
            (self.primary_labels[r], self.secondary_labels[c])
            for r, c in zip(coo.row[order], coo.col[order])
        ]

    def to_edge_list(self, delimiter: str = "\t") -> str:
        return "".join(f"{u}{delimiter}{v}\n" for u, v in self.edges())

    def __repr__(self) -> str:
        return (
            f"BipartiteGraph(|U|={self.primary_count}, |V|={self.secondary_count}, "
            f"m={self.edge_count})"
        )


@dataclass(frozen=True)
class LoadReport:
    """Line accounting from :func:`load_bipartite`."""

    parsed: int
    duplicates: int
    skipped: int
    below_threshold: int = 0


def _read_text(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from exc
    return data


def load_bipartite(
    source: Source,
    delimiter: str = "\t",
    min_weight: float | None = None,
) -> tuple[BipartiteGraph, LoadReport]:
    """Parse a bipartite edge list.

    Each non-comment line is ``primary<delim>secondary[<delim>weight]``. Lines
    starting with ``#`` and blank lines are skipped. When ``min_weight`` is
    given, a line whose numeric weight is below it is dropped; lines without a
    weight column are always kept. Repeated edges collapse to one and are
    counted in ``LoadReport.duplicates``.

    Node indices are assigned in order of first appearance.
    """
    text = _read_text(source)
    prim: dict[str, int] = {}
    sec: dict[str, int] = {}
    seen: set[tuple[int, int]] = set()
    rows: list[int] = []
    cols: list[int] = []
    parsed = duplicates = skipped = below = 0

    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            skipped += 1
            continue
        fields = [f.strip() for f in line.split(delimiter)]
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 2 or 3 fields, found {len(fields)}", line=lineno)
        u, v = fields[0], fields[1]
        if not u or not v:
            raise ParseError("empty node label", line=lineno)
        if len(fields) == 3:
            try:
                weight = float(fields[2])
            except ValueError:
                raise ParseError(f"non-numeric weight {fields[2]!r}", line=lineno) from None
            if math.isnan(weight):
                raise ParseError("weight is NaN", line=lineno)
            if min_weight is not None and weight < min_weight:
                below += 1
                continue
        parsed += 1
        i = prim.setdefault(u, len(prim))
        j = sec.setdefault(v, len(sec))
        if (i, j) in seen:
            duplicates += 1
            continue
        seen.add((i, j))
        rows.append(i)
        cols.append(j)

    if not rows:
        raise DegenerateGraphError("edge list contains no edges")
    graph = BipartiteGraph.from_edges(rows, cols, list(prim), list(sec))
    return graph, LoadReport(parsed, duplicates, skipped, below)


@dataclass(frozen=True, eq=False)
class DegreeSequence:
    degrees: np.ndarray
    side: str

    def __len__(self) -> int:
        return len(self.degrees)

    def histogram(self) -> np.ndarray:
        """Empirical degree distribution, ``p[d]`` = fraction of nodes with degree d."""
        counts = np.bincount(self.degrees)
        return counts / counts.sum()


def degree_sequence(g: BipartiteGraph, side: str) -> DegreeSequence:
    axis = 1 if _check_side(side) == PRIMARY else 0
    degrees = np.asarray(g.adjacency.sum(axis=axis)).ravel().astype(np.int64)
    return DegreeSequence(degrees, side)


@dataclass(frozen=True)
class DegreeMoments:
    """Raw degree moments of both node sets.

    ``mean_j*`` refer to primary degrees, ``mean_k*`` to secondary degrees.
    """

    mean_j: float
    mean_j2: float
    mean_k: float
    mean_k2: float
    mean_k3: float
    mean_k4: float
    edge_count: int
    primary_count: int
    secondary_count: int


def _raw_moment(degrees: np.ndarray, order: int) -> float:
    # fsum keeps k**4 sums of hub-heavy sequences correctly rounded
    return math.fsum(float(d) ** order for d in degrees) / len(degrees)


def degree_moments(g: BipartiteGraph) -> DegreeMoments:
    if g.edge_count < 1:
        raise DegenerateGraphError("degree moments need at least one edge")
    j = degree_sequence(g, PRIMARY).degrees
    k = degree_sequence(g, SECONDARY).degrees
    return DegreeMoments(
        mean_j=_raw_moment(j, 1),
        mean_j2=_raw_moment(j, 2),
        mean_k=_raw_moment(k, 1),
        mean_k2=_raw_moment(k, 2),
        mean_k3=_raw_moment(k, 3),
        mean_k4=_raw_moment(k, 4),
        edge_count=g.edge_count,
        primary_count=g.primary_count,
        secondary_count=g.secondary_count,
    )
