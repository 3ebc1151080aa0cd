"""Modularity and leading-eigenvector community detection.

Graphs are accepted duck-typed: anything with ``node_count`` and an
``adjacency()`` method returning a symmetric sparse matrix (projections and
backbones both qualify).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateGraphError

ZERO_TOL = 1e-12
GAIN_TOL = 1e-12
DENSE_LIMIT = 2000
POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000
POWER_SEED = 12345


@dataclass(frozen=True, eq=False)
class CommunityPartition:
    """Dense community ids (numbered by first appearance) and modularity.

    ``modularity`` is NaN for an edgeless graph, where it is undefined.
    """

    assignment: np.ndarray
    modularity: float
    community_count: int

    def communities(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.community_count)]
        for node, c in enumerate(self.assignment):
            groups[c].append(node)
        return groups

    def labelled(self, labels) -> list[list[str]]:
        """Communities as sorted label lists, largest community first."""
        groups = [sorted(labels[i] for i in members) for members in self.communities()]
        groups.sort(key=lambda grp: (-len(grp), grp))
        return groups


def _adjacency(graph) -> sp.csr_matrix:
    a = graph.adjacency() if hasattr(graph, "adjacency") else graph
    a = sp.csr_matrix(a, dtype=float)
    a.setdiag(0)
    a.eliminate_zeros()
    return a


def modularity(graph, assignment) -> float:
    """Newman modularity of ``assignment`` on a (possibly weighted) graph."""
    a = _adjacency(graph)
    assignment = np.asarray(assignment)
    if assignment.shape != (a.shape[0],):
        raise ValueError("assignment must cover every node exactly once")
    d = np.asarray(a.sum(axis=1)).ravel()
    two_m = d.sum()
    if two_m <= 0:
        raise DegenerateGraphError("modularity is undefined on an edgeless graph")
    _, comm = np.unique(assignment, return_inverse=True)
    coo = a.tocoo()
    same = comm[coo.row] == comm[coo.col]
    inside = coo.data[same].sum()
    totals = np.bincount(comm, weights=d)
    return float(inside / two_m - np.sum((totals / two_m) ** 2))


def _generalized_matrix(a_g: np.ndarray, d_g: np.ndarray, two_m: float) -> np.ndarray:
    """Modularity matrix of a subgroup: B_ij - delta_ij * sum_l B_il over the subgroup."""
    b = a_g - np.outer(d_g, d_g) / two_m
    b[np.diag_indices_from(b)] -= b.sum(axis=1)
    return b


def _leading_power(matvec, n: int, shift: float):
    """Shifted power iteration; ``shift`` must make B + shift*I positive semidefinite."""
    x = np.random.default_rng(POWER_SEED).uniform(-1, 1, n)
    x /= np.linalg.norm(x)
    for _ in range(POWER_MAX_ITER):
        y = matvec(x) + shift * x
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) < POWER_TOL:
            x = y
            break
        x = y
    return float(x @ matvec(x)), x


def _bisect(a: sp.csr_matrix, d: np.ndarray, two_m: float, nodes: np.ndarray):
    """Split ``nodes`` in two, or return None when no split raises modularity."""
    a_g = a[nodes][:, nodes]
    d_g = d[nodes]
    if len(nodes) <= DENSE_LIMIT:
        b = _generalized_matrix(a_g.toarray(), d_g, two_m)
        vals, vecs = np.linalg.eigh(b)
        value, vec = vals[-1], vecs[:, -1]
        matvec = b.__matmul__
    else:
        row_b = np.asarray(a_g.sum(axis=1)).ravel() - d_g * d_g.sum() / two_m

        def matvec(x):
            return a_g @ x - d_g * (d_g @ x) / two_m - row_b * x

        # Gershgorin bound on the spectrum of B
        shift = float(np.max(np.asarray(a_g.sum(axis=1)).ravel()
                             + d_g * d_g.sum() / two_m + np.abs(row_b)))
        value, vec = _leading_power(matvec, len(nodes), shift)
    if value <= GAIN_TOL:
        return None
    # fix the eigenvector sign: largest-magnitude entry positive
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    s = np.where(vec > -ZERO_TOL, 1.0, -1.0)
    if np.all(s == s[0]):
        return None
    gain = s @ matvec(s) / (2 * two_m)
    if gain <= GAIN_TOL:
        return None
    return nodes[s > 0], nodes[s < 0]


def detect_communities(graph) -> CommunityPartition:
    """Recursive spectral bisection with the leading eigenvector of the modularity matrix.

    Connected components are separated first; each is then bisected by the
    signs of the leading eigenvector of its generalized modularity matrix
    for as long as a split raises modularity. Isolated nodes end up as
    singleton communities. No refinement pass is applied after splitting.
    """
    a = _adjacency(graph)
    n = a.shape[0]
    d = np.asarray(a.sum(axis=1)).ravel()
    two_m = d.sum()
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return CommunityPartition(labels, float("nan"), 0)
    if two_m <= 0:
        return CommunityPartition(np.arange(n), float("nan"), n)

    _, comp = connected_components(a, directed=False)
    final: list[np.ndarray] = []
    stack = [np.flatnonzero(comp == c) for c in np.unique(comp)]
    while stack:
        nodes = stack.pop()
        if len(nodes) < 2 or d[nodes].sum() == 0:
            final.append(nodes)
            continue
        split = _bisect(a, d, two_m, nodes)
        if split is None:
            final.append(nodes)
        else:
            stack.extend(reversed(split))

    raw = np.empty(n, dtype=np.int64)
    for c, nodes in enumerate(final):
        raw[nodes] = c
    # renumber by first appearance in node order
    _, first = np.unique(raw, return_index=True)
    order = np.argsort(np.argsort(first))
    assignment = order[raw]
    return CommunityPartition(assignment, modularity(a, assignment), len(final))
