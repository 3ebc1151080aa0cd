"""Closed-form null-model statistics for projected edge weights.

Under the degree-preserving null model, primary nodes u and u' share a given
secondary node v with probability

    pi(u, u', v) = j_u j_u' k_v (k_v - 1) / (m (m - 1)),

with m = |U| <j>. The weight of the projected edge is then a sum of
independent Bernoulli variables (Poisson binomial), summarized here by its
mean and standard deviation, which both reduce to closed forms in the degree
moments. A Poisson or discretized normal curve stands in for the full pmf.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy import signal, special

from .graph import PRIMARY, SECONDARY, BipartiteGraph, DegreeMoments, degree_moments, degree_sequence
from .errors import DegenerateGraphError

# Le Cam bound above which the Poisson curve is replaced by a normal one
POISSON_LECAM_LIMIT = 0.05

_VAR_REL_TOL = 1e-12


class ApproximationRegimeWarning(UserWarning):
    """A pair-sharing probability exceeded 1, so the null model is out of its regime."""


def _require_edges(moments: DegreeMoments) -> None:
    if moments.edge_count < 2:
        raise DegenerateGraphError("null model needs at least two edges (m(m-1) > 0)")


def pair_denominator(moments: DegreeMoments, primary_count: int) -> float:
    """|U|^2 <j>^2 - |U| <j>, i.e. m (m - 1)."""
    n, mj = primary_count, moments.mean_j
    return n * n * mj * mj - n * mj


def _secondary_denominator(moments: DegreeMoments, primary_count: int) -> float:
    n, mj = primary_count, moments.mean_j
    return n * n * mj**4 - n * mj**3


def _variance_denominator(moments: DegreeMoments, primary_count: int) -> float:
    n, mj = primary_count, moments.mean_j
    return n**4 * mj**4 - 2 * n**3 * mj**3 + n * n * mj * mj


def pi_edge(j_u, j_u2, k_v, moments: DegreeMoments, primary_count: int):
    """Probability that primaries of degree ``j_u`` and ``j_u2`` share a secondary of degree ``k_v``.

    Not clamped: values above 1 are returned as computed and trigger an
    :class:`ApproximationRegimeWarning`. Accepts scalars or arrays.
    """
    _require_edges(moments)
    j_u, j_u2, k_v = (np.asarray(x, dtype=float) for x in (j_u, j_u2, k_v))
    pi = j_u * j_u2 * k_v * (k_v - 1) / pair_denominator(moments, primary_count)
    if np.any(pi > 1):
        warnings.warn("pair-sharing probability above 1", ApproximationRegimeWarning, stacklevel=2)
    return float(pi) if pi.ndim == 0 else pi


def pi_secondary(k_v, moments: DegreeMoments, primary_count: int):
    """Probability that two edge-end-sampled primaries share a secondary of degree ``k_v``."""
    _require_edges(moments)
    k_v = np.asarray(k_v, dtype=float)
    pi = moments.mean_j2**2 * k_v * (k_v - 1) / _secondary_denominator(moments, primary_count)
    return float(pi) if pi.ndim == 0 else pi


def mu_global(g: BipartiteGraph, moments: DegreeMoments | None = None) -> float:
    """Expected projected weight between two primaries drawn at edge ends."""
    moments = moments or degree_moments(g)
    _require_edges(moments)
    n_u, n_v = g.primary_count, g.secondary_count
    return (
        n_v * moments.mean_j2**2 * (moments.mean_k2 - moments.mean_k)
        / _secondary_denominator(moments, n_u)
    )


def _mean_and_variance(jr, jc, moments: DegreeMoments, n_u: int, n_v: int):
    """Closed-form mean and variance of the shared-neighbour count for degree pairs."""
    jr = np.asarray(jr, dtype=float)
    jc = np.asarray(jc, dtype=float)
    mu = n_v * jr * jc * (moments.mean_k2 - moments.mean_k) / pair_denominator(moments, n_u)
    sq = (
        n_v * jr**2 * jc**2 * (moments.mean_k4 - 2 * moments.mean_k3 + moments.mean_k2)
        / _variance_denominator(moments, n_u)
    )
    return mu, mu - sq


def _sigma_from_variance(mu, var):
    """Standard deviation, with 0 where the variance vanishes or goes negative."""
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(var, dtype=float)
    positive = var > _VAR_REL_TOL * np.maximum(mu, 1e-300)
    return np.where(positive, np.sqrt(np.where(positive, var, 0.0)), 0.0), positive


@dataclass(frozen=True)
class EdgeStatistics:
    pair: tuple[int, int]
    observed_weight: int
    mu: float
    sigma: float
    significance: float | None

    @property
    def has_score(self) -> bool:
        return self.significance is not None


def edge_statistics(
    g: BipartiteGraph,
    i: int,
    i2: int,
    observed: int,
    moments: DegreeMoments | None = None,
) -> EdgeStatistics:
    """Null-model mean, standard deviation and z-score for one primary pair.

    ``significance`` is ``None`` when the standard deviation is zero.
    """
    if i == i2:
        raise ValueError("edge statistics need two distinct primary nodes")
    moments = moments or degree_moments(g)
    _require_edges(moments)
    j = degree_sequence(g, PRIMARY).degrees
    mu, var = _mean_and_variance(j[i], j[i2], moments, g.primary_count, g.secondary_count)
    sigma, ok = _sigma_from_variance(mu, var)
    mu, sigma = float(mu), float(sigma)
    score = (observed - mu) / sigma if ok else None
    return EdgeStatistics((min(i, i2), max(i, i2)), int(observed), mu, sigma, score)


@dataclass(frozen=True, eq=False)
class EdgeStatisticsTable:
    """Column-oriented edge statistics for many pairs.

    ``significance`` holds NaN where the standard deviation is zero.
    ``pi_over_one`` counts pairs whose largest sharing probability exceeds 1.
    """

    rows: np.ndarray
    cols: np.ndarray
    observed: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    significance: np.ndarray
    pi_over_one: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[EdgeStatistics]:
        for e in range(len(self.rows)):
            yield self[e]

    def __getitem__(self, e: int) -> EdgeStatistics:
        s = self.significance[e]
        return EdgeStatistics(
            (int(self.rows[e]), int(self.cols[e])),
            int(self.observed[e]),
            float(self.mu[e]),
            float(self.sigma[e]),
            None if np.isnan(s) else float(s),
        )

    @property
    def scored(self) -> np.ndarray:
        return ~np.isnan(self.significance)


def edge_statistics_table(
    g: BipartiteGraph,
    rows: np.ndarray,
    cols: np.ndarray,
    observed: np.ndarray,
    moments: DegreeMoments | None = None,
) -> EdgeStatisticsTable:
    """Vectorized :func:`edge_statistics` over arrays of primary pairs."""
    if len(rows) == 0:
        empty_i, empty_f = np.zeros(0, dtype=np.int64), np.zeros(0)
        return EdgeStatisticsTable(empty_i, empty_i, empty_i, empty_f, empty_f, empty_f)
    moments = moments or degree_moments(g)
    _require_edges(moments)
    j = degree_sequence(g, PRIMARY).degrees.astype(float)
    k = degree_sequence(g, SECONDARY).degrees
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    observed = np.asarray(observed, dtype=np.int64)
    mu, var = _mean_and_variance(j[rows], j[cols], moments, g.primary_count, g.secondary_count)
    sigma, ok = _sigma_from_variance(mu, var)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(ok, (observed - mu) / np.where(ok, sigma, 1.0), np.nan)
    k_max = float(k.max()) if k.size else 0.0
    pi_max = j[rows] * j[cols] * k_max * (k_max - 1) / pair_denominator(moments, g.primary_count)
    return EdgeStatisticsTable(
        rows, cols, observed, np.asarray(mu, float), np.asarray(sigma, float), score,
        int(np.count_nonzero(pi_max > 1)),
    )


def poisson_pmf(mu: float, omega):
    """Poisson probability of ``omega``, evaluated in log space."""
    if mu < 0:
        raise ValueError("mu must be non-negative")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    logp = special.xlogy(omega, mu) - mu - special.gammaln(omega + 1)
    p = np.exp(logp)
    return float(p) if p.ndim == 0 else p


def normal_pdf(mu: float, sigma: float, omega):
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    omega = np.asarray(omega, dtype=float)
    z = (omega - mu) / sigma
    p = np.exp(-0.5 * z * z) / (sigma * math.sqrt(2 * math.pi))
    return float(p) if p.ndim == 0 else p


def _validate_probs(probs: Sequence[float]) -> np.ndarray:
    p = np.asarray(probs, dtype=float).ravel()
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def _poisson_binomial_pmf(p: np.ndarray) -> np.ndarray:
    """pmf of a sum of independent Bernoulli(p_i), by convolution of the factors."""
    if p.size == 0:
        return np.ones(1)
    polys = [np.array([1.0 - x, x]) for x in p]
    # pairwise merging keeps each convolution balanced
    while len(polys) > 1:
        merged = [
            signal.convolve(polys[a], polys[a + 1], method="auto")
            for a in range(0, len(polys) - 1, 2)
        ]
        if len(polys) % 2:
            merged.append(polys[-1])
        polys = merged
    return np.clip(polys[0], 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class WeightDistribution:
    support: np.ndarray
    probabilities: np.ndarray
    kind: str
    mu: float | None = None
    sigma: float | None = None
    lecam: float | None = None
    clamped: int = 0

    def to_csv(self) -> str:
        lines = ["omega,probability,kind\n"]
        lines += [
            f"{int(w)},{p:.17g},{self.kind}\n" for w, p in zip(self.support, self.probabilities)
        ]
        return "".join(lines)


def poisson_binomial_exact(probs: Sequence[float]) -> WeightDistribution:
    """Exact Poisson-binomial pmf over 0..N."""
    p = _validate_probs(probs)
    pmf = _poisson_binomial_pmf(p)
    var = float(np.sum(p * (1 - p)))
    return WeightDistribution(
        np.arange(len(pmf)), pmf, "exact", mu=float(p.sum()), sigma=math.sqrt(var),
        lecam=lecam_bound(p),
    )


def lecam_bound(probs: Sequence[float]) -> float:
    """Le Cam total-variation bound 2 * sum(p^2) for the Poisson approximation."""
    return 2.0 * math.fsum(float(x) * float(x) for x in np.asarray(probs, dtype=float).ravel())


def pair_probabilities(
    g: BipartiteGraph, i: int, i2: int, moments: DegreeMoments | None = None
) -> np.ndarray:
    """Sharing probability through every secondary node, for primaries ``i`` and ``i2``."""
    moments = moments or degree_moments(g)
    j = degree_sequence(g, PRIMARY).degrees
    k = degree_sequence(g, SECONDARY).degrees
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ApproximationRegimeWarning)
        return np.atleast_1d(pi_edge(j[i], j[i2], k, moments, g.primary_count))


def _discretized_normal(mu: float, sigma: float, support: np.ndarray) -> np.ndarray:
    upper = special.ndtr((support + 0.5 - mu) / sigma)
    lower = special.ndtr((support - 0.5 - mu) / sigma)
    return upper - lower


def edge_weight_distribution(
    g: BipartiteGraph,
    i: int,
    i2: int,
    max_omega: int,
    kind: str = "auto",
    moments: DegreeMoments | None = None,
) -> WeightDistribution:
    """Approximate null pmf of the projected weight between ``i`` and ``i2``.

    ``kind="auto"`` picks the Poisson curve when the Le Cam bound of the pair's
    sharing probabilities is at most ``POISSON_LECAM_LIMIT`` and the discretized
    normal curve (bins of width 1 centred on integers) otherwise. ``"exact"``
    convolves the Bernoulli factors, clamping probabilities above 1.
    """
    if i == i2:
        raise ValueError("need two distinct primary nodes")
    if kind not in ("auto", "poisson", "normal", "exact"):
        raise ValueError(f"unknown distribution kind {kind!r}")
    moments = moments or degree_moments(g)
    pis = pair_probabilities(g, i, i2, moments)
    bound = lecam_bound(np.minimum(pis, 1.0))
    stats = edge_statistics(g, i, i2, 0, moments)
    support = np.arange(max_omega + 1)
    clamped = int(np.count_nonzero(pis > 1))

    if kind == "auto":
        kind = "poisson" if bound <= POISSON_LECAM_LIMIT else "normal"
    if kind == "poisson":
        probs = poisson_pmf(stats.mu, support)
    elif kind == "normal":
        if stats.sigma > 0:
            probs = _discretized_normal(stats.mu, stats.sigma, support.astype(float))
        else:
            probs = (support == round(stats.mu)).astype(float)
    else:
        full = _poisson_binomial_pmf(np.minimum(pis, 1.0))
        probs = np.zeros(max_omega + 1)
        n = min(len(full), max_omega + 1)
        probs[:n] = full[:n]
    return WeightDistribution(
        support, np.asarray(probs, dtype=float), kind, stats.mu, stats.sigma, bound, clamped
    )


def global_weight_distribution(g: BipartiteGraph, max_omega: int) -> WeightDistribution:
    """Poisson null pmf of the weight between two edge-end-sampled primaries."""
    moments = degree_moments(g)
    k = degree_sequence(g, SECONDARY).degrees
    pis = pi_secondary(k, moments, g.primary_count)
    mu = mu_global(g, moments)
    support = np.arange(max_omega + 1)
    return WeightDistribution(
        support, poisson_pmf(mu, support), "poisson", mu=mu,
        lecam=lecam_bound(np.minimum(np.atleast_1d(pis), 1.0)),
        clamped=int(np.count_nonzero(np.atleast_1d(pis) > 1)),
    )
