"""Random bipartite graphs with prescribed degree distributions, and the
Monte Carlo check of the null-model weight distribution against them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DegenerateGraphError
from .graph import PRIMARY, SECONDARY, BipartiteGraph, DegreeSequence, degree_moments, degree_sequence
from .nullmodel import mu_global, poisson_pmf
from .projection import project

FAMILIES = ("delta", "uniform", "normal", "exponential", "powerlaw")
_ALIASES = {"exp": "exponential", "pl": "powerlaw", "power": "powerlaw", "norm": "normal",
            "unif": "uniform", "const": "delta"}
_ARITY = {"delta": 1, "uniform": 2, "normal": 2, "exponential": 1, "powerlaw": 2}

# upper end of the tabulated power-law CDF when no capacity is given
_POWERLAW_TABLE_MAX = 1_000_000
BALANCE_ATTEMPTS = 100


@dataclass(frozen=True)
class DegreeDistributionSpec:
    """Degree distribution family and its parameters.

    delta: (c,); uniform: (a, b) inclusive; normal: (mean, sd);
    exponential: (rate,); powerlaw: (exponent, x_min).
    """

    family: str
    parameters: tuple[float, ...]

    def __post_init__(self):
        family = _ALIASES.get(self.family, self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "parameters", tuple(float(x) for x in self.parameters))
        if family not in FAMILIES:
            raise ValueError(f"unknown degree distribution {self.family!r}")
        params = self.parameters
        if family == "powerlaw" and len(params) == 1:
            params = params + (1.0,)
            object.__setattr__(self, "parameters", params)
        if len(params) != _ARITY[family]:
            raise ValueError(f"{family} takes {_ARITY[family]} parameter(s), got {len(params)}")
        if family == "delta" and (params[0] < 1 or params[0] != int(params[0])):
            raise ValueError("delta degree must be a positive integer")
        if family == "uniform" and not (1 <= params[0] <= params[1]):
            raise ValueError("uniform needs 1 <= a <= b")
        if family == "normal" and params[1] < 0:
            raise ValueError("normal sd must be non-negative")
        if family == "exponential" and params[0] <= 0:
            raise ValueError("exponential rate must be positive")
        if family == "powerlaw" and (params[0] <= 1 or params[1] < 1):
            raise ValueError("powerlaw needs exponent > 1 and x_min >= 1")

    @classmethod
    def parse(cls, text: str) -> "DegreeDistributionSpec":
        """Parse ``family:p1,p2`` (e.g. ``powerlaw:2.5,1`` or ``exp:0.1``)."""
        family, _, rest = text.partition(":")
        try:
            params = tuple(float(x) for x in rest.split(",") if x.strip())
        except ValueError:
            raise ValueError(f"bad distribution parameters in {text!r}") from None
        return cls(family.strip().lower(), params)

    def __str__(self) -> str:
        return f"{self.family}:" + ",".join(f"{x:g}" for x in self.parameters)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _powerlaw_sample(exponent: float, x_min: int, n: int, cap: int | None, rng) -> np.ndarray:
    # inverse CDF of p(k) = k^-exponent / zeta(exponent, x_min), k >= x_min
    top = _POWERLAW_TABLE_MAX if cap is None else max(cap, x_min)
    ks = np.arange(x_min, top + 1, dtype=float)
    cdf = np.cumsum(ks**-exponent) / special.zeta(exponent, x_min)
    u = rng.random(n)
    idx = np.searchsorted(cdf, u, side="left")
    return np.minimum(idx + x_min, top).astype(np.int64)


def sample_degree_sequence(
    spec: DegreeDistributionSpec,
    n: int,
    rng_seed=None,
    cap: int | None = None,
    side: str = PRIMARY,
) -> DegreeSequence:
    """Draw ``n`` integer degrees >= 1 (and <= ``cap`` when given)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = _rng(rng_seed)
    fam, par = spec.family, spec.parameters
    if fam == "delta":
        d = np.full(n, int(par[0]))
    elif fam == "uniform":
        d = rng.integers(int(math.ceil(par[0])), int(math.floor(par[1])) + 1, size=n)
    elif fam == "normal":
        d = np.rint(rng.normal(par[0], par[1], size=n))
    elif fam == "exponential":
        d = np.rint(rng.exponential(1.0 / par[0], size=n))
    else:
        d = _powerlaw_sample(par[0], int(par[1]), n, cap, rng)
    d = np.maximum(np.asarray(d, dtype=np.int64), 1)
    if cap is not None:
        d = np.minimum(d, cap)
    return DegreeSequence(d, side)


def _balance(j: np.ndarray, k: np.ndarray, rng) -> None:
    """Raise random degrees on the deficient side, in place, until the sums match."""
    caps = {id(j): len(k), id(k): len(j)}
    for _ in range(BALANCE_ATTEMPTS):
        diff = int(j.sum() - k.sum())
        if diff == 0:
            return
        side = k if diff > 0 else j
        cap = caps[id(side)]
        open_nodes = np.flatnonzero(side < cap)
        if open_nodes.size == 0:
            break
        picks = rng.choice(open_nodes, size=abs(diff), replace=True)
        np.add.at(side, picks, 1)
        np.minimum(side, cap, out=side)
    if j.sum() != k.sum():
        raise DegenerateGraphError("degree sequences cannot be balanced")


@dataclass(frozen=True, eq=False)
class GeneratedBipartite:
    """A configuration-model graph plus the sequences it was built from.

    ``deficit`` is the number of stub pairs lost when duplicate edges collapsed.
    """

    graph: BipartiteGraph
    target_primary: np.ndarray
    target_secondary: np.ndarray
    deficit: int


def configuration_bipartite(j: np.ndarray, k: np.ndarray, rng_seed=None) -> GeneratedBipartite:
    """Pair primary and secondary stubs uniformly at random; duplicates collapse."""
    j = np.asarray(j, dtype=np.int64)
    k = np.asarray(k, dtype=np.int64)
    if j.sum() != k.sum():
        raise ValueError("degree sums differ")
    rng = _rng(rng_seed)
    a = np.repeat(np.arange(len(j)), j)
    b = np.repeat(np.arange(len(k)), k)
    rng.shuffle(b)
    g = BipartiteGraph.from_edges(a, b, shape=(len(j), len(k)))
    return GeneratedBipartite(g, j, k, int(j.sum()) - g.edge_count)


def generate_bipartite(
    primary_spec: DegreeDistributionSpec,
    secondary_spec: DegreeDistributionSpec,
    nu: int,
    nv: int,
    rng_seed=None,
) -> GeneratedBipartite:
    """Configuration-model bipartite graph with degrees drawn from the two specs."""
    rng = _rng(rng_seed)
    j = sample_degree_sequence(primary_spec, nu, rng, cap=nv, side=PRIMARY).degrees.copy()
    k = sample_degree_sequence(secondary_spec, nv, rng, cap=nu, side=SECONDARY).degrees.copy()
    _balance(j, k, rng)
    return configuration_bipartite(j, k, rng)


def ks_test(empirical_pmf, reference_pmf, sample_size: float) -> tuple[float, float]:
    """KS distance between two pmfs on a common support, with asymptotic p-value.

    The p-value uses the Kolmogorov limit distribution at ``sqrt(n) * D``.
    For discrete data it is conservative.
    """
    e = np.asarray(empirical_pmf, dtype=float)
    r = np.asarray(reference_pmf, dtype=float)
    if e.size == 0 or r.size == 0:
        raise ValueError("empty support")
    if e.shape != r.shape:
        raise ValueError("pmfs must share a support")
    d = float(np.max(np.abs(np.cumsum(e) - np.cumsum(r))))
    d = min(d, 1.0)
    return d, float(special.kolmogorov(math.sqrt(sample_size) * d))


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    runs: int
    average_weight_pmf: np.ndarray
    approx_pmf: np.ndarray
    ks_statistic: float
    ks_pvalue: float
    empirical_mu: float
    analytic_mu: float
    sample_size: int
    pair_weighting: str
    mean_deficit: float
    run_mus: np.ndarray = field(repr=False, default=None)
    run_empirical_mus: np.ndarray = field(repr=False, default=None)

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.average_weight_pmf))

    def to_csv(self) -> str:
        lines = ["omega,empirical_p,analytic_p\n"]
        lines += [
            f"{w},{e:.17g},{a:.17g}\n"
            for w, (e, a) in enumerate(zip(self.average_weight_pmf, self.approx_pmf))
        ]
        return "".join(lines)


def pair_weight_histogram(g: BipartiteGraph, pair_weighting: str = "degree") -> np.ndarray:
    """Distribution of projected weight over all primary pairs, zeros included.

    With ``"degree"`` a pair (u, u') counts with weight j_u * j_u', which is
    how the global null mean samples pairs (both ends drawn along edges).
    ``"uniform"`` counts every pair once.
    """
    p = project(g, PRIMARY, workers=1)
    n = g.primary_count
    if pair_weighting == "uniform":
        w_edges = np.ones(len(p.weights))
        total = n * (n - 1) / 2
    elif pair_weighting == "degree":
        j = degree_sequence(g, PRIMARY).degrees.astype(float)
        w_edges = j[p.rows] * j[p.cols]
        total = (j.sum() ** 2 - (j * j).sum()) / 2
    else:
        raise ValueError(f"unknown pair weighting {pair_weighting!r}")
    top = int(p.weights.max()) if len(p.weights) else 0
    hist = np.bincount(p.weights, weights=w_edges, minlength=top + 1).astype(float)
    hist[0] = total - hist[1:].sum()
    return hist / total


def _pad(a: np.ndarray, size: int) -> np.ndarray:
    return a if len(a) >= size else np.concatenate([a, np.zeros(size - len(a))])


def monte_carlo_weight_distribution(
    primary_spec: DegreeDistributionSpec,
    secondary_spec: DegreeDistributionSpec,
    nu: int,
    nv: int,
    runs: int,
    rng_seed=42,
    pair_weighting: str = "degree",
) -> MonteCarloResult:
    """Average projected-weight pmf over random graphs versus its Poisson approximation.

    Each run draws a graph, records its pair-weight histogram and the Poisson
    pmf at that graph's global null mean. Both are averaged across runs and
    compared with :func:`ks_test`, using the number of primary pairs as the
    sample size. Per-run seeds are spawned from ``rng_seed`` so the result
    does not depend on execution order.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if nu < 2:
        raise ValueError("need at least two primary nodes")
    seeds = np.random.SeedSequence(rng_seed).spawn(runs)
    hists, mus, deficits = [], [], []
    for seed in seeds:
        gen = generate_bipartite(primary_spec, secondary_spec, nu, nv, np.random.default_rng(seed))
        hists.append(pair_weight_histogram(gen.graph, pair_weighting))
        mus.append(mu_global(gen.graph, degree_moments(gen.graph)))
        deficits.append(gen.deficit)
    mus = np.asarray(mus)
    # cover the empirical range and the Poisson bulk
    top = max(max(len(h) for h in hists) - 1, int(math.ceil(mus.max() + 12 * math.sqrt(mus.max()) + 12)))
    support = np.arange(top + 1)
    empirical = np.mean([_pad(h, top + 1) for h in hists], axis=0)
    analytic = np.mean([poisson_pmf(mu, support) for mu in mus], axis=0)
    n_pairs = nu * (nu - 1) // 2
    d, pvalue = ks_test(empirical, analytic, n_pairs)
    return MonteCarloResult(
        runs=runs,
        average_weight_pmf=empirical,
        approx_pmf=analytic,
        ks_statistic=d,
        ks_pvalue=pvalue,
        empirical_mu=float(support @ empirical),
        analytic_mu=float(mus.mean()),
        sample_size=n_pairs,
        pair_weighting=pair_weighting,
        mean_deficit=float(np.mean(deficits)),
        run_mus=mus,
        run_empirical_mus=np.array([np.arange(len(h)) @ h for h in hists]),
    )
