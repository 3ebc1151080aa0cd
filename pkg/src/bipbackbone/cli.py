"""Command-line interface.

Every command writes its artifacts atomically (temp file, then rename) and
drops a ``<artifact>.manifest.json`` next to each one with the command
configuration, seed, package version and the SHA-256 of the input.

Exit codes: 0 success, 1 I/O error, 2 parse or usage error, 3 degenerate
graph, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .backbone import DEFAULT_SIGMA, extract_backbone, significance_report, threshold_sweep
from .community import detect_communities
from .errors import DegenerateGraphError, InvariantError, ParseError
from .graph import BipartiteGraph, load_bipartite
from .nullmodel import edge_weight_distribution, global_weight_distribution
from .projection import WeightedProjection, binarize, project
from .randgen import DegreeDistributionSpec, monte_carlo_weight_distribution

DEFAULT_SEED = 42
_DELIMITERS = {"tab": "\t", "comma": ",", "\\t": "\t", ",": ","}


def ingest_weighted_bipartite(source, min_relevance: float, delimiter: str = "\t") -> BipartiteGraph:
    """Binary bipartite graph keeping rows whose third column is >= ``min_relevance``."""
    graph, _ = load_bipartite(source, delimiter=delimiter, min_weight=min_relevance)
    return graph


def load_one_mode(source, delimiter: str = "\t") -> WeightedProjection:
    """Read a one-mode edge list (``a<TAB>b[<TAB>weight]``), e.g. a backbone or projection TSV."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    else:
        text = source.read()
        text = text.decode("utf-8") if isinstance(text, bytes) else text
    index: dict[str, int] = {}
    edges: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in line.split(delimiter)]
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 2 or 3 fields, found {len(fields)}", line=lineno)
        a, b = fields[0], fields[1]
        try:
            w = float(fields[2]) if len(fields) == 3 else 1.0
        except ValueError:
            raise ParseError(f"non-numeric weight {fields[2]!r}", line=lineno) from None
        i = index.setdefault(a, len(index))
        j = index.setdefault(b, len(index))
        if i == j:
            raise ParseError("self-loop", line=lineno)
        key = (min(i, j), max(i, j))
        edges[key] = edges.get(key, 0.0) + w
    if not edges:
        raise DegenerateGraphError("edge list contains no edges")
    keys = sorted(edges)
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    weights = np.array([edges[k] for k in keys])
    if np.all(weights == np.round(weights)):
        weights = weights.astype(np.int64)
    return WeightedProjection(len(index), rows, cols, weights, tuple(index))


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _clean(value):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python ones."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _atomic_write_all(artifacts: dict[str, str]) -> None:
    """Write every artifact to a temp file first, then rename them all into place."""
    staged = []
    try:
        for path, content in artifacts.items():
            directory = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
            staged.append((tmp, path))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _with_manifests(args, artifacts: dict[str, str], seed=None) -> dict[str, str]:
    input_path = getattr(args, "input", None)
    manifest = {
        "command": args.command,
        "config": _config(args),
        "seed": seed,
        "version": __version__,
        "input_sha256": _sha256(input_path) if input_path else None,
    }
    out = dict(artifacts)
    for path in artifacts:
        out[path + ".manifest.json"] = _dumps(dict(manifest, artifact=os.path.basename(path)))
    return out


def _check_paths(args, *names) -> None:
    paths = [os.path.abspath(p) for p in [getattr(args, "input", None), *(getattr(args, n) for n in names)] if p]
    if len(set(paths)) != len(paths):
        raise ValueError("input and output paths must be distinct")


def _load(args) -> BipartiteGraph:
    graph, report = load_bipartite(args.input, delimiter=args.delimiter, min_weight=args.min_weight)
    if report.duplicates:
        print(f"note: collapsed {report.duplicates} duplicate edge line(s)", file=sys.stderr)
    return graph.oriented(args.side)


def cmd_project(args) -> dict[str, str]:
    _check_paths(args, "out")
    p = project(_load(args))
    if args.binary:
        p = binarize(p)
    return {args.out: p.to_tsv()}


def _backbone_stats(bb, corr) -> dict:
    zero = [list(sorted((bb.labels[i], bb.labels[j]))) for i, j in bb.sigma_zero_pairs]
    return {
        "edges_tested": len(bb.per_edge_stats),
        "edges_kept": bb.edge_count,
        "threshold_sigma": bb.threshold_sigma,
        "weight_significance_correlation": corr,
        "correlation_method": "pearson",
        "sigma_zero_pairs": sorted(zero),
        "pairs_with_probability_above_one": bb.per_edge_stats.pi_over_one,
    }


def cmd_backbone(args) -> dict[str, str]:
    _check_paths(args, "out", "stats")
    g = _load(args)
    p = project(g)
    stats, corr = significance_report(g, p)
    bb = extract_backbone(g, p, args.sigma, stats=stats)
    if not bb.edge_set() <= set(p.as_dict()):
        raise InvariantError("backbone contains an edge missing from the projection")
    artifacts = {args.out: bb.to_tsv()}
    if args.stats:
        artifacts[args.stats] = _dumps(_backbone_stats(bb, corr))
    return artifacts


def cmd_communities(args) -> dict[str, str]:
    _check_paths(args, "out", "nodes_csv")
    if args.bipartite:
        g = _load(args)
        p = project(g)
        if args.graph == "binary":
            graph = binarize(p)
        elif args.graph == "weighted":
            graph = p
        else:
            graph = extract_backbone(g, p, args.sigma)
    else:
        graph = load_one_mode(args.input, delimiter=args.delimiter)
    part = detect_communities(graph)
    doc = {
        "modularity": part.modularity,
        "community_count": part.community_count,
        "communities": part.labelled(graph.labels),
    }
    artifacts = {args.out: _dumps(doc)}
    if args.nodes_csv:
        rows = sorted(
            (label, i) for i, members in enumerate(doc["communities"]) for label in members
        )
        artifacts[args.nodes_csv] = "node,community\n" + "".join(f"{a},{c}\n" for a, c in rows)
    return artifacts


def cmd_validate(args) -> dict[str, str]:
    _check_paths(args, "out", "csv")
    pspec = DegreeDistributionSpec.parse(args.pdist)
    sspec = DegreeDistributionSpec.parse(args.sdist)
    res = monte_carlo_weight_distribution(
        pspec, sspec, args.nu, args.nv, args.runs, args.seed, pair_weighting=args.pair_weighting
    )
    report = {
        "primary_spec": str(pspec),
        "secondary_spec": str(sspec),
        "nu": args.nu,
        "nv": args.nv,
        "runs": args.runs,
        "seed": args.seed,
        "ks_statistic": res.ks_statistic,
        "ks_pvalue": res.ks_pvalue,
        "empirical_mu": res.empirical_mu,
        "analytic_mu": res.analytic_mu,
        "pair_weighting": res.pair_weighting,
        "ks_sample_size": res.sample_size,
        "mean_collapse_deficit": res.mean_deficit,
    }
    artifacts = {args.out: _dumps(report)}
    if args.csv:
        artifacts[args.csv] = res.to_csv()
    return artifacts


def _parse_thresholds(text: str) -> list[float]:
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError("threshold range must be start:stop:step")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_sweep(args) -> dict[str, str]:
    _check_paths(args, "out")
    g = _load(args)
    p = project(g)
    if args.thresholds:
        thresholds = _parse_thresholds(args.thresholds)
    elif args.mode == "weight":
        thresholds = list(range(1, int(p.weights.max()) + 1)) if len(p) else [1]
    else:
        thresholds = [float(t) for t in range(0, 11)]
    rows = threshold_sweep(g, p, thresholds, mode=args.mode)
    lines = ["threshold,modularity,community_count,component_count,edge_count\n"]
    for r in rows:
        q = "" if r.modularity is None else f"{r.modularity:.17g}"
        lines.append(f"{r.threshold:g},{q},{r.community_count},{r.component_count},{r.edge_count}\n")
    return {args.out: "".join(lines)}


def cmd_distribution(args) -> dict[str, str]:
    _check_paths(args, "out")
    g = _load(args)
    if args.pair:
        a, _, b = args.pair.partition(",")
        index = g.primary_index()
        try:
            i, i2 = index[a.strip()], index[b.strip()]
        except KeyError as exc:
            raise ValueError(f"unknown node {exc.args[0]!r}") from None
        dist = edge_weight_distribution(g, i, i2, args.max_omega, kind=args.kind)
    else:
        dist = global_weight_distribution(g, args.max_omega)
    return {args.out: dist.to_csv()}


def _delimiter(text: str) -> str:
    return _DELIMITERS.get(text, text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bipbackbone",
        description="Backbones of bipartite one-mode projections and their communities.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_input(sp, required=True):
        sp.add_argument("--input", required=required, help="edge list file")
        sp.add_argument("--delimiter", type=_delimiter, default="\t", help="tab (default) or comma")
        sp.add_argument("--side", choices=("primary", "secondary"), default="primary",
                        help="node set to project onto")
        sp.add_argument("--min-weight", type=float, default=None,
                        help="drop input rows whose third column is below this value")

    sp = sub.add_parser("project", help="weighted one-mode projection")
    graph_input(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--binary", action="store_true", help="write all weights as 1")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("backbone", help="significance backbone of the projection")
    graph_input(sp)
    sp.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    sp.add_argument("--out", required=True)
    sp.add_argument("--stats", default=None, help="JSON summary path")
    sp.set_defaults(func=cmd_backbone)

    sp = sub.add_parser("communities", help="leading-eigenvector communities")
    graph_input(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--nodes-csv", default=None, help="also write node,community CSV")
    sp.add_argument("--bipartite", action="store_true",
                    help="treat input as a bipartite edge list (keeps isolated nodes)")
    sp.add_argument("--graph", choices=("binary", "weighted", "backbone"), default="backbone",
                    help="with --bipartite: which one-mode graph to partition")
    sp.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    sp.set_defaults(func=cmd_communities)

    sp = sub.add_parser("validate", help="Monte Carlo check of the null weight distribution")
    sp.add_argument("--pdist", required=True, help="primary degree distribution, e.g. powerlaw:2.5,1")
    sp.add_argument("--sdist", required=True, help="secondary degree distribution, e.g. exp:0.1")
    sp.add_argument("--nu", type=int, required=True)
    sp.add_argument("--nv", type=int, required=True)
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--pair-weighting", choices=("degree", "uniform"), default="degree")
    sp.add_argument("--out", required=True)
    sp.add_argument("--csv", default=None, help="omega,empirical_p,analytic_p table")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("sweep", help="modularity across backbone thresholds")
    graph_input(sp)
    sp.add_argument("--mode", choices=("sigma", "weight"), default="sigma")
    sp.add_argument("--thresholds", default=None, help="comma list or start:stop:step")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("distribution", help="null weight pmf, global or for one pair")
    graph_input(sp)
    sp.add_argument("--pair", default=None, help="two primary labels, comma separated")
    sp.add_argument("--max-omega", type=int, default=50)
    sp.add_argument("--kind", choices=("auto", "poisson", "normal", "exact"), default="auto")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_distribution)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        artifacts = args.func(args)
        _atomic_write_all(_with_manifests(args, artifacts, getattr(args, "seed", None)))
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateGraphError as exc:
        print(f"error: degenerate graph: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"error: invariant violated: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
