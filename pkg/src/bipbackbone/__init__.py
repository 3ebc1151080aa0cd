"""Significance backbones of one-mode projections of bipartite networks."""

from .backbone import (
    Backbone,
    extract_backbone,
    significance_report,
    threshold_sweep,
    weight_threshold_baseline,
)
from .community import CommunityPartition, detect_communities, modularity
from .errors import BackboneError, DegenerateGraphError, InvariantError, ParseError
from .graph import (
    BipartiteGraph,
    DegreeMoments,
    DegreeSequence,
    degree_moments,
    degree_sequence,
    load_bipartite,
)
from .nullmodel import (
    EdgeStatistics,
    WeightDistribution,
    edge_statistics,
    edge_weight_distribution,
    lecam_bound,
    mu_global,
    normal_pdf,
    pi_edge,
    pi_secondary,
    poisson_binomial_exact,
    poisson_pmf,
)
from .projection import WeightedProjection, binarize, project
from .randgen import (
    DegreeDistributionSpec,
    generate_bipartite,
    ks_test,
    monte_carlo_weight_distribution,
    sample_degree_sequence,
)

__version__ = "0.1.0"
