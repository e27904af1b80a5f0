"""Weighted shared-partner closure statistics and inference for multi-edge networks."""
from .multigraph import (
    DegreeSequence,
    MultiEdgeNetwork,
    NetworkInputError,
    binary_density,
    degrees,
    from_edge_list,
    karate_club,
)
from .statistics import (
    StatisticMatrix,
    attribute_match,
    degree_covariate,
    shared_partners_unweighted,
    shared_partners_weighted,
    variance_explained,
)
from .mle import FitError, FitResult, UnidentifiedError

__version__ = "0.1.0"
