"""Monte Carlo estimators, one per CLI subcommand."""

from .common import EstimatorResult
from .contact import (
    bracket_critical_lambda,
    cluster_growth,
    coupling_discrepancy,
    cone_mixing_phi,
    edge_speed,
    slab_survival,
    slab_width_from_growth,
)
from .density import positive_density_lower_bound
from .ldp import ldp_tail_rho, ldp_tail_walker, pilot_rho
from .reports import EstimateReport, TailFit, paired_difference
from .speed import estimate_speed, rho_curve
from .subadd import subadditive_X

__all__ = [
    "EstimateReport",
    "EstimatorResult",
    "TailFit",
    "bracket_critical_lambda",
    "cluster_growth",
    "cone_mixing_phi",
    "coupling_discrepancy",
    "edge_speed",
    "estimate_speed",
    "ldp_tail_rho",
    "ldp_tail_walker",
    "paired_difference",
    "pilot_rho",
    "positive_density_lower_bound",
    "rho_curve",
    "slab_survival",
    "slab_width_from_growth",
    "subadditive_X",
]
