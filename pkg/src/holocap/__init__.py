"""Holevo capacity of qubit channels: solver, certificates and additivity scans."""
from .qubit import (
    BlochVector,
    InvalidStateError,
    NotCompletelyPositiveError,
    QubitChannel,
    is_cp,
    relative_entropy,
)
from .capacity import (
    CapacityConfig,
    CapacityResult,
    ConvergenceError,
    Ensemble,
    RankDeficiencyError,
    capacity,
    mesh_lower_bound,
    planar_capacity,
    supporting_hyperplane,
    verify_hyperplane,
)
from .relent import critical_census, equidistance, landscape, sup_relent
from .product import (
    SchmidtState,
    additivity_scan,
    concavity_curve,
    kraus_from_choi,
    product_output,
    relent_vs_product_avg,
)

__version__ = "0.1.0"
