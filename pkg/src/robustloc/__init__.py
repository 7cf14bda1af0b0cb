"""Robust node localization from anchor-to-target distances."""

__version__ = "0.1.0"

from .design import design_low_coherence, designed_anchor_set
from .geometry import (
    AnchorSet,
    TrilaterationSystem,
    assemble_rhs,
    build_system,
    exact_trilateration,
    squared_distance_matrix,
)
from .linalg import coherence, kmeans, least_squares, nullspace_rows, svd, welch_bound
from .robust import (
    IdentificationResult,
    OutlierBudget,
    RobustEstimate,
    annihilator,
    estimate_position,
    identify_corrupted,
    naive_identify,
    outlier_budget,
    outlier_pursuit_unit,
    srpca_identify,
)
from .solvers import SolverOptions, SolveReport, basis_pursuit, group_min_norm, srpca
