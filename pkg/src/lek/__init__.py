"""Positive solutions of the sub-homogeneous p-Laplacian Lane-Emden problem

    -Delta_p u = alpha u^{q-1},  u > 0 in Omega,  u = 0 on the boundary,

with ``1 <= q < p``, on convex domains in one and two dimensions: closed-form
1D constants, a discrete energy solver, generalized principal frequencies and
numerical checks of the a-priori estimates.
"""

from .errors import (
    InvalidDomainError,
    LekError,
    NumericError,
    ParameterError,
    ResourceError,
    UndefinedRatioError,
)
from .frequencies import (
    FrequencyResult,
    continuity_scan,
    hersch_protter_ratio,
    lambda_pq,
    perimeter_upper_bound,
    rayleigh_quotient,
)
from .geometry import (
    Box,
    ConvexDomain,
    Disk,
    DomainMetrics,
    Grid,
    Interval,
    Polygon,
    distance_to_boundary,
    domain_from_dict,
    load_domain,
    metrics,
    rasterize,
)
from .onedim import (
    PQParams,
    Profile1D,
    localization_constant,
    pi_pq,
    radial_center,
    wB1_profile,
    wI_center,
    wI_mass,
    wI_profile,
)
from .pde import (
    GridFunction,
    SolveOptions,
    SolveReport,
    energy,
    fixed_point_solve,
    residual,
    solve_lane_emden,
    solve_plaplace_fixed_rhs,
)
from .verify import (
    VerifyReport,
    check_comparison,
    check_equality_cases,
    check_hersch_protter,
    check_hidden_convexity,
    check_linfty,
    check_localization,
    check_pointwise_bounds,
    check_slab_asymptotics,
    quantified_gap_r_ge2,
    quantified_gap_r_lt2,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "ConvexDomain",
    "Disk",
    "DomainMetrics",
    "FrequencyResult",
    "Grid",
    "GridFunction",
    "Interval",
    "InvalidDomainError",
    "LekError",
    "NumericError",
    "PQParams",
    "ParameterError",
    "Polygon",
    "Profile1D",
    "ResourceError",
    "SolveOptions",
    "SolveReport",
    "UndefinedRatioError",
    "VerifyReport",
    "check_comparison",
    "check_equality_cases",
    "check_hersch_protter",
    "check_hidden_convexity",
    "check_linfty",
    "check_localization",
    "check_pointwise_bounds",
    "check_slab_asymptotics",
    "continuity_scan",
    "distance_to_boundary",
    "domain_from_dict",
    "energy",
    "fixed_point_solve",
    "hersch_protter_ratio",
    "lambda_pq",
    "load_domain",
    "localization_constant",
    "metrics",
    "perimeter_upper_bound",
    "pi_pq",
    "quantified_gap_r_ge2",
    "quantified_gap_r_lt2",
    "radial_center",
    "rasterize",
    "rayleigh_quotient",
    "residual",
    "solve_lane_emden",
    "solve_plaplace_fixed_rhs",
    "wB1_profile",
    "wI_center",
    "wI_mass",
    "wI_profile",
    "__version__",
]
