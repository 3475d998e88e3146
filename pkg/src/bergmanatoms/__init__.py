"""Atomic decomposition of weighted Bergman spaces on the complex ball.

Library layout:

* geometry   -- quasi-metric rho, Bergman metric, frames, Theta coordinates
* quadrature -- grids and patches for dv_alpha, volumes, norms
* kernel     -- Bergman kernel/projection and closed-form derivatives
* bump       -- smooth bumps, bump-class norms, seminorms
* maximal    -- maximal functions, grand-maximal dictionary, level sets
* whitney    -- Whitney covers and partitions of unity
* polyproj   -- weighted polynomial bases and projections
* atoms      -- the decomposition pipeline, atom verification
* cli        -- decompose / verify / suite commands
"""

from .atoms import (
    AtomRecord,
    DecomposeConfig,
    DecompositionResult,
    coefficient_lp_sum,
    decompose,
    n_p_alpha,
    reconstruct,
    reconstruction_error,
    required_l,
    verify_atom,
)
from .bump import BumpFunction, bump_norm, is_smooth_bump_at, make_bump, s_n_seminorm
from .geometry import (
    BallPoint,
    MultiIndex,
    RhoBall,
    TauFrame,
    approach_region_contains,
    bergman_metric,
    d_of,
    mobius,
    q_region_contains,
    rho,
    tau_frame,
    theta,
    theta_inverse,
)
from .kernel import (
    HoloFunction,
    bergman_project,
    kernel_derivative,
    kernel_derivative_bound_check,
    kernel_eval,
)
from .maximal import (
    BumpDictionary,
    central_max,
    default_dictionary,
    grand_max,
    level_sets,
    non_tangential_max,
    tangential_max,
)
from .polyproj import ThetaPolynomial, WeightedBasis, orthonormalize, project, taylor_polynomial
from .quadrature import (
    QuadratureGrid,
    build_grid,
    integrate,
    lp_norm,
    volume_alpha,
    volume_alpha_model,
)
from .whitney import PartitionOfUnity, WhitneyConstants, WhitneyCover, partition_of_unity, whitney_cover

__version__ = "0.1.0"
