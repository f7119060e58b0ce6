"""Random walks on the Gegenbauer polynomial hypergroup.

Exact n-step kernels via the generalized convolution carried by Gegenbauer
polynomials, Monte Carlo local-time simulation, and checks of the local
limit theorems and Mittag-Leffler local-time limit laws.
"""

from gegwalk.errors import (
    ConsistencyError,
    GegwalkError,
    QuadratureError,
    StateCapError,
)
from gegwalk.gegenbauer import (
    HypergroupIndex,
    LinearizationRow,
    eval_poly,
    eval_poly_table,
    linearization,
    orthogonality_integral,
    weight,
)
from gegwalk.hypergroup import (
    GegenbauerKernel,
    MembershipResult,
    SparseMeasure,
    classify,
    convolve,
    drift_constant,
    fourier,
    inverse_fourier,
    is_gegenbauer_walk,
    kernel_row,
    n_step,
    n_step_by_convolution,
    n_step_sequence,
    transition_matrix,
)
from gegwalk.specfun import (
    MittagLefflerDist,
    MLValue,
    bessel_i,
    bessel_j,
    bessel_marginal_density,
    gamma_fn,
    log_gamma_fn,
    ml_density,
    ml_function,
    ml_moment,
    ml_sample,
)
from gegwalk.verify import (
    ReportRow,
    VerifyReport,
    check_llt_aperiodic,
    check_llt_periodic,
    check_local_time_limit,
    check_space_scaled_llt,
    ks_statistic,
    local_time_scale_constant,
)
from gegwalk.walk_sim import (
    LocalTimeSamples,
    PathSummary,
    WalkConfig,
    local_time_counts,
    mean_visits_curve,
    simulate_replica,
)

__version__ = "0.1.0"
