"""spherefield: numerical laboratory for time-dependent isotropic Gaussian
random fields on the sphere."""

from .chung import (
    BandSplit,
    LiminfTrace,
    RateParams,
    band_decomposition,
    band_variance,
    empirical_liminf,
    empirical_liminf_batch,
    p_exponent,
    phi_rate,
    psi_rate,
)
from .conditioning import (
    ConditioningReport,
    conditional_variance,
    posdef_check,
    sln_bound_check,
    sln_exponent_fit,
    sln_sweep,
)
from .errors import (
    BudgetError,
    DomainError,
    FactorizationError,
    QuadratureError,
    SphereFieldError,
    ValidationError,
)
from .geometry import (
    BallMesh,
    SpacetimePoint,
    ball_mesh,
    covering_number,
    mu_ball_volume_mc,
    mu_metric,
    product_dist,
    sphere_dist,
    volume_prefactor,
)
from .harmonics import (
    CoefficientPaths,
    FieldRealization,
    TimeGrid,
    direct_gaussian_sample,
    empirical_cov_check,
    real_sph_harm,
    sample_alm_paths,
    synthesize_field,
)
from .legendre import (
    LegendreTable,
    legendre_batch,
    legendre_deriv_at_one,
    legendre_eval,
    taylor_bound_check,
)
from .lemmas import IntegralBoundCase, integral_bound_check
from .smallball import (
    ExponentFit,
    SmallBallCurve,
    bounds_consistency,
    estimate_small_ball,
    fit_exponent,
    kappa_estimate,
)
from .spectrum import (
    CovarianceModel,
    SpectrumParams,
    canonical_dist_sq,
    canonical_metric,
    cl_tau,
    cl_zero,
    equivalence_ratio_scan,
    gamma_cov,
    mu_dist_sq,
    rho_alpha,
    select_truncation,
)

__version__ = "0.1.0"
