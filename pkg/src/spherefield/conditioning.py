"""Exact Gaussian conditioning and the local non-determinism diagnostics.

Conditional variance is the Schur complement var = s00 - c^T S^+ c with a
spectral pseudo-inverse (relative cutoff 1e-10); the comparator is the
spatial gauge min_k theta_k^(alpha-2), so the ratio var / comparator traces
the lower-bound constant of the conditional-variance inequality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FactorizationError
from .geometry import SpacetimePoint, product_dist, rho_sq, sphere_dist
from .rng import STREAM_SWEEP, substream
from .spectrum import CovarianceModel, gamma_gram

PINV_CUTOFF = 1e-10
# Documented operating regime for separation angles of conditioning points.
DEFAULT_MIN_SEP = 0.05
DEFAULT_MAX_SEP = 0.3


@dataclass(frozen=True)
class ConditioningReport:
    """Conditional variance against the spatial-gauge comparator."""

    var: float
    comparator: float
    ratio: float | None  # None when the comparator degenerates to 0
    n: int
    regularization: float
    min_separation: float
    degenerate: bool


def conditional_variance(
    model: CovarianceModel,
    p0: SpacetimePoint,
    cond: list[SpacetimePoint],
) -> ConditioningReport:
    """Var(T(p0) | T(p_1), .., T(p_n)) via the Schur complement.

    The conditioning Gram is inverted spectrally with a relative eigenvalue
    cutoff, which keeps the projection stable for near-coincident points.
    """
    if not cond:
        raise DomainError("need at least one conditioning point")
    for p in cond:
        if sphere_dist(p0.dir, p.dir) == 0.0 and p.time == p0.time:
            raise DomainError("conditioning set must not duplicate the target point")
    full = gamma_gram(model, [p0, *cond])
    s00 = full[0, 0]
    cvec = full[0, 1:]
    sigma = full[1:, 1:]
    eigvals, eigvecs = np.linalg.eigh(sigma)
    cutoff = PINV_CUTOFF * eigvals.max()
    if not np.any(eigvals > cutoff):
        raise FactorizationError(
            "conditioning Gram is numerically zero", eigenvalues=eigvals
        )
    keep = eigvals > cutoff
    proj = eigvecs[:, keep].T @ cvec
    var = float(s00 - proj @ (proj / eigvals[keep]))
    var = max(var, 0.0)
    thetas = np.array([sphere_dist(p0.dir, p.dir) for p in cond])
    comparator = float(rho_sq(model.params.alpha, thetas).min())
    degenerate = comparator == 0.0
    return ConditioningReport(
        var=var,
        comparator=comparator,
        ratio=None if degenerate else var / comparator,
        n=len(cond),
        regularization=float(cutoff),
        min_separation=float(min(product_dist(p0, p) for p in cond)),
        degenerate=degenerate,
    )


def sln_bound_check(
    model: CovarianceModel,
    p0: SpacetimePoint,
    cond: list[SpacetimePoint],
    require_min_sep: float = DEFAULT_MIN_SEP,
) -> ConditioningReport:
    """conditional_variance gated to the documented separation regime.

    The separation hypothesis is enforced as min_k d_2(p0, p_k) >=
    require_min_sep; configurations with a vanishing spatial comparator are
    flagged instead of divided through.
    """
    report = conditional_variance(model, p0, cond)
    if report.min_separation < require_min_sep:
        raise DomainError(
            f"min separation {report.min_separation:.4g} below the gate {require_min_sep:g}"
        )
    return report


def random_sweep_configs(
    n_configs: int,
    seed: int,
    max_points: int = 6,
    theta_range: tuple[float, float] = (DEFAULT_MIN_SEP, DEFAULT_MAX_SEP),
    max_tau: float = 0.2,
) -> list[tuple[SpacetimePoint, list[SpacetimePoint]]]:
    """Random conditioning configurations around the north pole at time 0."""
    rng = substream(seed, STREAM_SWEEP)
    configs = []
    for _ in range(int(n_configs)):
        n = int(rng.integers(1, max_points + 1))
        p0 = SpacetimePoint.from_angles(0.0, 0.0, 0.0)
        pts = []
        for _ in range(n):
            theta = rng.uniform(*theta_range)
            phi = rng.uniform(0.0, 2.0 * np.pi)
            tau = rng.uniform(-max_tau, max_tau)
            pts.append(SpacetimePoint.from_angles(theta, phi, tau))
        configs.append((p0, pts))
    return configs


def sln_sweep(
    model: CovarianceModel,
    configs: list[tuple[SpacetimePoint, list[SpacetimePoint]]],
    require_min_sep: float = DEFAULT_MIN_SEP,
) -> tuple[list[ConditioningReport], float]:
    """Run the gate over a batch of configurations.

    Returns the per-config reports and the empirical infimum of the ratio
    (the fitted lower-bound constant over this sweep).
    """
    reports = [sln_bound_check(model, p0, cond, require_min_sep) for p0, cond in configs]
    ratios = [r.ratio for r in reports if r.ratio is not None]
    if not ratios:
        raise DomainError("sweep produced no usable ratios")
    return reports, float(min(ratios))


def sln_exponent_fit(
    model: CovarianceModel,
    theta_ladder: np.ndarray,
    t_lag: float = 0.0,
) -> float:
    """Slope of log var against log theta for a single conditioning point.

    Expected near alpha - 2; keep the ladder inside (0, 0.3] and the lag at
    zero unless probing the plateau deliberately.
    """
    theta_ladder = np.asarray(theta_ladder, dtype=float)
    if np.any(theta_ladder <= 0.0) or np.any(theta_ladder > 0.3):
        raise DomainError("theta ladder must lie in (0, 0.3]")
    if len(theta_ladder) < 2:
        raise DomainError("need at least two ladder angles")
    p0 = SpacetimePoint.from_angles(0.0, 0.0, 0.0)
    variances = []
    for theta in theta_ladder:
        report = conditional_variance(
            model, p0, [SpacetimePoint.from_angles(theta, 0.0, t_lag)]
        )
        variances.append(report.var)
    slope = np.polyfit(np.log(theta_ladder), np.log(variances), 1)[0]
    return float(slope)


def posdef_matrix(
    model: CovarianceModel,
    points: list[SpacetimePoint],
    ell: int,
    ref: SpacetimePoint | None = None,
) -> np.ndarray:
    """Single-degree Schur-product matrix

    M_jk = C(x,x,t,t) C(x_j,x_k,t_j,t_k) - C(x,x_j,t,t_j) C(x,x_k,t,t_k)

    with C(x,y,t,s) = C_l(t-s) (2l+1)/(4 pi) P_l(<x,y>) and reference point
    (x, t) defaulting to the north pole at time zero.
    """
    if len(points) > 12:
        raise DomainError("posdef check accepts at most 12 points")
    if ref is None:
        ref = SpacetimePoint(np.array([0.0, 0.0, 1.0]), 0.0)
    single = _single_degree_cov(model, ell)
    cross = np.array([single(ref, p) for p in points])
    gram = np.array([[single(a, b) for b in points] for a in points])
    m = single(ref, ref) * gram - np.outer(cross, cross)
    return 0.5 * (m + m.T)


def posdef_check(
    model: CovarianceModel,
    points: list[SpacetimePoint],
    ell: int,
    ref: SpacetimePoint | None = None,
) -> float:
    """Minimum eigenvalue of the single-degree Schur-product matrix; a
    covariance in exact arithmetic, so dips below zero only at rounding."""
    return float(np.linalg.eigvalsh(posdef_matrix(model, points, ell, ref)).min())


def _single_degree_cov(model: CovarianceModel, ell: int):
    weight = model.gamma_weights[int(ell)]
    from .legendre import legendre_eval

    def cov(a: SpacetimePoint, b: SpacetimePoint) -> float:
        tau = a.time - b.time
        if abs(tau) >= 1.0:
            raise DomainError("pairwise time lags must stay below 1")
        lag = 1.0 - abs(tau) ** model.params.beta
        return float(weight * lag * legendre_eval(int(ell), np.dot(a.dir, b.dir)))

    return cov
