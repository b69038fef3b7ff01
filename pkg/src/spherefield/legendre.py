"""Legendre polynomials by the three-term recurrence, plus endpoint
derivatives and the quadratic/quartic closeness bound near the north pole.

The recurrence (l+1) P_{l+1}(x) = (2l+1) x P_l(x) - l P_{l-1}(x) is stable in
double precision on [-1, 1] because the values stay bounded by 1; degrees are
capped at ELL_CAP to keep the error budget honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, DomainError

ELL_CAP = 10_000

# Abscissae within this band outside [-1, 1] are clamped; beyond it we raise.
_X_TOL = 1e-12


@dataclass(frozen=True)
class LegendreTable:
    """Values P_0(x) .. P_{ell_max}(x) at a single abscissa."""

    ell_max: int
    x: float
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.ell_max + 1:
            raise ValueError("values length must be ell_max + 1")


def _check_degree(ell: int) -> int:
    ell = int(ell)
    if ell < 0:
        raise DomainError(f"degree must be nonnegative, got {ell}")
    if ell > ELL_CAP:
        raise BudgetError(f"degree {ell} exceeds the cap {ELL_CAP}")
    return ell


def _clamp_abscissa(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + _X_TOL):
        raise DomainError("abscissa outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def legendre_eval(ell: int, x):
    """P_ell(x) for x in [-1, 1]; x may be a scalar or an array."""
    ell = _check_degree(ell)
    x = _clamp_abscissa(x)
    p_prev = np.ones_like(x)
    if ell == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = x.copy()
    for k in range(1, ell):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    return p if p.ndim else float(p)


def legendre_batch(ell_max: int, x: float) -> LegendreTable:
    """Table of P_0(x) .. P_{ell_max}(x) sharing one recurrence pass."""
    ell_max = _check_degree(ell_max)
    xc = float(_clamp_abscissa(x))
    values = np.empty(ell_max + 1)
    values[0] = 1.0
    if ell_max >= 1:
        values[1] = xc
    for k in range(1, ell_max):
        values[k + 1] = ((2 * k + 1) * xc * values[k] - k * values[k - 1]) / (k + 1)
    return LegendreTable(ell_max=ell_max, x=xc, values=values)


def legendre_weighted_sum(weights: np.ndarray, x) -> np.ndarray:
    """sum_l weights[l] * P_l(x_i), accumulated inside the recurrence.

    Vectorized over abscissae; used for covariance series evaluation without
    materializing the full (degree x point) table.
    """
    weights = np.asarray(weights, dtype=float)
    _check_degree(len(weights) - 1)
    x = _clamp_abscissa(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    acc = np.full_like(x, weights[0])
    if len(weights) > 1:
        p_prev = np.ones_like(x)
        p = x.copy()
        acc += weights[1] * p
        for k in range(1, len(weights) - 1):
            p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
            acc += weights[k + 1] * p
    return float(acc[0]) if scalar else acc


def legendre_one_minus_weighted_sum(weights: np.ndarray, x) -> np.ndarray:
    """sum_l weights[l] * (1 - P_l(x_i)), term-by-term inside the recurrence.

    Exactly zero at x = 1 (every factor 1 - P_l(1) vanishes), which keeps
    distance-type series free of endpoint cancellation residue.
    """
    weights = np.asarray(weights, dtype=float)
    _check_degree(len(weights) - 1)
    x = _clamp_abscissa(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    acc = np.zeros_like(x)
    if len(weights) > 1:
        p_prev = np.ones_like(x)
        p = x.copy()
        acc += weights[1] * (1.0 - p)
        for k in range(1, len(weights) - 1):
            p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
            acc += weights[k + 1] * (1.0 - p)
    return float(acc[0]) if scalar else acc


def legendre_deriv_at_one(ell: int, order: int) -> float:
    """P_ell^(order)(1) for order 1 or 2, without factorial overflow."""
    ell = _check_degree(ell)
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order}")
    if ell < order:
        raise DomainError(f"need ell >= order, got ell={ell}, order={order}")
    if order == 1:
        return ell * (ell + 1) / 2.0
    return (ell + 2) * (ell + 1) * ell * (ell - 1) / 8.0


def taylor_bound_check(ell: int, theta: float) -> tuple[float, float, float]:
    """Closeness of P_ell(cos theta) to 1 against the l^2 th^2 + l^4 th^4 gauge.

    Returns (lhs, rhs, ratio) with lhs = 1 - P_ell(cos theta) and
    rhs = ell^2 theta^2 + ell^4 theta^4; the existential constant of the
    bound is factored out, callers assert on the raw ratio.  Tested
    operating envelope: theta in (0, 0.5].
    """
    ell = _check_degree(ell)
    if ell < 1:
        raise DomainError("taylor_bound_check requires ell >= 1")
    theta = float(theta)
    if not 0.0 < theta <= 0.5:
        raise DomainError(f"theta must lie in (0, 0.5], got {theta}")
    lhs = 1.0 - legendre_eval(ell, np.cos(theta))
    rhs = (ell * theta) ** 2 + (ell * theta) ** 4
    return lhs, rhs, lhs / rhs
