"""Legendre recurrence against an exact Rodrigues-form oracle, endpoint
derivatives, and the closeness bound."""

from fractions import Fraction
from math import comb

import numpy as np
import pytest

from spherefield import (
    BudgetError,
    DomainError,
    legendre_batch,
    legendre_deriv_at_one,
    legendre_eval,
    taylor_bound_check,
)
from spherefield.legendre import legendre_weighted_sum


def rodrigues_exact(ell: int, x: Fraction) -> Fraction:
    """P_ell via the expanded Rodrigues form, in exact rational arithmetic:
    P_l(x) = 2^-l sum_k C(l, k)^2 (x-1)^(l-k) (x+1)^k."""
    total = sum(
        Fraction(comb(ell, k)) ** 2 * (x - 1) ** (ell - k) * (x + 1) ** k
        for k in range(ell + 1)
    )
    return total / Fraction(2) ** ell


def test_p0_is_one():
    assert legendre_eval(0, 0.37) == 1.0


def test_value_at_one():
    assert legendre_eval(7, 1.0) == 1.0


def test_p2_at_zero():
    assert legendre_eval(2, 0.0) == -0.5


def test_p5_rodrigues_frozen():
    # from the exact rational Rodrigues expansion at x = 3/10
    assert legendre_eval(5, 0.3) == pytest.approx(0.34538625, abs=1e-12)


def test_recurrence_matches_rodrigues_oracle():
    xs = [Fraction(k, 10) for k in range(-10, 11)]
    for ell in range(11):
        for x in xs:
            expected = float(rodrigues_exact(ell, x))
            assert legendre_eval(ell, float(x)) == pytest.approx(expected, abs=1e-10)


def test_endpoints_up_to_500():
    for ell in range(501):
        assert abs(legendre_eval(ell, 1.0) - 1.0) <= 1e-12
        assert abs(legendre_eval(ell, -1.0) - (-1.0) ** ell) <= 1e-12


def test_batch_consistent_with_eval():
    table = legendre_batch(50, -0.2)
    for ell in range(51):
        assert table.values[ell] == pytest.approx(legendre_eval(ell, -0.2), abs=1e-12)


def test_batch_degenerate_and_endpoint():
    assert legendre_batch(0, 0.5).values.tolist() == [1.0]
    assert legendre_batch(2, 1.0).values.tolist() == [1.0, 1.0, 1.0]


def test_batch_invariants():
    table = legendre_batch(200, 0.73)
    assert table.values[0] == 1.0
    assert np.all(np.abs(table.values) <= 1.0 + 1e-12)


def test_weighted_sum_matches_dot(rng):
    weights = rng.standard_normal(31)
    x = rng.uniform(-1.0, 1.0, size=17)
    direct = sum(w * legendre_eval(ell, x) for ell, w in enumerate(weights))
    assert legendre_weighted_sum(weights, x) == pytest.approx(direct, abs=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        legendre_eval(3, 1.1)
    with pytest.raises(DomainError):
        legendre_eval(-1, 0.5)
    with pytest.raises(BudgetError):
        legendre_eval(10_001, 0.5)
    # tolerance band just outside [-1, 1] is clamped, not rejected
    assert legendre_eval(3, 1.0 + 1e-13) == pytest.approx(1.0, abs=1e-12)


def test_deriv_at_one_values():
    assert legendre_deriv_at_one(1, 1) == 1.0
    assert legendre_deriv_at_one(10, 1) == 55.0
    assert legendre_deriv_at_one(2, 2) == 3.0
    # no factorial overflow at the degree cap
    assert np.isfinite(legendre_deriv_at_one(10_000, 2))


def test_deriv_domain_errors():
    with pytest.raises(DomainError):
        legendre_deriv_at_one(3, 3)
    with pytest.raises(DomainError):
        legendre_deriv_at_one(1, 2)


def test_deriv_matches_finite_difference():
    # h = 1e-7: the secant's truncation term (h/2) P''(1) / P'(1) grows like
    # h l^2 / 4, so a 1e-6 step cannot reach 1e-4 relative accuracy at l = 50.
    h = 1e-7
    for ell in range(1, 51):
        slope = (legendre_eval(ell, 1.0) - legendre_eval(ell, 1.0 - h)) / h
        exact = legendre_deriv_at_one(ell, 1)
        assert slope == pytest.approx(exact, rel=1e-4)


def test_taylor_bound_positive_and_below_gauge():
    for ell in range(1, 201):
        for theta in (0.001, 0.005, 0.02, 0.05, 0.1):
            lhs, rhs, ratio = taylor_bound_check(ell, theta)
            assert lhs > 0.0
            assert ratio <= 1.0


def test_taylor_bound_small_angle_limit_ell_one():
    # 1 - cos(theta) ~ theta^2 / 2 against theta^2 + theta^4: the limiting
    # ratio is 1/2 (verified numerically, as the gauge has no l(l+1) factor).
    _, _, ratio = taylor_bound_check(1, 1e-4)
    assert ratio == pytest.approx(0.5, abs=1e-5)


def test_taylor_bound_large_degree_cases():
    lhs, _, ratio = taylor_bound_check(100, 0.01)
    assert lhs > 0.0 and ratio <= 1.0
    lhs, _, ratio = taylor_bound_check(200, 0.1)
    assert lhs <= 2.0 and ratio <= 1.0


def test_taylor_bound_domain():
    with pytest.raises(DomainError):
        taylor_bound_check(0, 0.1)
    with pytest.raises(DomainError):
        taylor_bound_check(5, 0.6)
    with pytest.raises(DomainError):
        taylor_bound_check(5, 0.0)
