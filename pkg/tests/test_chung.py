"""Rate functions, the liminf tracker, and the degree-band split."""

import numpy as np
import pytest

from spherefield import (
    CovarianceModel,
    DomainError,
    RateParams,
    SpacetimePoint,
    TimeGrid,
    band_decomposition,
    band_variance,
    empirical_liminf,
    empirical_liminf_batch,
    p_exponent,
    phi_rate,
    psi_rate,
    synthesize_field,
)
from spherefield.harmonics import _band_values

from conftest import random_unit_vectors

CENTER = SpacetimePoint.from_angles(0.7, 0.3, 0.0)


def test_p_exponent_values():
    assert p_exponent(3.0, 1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)
    assert p_exponent(3.5, 1.2) == pytest.approx(3.0 / 13.0, abs=1e-15)
    with pytest.raises(DomainError):
        p_exponent(4.5, 1.0)
    with pytest.raises(DomainError):
        p_exponent(3.0, 2.1)


def test_p_exponent_boundary_continuity():
    # approaching alpha = 2 + beta from above: p tends to beta / 6 smoothly
    beta = 0.8
    limit = beta / 6.0
    values = [p_exponent(2.0 + beta + d, beta) for d in (0.1, 0.01, 0.001, 0.0)]
    assert values[-1] == pytest.approx(limit, abs=1e-15)
    assert np.all(np.isfinite(values))
    assert abs(values[2] - limit) < abs(values[0] - limit)


def test_p_range_over_admissible_grid():
    betas = np.linspace(0.05, 1.95, 20)
    for beta in betas:
        alphas = np.linspace(2.0 + beta, 3.999, 20)
        for alpha in alphas:
            p = p_exponent(alpha, beta)
            assert 0.0 < p < min(beta / 2.0, (alpha - 2.0) / 4.0) + 1e-15


def test_phi_examples():
    rate = RateParams.from_exponents(3.0, 1.0)
    r = np.exp(-np.e)
    # log|log r| = 1, so phi = (e^(3e))^p
    assert phi_rate(rate, r) == pytest.approx(np.exp(3 * np.e) ** rate.p, rel=1e-12)
    expected = (np.log(np.log(100.0)) / 1e-6) ** (1.0 / 6.0)
    assert phi_rate(rate, 0.01) == pytest.approx(expected, rel=1e-12)


def test_phi_monotone_on_dyadic_ladder():
    rate = RateParams.from_exponents(3.0, 1.0)
    values = [phi_rate(rate, 2.0**-n) for n in range(2, 12)]
    assert np.all(np.diff(values) > 0.0)


def test_phi_domain():
    rate = RateParams.from_exponents(3.0, 1.0)
    with pytest.raises(DomainError):
        phi_rate(rate, 1.0 / np.e)
    with pytest.raises(DomainError):
        phi_rate(rate, 0.0)


def test_psi_examples():
    rate = RateParams.from_exponents(3.0, 1.0)
    assert psi_rate(rate, 1.0, 1.0) == 1.0
    assert psi_rate(rate, 0.5, 0.5) == pytest.approx(8.0, rel=1e-14)
    for eps in (0.3, 0.7):
        assert psi_rate(rate, 0.4, eps) / psi_rate(rate, 0.2, eps) == pytest.approx(8.0)
    with pytest.raises(DomainError):
        psi_rate(rate, 0.0, 0.5)


def test_rate_function_consistency_identity():
    for alpha, beta in ((3.0, 1.0), (3.5, 1.2), (2.6, 0.5)):
        rate = RateParams.from_exponents(alpha, beta)
        for r in (0.3, 0.05, 0.004):
            value = phi_rate(rate, r) ** (1.0 / rate.p) * r**3 / np.log(np.abs(np.log(r)))
            assert value == pytest.approx(1.0, abs=1e-12)


def test_liminf_trace_structure(params31):
    model = CovarianceModel.build(params31, 40)
    trace = empirical_liminf(model, CENTER, 1.5, 6, (4, 4), seed=3)
    assert np.all(np.diff(trace.m_hat) <= 0.0)  # nested maxima
    assert np.all(trace.values > 0.0)
    assert np.all(np.diff(trace.running_min) <= 0.0)
    assert trace.radii[0] == pytest.approx(0.3)


def test_liminf_batch_matches_single(params31):
    model = CovarianceModel.build(params31, 40)
    batch = empirical_liminf_batch(model, CENTER, 1.5, 5, (3, 3), [11, 12])
    single = empirical_liminf(model, CENTER, 1.5, 5, (3, 3), 12)
    assert np.array_equal(batch[1].values, single.values)


def test_liminf_validation(params31):
    model = CovarianceModel.build(params31, 40)
    with pytest.raises(DomainError):
        empirical_liminf(model, CENTER, 1.0, 5, (3, 3), 1)
    with pytest.raises(DomainError):
        empirical_liminf(model, CENTER, 1.5, 20, (3, 3), 1)  # below radius floor
    with pytest.raises(DomainError):
        empirical_liminf(model, CENTER, 1.5, 5, (3, 3), 1, r_start=0.4)


def test_band_split_reconstruction(params31):
    dirs = random_unit_vectors(5, 4)
    grid = TimeGrid(np.array([0.0, 0.2, 0.45]))
    split = band_decomposition(params31, 20, dirs, grid, 40, seed=31)
    assert np.array_equal(split.low.values + split.high.values, split.full.values)
    independent = synthesize_field(params31, dirs, grid, 40, seed=31)
    scale = np.abs(split.full.values).max()
    assert np.abs(independent.values - split.full.values).max() <= 1e-12 * scale


def test_band_split_validation(params31):
    dirs = random_unit_vectors(3, 4)
    grid = TimeGrid(np.array([0.0, 0.2]))
    with pytest.raises(DomainError):
        band_decomposition(params31, 0, dirs, grid, 10, seed=1)
    with pytest.raises(DomainError):
        band_decomposition(params31, 10, dirs, grid, 10, seed=1)


def test_band_independence_and_tail(params31):
    dirs = random_unit_vectors(5, 8)
    grid = TimeGrid(np.array([0.0, 0.3]))
    L, d = 40, 20
    bands, _ = _band_values(params31, dirs, grid, [(0, d), (d + 1, L)], seed=77, n_draws=10_000)
    lo = bands[0].reshape(10_000, -1)
    hi = bands[1].reshape(10_000, -1)
    model = CovarianceModel.build(params31, L)
    var_lo = band_variance(model, 0, d)
    var_hi = band_variance(model, d + 1, L)
    cross = lo.T @ hi / len(lo)
    se = np.sqrt(var_lo * var_hi / len(lo))
    assert np.abs(cross).max() <= 5.0 * se
    # two summation paths for the tail variance
    assert var_hi == pytest.approx(model.variance() - band_variance(model, 0, d), abs=1e-10)


def test_band_variance_range_checks(params31):
    model = CovarianceModel.build(params31, 30)
    with pytest.raises(DomainError):
        band_variance(model, 5, 40)
    assert band_variance(model, 0, 30) == pytest.approx(model.variance(), abs=1e-15)


def test_low_band_small_ball_dominates(params31):
    # removing the high band shrinks ball maxima stochastically, so the
    # low-band curve sits above the full-field curve up to CI noise
    from spherefield import estimate_small_ball

    full_model = CovarianceModel.build(params31, 40)
    low_model = CovarianceModel.build(params31, 20)  # truncation == low band
    eps_grid = np.geomspace(1.2, 0.4, 10)
    full = estimate_small_ball(full_model, CENTER, 0.3, eps_grid, 20_000, (5, 5), seed=5)
    low = estimate_small_ball(low_model, CENTER, 0.3, eps_grid, 20_000, (5, 5), seed=15)
    slack = 3.0 * (full.ci_half_width + low.ci_half_width)
    assert np.all(low.p_hat >= full.p_hat - slack)
