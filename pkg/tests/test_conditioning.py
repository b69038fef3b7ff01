"""Gaussian conditioning: Schur complement, projection monotonicity, the
local non-determinism diagnostics, and the single-degree positivity lemma."""

import numpy as np
import pytest

from spherefield import (
    CovarianceModel,
    DomainError,
    SpacetimePoint,
    SpectrumParams,
    conditional_variance,
    posdef_check,
    sln_bound_check,
    sln_exponent_fit,
    sln_sweep,
)
from spherefield.conditioning import posdef_matrix, random_sweep_configs
from spherefield.spectrum import gamma_cov, gamma_gram

P0 = SpacetimePoint.from_angles(0.0, 0.0, 0.0)


def random_config(seed: int, n: int, model) -> list[SpacetimePoint]:
    g = np.random.default_rng(seed)
    return [
        SpacetimePoint.from_angles(
            g.uniform(0.05, 0.5), g.uniform(0, 2 * np.pi), g.uniform(-0.3, 0.3)
        )
        for _ in range(n)
    ]


def test_single_point_closed_form(model31_100):
    q = SpacetimePoint.from_angles(0.2, 0.4, 0.1)
    report = conditional_variance(model31_100, P0, [q])
    s00 = gamma_cov(model31_100, 1.0, 0.0)
    cross = gamma_cov(model31_100, float(np.cos(0.2)), -0.1)
    assert report.var == pytest.approx(s00 - cross**2 / s00, abs=1e-12)
    assert report.n == 1
    assert report.ratio is not None


def test_variance_vanishes_with_shrinking_lag(model31_100):
    values = []
    for tau in (0.2, 0.05, 0.01, 0.001):
        q = SpacetimePoint.from_angles(0.0, 0.0, tau)
        values.append(conditional_variance(model31_100, P0, [q]).var)
    assert np.all(np.diff(values) < 0.0)
    assert values[-1] < 1e-3


def test_nested_monotonicity(model31_100):
    for seed in range(10):
        cond = random_config(seed, 4, model31_100)
        base = conditional_variance(model31_100, P0, cond[:3]).var
        extended = conditional_variance(model31_100, P0, cond).var
        assert extended <= base + 1e-10


def test_variational_identity(model31_100):
    # direct quadratic-form minimization over the weights equals the Schur path
    for seed in range(6):
        n = 2 + seed % 3
        cond = random_config(100 + seed, n, model31_100)
        report = conditional_variance(model31_100, P0, cond)
        full = gamma_gram(model31_100, [P0, *cond])
        sigma = full[1:, 1:]
        cvec = full[0, 1:]
        gammas, *_ = np.linalg.lstsq(sigma, cvec, rcond=None)
        value = full[0, 0] - 2 * gammas @ cvec + gammas @ sigma @ gammas
        assert report.var == pytest.approx(value, abs=1e-10)


def test_scale_equivariance():
    lam = 2.0
    base = CovarianceModel.build(SpectrumParams(3.0, 1.0), 150)
    scaled = CovarianceModel.build(
        SpectrumParams(3.0, 1.0, c0=lam, c1=lam, g_table=np.array([lam])), 150
    )
    cond = random_config(5, 3, base)
    rep_base = conditional_variance(base, P0, cond)
    rep_scaled = conditional_variance(scaled, P0, cond)
    assert rep_scaled.var == pytest.approx(lam * rep_base.var, rel=1e-10)
    # the comparator is spectrum-free, so the ratio scales by lambda
    assert rep_scaled.comparator == rep_base.comparator
    ladder = np.geomspace(0.03, 0.2, 6)
    assert sln_exponent_fit(scaled, ladder) == pytest.approx(
        sln_exponent_fit(base, ladder), abs=1e-9
    )


def test_degenerate_comparator_flagged(model31_100):
    cond = [SpacetimePoint.from_angles(0.0, 0.0, 0.2)]
    report = conditional_variance(model31_100, P0, cond)
    assert report.degenerate
    assert report.comparator == 0.0
    assert report.ratio is None


def test_duplicate_target_rejected(model31_100):
    with pytest.raises(DomainError):
        conditional_variance(model31_100, P0, [P0])
    with pytest.raises(DomainError):
        conditional_variance(model31_100, P0, [])


def test_near_coincident_points_are_cutoff_stable(model31_100):
    # two conditioning points a hair apart make Sigma numerically singular;
    # the spectral pseudo-inverse must stay finite and projection-valid
    q1 = SpacetimePoint.from_angles(0.2, 0.3, 0.1)
    q2 = SpacetimePoint.from_angles(0.2 + 1e-9, 0.3, 0.1)
    report = conditional_variance(model31_100, P0, [q1, q2])
    single = conditional_variance(model31_100, P0, [q1])
    # agreement is limited by the 1e-10 relative eigenvalue cutoff
    assert 0.0 <= report.var <= single.var + 1e-8


def test_sln_gate(model31_100):
    close = [SpacetimePoint.from_angles(0.01, 0.0, 0.0)]
    with pytest.raises(DomainError):
        sln_bound_check(model31_100, P0, close, require_min_sep=0.05)
    ok = sln_bound_check(model31_100, P0, [SpacetimePoint.from_angles(0.1, 0.0, 0.0)])
    assert ok.ratio is not None and ok.ratio > 0.0


def test_sln_ratio_regression_baseline(model31_400):
    report = conditional_variance(
        model31_400, P0, [SpacetimePoint.from_angles(0.1, 0.0, 0.0)]
    )
    # archived numeric run at ell_max = 400, theta = 0.1, tau = 0
    assert report.ratio == pytest.approx(0.3490514274106163, rel=1e-9)
    assert 0.1 < report.ratio < 1.0


def test_sln_sweep_min_ratio_positive(model31_400):
    configs = random_sweep_configs(200, seed=42)
    reports, min_ratio = sln_sweep(model31_400, configs)
    assert len(reports) == 200
    assert min_ratio > 0.0


@pytest.mark.parametrize(
    "alpha,beta,lo,hi,ell_max,ladder",
    [
        (3.0, 1.0, 0.9, 1.1, 400, (0.05, 0.3)),
        (3.5, 1.2, 1.35, 1.65, 400, (0.05, 0.3)),
        (2.5, 0.4, 0.45, 0.55, 10_000, (0.01, 0.08)),
    ],
)
def test_sln_exponent_bands(alpha, beta, lo, hi, ell_max, ladder):
    # the alpha = 2.5 sum approaches its power law slowly, hence the deeper
    # truncation and smaller angles there
    model = CovarianceModel.build(SpectrumParams(alpha, beta), ell_max)
    slope = sln_exponent_fit(model, np.geomspace(*ladder, 8))
    assert lo <= slope <= hi


def test_sln_exponent_ladder_validation(model31_100):
    with pytest.raises(DomainError):
        sln_exponent_fit(model31_100, np.array([0.1]))
    with pytest.raises(DomainError):
        sln_exponent_fit(model31_100, np.array([0.1, 0.4]))


def test_posdef_single_point_cauchy_schwarz(model31_100):
    pts = [SpacetimePoint.from_angles(0.4, 1.0, 0.2)]
    matrix = posdef_matrix(model31_100, pts, 3)
    assert matrix[0, 0] >= -1e-15


def test_posdef_monopole_case(model31_100):
    g = np.random.default_rng(3)
    pts = [
        SpacetimePoint.from_angles(g.uniform(0, 1), g.uniform(0, 2 * np.pi), t)
        for t in (-0.2, 0.0, 0.15, 0.3)
    ]
    min_eig = posdef_check(model31_100, pts, 0)
    matrix = posdef_matrix(model31_100, pts, 0)
    scale = max(np.trace(matrix) / len(pts), 1e-300)
    assert min_eig >= -1e-8 * scale


def test_posdef_random_batch(model31_100):
    g = np.random.default_rng(99)
    for _ in range(100):
        n = int(g.integers(1, 7))
        pts = [
            SpacetimePoint.from_angles(
                g.uniform(0.05, 1.0), g.uniform(0, 2 * np.pi), g.uniform(-0.3, 0.3)
            )
            for _ in range(n)
        ]
        ell = int(g.integers(1, 21))
        matrix = posdef_matrix(model31_100, pts, ell)
        min_eig = np.linalg.eigvalsh(matrix).min()
        scale = max(np.trace(matrix) / n, 1e-300)
        assert min_eig >= -1e-8 * scale


def test_posdef_point_budget(model31_100):
    pts = [SpacetimePoint.from_angles(0.1 * k, 0.0, 0.0) for k in range(1, 14)]
    with pytest.raises(DomainError):
        posdef_check(model31_100, pts, 2)
