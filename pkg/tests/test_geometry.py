"""Sphere-time geometry: distances, ball meshes, covering nets, and the
gauge-ball volume estimators."""

import numpy as np
import pytest

from spherefield import (
    DomainError,
    SpacetimePoint,
    ball_mesh,
    covering_number,
    mu_ball_volume_mc,
    mu_metric,
    product_dist,
    sphere_dist,
    volume_prefactor,
)
from spherefield.chung import p_exponent
from spherefield.geometry import (
    NORTH_POLE,
    fibonacci_sphere,
    mu_gauge_sq,
    volume_prefactor_limit,
)
from spherefield.rng import substream

from conftest import random_unit_vectors

CENTER = SpacetimePoint.from_angles(0.7, 0.3, 0.0)


class Params:
    def __init__(self, alpha, beta):
        self.alpha = alpha
        self.beta = beta


def test_sphere_dist_examples():
    assert sphere_dist(NORTH_POLE, NORTH_POLE) == 0.0
    assert sphere_dist(NORTH_POLE, -NORTH_POLE) == pytest.approx(np.pi)
    assert sphere_dist(NORTH_POLE, [1.0, 0.0, 0.0]) == pytest.approx(np.pi / 2)
    with pytest.raises(DomainError):
        sphere_dist(NORTH_POLE, [0.0, 0.0, 2.0])


def test_product_dist_examples():
    a = SpacetimePoint(NORTH_POLE, 0.0)
    assert product_dist(a, a) == 0.0
    b = SpacetimePoint(NORTH_POLE, 0.3)
    assert product_dist(a, b) == pytest.approx(0.3)
    c = SpacetimePoint.from_angles(0.3, 0.0, 0.4)
    assert product_dist(SpacetimePoint.from_angles(0.0, 0.0, 0.0), c) == pytest.approx(0.5)
    assert product_dist(a, c, q_exponent=np.inf) == pytest.approx(0.4)
    with pytest.raises(DomainError):
        product_dist(a, b, q_exponent=0.5)


def test_product_dist_triangle_inequality():
    g = np.random.default_rng(7)
    dirs = random_unit_vectors(30, 3)
    pts = [SpacetimePoint(d, t) for d, t in zip(dirs, g.uniform(-0.4, 0.4, 30))]
    idx = g.integers(0, 30, size=(10_000, 3))
    for i, j, k in idx:
        a, b, c = pts[i], pts[j], pts[k]
        assert product_dist(a, c) <= product_dist(a, b) + product_dist(b, c) + 1e-12


def test_spacetime_point_validation():
    with pytest.raises(DomainError):
        SpacetimePoint(np.array([0.0, 0.0, 1.5]), 0.0)
    p = SpacetimePoint.from_angles(0.7, 4.0, 0.2)
    theta, phi = p.angles()
    assert theta == pytest.approx(0.7)
    assert phi == pytest.approx(4.0)


def test_ball_mesh_degenerate():
    mesh = ball_mesh(CENTER, 0.3, 1, 1)
    assert len(mesh.points) == 1
    assert mesh.points[0].time == CENTER.time
    assert np.allclose(mesh.points[0].dir, CENTER.dir)


def test_ball_mesh_strictly_inside_and_contains_center():
    for n_space, n_time in ((1, 5), (4, 1), (4, 3), (8, 8)):
        mesh = ball_mesh(CENTER, 0.3, n_space, n_time)
        assert any(
            p.time == CENTER.time and np.allclose(p.dir, CENTER.dir) for p in mesh.points
        )
        for p in mesh.points:
            assert product_dist(CENTER, p) < 0.3
        # radial ring spacing obeys the r / n_space cap
        if n_space > 1:
            thetas = sorted({round(sphere_dist(CENTER.dir, p.dir), 12) for p in mesh.points})
            spacing = np.diff(thetas).max()
            assert spacing <= 0.3 / n_space + 1e-12


def test_ball_mesh_counts():
    mesh = ball_mesh(CENTER, 0.3, 8, 8)
    assert len(mesh.space_dirs) == 64  # sum of (2i+1), i < 8
    assert mesh.n_lattice == 512
    assert len(mesh.points) == 513  # even time count keeps the center off-grid


def test_ball_mesh_validation():
    with pytest.raises(DomainError):
        ball_mesh(CENTER, 0.6, 4, 4)
    with pytest.raises(DomainError):
        ball_mesh(CENTER, 0.3, 0, 4)


def test_fill_distance_decreases_with_refinement():
    from spherefield.geometry import _sample_ball_arrays

    probe_dirs, probe_times = _sample_ball_arrays(CENTER, 0.3, 4000, substream(11, 99))

    def fill(mesh):
        mesh_dirs = np.array([p.dir for p in mesh.points])
        mesh_times = np.array([p.time for p in mesh.points])
        angles = np.arccos(np.clip(probe_dirs @ mesh_dirs.T, -1.0, 1.0))
        lags = probe_times[:, None] - mesh_times[None, :]
        d = np.hypot(angles, lags)
        return d.min(axis=1).max()

    coarse = ball_mesh(CENTER, 0.3, 4, 4)
    fine = ball_mesh(CENTER, 0.3, 8, 8)
    assert fill(fine) < fill(coarse)


def test_covering_number_trivial_and_monotone():
    metric = mu_metric(3.0, 1.0)
    # eps at least the gauge diameter of the ball covers with one point
    assert covering_number(CENTER, 0.3, 2.0, metric, seed=5, n_probes=2000) == 1
    ladder = [0.7, 0.5, 0.35, 0.25]
    sizes = [
        covering_number(CENTER, 0.3, eps, metric, seed=5, n_probes=20_000)
        for eps in ladder
    ]
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))
    smaller_ball = covering_number(CENTER, 0.2, 0.35, metric, seed=5, n_probes=20_000)
    assert smaller_ball <= sizes[2]


def test_covering_doubling_and_slope():
    metric = mu_metric(3.0, 1.0)
    eps_ladder = np.array([0.64, 0.45254834, 0.32, 0.22627417])  # ratio sqrt(2)
    sizes = np.array(
        [covering_number(CENTER, 0.3, e, metric, seed=9, n_probes=60_000) for e in eps_ladder]
    )
    # halving ladder: start / 2 appears two rungs later
    ratios = sizes[2:] / sizes[:-2]
    assert np.all(ratios > 1.0)
    assert ratios.max() / ratios.min() < 8.0  # bounded doubling envelope
    slope = np.polyfit(np.log(eps_ladder), np.log(sizes), 1)[0]
    inv_p = 1.0 / p_exponent(3.0, 1.0)
    assert abs(slope + inv_p) / inv_p <= 0.25  # greedy nets are exponent-faithful


def test_covering_canonical_metric_smoke(model31_100):
    from spherefield import canonical_metric

    metric = canonical_metric(model31_100)
    n = covering_number(CENTER, 0.3, 0.25, metric, seed=5, n_probes=4000)
    assert n >= 1


def test_covering_validation():
    metric = mu_metric(3.0, 1.0)
    with pytest.raises(DomainError):
        covering_number(CENTER, 0.3, 0.0, metric, seed=1)
    with pytest.raises(DomainError):
        covering_number(CENTER, 0.9, 0.1, metric, seed=1)


def test_mu_volume_saturates_for_large_eps():
    params = Params(3.0, 1.0)
    vol, se = mu_ball_volume_mc(params, 1.5, 20_000, seed=3)
    theta_max, s_max = 1.0, 1.0
    box = 2.0 * np.pi * (1.0 - np.cos(theta_max)) * 2.0 * s_max
    assert vol == box
    assert se == 0.0


def test_mu_volume_matches_quadrature():
    params = Params(3.0, 1.0)
    for i, eps in enumerate((0.05, 0.12, 0.3)):
        vol, se = mu_ball_volume_mc(params, eps, 400_000, seed=50 + i)
        exact = eps ** (1.0 / p_exponent(3.0, 1.0)) * volume_prefactor(params, eps)
        assert abs(vol - exact) <= 5.0 * se


@pytest.mark.parametrize("alpha,beta", [(3.0, 1.0), (2.7, 0.4), (3.5, 1.2)])
def test_mu_volume_scaling_exponent(alpha, beta):
    params = Params(alpha, beta)
    inv_p = 1.0 / p_exponent(alpha, beta)
    eps_grid = np.geomspace(0.03, 0.25, 6)
    logs = [
        np.log(mu_ball_volume_mc(params, eps, 200_000, seed=60 + i)[0])
        for i, eps in enumerate(eps_grid)
    ]
    slope = np.polyfit(np.log(eps_grid), logs, 1)[0]
    assert abs(slope - inv_p) / inv_p <= 0.05


def test_product_ball_volume_scales_cubically():
    # Vol(B_r) ~ r^3 with a bounded prefactor; estimate by direct MC of the
    # product measure over the enclosing cap x slab box.
    g = substream(21, 7)
    slopes_input = []
    for r in (0.1, 0.2, 0.4):
        cos_theta = g.uniform(np.cos(min(r, np.pi)), 1.0, size=200_000)
        theta = np.arccos(cos_theta)
        tau = g.uniform(-r, r, size=200_000)
        frac = np.mean(theta**2 + tau**2 < r**2)
        box = 2.0 * np.pi * (1.0 - np.cos(min(r, np.pi))) * 2.0 * r
        slopes_input.append(box * frac)
    slope = np.polyfit(np.log([0.1, 0.2, 0.4]), np.log(slopes_input), 1)[0]
    assert abs(slope - 3.0) / 3.0 <= 0.03


def test_mu_volume_validation():
    params = Params(3.0, 1.0)
    with pytest.raises(DomainError):
        mu_ball_volume_mc(params, 0.1, 500, seed=1)
    with pytest.raises(DomainError):
        mu_ball_volume_mc(params, 0.0, 5000, seed=1)


def test_prefactor_limit_and_boundedness():
    params = Params(3.0, 1.0)
    limit = volume_prefactor_limit(params)
    assert limit > 0.0
    assert volume_prefactor(params, 1e-4) == pytest.approx(limit, rel=1e-4)
    values = [volume_prefactor(params, e) for e in np.geomspace(1e-3, 0.5, 12)]
    assert max(values) / min(values) < 10.0
    with pytest.raises(DomainError):
        volume_prefactor(params, 1.0)


def test_fibonacci_sphere_unit():
    dirs = fibonacci_sphere(64)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    with pytest.raises(DomainError):
        fibonacci_sphere(0)


def test_sample_ball_uniform_stays_inside():
    from spherefield.geometry import sample_ball_uniform

    pts = sample_ball_uniform(CENTER, 0.25, 500, substream(13, 5))
    assert len(pts) == 500
    assert all(product_dist(CENTER, p) < 0.25 for p in pts)


def test_mu_gauge_vectorized_consistency(params31):
    from spherefield import mu_dist_sq

    a = SpacetimePoint.from_angles(0.0, 0.0, 0.0)
    b = SpacetimePoint.from_angles(0.21, 1.3, 0.17)
    theta = sphere_dist(a.dir, b.dir)
    assert mu_gauge_sq(3.0, 1.0, theta, 0.17) == pytest.approx(
        mu_dist_sq(params31, a, b), rel=1e-12
    )
