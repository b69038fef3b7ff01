"""Sphere-time geometry: points, the q-product metric, ball meshes,
greedy covering nets, and Monte Carlo volumes of gauge balls.

The gauge ball volume obeys Vol = eps^(1/p) * F(eps) with
1/p = 2/beta + 4/(alpha-2) and F bounded above and below; the quadrature
for F and the MC estimator are two independent routes to the same number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError
from .rng import STREAM_PROBE, STREAM_VOLUME, substream, worker_count

_UNIT_TOL = 1e-9
# Strict-inequality shrink so lattice points sit inside the open ball.
_SHRINK = 1.0 - 1e-9


def _as_unit(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (3,):
        raise DomainError("direction must be a 3-vector")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > _UNIT_TOL:
        raise DomainError(f"direction norm {norm} is not 1 within {_UNIT_TOL}")
    return vec / norm


@dataclass(frozen=True)
class SpacetimePoint:
    """A unit direction on S^2 together with a time coordinate."""

    dir: np.ndarray
    time: float

    def __post_init__(self):
        object.__setattr__(self, "dir", _as_unit(self.dir))
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_angles(cls, theta: float, phi: float, time: float) -> "SpacetimePoint":
        """Colatitude theta in [0, pi], longitude phi in [0, 2 pi)."""
        st = np.sin(theta)
        return cls(np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)]), time)

    def angles(self) -> tuple[float, float]:
        theta = float(np.arccos(np.clip(self.dir[2], -1.0, 1.0)))
        phi = float(np.arctan2(self.dir[1], self.dir[0])) % (2.0 * np.pi)
        return theta, phi


NORTH_POLE = np.array([0.0, 0.0, 1.0])


def sphere_dist(x, y) -> float:
    """Geodesic distance on S^2: arccos of the clamped inner product."""
    x = _as_unit(x)
    y = _as_unit(y)
    return float(np.arccos(np.clip(np.dot(x, y), -1.0, 1.0)))


def product_dist(p: SpacetimePoint, q: SpacetimePoint, q_exponent: float = 2.0) -> float:
    """q-product metric (|t-s|^q + d_S2^q)^(1/q); q=2 everywhere that matters."""
    if not (q_exponent >= 1.0):
        raise DomainError("q_exponent must be in [1, inf]")
    dt = abs(p.time - q.time)
    dx = sphere_dist(p.dir, q.dir)
    if np.isinf(q_exponent):
        return max(dt, dx)
    if q_exponent == 2.0:
        return float(np.hypot(dt, dx))
    return float((dt**q_exponent + dx**q_exponent) ** (1.0 / q_exponent))


def mu_gauge_sq(alpha: float, beta: float, theta, tau):
    """Squared comparison gauge |tau|^beta + (1 - |tau|^beta) theta^(alpha-2).

    Vectorized over (theta, tau); valid for |tau| < 1.
    """
    theta = np.asarray(theta, dtype=float)
    tau = np.asarray(tau, dtype=float)
    tb = np.abs(tau) ** beta
    return tb + (1.0 - tb) * theta ** (alpha - 2.0)


def rho_sq(alpha: float, theta):
    """Squared spatial gauge theta^(alpha-2)."""
    return np.asarray(theta, dtype=float) ** (alpha - 2.0)


def tangent_frame(center_dir: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair spanning the tangent plane at center."""
    c = _as_unit(center_dir)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(c)))] = 1.0
    e1 = np.cross(c, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    return e1, e2


def cap_directions(center_dir: np.ndarray, cap_radius: float, n_rings: int) -> np.ndarray:
    """Deterministic spherical-cap mesh: ring i at radius i*cap/(n-1) with
    2i+1 points, n_rings^2 directions in total (ring 0 is the center)."""
    c = _as_unit(center_dir)
    if n_rings < 1:
        raise DomainError("n_rings must be >= 1")
    if n_rings == 1 or cap_radius == 0.0:
        return c[None, :]
    e1, e2 = tangent_frame(c)
    dirs = [c]
    for i in range(1, n_rings):
        theta = cap_radius * i / (n_rings - 1)
        count = 2 * i + 1
        phis = 2.0 * np.pi * np.arange(count) / count
        plane = np.cos(phis)[:, None] * e1 + np.sin(phis)[:, None] * e2
        dirs.append(np.cos(theta) * c + np.sin(theta) * plane)
    return np.vstack(dirs)


@dataclass(frozen=True)
class BallMesh:
    """Deterministic lattice inside the open product ball B_r(center).

    space_dirs x time offsets form a product lattice (used by the fast
    Kronecker sampler); `points` flattens it space-major and prepends the
    exact center when the center time is off the grid.
    """

    center: SpacetimePoint
    radius: float
    space_dirs: np.ndarray
    time_offsets: np.ndarray
    resolution: tuple[int, int]
    center_on_lattice: bool
    points: list[SpacetimePoint] = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.center.time + self.time_offsets

    @property
    def n_lattice(self) -> int:
        return len(self.space_dirs) * len(self.time_offsets)


def ball_mesh(center: SpacetimePoint, r: float, n_space: int, n_time: int) -> BallMesh:
    """Cap-ring x uniform-time lattice inside B_r(center), center included.

    The cap radius and time half-width split the r budget so that every
    lattice point satisfies d_2(center, point) < r strictly.  The time slab
    must stay shorter than the unit covariance window.
    """
    if not (0.0 < r <= 0.5):
        raise DomainError(f"radius must lie in (0, 0.5], got {r}")
    n_space = int(n_space)
    n_time = int(n_time)
    if n_space < 1 or n_time < 1:
        raise DomainError("n_space and n_time must be >= 1")
    if n_space == 1 and n_time == 1:
        pt = SpacetimePoint(center.dir, center.time)
        return BallMesh(center, r, center.dir[None, :], np.zeros(1), (1, 1), True, [pt])
    if n_time == 1:
        cap, half = r * _SHRINK, 0.0
    elif n_space == 1:
        cap, half = 0.0, r * _SHRINK
    else:
        cap = half = r / np.sqrt(2.0) * _SHRINK
    # Radial ring spacing must not exceed r / n_space.
    if n_space > 1:
        cap = min(cap, (n_space - 1) * r / n_space)
    if 2.0 * half >= 1.0:
        raise DomainError("time slab of the ball exceeds the unit window")
    dirs = cap_directions(center.dir, cap, n_space)
    offsets = np.linspace(-half, half, n_time) if n_time > 1 else np.zeros(1)
    center_on_lattice = bool(np.any(offsets == 0.0))
    points = []
    if not center_on_lattice:
        points.append(SpacetimePoint(center.dir, center.time))
    for d in dirs:
        for off in offsets:
            points.append(SpacetimePoint(d, center.time + off))
    return BallMesh(center, r, dirs, offsets, (n_space, n_time), center_on_lattice, points)


def fibonacci_sphere(n: int) -> np.ndarray:
    """n quasi-uniform directions on S^2 (golden-angle spiral)."""
    if n < 1:
        raise DomainError("need at least one direction")
    k = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * k + 1.0) / n
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    s = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def _sample_ball_arrays(
    center: SpacetimePoint, r: float, n: int, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform product-measure samples of B_r(center): (dirs (n,3), times)."""
    e1, e2 = tangent_frame(center.dir)
    cap = min(r, np.pi)
    thetas = np.empty(0)
    taus = np.empty(0)
    while len(thetas) < n:
        m = int(1.5 * (n - len(thetas))) + 16
        theta = np.arccos(rng.uniform(np.cos(cap), 1.0, size=m))
        tau = rng.uniform(-r, r, size=m)
        keep = theta**2 + tau**2 < r**2
        thetas = np.concatenate([thetas, theta[keep]])
        taus = np.concatenate([taus, tau[keep]])
    thetas, taus = thetas[:n], taus[:n]
    phis = rng.uniform(0.0, 2.0 * np.pi, size=n)
    plane = np.cos(phis)[:, None] * e1 + np.sin(phis)[:, None] * e2
    dirs = np.cos(thetas)[:, None] * center.dir + np.sin(thetas)[:, None] * plane
    return dirs, center.time + taus


def sample_ball_uniform(center: SpacetimePoint, r: float, n: int, rng) -> list[SpacetimePoint]:
    """n points uniform w.r.t. surface x Lebesgue measure on B_r(center)."""
    dirs, times = _sample_ball_arrays(center, r, int(n), rng)
    return [SpacetimePoint(d, t) for d, t in zip(dirs, times)]


def covering_number(
    center: SpacetimePoint,
    r: float,
    eps: float,
    metric,
    seed: int,
    n_probes: int = 100_000,
) -> int:
    """Greedy farthest-point eps-net size over a dense probe set of B_r.

    ``metric(dirs, times, q_dir, q_time) -> distances`` must be vectorized
    over the probe arrays.  The result upper-bounds the minimal net size for
    the probe set; exponents, not constants, are the meaningful output.
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    if not (0.0 < r <= 0.5):
        raise DomainError("r must lie in (0, 0.5]")
    rng = substream(seed, STREAM_PROBE)
    dirs, times = _sample_ball_arrays(center, r, int(n_probes), rng)
    dirs = np.vstack([dirs, center.dir])
    times = np.append(times, center.time)
    dist = metric(dirs, times, center.dir, center.time)
    count = 1
    while True:
        far = int(np.argmax(dist))
        if dist[far] <= eps:
            return count
        dist = np.minimum(dist, metric(dirs, times, dirs[far], times[far]))
        count += 1


def mu_metric(alpha: float, beta: float):
    """Vectorized gauge distance callable for covering_number."""

    def dist(dirs: np.ndarray, times: np.ndarray, q_dir: np.ndarray, q_time: float):
        thetas = np.arccos(np.clip(dirs @ q_dir, -1.0, 1.0))
        return np.sqrt(mu_gauge_sq(alpha, beta, thetas, times - q_time))

    return dist


def mu_ball_volume_mc(params, eps: float, n_samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo volume of the gauge ball around the north pole at time 0.

    Samples the tight enclosing box (cap theta <= eps^(2/(alpha-2)) capped at
    1, two-sided time slab |s| <= eps^(2/beta)) uniformly w.r.t. the product
    measure and rescales the hit fraction.  Returns (volume, std_err).
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    n_samples = int(n_samples)
    if n_samples < 1_000:
        raise DomainError("n_samples must be >= 1000")
    alpha, beta = params.alpha, params.beta
    theta_max = min(eps ** (2.0 / (alpha - 2.0)), 1.0)
    s_max = min(eps ** (2.0 / beta), 1.0)
    box_volume = 2.0 * np.pi * (1.0 - np.cos(theta_max)) * 2.0 * s_max
    block = 1_000_000
    n_blocks = (n_samples + block - 1) // block

    def count_block(b: int) -> int:
        m = min(block, n_samples - b * block)
        rng = substream(seed, STREAM_VOLUME, b)
        cos_theta = rng.uniform(np.cos(theta_max), 1.0, size=m)
        theta = np.arccos(cos_theta)
        s = rng.uniform(-s_max, s_max, size=m)
        return int(np.count_nonzero(mu_gauge_sq(alpha, beta, theta, s) < eps**2))

    workers = worker_count()
    if workers > 1 and n_blocks > 1:
        # Per-block substreams make the reduction scheduling-invariant.
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(count_block, range(n_blocks)))
    else:
        hits = sum(count_block(b) for b in range(n_blocks))
    p_hat = hits / n_samples
    volume = box_volume * p_hat
    std_err = box_volume * np.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n_samples)
    return volume, std_err


def volume_prefactor(params, eps: float) -> float:
    """Bounded prefactor F(eps) in Vol(gauge ball) = eps^(1/p) F(eps).

    F(eps) = 4 pi * int_0^1 u ((1-u^(a-2))/(1-eps^2 u^(a-2)))^(1/b)
             * sinc(eps^(2/(a-2)) u) du, by adaptive quadrature.
    """
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must lie in (0, 1)")
    alpha, beta = params.alpha, params.beta
    scale = eps ** (2.0 / (alpha - 2.0))

    def integrand(u: float) -> float:
        x = u ** (alpha - 2.0)
        ratio = (1.0 - x) / (1.0 - eps**2 * x)
        z = scale * u
        sinc = np.sin(z) / z if z > 0 else 1.0
        return u * ratio ** (1.0 / beta) * sinc

    value, abserr = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=200)
    if abserr > 1e-8:
        raise QuadratureError(f"prefactor quadrature error {abserr:g} exceeds 1e-8")
    return 4.0 * np.pi * value


def volume_prefactor_limit(params) -> float:
    """eps -> 0 limit of the prefactor: 4 pi int_0^1 u (1-u^(a-2))^(1/b) du."""
    alpha, beta = params.alpha, params.beta
    value, abserr = integrate.quad(
        lambda u: u * (1.0 - u ** (alpha - 2.0)) ** (1.0 / beta), 0.0, 1.0,
        epsabs=1e-10, epsrel=1e-10, limit=200,
    )
    if abserr > 1e-8:
        raise QuadratureError(f"limit quadrature error {abserr:g} exceeds 1e-8")
    return 4.0 * np.pi * value
