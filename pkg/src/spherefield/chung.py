"""Rate-function algebra, the empirical liminf tracker along geometric radius
ladders, and the spectral band-split diagnostic.

The rate exponent is p = (2/beta + 4/(alpha-2))^-1, the liminf rate is
phi(r) = (log|log r| / r^3)^p, and the small-ball rate is
psi(r, eps) = r^3 eps^(-1/p).  The liminf is a pathwise statement: all levels
of one trace share a single realization on the union of nested meshes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, DomainError
from .geometry import SpacetimePoint, ball_mesh
from .harmonics import (
    DENSE_POINT_BUDGET,
    FieldRealization,
    _band_values,
    _lattice_points,
    psd_factor,
)
from .rng import STREAM_DIRECT, substream
from .spectrum import CovarianceModel, SpectrumParams, gamma_gram, validate_params

LIMINF_RADIUS_FLOOR = 1e-3
DEFAULT_R_START = 0.3


def p_exponent(alpha: float, beta: float) -> float:
    """p(alpha, beta) = (2/beta + 4/(alpha-2))^-1."""
    problems = validate_params(alpha, beta, c0=1.0, c1=1.0)
    if problems:
        raise DomainError("; ".join(problems))
    return 1.0 / (2.0 / beta + 4.0 / (alpha - 2.0))


@dataclass(frozen=True)
class RateParams:
    """Exponent bundle for the rate functions."""

    alpha: float
    beta: float
    p: float

    @classmethod
    def from_exponents(cls, alpha: float, beta: float) -> "RateParams":
        return cls(alpha=alpha, beta=beta, p=p_exponent(alpha, beta))


def phi_rate(params: RateParams, r: float) -> float:
    """phi(r) = (log|log r| / r^3)^p on 0 < r < 1/e."""
    r = float(r)
    if not 0.0 < r < 1.0 / np.e:
        raise DomainError(f"phi requires 0 < r < 1/e, got {r}")
    return float((np.log(np.abs(np.log(r))) / r**3) ** params.p)


def psi_rate(params: RateParams, r: float, eps: float) -> float:
    """psi(r, eps) = r^3 eps^(-1/p)."""
    if r <= 0.0 or eps <= 0.0:
        raise DomainError("psi requires positive r and eps")
    return float(r**3 * eps ** (-1.0 / params.p))


@dataclass(frozen=True)
class LiminfTrace:
    """phi(r_n) M_hat(r_n) along a geometric radius ladder, one realization."""

    radii: np.ndarray
    m_hat: np.ndarray
    values: np.ndarray  # phi(r_n) * m_hat_n
    running_min: np.ndarray
    seed: int
    ladder_base: float


def empirical_liminf(
    model: CovarianceModel,
    center: SpacetimePoint,
    ladder_base: float,
    n_levels: int,
    mesh: tuple[int, int],
    seed: int,
    r_start: float = DEFAULT_R_START,
) -> LiminfTrace:
    """Trace phi(r_n) M_hat(r_n) for r_n = r_start * base^(1-n).

    One joint draw covers the union of the per-level meshes; the level-n
    maximum runs over the meshes of all levels k >= n, so it is monotone by
    construction.  The radius floor keeps the smallest ball meshable.
    """
    return empirical_liminf_batch(
        model, center, ladder_base, n_levels, mesh, [seed], r_start
    )[0]


def empirical_liminf_batch(
    model: CovarianceModel,
    center: SpacetimePoint,
    ladder_base: float,
    n_levels: int,
    mesh: tuple[int, int],
    seeds: list[int],
    r_start: float = DEFAULT_R_START,
) -> list[LiminfTrace]:
    """empirical_liminf for several seeds, factoring the shared Gram once.

    Per-seed results are identical to single-seed calls because draws are
    keyed by the seed, not by batch position.
    """
    if ladder_base <= 1.0:
        raise DomainError("ladder base must exceed 1")
    if not 0.0 < r_start <= 0.3:
        raise DomainError("r_start must lie in (0, 0.3]")
    n_levels = int(n_levels)
    if n_levels < 1:
        raise DomainError("need at least one level")
    radii = r_start * ladder_base ** (1.0 - np.arange(1, n_levels + 1, dtype=float))
    if radii[-1] < LIMINF_RADIUS_FLOOR:
        raise DomainError(
            f"smallest radius {radii[-1]:.3g} is below the mesh floor {LIMINF_RADIUS_FLOOR}"
        )
    n_space, n_time = mesh
    meshes = [ball_mesh(center, r, n_space, n_time) for r in radii]
    points: list[SpacetimePoint] = [SpacetimePoint(center.dir, center.time)]
    level_slices = []
    for bm in meshes:
        start = len(points)
        points.extend(p for p in bm.points if not _is_center(p, center))
        level_slices.append(slice(start, len(points)))
    if len(points) > DENSE_POINT_BUDGET:
        raise BudgetError(
            f"{len(points)} union-mesh points exceed the dense budget {DENSE_POINT_BUDGET}"
        )
    factor, _ = psd_factor(gamma_gram(model, points))
    rate = RateParams.from_exponents(model.params.alpha, model.params.beta)
    phi = np.array([phi_rate(rate, r) for r in radii])
    traces = []
    for seed in seeds:
        z = substream(seed, STREAM_DIRECT).standard_normal((len(points), 1))
        sample = (factor @ z)[:, 0]
        increments = np.abs(sample - sample[0])
        m_hat = np.empty(n_levels)
        tail_max = 0.0
        for n in range(n_levels - 1, -1, -1):
            seg = increments[level_slices[n]]
            tail_max = max(tail_max, float(seg.max()) if seg.size else 0.0)
            m_hat[n] = tail_max
        values = phi * m_hat
        traces.append(
            LiminfTrace(
                radii=radii,
                m_hat=m_hat,
                values=values,
                running_min=np.minimum.accumulate(values),
                seed=int(seed),
                ladder_base=float(ladder_base),
            )
        )
    return traces


def _is_center(p: SpacetimePoint, center: SpacetimePoint) -> bool:
    return p.time == center.time and bool(np.all(p.dir == center.dir))


@dataclass(frozen=True)
class BandSplit:
    """Low/high degree bands of one realization plus their exact sum.

    The full field is reconstructed as the single float addition of the two
    band accumulators, so low + high == full holds bitwise; an independently
    accumulated synthesis of the same seed agrees to rounding.
    """

    low: FieldRealization
    high: FieldRealization
    full: FieldRealization


def band_decomposition(
    params: SpectrumParams,
    d_split: int,
    space_dirs: np.ndarray,
    grid,
    ell_max: int,
    seed: int,
) -> BandSplit:
    """Split one spectral realization into degrees [0, d] and (d, ell_max].

    Both bands consume the same coefficient draws; disjoint bands are
    independent because distinct degrees use disjoint substreams.
    """
    d_split = int(d_split)
    ell_max = int(ell_max)
    if not 1 <= d_split < ell_max:
        raise DomainError(f"need 1 <= d_split < ell_max, got {d_split}, {ell_max}")
    space_dirs = np.asarray(space_dirs, dtype=float)
    bands, clip = _band_values(
        params, space_dirs, grid, [(0, d_split), (d_split + 1, ell_max)], seed, 1
    )
    low_values = bands[0][0].reshape(-1)
    high_values = bands[1][0].reshape(-1)
    points = _lattice_points(space_dirs, grid)

    def wrap(values: np.ndarray, tag: str) -> FieldRealization:
        return FieldRealization(
            points=points,
            values=values,
            seed=int(seed),
            ell_max=ell_max,
            backend=f"kl:{tag}",
            clipped_mass=clip,
        )

    return BandSplit(
        low=wrap(low_values, f"band0-{d_split}"),
        high=wrap(high_values, f"band{d_split + 1}-{ell_max}"),
        full=wrap(low_values + high_values, "full"),
    )


def band_variance(model: CovarianceModel, ell_lo: int, ell_hi: int) -> float:
    """Analytic variance carried by degrees in [ell_lo, ell_hi]."""
    if not 0 <= ell_lo <= ell_hi <= model.ell_max:
        raise DomainError("band out of range")
    return float(model.gamma_weights[ell_lo : ell_hi + 1].sum())
