"""Joint Gaussian realizations of the field by two independent backends.

The spectral backend draws the coefficient processes a_lm(t) band by band
and sums a_lm(t) Y_lm(x); the direct backend factorizes the dense covariance
of the requested points.  Both target the same truncated covariance and are
cross-validated against each other.

Real orthonormal harmonics are used throughout, normalized so that
sum_m Y_lm(x) Y_lm(y) = (2l+1)/(4 pi) P_l(<x, y>); the associated-Legendre
recurrences run on fully normalized values, stable to the degree cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, DomainError, FactorizationError
from .geometry import SpacetimePoint, _as_unit
from .legendre import ELL_CAP
from .rng import STREAM_ALM, STREAM_DIRECT, substream
from .spectrum import CovarianceModel, SpectrumParams, cl_zero, gamma_gram, lag_factor

DENSE_POINT_BUDGET = 3000
JITTER_REL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing times spanning less than the unit window."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float))
        if pts.ndim != 1 or len(pts) == 0:
            raise DomainError("time grid needs at least one point")
        if len(pts) > 1 and not np.all(np.diff(pts) > 0):
            raise DomainError("time grid must be strictly increasing")
        object.__setattr__(self, "points", pts)
        if self.window_length >= 1.0:
            raise DomainError(f"time window {self.window_length} must stay below 1")

    @property
    def window_length(self) -> float:
        return float(self.points[-1] - self.points[0])

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CoefficientPaths:
    """Joint paths of the (2l+1) coefficient processes of one degree."""

    ell: int
    times: np.ndarray
    paths: np.ndarray  # (2l+1, n_times)
    clipped_mass: float


@dataclass(frozen=True)
class FieldRealization:
    """Field values on a (space x time) lattice with full reproducibility
    metadata; values are flat, space-major."""

    points: list[SpacetimePoint]
    values: np.ndarray
    seed: int
    ell_max: int
    backend: str
    clipped_mass: float

    def __post_init__(self):
        if len(self.values) != len(self.points):
            raise DomainError("values must align with the lattice")
        if not np.all(np.isfinite(self.values)):
            raise FactorizationError("realization contains non-finite values")


# ---------------------------------------------------------------------------
# Real orthonormal spherical harmonics


def _angles_of(dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.clip(dirs[:, 2], -1.0, 1.0)
    sin_theta = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    return x, sin_theta, phi


def iter_band_tables(ell_max: int, dirs: np.ndarray):
    """Yield (ell, Y) with Y of shape (2l+1, n_dirs), rows ordered
    m = -l..l, sweeping the normalized recurrence row by row."""
    if ell_max > ELL_CAP:
        raise BudgetError(f"ell_max {ell_max} exceeds the cap {ELL_CAP}")
    dirs = np.asarray(dirs, dtype=float)
    n = len(dirs)
    x, sin_theta, phi = _angles_of(dirs)
    inv_sqrt4pi = 1.0 / np.sqrt(4.0 * np.pi)
    # rows[m] holds the fully normalized associated value S_{l m} at degree l
    prev = np.zeros((1, n))  # degree l-2 values
    curr = np.full((1, n), inv_sqrt4pi)  # degree l-1 values, seeded at l=0
    yield 0, curr.copy()
    for ell in range(1, ell_max + 1):
        row = np.zeros((ell + 1, n))
        if ell >= 2:
            m = np.arange(0, ell - 1)
            a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
            b = np.sqrt(
                (2.0 * ell + 1.0) * (ell - 1.0 + m) * (ell - 1.0 - m)
                / ((2.0 * ell - 3.0) * (ell * ell - m * m))
            )
            row[: ell - 1] = a[:, None] * x[None, :] * curr[: ell - 1] - b[:, None] * prev[: ell - 1]
        row[ell - 1] = np.sqrt(2.0 * ell + 1.0) * x * curr[ell - 1]
        row[ell] = np.sqrt((2.0 * ell + 1.0) / (2.0 * ell)) * sin_theta * curr[ell - 1]
        y = np.empty((2 * ell + 1, n))
        y[ell] = row[0]
        ms = np.arange(1, ell + 1)
        arg = ms[:, None] * phi[None, :]
        y[ell + ms] = np.sqrt(2.0) * row[1:] * np.cos(arg)
        y[ell - ms] = np.sqrt(2.0) * row[1:] * np.sin(arg)
        yield ell, y
        prev, curr = curr, row


def sph_harm_band(ell: int, dirs: np.ndarray) -> np.ndarray:
    """Y_lm for m = -l..l at each direction; shape (2l+1, n)."""
    for l, y in iter_band_tables(ell, np.asarray(dirs, dtype=float)):
        if l == ell:
            return y
    raise AssertionError("unreachable")


def real_sph_harm(ell: int, m: int, direction) -> float:
    """Real orthonormal spherical harmonic Y_lm at a unit direction."""
    ell = int(ell)
    m = int(m)
    if ell < 0 or abs(m) > ell:
        raise DomainError(f"order |m| <= ell required, got ell={ell}, m={m}")
    d = _as_unit(direction)
    return float(sph_harm_band(ell, d[None, :])[m + ell, 0])


# ---------------------------------------------------------------------------
# Covariance factorization policy


def psd_factor(gram: np.ndarray, jitter_rel: float = JITTER_REL) -> tuple[np.ndarray, float]:
    """Factor L with L L^T ~= gram: Cholesky after relative diagonal jitter,
    falling back to eigenvalue clipping at zero.

    Returns (L, clipped_mass); clipped_mass is the total negative-eigenvalue
    mass removed, 0.0 on the Cholesky path.  Raises FactorizationError with
    the spectrum attached when both routes fail.
    """
    gram = np.asarray(gram, dtype=float)
    scale = abs(gram[0, 0]) if gram.size else 0.0
    try:
        factor = np.linalg.cholesky(gram + jitter_rel * scale * np.eye(len(gram)))
        if np.all(np.isfinite(factor)):
            return factor, 0.0
    except np.linalg.LinAlgError:
        pass
    try:
        eigvals, eigvecs = np.linalg.eigh(gram)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError("eigendecomposition failed") from exc
    clipped = float(-eigvals[eigvals < 0.0].sum())
    factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    if not np.all(np.isfinite(factor)):
        raise FactorizationError("non-finite factor after clipping", eigenvalues=eigvals)
    return factor, clipped


def _lag_gram(params: SpectrumParams, times: np.ndarray) -> np.ndarray:
    """Unit-variance time Gram (1 - |t_i - t_j|^beta)."""
    tau = times[:, None] - times[None, :]
    if np.any(np.abs(tau) >= 1.0):
        raise DomainError("pairwise time lags must stay below 1")
    return lag_factor(params, tau)


def sample_alm_paths(params: SpectrumParams, ell: int, grid: TimeGrid, seed: int) -> CoefficientPaths:
    """Joint zero-mean Gaussian paths of a_lm(t), m = -l..l, over the grid.

    Each order draws from its own (seed, ell, m) substream; the shared Gram
    is C_l(0) (1 - |dt|^beta).
    """
    gram = cl_zero(params, ell) * _lag_gram(params, grid.points)
    factor, clipped = psd_factor(gram)
    paths = np.empty((2 * ell + 1, len(grid)))
    for idx in range(2 * ell + 1):
        z = substream(seed, STREAM_ALM, ell, idx).standard_normal(len(grid))
        paths[idx] = factor @ z
    return CoefficientPaths(ell=ell, times=grid.points.copy(), paths=paths, clipped_mass=clipped)


# ---------------------------------------------------------------------------
# Spectral (Karhunen-Loeve style) synthesis


def _band_values(
    params: SpectrumParams,
    dirs: np.ndarray,
    grid: TimeGrid,
    bands: list[tuple[int, int]],
    seed: int,
    n_draws: int,
    time_index: np.ndarray | None = None,
) -> tuple[list[np.ndarray], float]:
    """Accumulate sum_lm a_lm(t) Y_lm(x) per band of degrees.

    With time_index None the output is per-band (n_draws, n_space, n_times)
    on the product lattice; otherwise point j pairs dirs[j] with
    grid.points[time_index[j]] and the output is (n_draws, n_points).
    """
    dirs = np.asarray(dirs, dtype=float)
    ell_max = max(hi for _, hi in bands)
    unit_factor, unit_clip = psd_factor(_lag_gram(params, grid.points))
    lattice_shape = (
        (n_draws, len(dirs), len(grid)) if time_index is None else (n_draws, len(dirs))
    )
    acc = [np.zeros(lattice_shape) for _ in bands]
    total_clip = 0.0
    for ell, y in iter_band_tables(ell_max, dirs):
        owners = [i for i, (lo, hi) in enumerate(bands) if lo <= ell <= hi]
        if not owners:
            continue
        variance = cl_zero(params, ell)
        total_clip += (2 * ell + 1) * variance * unit_clip
        scaled = np.sqrt(variance) * unit_factor
        z = np.empty((2 * ell + 1, n_draws, len(grid)))
        for idx in range(2 * ell + 1):
            z[idx] = substream(seed, STREAM_ALM, ell, idx).standard_normal((n_draws, len(grid)))
        paths = z @ scaled.T  # (2l+1, n_draws, n_times)
        if time_index is None:
            contrib = np.einsum("mp,mdt->dpt", y, paths)
        else:
            contrib = np.einsum("mp,mdp->dp", y, paths[:, :, time_index])
        for i in owners:
            acc[i] += contrib
    return acc, total_clip


def _lattice_points(dirs: np.ndarray, grid: TimeGrid) -> list[SpacetimePoint]:
    return [SpacetimePoint(d, t) for d in np.asarray(dirs, dtype=float) for t in grid.points]


def synthesize_field(
    params: SpectrumParams,
    space_dirs: np.ndarray,
    grid: TimeGrid,
    ell_max: int,
    seed: int,
) -> FieldRealization:
    """Spectral synthesis of the field on a (space x time) lattice,
    deterministic in the seed."""
    space_dirs = np.asarray(space_dirs, dtype=float)
    if space_dirs.ndim != 2 or space_dirs.shape[0] == 0:
        raise DomainError("space mesh must be a nonempty (n, 3) array")
    bands, clip = _band_values(params, space_dirs, grid, [(0, int(ell_max))], seed, 1)
    values = bands[0][0].reshape(-1)
    return FieldRealization(
        points=_lattice_points(space_dirs, grid),
        values=values,
        seed=int(seed),
        ell_max=int(ell_max),
        backend="kl",
        clipped_mass=clip,
    )


def _split_points(points: list[SpacetimePoint]) -> tuple[np.ndarray, TimeGrid, np.ndarray]:
    dirs = np.array([p.dir for p in points])
    times = np.array([p.time for p in points])
    unique, index = np.unique(times, return_inverse=True)
    return dirs, TimeGrid(unique), index


def kl_gaussian_sample(
    params: SpectrumParams,
    points: list[SpacetimePoint],
    ell_max: int,
    seed: int,
    n_draws: int,
) -> tuple[np.ndarray, float]:
    """Spectral-backend joint draws at arbitrary points: (n_draws, n_points)."""
    dirs, grid, index = _split_points(points)
    bands, clip = _band_values(
        params, dirs, grid, [(0, int(ell_max))], seed, int(n_draws), time_index=index
    )
    return bands[0], clip


def direct_gaussian_sample(
    params: SpectrumParams,
    points: list[SpacetimePoint],
    ell_max: int,
    seed: int,
    n_draws: int,
) -> tuple[np.ndarray, float]:
    """Dense-backend joint draws from the truncated covariance Gram.

    Returns (draws, clipped_mass) with draws of shape (n_draws, n_points);
    the point budget caps the dense factorization cost.
    """
    if len(points) > DENSE_POINT_BUDGET:
        raise BudgetError(f"{len(points)} points exceed the dense budget {DENSE_POINT_BUDGET}")
    model = CovarianceModel.build(params, ell_max)
    factor, clipped = psd_factor(gamma_gram(model, points))
    z = substream(seed, STREAM_DIRECT).standard_normal((len(points), int(n_draws)))
    return (factor @ z).T, clipped


def empirical_cov_check(
    params: SpectrumParams,
    points: list[SpacetimePoint],
    ell_max: int,
    n_samples: int,
    seed: int,
    backend: str = "direct",
) -> tuple[float, float]:
    """Worst empirical-vs-analytic covariance discrepancy over the points.

    Returns (max_abs_error, max_se_units); the standard error of each entry
    uses the Gaussian fourth-moment identity (C_ii C_jj + C_ij^2) / n.
    """
    if backend == "direct":
        draws, _ = direct_gaussian_sample(params, points, ell_max, seed, n_samples)
    elif backend == "kl":
        draws, _ = kl_gaussian_sample(params, points, ell_max, seed, n_samples)
    else:
        raise DomainError(f"unknown backend {backend!r}")
    model = CovarianceModel.build(params, ell_max)
    analytic = gamma_gram(model, points)
    empirical = draws.T @ draws / len(draws)
    diag = np.diag(analytic)
    se = np.sqrt((np.outer(diag, diag) + analytic**2) / len(draws))
    err = np.abs(empirical - analytic)
    return float(err.max()), float((err / se).max())
