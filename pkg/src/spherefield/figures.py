"""Figure rendering for the report path.

Each CLI subcommand that emits CSV also renders a PNG next to it.  Figures
are diagnostics, not data: the delimited files remain the interface of
record.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 130, "bbox_inches": "tight", "metadata": {"Software": "spherefield"}}


def field_figure(realization, path: Path) -> None:
    times = sorted({p.time for p in realization.points})
    t0 = times[0]
    pts = [(p, v) for p, v in zip(realization.points, realization.values) if p.time == t0]
    thetas = np.array([p.angles()[0] for p, _ in pts])
    phis = np.array([p.angles()[1] for p, _ in pts])
    values = np.array([v for _, v in pts])
    fig, ax = plt.subplots(figsize=(6, 4))
    sc = ax.scatter(phis, thetas, c=values, cmap="coolwarm", s=24)
    ax.set_xlabel("longitude")
    ax.set_ylabel("colatitude")
    ax.invert_yaxis()
    ax.set_title(f"field at t={t0:g} (seed {realization.seed})")
    fig.colorbar(sc, ax=ax, label="T")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def covariance_figure(model, backend_rows, scan_extremes, path: Path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    labels = [row[0] for row in backend_rows]
    ax1.bar(labels, [row[4] for row in backend_rows], color="steelblue")
    ax1.axhline(5.0, color="crimson", ls="--", label="5 SE gate")
    ax1.set_ylabel("worst |empirical - analytic| (SE units)")
    ax1.legend()
    lo, hi = scan_extremes
    ax2.bar(["min", "max"], [lo, hi], color="darkseagreen")
    ax2.set_yscale("log")
    ax2.set_ylabel(r"$d_T^2/\mu^2$ extremes")
    fig.suptitle(f"covariance fidelity (ell_max={model.ell_max})")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def smallball_figure(curve, fit_payload, rate, path: Path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.errorbar(curve.eps_grid, curve.p_hat, yerr=curve.ci_half_width, fmt="o-", ms=3)
    ax1.set_xlabel(r"$\varepsilon$")
    ax1.set_ylabel(r"$\hat P(M_r < \varepsilon)$")
    ax1.set_yscale("log")
    mask = (curve.p_hat > 0) & (curve.p_hat < 1)
    x = np.log(curve.eps_grid[mask])
    y = np.log(-np.log(curve.p_hat[mask]))
    ax2.plot(x, y, "o", ms=4, label="data")
    if "slope" in fit_payload:
        xs = np.linspace(x.min(), x.max(), 50)
        ax2.plot(xs, fit_payload["slope"] * xs + fit_payload["intercept"], "-",
                 label=f"fit slope {fit_payload['slope']:.2f}")
        ax2.plot(xs, -1.0 / rate.p * (xs - x.mean()) + y.mean(), ":",
                 label=f"theory slope {-1.0 / rate.p:.2f}")
    ax2.set_xlabel(r"$\log \varepsilon$")
    ax2.set_ylabel(r"$\log(-\log \hat P)$")
    ax2.legend(fontsize=8)
    fig.suptitle(f"small-ball curve, r={curve.r:g}, {curve.n_samples} draws")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def sln_figure(model, reports, ladder, slope, path: Path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ratios = [r.ratio for r in reports if r.ratio is not None]
    ax1.hist(ratios, bins=30, color="steelblue")
    ax1.set_xlabel("var / comparator")
    ax1.set_ylabel("configs")
    ax1.axvline(min(ratios), color="crimson", ls="--", label=f"min {min(ratios):.3g}")
    ax1.legend(fontsize=8)
    from .conditioning import conditional_variance
    from .geometry import SpacetimePoint

    p0 = SpacetimePoint.from_angles(0.0, 0.0, 0.0)
    variances = [
        conditional_variance(model, p0, [SpacetimePoint.from_angles(t, 0.0, 0.0)]).var
        for t in ladder
    ]
    ax2.loglog(ladder, variances, "o-", label=f"fitted slope {slope:.3f}")
    ax2.set_xlabel(r"$\theta$")
    ax2.set_ylabel("conditional variance")
    ax2.legend(fontsize=8)
    fig.suptitle("local non-determinism diagnostics")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def chung_figure(traces, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for trace in traces:
        ax.plot(range(1, len(trace.values) + 1), trace.values, "-", alpha=0.35, lw=1)
        ax.plot(range(1, len(trace.values) + 1), trace.running_min, "-", alpha=0.7, lw=1.5)
    ax.set_xlabel("ladder level n")
    ax.set_ylabel(r"$\phi(r_n)\,\hat M_{r_n}$ and running min")
    ax.set_title(f"liminf traces over {len(traces)} seeds")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def ladder_figure(rows, label: str, path: Path) -> None:
    eps = [r[0] for r in rows]
    values = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, values, "o-")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel(label)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def volume_figure(rows, slope: float, theory: float, path: Path) -> None:
    eps = np.array([r[0] for r in rows])
    vol = np.array([r[1] for r in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.loglog(eps, vol, "o-", label=f"slope {slope:.3f} (theory {theory:.3f})")
    ax1.set_xlabel(r"$\varepsilon$")
    ax1.set_ylabel("gauge-ball volume")
    ax1.legend(fontsize=8)
    normalized = [r[4] for r in rows]
    ax2.semilogx(eps, normalized, "o-")
    ax2.axhline(1.0, color="gray", ls=":")
    ax2.set_xlabel(r"$\varepsilon$")
    ax2.set_ylabel("MC / quadrature")
    fig.suptitle("gauge-ball volume scaling")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def lemmas_figure(rows, path: Path) -> None:
    margins = [
        value / bound
        for lemma, _case, value, bound, _ok in rows
        if lemma == "integral_bound"
    ]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(margins, "o", ms=4)
    ax.axhline(1.0, color="crimson", ls="--", label="bound")
    ax.set_xlabel("integral-bound case index")
    ax.set_ylabel("lhs / rhs")
    ax.legend(fontsize=8)
    ax.set_title("integral bound margins")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
