"""Numerical verification of the singular-integral bound

    int_0^a u^(-q) sqrt(-log u) du <= c_{q,d} a^(1-q) sqrt(-log a)

with the explicit constant c_{q,d} = 1/(1-q) + 1/(2 (1-q)^2 |log d|) for
q < 1 and 0 < a < d < 1.  The substitution u = v^(1/(1-q)) removes the
power singularity before quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError


@dataclass(frozen=True)
class IntegralBoundCase:
    """One verified instance of the integral bound."""

    q: float
    delta: float
    a: float
    lhs: float
    rhs: float
    c_q_delta: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def bound_constant(q: float, delta: float) -> float:
    """c_{q,delta} = 1/(1-q) + 1/(2 (1-q)^2 |log delta|)."""
    return 1.0 / (1.0 - q) + 1.0 / (2.0 * (1.0 - q) ** 2 * abs(np.log(delta)))


def singular_integral(q: float, a: float, epsabs: float = 1e-10) -> float:
    """int_0^a u^(-q) sqrt(-log u) du, singularity removed by substitution.

    With u = v^(1/(1-q)) the integrand collapses to
    (1-q)^(-3/2) sqrt(-log v) on (0, a^(1-q)].
    """
    if not q < 1.0:
        raise DomainError("q must be < 1")
    if not 0.0 < a < 1.0:
        raise DomainError("a must lie in (0, 1)")
    upper = a ** (1.0 - q)
    value, abserr = integrate.quad(
        lambda v: np.sqrt(-np.log(v)), 0.0, upper, epsabs=epsabs, epsrel=0.0, limit=200
    )
    if abserr > 10.0 * epsabs:
        raise QuadratureError(f"quadrature error {abserr:g} exceeds budget {10 * epsabs:g}")
    return value / (1.0 - q) ** 1.5


def integral_bound_check(q: float, delta: float, a: float) -> IntegralBoundCase:
    """Evaluate both sides of the bound for one (q, delta, a)."""
    if not q < 1.0:
        raise DomainError("q must be < 1")
    if not 0.0 < a < delta < 1.0:
        raise DomainError("need 0 < a < delta < 1")
    c = bound_constant(q, delta)
    lhs = singular_integral(q, a)
    rhs = c * a ** (1.0 - q) * np.sqrt(-np.log(a))
    return IntegralBoundCase(q=q, delta=delta, a=a, lhs=lhs, rhs=rhs, c_q_delta=c)


def default_case_grid() -> list[tuple[float, float, float]]:
    """The 36-case verification grid: q in {0.1..0.9}, delta = 0.5,
    a in {0.4, 0.2, 0.1, 0.01}."""
    qs = [round(0.1 * k, 1) for k in range(1, 10)]
    avals = [0.4, 0.2, 0.1, 0.01]
    return [(q, 0.5, a) for q in qs for a in avals]
