"""Scalar model layer for i u_t + u_xx - |u|^{p-1} u + |u|^{q-1} u = 0.

With s standing for the squared amplitude, the profile equation has the
first integral (phi')^2 = W(phi^2; omega), where

    L(s) = d1 s^alpha + d2 s^beta,   W(s; omega) = omega s - L(s) s,
    K(s) = c1 s^alpha + c2 s^beta,

and the peak h(omega) solves L(h) = omega.  All evaluators accept scalars or
numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import ConsistencyError, DomainError, RootFindingError

THRESHOLD_ATOL = 1e-12
ROOT_XTOL = 1e-14
ROOT_RTOL = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class CoefficientSet:
    alpha: float
    beta: float
    c1: float
    c2: float
    d1: float
    d2: float
    r1: float
    r2: float


@dataclass(frozen=True)
class Nonlinearity:
    """Exponent pair (p, q) with 1 < p < q."""

    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (np.isfinite(p) and np.isfinite(q)):
            raise DomainError(f"exponents must be finite, got p={p}, q={q}")
        if p <= 1.0:
            raise DomainError(f"need p > 1, got p={p}")
        if q <= p:
            raise DomainError(f"need q > p, got p={p}, q={q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def subcritical(self) -> bool:
        """True when q < 5, the regime in which stability can change with omega."""
        return self.q < 5.0 - THRESHOLD_ATOL

    @cached_property
    def coeffs(self) -> CoefficientSet:
        return coefficients(self)

    def require_subcritical(self, what: str) -> None:
        if not self.subcritical:
            raise DomainError(f"{what} requires q < 5, got q={self.q}")


def coefficients(nl: Nonlinearity) -> CoefficientSet:
    p, q = nl.p, nl.q
    c1 = -(5.0 - p) / (p + 1.0)
    d1 = -2.0 / (p + 1.0)
    return CoefficientSet(
        alpha=(p - 1.0) / 2.0,
        beta=(q - 1.0) / 2.0,
        c1=c1,
        c2=(5.0 - q) / (q + 1.0),
        d1=d1,
        d2=2.0 / (q + 1.0),
        r1=c1 + d1 * (q - p),
        r2=c1 + 2.0 * d1 * (q - p),
    )


def _positive(s):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("model functions are defined for s > 0")
    return s


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def eval_K(nl: Nonlinearity, s):
    c = nl.coeffs
    s = _positive(s)
    return _out(c.c1 * s**c.alpha + c.c2 * s**c.beta)


def eval_L(nl: Nonlinearity, s):
    c = nl.coeffs
    s = _positive(s)
    return _out(c.d1 * s**c.alpha + c.d2 * s**c.beta)


def eval_Lprime(nl: Nonlinearity, s):
    c = nl.coeffs
    s = _positive(s)
    return _out(c.alpha * c.d1 * s ** (c.alpha - 1) + c.beta * c.d2 * s ** (c.beta - 1))


def eval_W(nl: Nonlinearity, s, omega: float):
    s = _positive(s)
    return _out(omega * s - eval_L(nl, s) * s)


def eval_Wprime(nl: Nonlinearity, s, omega: float):
    """d/ds W(s; omega) = omega - L(s) - s L'(s)."""
    s = _positive(s)
    return _out(omega - eval_L(nl, s) - s * eval_Lprime(nl, s))


def eval_K1(nl: Nonlinearity, s):
    # c2 enters to the first power; this is what differentiating the scaled
    # F0 integrand produces (see tests/test_stability.py::TestDerivativeIdentities).
    c = nl.coeffs
    s = _positive(s)
    return _out(-c.r1 * s**c.alpha - c.c2 * s**c.beta)


def eval_K2(nl: Nonlinearity, s):
    c = nl.coeffs
    s = _positive(s)
    return _out(c.r2 * s**c.alpha + c.c2 * s**c.beta)


def one_minus_pow(s, ds, e):
    """1 - s^e computed from s and its exact complement ds = 1 - s."""
    s = np.asarray(s, dtype=float)
    ds = np.asarray(ds, dtype=float)
    near = ds < 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        via_complement = -np.expm1(e * np.log1p(-np.where(near, ds, 0.0)))
        via_log = -np.expm1(e * np.log(np.where(near, 1.0, s)))
    return np.where(near, via_complement, via_log)


def pow_gap(h: float, s, dr, e: float):
    """h^e - s^e for 0 < s < h, given dr = h - s exactly."""
    s = np.asarray(s, dtype=float)
    dr = np.asarray(dr, dtype=float)
    return h**e * one_minus_pow(s / h, dr / h, e)


def h0(nl: Nonlinearity) -> float:
    """Positive zero of L: h0^(beta-alpha) = (q+1)/(p+1)."""
    c = nl.coeffs
    return ((nl.q + 1.0) / (nl.p + 1.0)) ** (1.0 / (c.beta - c.alpha))


@dataclass(frozen=True)
class CriticalPoints:
    h0: float
    s0: float
    s1: float
    s2: float
    t0: float
    t1: float
    t2: float
    omega0: float


def critical_points(nl: Nonlinearity) -> CriticalPoints:
    """Zeros s_j and extremal points t_j of K_0 = K, K_1, K_2, plus omega0 = L(s0)."""
    nl.require_subcritical("critical_points")
    c = nl.coeffs
    gap = 1.0 / (c.beta - c.alpha)
    ratio = c.alpha / c.beta
    s = [(-r / c.c2) ** gap for r in (c.c1, c.r1, c.r2)]
    t = [(-r * ratio / c.c2) ** gap for r in (c.c1, c.r1, c.r2)]
    return CriticalPoints(
        h0=h0(nl), s0=s[0], s1=s[1], s2=s[2], t0=t[0], t1=t[1], t2=t[2],
        omega0=eval_L(nl, s[0]),
    )


def h_of_omega(nl: Nonlinearity, omega: float) -> float:
    """Squared peak amplitude: the unique h >= h0 with L(h) = omega.

    Works for any 1 < p < q; L increases on [h0, inf) because its critical
    point sits at (alpha/beta)^(1/(beta-alpha)) h0 < h0.
    """
    omega = float(omega)
    if not omega >= 0:
        raise DomainError(f"need omega >= 0, got {omega}")
    lo = h0(nl)
    if omega == 0.0:
        return lo
    hi = 2.0 * lo
    for _ in range(200):
        if eval_L(nl, hi) > omega:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RootFindingError(f"could not bracket h(omega) for omega={omega}")
    return brentq(lambda h: eval_L(nl, h) - omega, lo, hi, xtol=ROOT_XTOL * lo,
                  rtol=ROOT_RTOL, maxiter=200)


@dataclass(frozen=True)
class OrderingFlags:
    h0_lt_t0: bool
    h0_lt_t1: bool
    s0_le_t1: bool
    s0_le_t2: bool

    def as_tuple(self):
        return (self.h0_lt_t0, self.h0_lt_t1, self.s0_le_t1, self.s0_le_t2)


def _lt(x, y, rtol=1e-12):
    return x < y * (1.0 - rtol)


def _le(x, y, rtol=1e-12):
    return x <= y * (1.0 + rtol)


def ordering_flags(nl: Nonlinearity) -> OrderingFlags:
    """Orderings of h0, s0 against t0, t1, t2, computed twice.

    Once by comparing the points and once through the equivalent exponent
    inequalities p+q > 6, q > 8-3p, p >= 7/3 and p >= 9/5.  Disagreement means
    a coefficient is wrong and raises :class:`ConsistencyError`.
    """
    cp = critical_points(nl)
    p, q = nl.p, nl.q
    tol = THRESHOLD_ATOL
    by_points = OrderingFlags(
        _lt(cp.h0, cp.t0), _lt(cp.h0, cp.t1), _le(cp.s0, cp.t1), _le(cp.s0, cp.t2)
    )
    by_exponents = OrderingFlags(
        p + q - 6.0 > tol,
        q - (8.0 - 3.0 * p) > tol,
        p - 7.0 / 3.0 >= -tol,
        p - 9.0 / 5.0 >= -tol,
    )
    if by_points != by_exponents:
        raise ConsistencyError(
            f"critical-point orderings disagree for p={p}, q={q}: "
            f"points {by_points.as_tuple()} vs exponents {by_exponents.as_tuple()}"
        )
    return by_points
