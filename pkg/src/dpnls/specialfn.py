"""Real special functions: Gamma, Beta, Pochhammer and 2F1 at unit argument.

Gamma is delegated to :func:`math.gamma` (Lanczos-type, ~15 digits).  The
hypergeometric series at ``z = 1`` converges only algebraically, so the raw
partial sums are accelerated by Richardson extrapolation in the known decay
exponents before being cross-checked against Gauss's summation theorem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DivergenceError, DomainError, PoleError, SeriesError

DEFAULT_SERIES_TOL = 1e-12
MAX_TERMS = 10**6


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gamma(x: float) -> float:
    """Gamma function for real ``x``; raises :class:`PoleError` at 0, -1, -2, ..."""
    x = float(x)
    if _is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at x={x:g}")
    return math.gamma(x)


def rgamma(x: float) -> float:
    """Reciprocal Gamma, entire: returns exactly 0 at the poles of Gamma."""
    x = float(x)
    if _is_nonpositive_integer(x):
        return 0.0
    return 1.0 / math.gamma(x)


def beta(x: float, y: float) -> float:
    """Euler Beta function via Gamma(x) Gamma(y) / Gamma(x + y)."""
    return gamma(x) * gamma(y) * rgamma(x + y)


def pochhammer(a: float, n: int) -> float:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1), with (a)_0 = 1."""
    if int(n) != n or n < 0:
        raise DomainError(f"pochhammer needs a non-negative integer n, got {n!r}")
    return math.prod(a + k for k in range(int(n))) if n else 1.0


@dataclass(frozen=True)
class HypergeometricParams:
    """Parameters (a, b, c) of the Gauss series F(a, b; c; z)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if _is_nonpositive_integer(self.c):
            raise PoleError(f"c={self.c:g} is a non-positive integer; series terms undefined")

    @property
    def excess(self) -> float:
        """c - a - b; the series converges at z=1 iff this is positive."""
        return self.c - self.a - self.b

    def lowered(self) -> "HypergeometricParams":
        return HypergeometricParams(self.a - 1.0, self.b, self.c)


def gauss_summation(params: HypergeometricParams) -> float:
    """Closed form Gamma(c) Gamma(c-a-b) / (Gamma(c-a) Gamma(c-b))."""
    a, b, c = params.a, params.b, params.c
    if params.excess <= 0:
        raise DivergenceError(f"c-a-b={params.excess:g} <= 0: F(a,b;c;1) diverges")
    return gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b)


def _terms(a: float, b: float, c: float, n: int) -> np.ndarray:
    """First ``n`` series terms t_k = (a)_k (b)_k / ((c)_k k!)."""
    k = np.arange(n - 1, dtype=float)
    ratios = (k + a) * (k + b) / ((k + c) * (k + 1.0))
    return np.concatenate(([1.0], np.cumprod(ratios)))


def _terminating_sum(a: float, b: float, c: float) -> float | None:
    orders = [-x for x in (a, b) if _is_nonpositive_integer(x)]
    if not orders:
        return None
    n = int(min(orders)) + 1
    return math.fsum(_terms(a, b, c, n))


def _richardson(partial: np.ndarray, sizes: np.ndarray, s: float) -> float:
    """Extrapolate S_N = S + sum_i C_i N^-(s+i) to N -> infinity."""
    m = len(partial) - 1
    scaled = sizes / sizes[0]
    cols = [np.ones_like(scaled)] + [scaled ** -(s + i) for i in range(m)]
    mat = np.column_stack(cols)
    return float(np.linalg.solve(mat, partial)[0])


def _series_at_one(a: float, b: float, c: float, tol: float) -> float:
    s = c - a - b
    direct_cap = 4096
    terms = _terms(a, b, c, direct_cap)
    total = 0.0
    small = 0
    for n, t in enumerate(terms):
        total += t
        if abs(t) < tol * abs(total):
            small += 1
            # t_n ~ C n^{-s-1}, so the remaining tail is about t_n n / s
            if small >= 3 and abs(t) * (n + 1) / s < tol * abs(total):
                return math.fsum(terms[: n + 1])
        else:
            small = 0

    # Algebraic tail: extrapolate partial sums at geometrically growing sizes.
    order = 8
    n0 = 256
    previous = None
    while True:
        sizes = n0 * 2 ** np.arange(order + 1)
        if sizes[-1] > MAX_TERMS:
            raise SeriesError(
                f"F({a:g},{b:g};{c:g};1) not converged to tol={tol:g} within {MAX_TERMS} terms"
            )
        terms = _terms(a, b, c, int(sizes[-1]))
        partial = np.array([np.sum(terms[:n]) for n in sizes])
        fine = _richardson(partial, sizes.astype(float), s)
        coarse = _richardson(partial[1:], sizes[1:].astype(float), s)
        scale = max(abs(fine), 1.0)
        if abs(fine - coarse) <= tol * scale:
            return fine
        if previous is not None and abs(fine - previous) <= tol * scale:
            return fine
        previous = fine
        n0 *= 2


def gauss_2f1_at_one(params: HypergeometricParams, tol: float = DEFAULT_SERIES_TOL,
                     check: bool = True) -> float:
    """Sum F(a, b; c; 1) from its series.

    The result is compared with :func:`gauss_summation`; a disagreement larger
    than ``10 * tol`` (relative, floor 1) raises :class:`ConsistencyError`.
    """
    a, b, c = params.a, params.b, params.c
    if params.excess <= 0:
        raise DivergenceError(f"c-a-b={params.excess:g} <= 0: F(a,b;c;1) diverges")
    value = _terminating_sum(a, b, c)
    if value is None:
        value = _series_at_one(a, b, c, tol)
    if check:
        closed = gauss_summation(params)
        if abs(value - closed) > 10 * tol * max(1.0, abs(closed)):
            raise ConsistencyError(
                f"series {value!r} vs Gauss summation {closed!r} for {params}"
            )
    return value


def recursion_residual(params: HypergeometricParams, tol: float = 1e-14) -> float:
    """(a+b-c) F(a,b;c;1) + (c-a) F(a-1,b;c;1), which vanishes identically."""
    a, b, c = params.a, params.b, params.c
    upper = gauss_2f1_at_one(params, tol)
    lower = gauss_2f1_at_one(params.lowered(), tol)
    return (a + b - c) * upper + (c - a) * lower


def limit_parameters(alpha: float, beta_: float) -> HypergeometricParams:
    """Series parameters (-gamma, -1/2, delta - 1/2) arising from the limit integral.

    gamma = alpha / (beta - alpha) and delta = (2 - 3 alpha) / (2 (beta - alpha)).
    """
    gam = alpha / (beta_ - alpha)
    delta = (2.0 - 3.0 * alpha) / (2.0 * (beta_ - alpha))
    return HypergeometricParams(-gam, -0.5, delta - 0.5)
