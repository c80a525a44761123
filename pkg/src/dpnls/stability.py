"""Sign analysis of M'(omega) and the resulting stability classification.

Two routes to M'(omega) are kept separate on purpose:

* :func:`dmass` integrates (K(h)-K(s)) / (L(h)-L(s))^(3/2) over s in (0, h);
* :func:`f_family` integrates the rescaled unit-interval forms F0, F1, F2,
  whose signs and derivatives carry the monotonicity structure in h.

sgn M'(omega) = sgn F0(h(omega)) ties the two together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import model
from .errors import ConsistencyError, DivergenceError, DomainError, RootFindingError
from .model import Nonlinearity, THRESHOLD_ATOL
from .quadrature import DEFAULT_TOL, SingularityHint, detect_divergence, integrate
from .specialfn import (
    HypergeometricParams,
    gamma,
    gauss_2f1_at_one,
    limit_parameters,
    rgamma,
)

SEVEN_THIRDS = 7.0 / 3.0
NINE_FIFTHS = 9.0 / 5.0
BRACKET_INSET = 1e-6
SCAN_POINTS = 24

REGIMES = (
    "q_ge_5_unstable_all",
    "sharp_threshold",
    "stable_all",
    "unstable_small_with_gap",
    "stable_small_with_gap",
)


def _ge(x: float, y: float) -> bool:
    return x - y >= -THRESHOLD_ATOL


def _gt(x: float, y: float) -> bool:
    return x - y > THRESHOLD_ATOL


def _sign(x: float) -> int:
    return int(np.sign(x))


# --------------------------------------------------------------------------
# M'(omega) on the original variable
# --------------------------------------------------------------------------

def _mass_derivative_integrand(nl: Nonlinearity, h: float, omega: float):
    c = nl.coeffs

    def f(s, dl, dr):
        numer = c.c1 * model.pow_gap(h, s, dr, c.alpha) + c.c2 * model.pow_gap(h, s, dr, c.beta)
        near_top = dr < 0.5 * h
        s_safe = np.where(near_top, 0.5 * h, dl)
        low = omega - s_safe**c.alpha * (c.d1 + c.d2 * s_safe ** (c.beta - c.alpha))
        high = c.d1 * model.pow_gap(h, s, dr, c.alpha) + c.d2 * model.pow_gap(h, s, dr, c.beta)
        gap = np.where(near_top, high, low)
        return numer / gap / np.sqrt(gap)
    return f


def dmass(nl: Nonlinearity, omega: float, tol: float = DEFAULT_TOL) -> float:
    """M'(omega) = -(1 / (4 W'(h))) * int_0^h (K(h)-K(s)) / (L(h)-L(s))^(3/2) ds.

    Valid for every omega > 0 and 1 < p < q (including q >= 5).
    """
    omega = float(omega)
    if not omega > 0:
        raise DomainError(f"dmass needs omega > 0, got {omega}")
    h = model.h_of_omega(nl, omega)
    hint = SingularityHint(right_exponent=0.5)
    res = integrate(_mass_derivative_integrand(nl, h, omega), 0.0, h, hint, tol,
                    with_distances=True)
    return -res.value / (4.0 * model.eval_Wprime(nl, h, omega))


# --------------------------------------------------------------------------
# Rescaled F-hierarchy
# --------------------------------------------------------------------------

def _f_integrand(nl: Nonlinearity, h: float, j: int):
    c = nl.coeffs
    big_h = h ** (c.beta - c.alpha)
    delta_h = big_h - (-c.d1 / c.d2)
    if delta_h <= 0:
        raise DomainError(f"F_j(h) needs h > h0, got h={h}")

    def f(s, dl, dr):
        a = model.one_minus_pow(s, dr, c.alpha)
        b = model.one_minus_pow(s, dr, c.beta)
        spread = model.one_minus_pow(s, dr, c.beta - c.alpha)
        # d1 a + d2 H b, rearranged so both terms are non-negative
        denom = c.d2 * delta_h * b - c.d1 * dl**c.alpha * spread
        # ratios first: every piece vanishes linearly at s = 1 and powers underflow
        root = np.sqrt(denom)
        if j == 0:
            return (c.c1 * a + c.c2 * big_h * b) / denom / root
        ratio = b / denom
        if j == 1:
            return ratio * (-c.r1 * a - c.c2 * big_h * b) / denom / root
        return ratio * ratio * (c.r2 * a + c.c2 * big_h * b) / denom / root
    return f


def f_family(nl: Nonlinearity, h: float, j: int, tol: float = DEFAULT_TOL) -> float:
    """F_j(h) for j in {0, 1, 2}, h > h0, q < 5.

    F0' = (d2/2)(beta-alpha) h^(beta-alpha-1) F1 and
    F1' = (3 d2/2)(beta-alpha) h^(beta-alpha-1) F2.
    """
    nl.require_subcritical("f_family")
    if j not in (0, 1, 2):
        raise DomainError(f"j must be 0, 1 or 2, got {j}")
    res = integrate(_f_integrand(nl, float(h), j), 0.0, 1.0,
                    SingularityHint(right_exponent=0.5), tol, with_distances=True)
    return res.value


def derivative_factor(nl: Nonlinearity, h: float, j: int) -> float:
    """Positive factor linking F_j' to F_{j+1}."""
    c = nl.coeffs
    base = 0.5 * c.d2 * (c.beta - c.alpha) * h ** (c.beta - c.alpha - 1.0)
    return base if j == 0 else 3.0 * base


# --------------------------------------------------------------------------
# Zero-frequency limit
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroFrequencyLimit:
    kind: str  # "finite" or "negative_infinity"
    value: float
    sign: int
    c_pq: Optional[float] = None


def limit_constant(nl: Nonlinearity) -> float:
    """c_pq = sqrt(2 pi) ((q+1)/(p+1))^((7-3p)/(2(q-p))) (p+1)^(3/2) / (4 (q-p)).

    This is what -h0^(1-alpha/2) / (4 W'(h0)) * sqrt((p+1)/2) * 2 sqrt(pi)
    reduces to, using W'(h0) = -h0^alpha (q-p)/(p+1).  The factor 1/4 is
    confirmed by :func:`limit_from_integral` and by small-omega values of
    :func:`dmass`.
    """
    p, q = nl.p, nl.q
    return (0.25 * math.sqrt(2.0 * math.pi) * ((q + 1.0) / (p + 1.0)) ** ((7.0 - 3.0 * p) / (2.0 * (q - p)))
            * (p + 1.0) ** 1.5 / (q - p))


def zero_frequency_limit(nl: Nonlinearity) -> ZeroFrequencyLimit:
    """lim_{omega -> 0} M'(omega) in closed form."""
    nl.require_subcritical("zero_frequency_limit")
    p, q = nl.p, nl.q
    if _ge(p, SEVEN_THIRDS):
        return ZeroFrequencyLimit(kind="negative_infinity", value=-math.inf, sign=-1)
    c_pq = limit_constant(nl)
    twice_gap = 2.0 * (q - p)
    if abs(2.0 * p + q - 7.0) <= THRESHOLD_ATOL:
        value = 0.0  # 1/Gamma at its pole
    else:
        value = c_pq * gamma((7.0 - 3.0 * p) / twice_gap) * rgamma((7.0 - 2.0 * p - q) / twice_gap)
    return ZeroFrequencyLimit(kind="finite", value=value, sign=_sign(value), c_pq=c_pq)


def _h_limit_integrand(nl: Nonlinearity):
    c = nl.coeffs
    al, be = c.alpha, c.beta

    def f(s, dl, dr):
        numer = (-(2.0 - al) * model.one_minus_pow(s, dr, al)
                 + (2.0 - be) * model.one_minus_pow(s, dr, be))
        denom = dl**al * model.one_minus_pow(s, dr, be - al)
        return numer / denom / np.sqrt(denom)
    return f


def h_limit_closed_form(nl: Nonlinearity) -> float:
    """2 sqrt(pi) Gamma(delta) / Gamma(delta - 1/2), delta = (2-3a)/(2(b-a))."""
    c = nl.coeffs
    delta = (2.0 - 3.0 * c.alpha) / (2.0 * (c.beta - c.alpha))
    return 2.0 * math.sqrt(math.pi) * gamma(delta) * rgamma(delta - 0.5)


def h_limit_series(nl: Nonlinearity, series_tol: float = 1e-14) -> float:
    """The limit integral rebuilt from its 2F1 expansion (no recursion shortcut)."""
    c = nl.coeffs
    al, be = c.alpha, c.beta
    delta = (2.0 - 3.0 * al) / (2.0 * (be - al))
    if rgamma(delta - 0.5) == 0.0:
        return 0.0  # series parameter c hits a pole; the prefactor vanishes
    upper = limit_parameters(al, be)
    lower = upper.lowered()
    prefactor = gamma(delta) * gamma(-0.5) * rgamma(delta - 0.5)
    bracket = ((2.0 - al) * gauss_2f1_at_one(upper, series_tol)
               - (2.0 - be) * gauss_2f1_at_one(lower, series_tol)
               - (2.0 - al) + (2.0 - be))
    return prefactor * bracket / (be - al)


def limit_integral_diverges(nl: Nonlinearity) -> bool:
    """Numerical divergence test on the limit integral (exponent 3 alpha / 2 >= 1)."""
    return detect_divergence(_h_limit_integrand(nl), 0.0, 1.0, with_distances=True)


@dataclass(frozen=True)
class HLimitResult:
    quadrature: float
    error_estimate: float
    closed_form: float


def h_limit_integral(nl: Nonlinearity, tol: float = DEFAULT_TOL) -> HLimitResult:
    """Quadrature of the limit integral next to its Gamma-ratio closed form.

    Raises :class:`DivergenceError` when p >= 7/3, after confirming the
    divergence numerically.
    """
    nl.require_subcritical("h_limit_integral")
    c = nl.coeffs
    if _ge(nl.p, SEVEN_THIRDS):
        flagged = limit_integral_diverges(nl)
        raise DivergenceError(
            f"limit integral diverges for p={nl.p} >= 7/3 (numerical test flagged={flagged})"
        )
    # s = u^m softens the s^(-3 alpha/2) blow-up to exponent <= 1/2, which
    # keeps the double-exponential sum converging as p approaches 7/3
    expo = 1.5 * c.alpha
    m = max(1.0, 0.5 / (1.0 - expo))
    al, be = c.alpha, c.beta
    soft = 1.0 - m * (1.0 - expo)

    def g(u, dl, dr):
        s = dl**m  # may underflow to 0; only enters through 1 - s^e below
        ds = model.one_minus_pow(u, dr, m)
        numer = (-(2.0 - al) * model.one_minus_pow(s, ds, al)
                 + (2.0 - be) * model.one_minus_pow(s, ds, be))
        spread = model.one_minus_pow(s, ds, be - al)
        return m * dl**-soft * (numer / spread) / np.sqrt(spread)
    hint = SingularityHint(left_exponent=soft, right_exponent=0.5)
    res = integrate(g, 0.0, 1.0, hint, tol, with_distances=True)
    return HLimitResult(res.value, res.error_estimate, h_limit_closed_form(nl))


def limit_from_integral(nl: Nonlinearity, h_value: float) -> float:
    """Assemble lim M'(omega) from the limit integral value.

    lim M' = -h0^(1-alpha/2) / (4 W'(h0)) * sqrt((p+1)/2) * H.
    """
    c = nl.coeffs
    h0 = model.h0(nl)
    w_prime = model.eval_Wprime(nl, h0, 0.0)
    return -(h0 ** (1.0 - 0.5 * c.alpha)) / (4.0 * w_prime) * math.sqrt((nl.p + 1.0) / 2.0) * h_value


# --------------------------------------------------------------------------
# Sharp threshold
# --------------------------------------------------------------------------

def admits_sharp_threshold(nl: Nonlinearity) -> bool:
    if not nl.subcritical:
        return False
    p, q = nl.p, nl.q
    if _ge(p, SEVEN_THIRDS):
        return True
    return _ge(p, NINE_FIFTHS) and _gt(2.0 * p + q, 7.0)


@dataclass(frozen=True)
class Threshold:
    z_star: float
    omega_star: float
    omega0: float
    h0: float
    s0: float
    below_negative: bool
    above_positive: bool
    audit_points: int
    mass_second_derivative: float


def threshold(nl: Nonlinearity, tol: float = DEFAULT_TOL, root_tol: float = 1e-12,
              audit_points: int = 50) -> Optional[Threshold]:
    """Locate z_* (zero of F0 in (h0, s0)) and omega_* = L(z_*).

    Returns None when the exponents do not admit a sharp threshold.  The
    sign pattern F0 < 0 below z_* and F0 > 0 above is re-checked on
    ``audit_points`` points on each side.
    """
    if not admits_sharp_threshold(nl):
        return None
    cp = model.critical_points(nl)
    lo = cp.h0 + BRACKET_INSET * (cp.s0 - cp.h0)
    hi = cp.s0
    f_lo = f_family(nl, lo, 0, tol)
    f_hi = f_family(nl, hi, 0, tol)
    if not (f_lo < 0 < f_hi):
        raise RootFindingError(
            f"F0 has no sign change on [{lo:.6g}, {hi:.6g}] (F0={f_lo:.3g}, {f_hi:.3g})"
        )
    z_star = brentq(lambda h: f_family(nl, h, 0, tol), lo, hi, xtol=root_tol * cp.s0,
                    rtol=4 * np.finfo(float).eps, maxiter=200)
    omega_star = model.eval_L(nl, z_star)

    margin = 1e-6 * (z_star - cp.h0)
    below = np.linspace(lo, z_star - margin, audit_points)
    above = np.geomspace(z_star + margin, 3.0 * cp.s0, audit_points)
    below_negative = all(f_family(nl, h, 0, tol) < 0 for h in below)
    above_positive = all(f_family(nl, h, 0, tol) > 0 for h in above)

    delta = 1e-4 * omega_star
    mpp = (dmass(nl, omega_star + delta, tol) - dmass(nl, omega_star - delta, tol)) / (2 * delta)
    return Threshold(z_star, omega_star, cp.omega0, cp.h0, cp.s0, below_negative,
                     above_positive, audit_points, mpp)


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoryInterval:
    lower: float
    upper: float
    verdict: str  # stable | unstable | unstable_incl_endpoint | theory_silent
    upper_closed: bool = False
    lower_closed: bool = False

    def contains(self, omega: float) -> bool:
        if omega < self.lower or (omega == self.lower and not self.lower_closed):
            return False
        return omega <= self.upper if self.upper_closed else omega < self.upper


@dataclass(frozen=True)
class StabilityReport:
    p: float
    q: float
    regime: str
    omega_star: Optional[float]
    omega0: Optional[float]
    theory_intervals: list
    numeric_sign_scan: list
    mu_estimate: Optional[float] = None
    mass_second_derivative_at_star: Optional[float] = None
    notes: list = field(default_factory=list)


def select_regime(nl: Nonlinearity) -> str:
    p, q = nl.p, nl.q
    if not nl.subcritical:
        return "q_ge_5_unstable_all"
    if admits_sharp_threshold(nl):
        return "sharp_threshold"
    if _ge(p, NINE_FIFTHS):
        return "stable_all"
    if _gt(2.0 * p + q, 7.0):
        return "unstable_small_with_gap"
    return "stable_small_with_gap"


def scan_grid(nl: Nonlinearity, points: int = SCAN_POINTS) -> np.ndarray:
    if nl.subcritical:
        omega0 = model.critical_points(nl).omega0
        return np.geomspace(1e-3 * omega0, 10.0 * omega0, points)
    return np.geomspace(1e-3, 10.0, points)


def _first_sign_change(nl, omegas, signs, tol):
    for i in range(1, len(signs)):
        if signs[i] != signs[0]:
            lo, hi = omegas[i - 1], omegas[i]
            return brentq(lambda w: dmass(nl, w, tol), lo, hi, xtol=1e-12 * hi)
    return None


def classify(nl: Nonlinearity, tol: float = DEFAULT_TOL, scan_points: int = SCAN_POINTS,
             root_tol: float = 1e-12) -> StabilityReport:
    """Stability verdicts over omega > 0 for the exponent pair ``nl``."""
    regime = select_regime(nl)
    omegas = scan_grid(nl, scan_points)
    values = [dmass(nl, w, tol) for w in omegas]
    scan = [(float(w), _sign(v)) for w, v in zip(omegas, values)]
    signs = [s for _, s in scan]
    inf = math.inf
    notes = []
    omega_star = mu = mpp = None
    omega0 = model.critical_points(nl).omega0 if nl.subcritical else None

    if regime == "q_ge_5_unstable_all":
        intervals = [TheoryInterval(0.0, inf, "unstable")]
    elif regime == "stable_all":
        intervals = [TheoryInterval(0.0, inf, "stable")]
    elif regime == "sharp_threshold":
        th = threshold(nl, tol, root_tol)
        omega_star = th.omega_star
        mpp = th.mass_second_derivative
        intervals = [
            TheoryInterval(0.0, omega_star, "unstable_incl_endpoint", upper_closed=True),
            TheoryInterval(omega_star, inf, "stable"),
        ]
        notes.append("endpoint omega_* reported unstable without re-deriving the degenerate case")
    else:
        small = "unstable" if regime == "unstable_small_with_gap" else "stable"
        mu = _first_sign_change(nl, omegas, signs, tol)
        if mu is None or mu > omega0:
            mu = omega0
        intervals = [
            TheoryInterval(0.0, mu, small),
            TheoryInterval(mu, omega0, "theory_silent", upper_closed=True, lower_closed=True),
            TheoryInterval(omega0, inf, "stable"),
        ]
        notes.append("mu_estimate is a numerical estimate from the sign scan, not a proven bound")

    contradictions = []
    for w, s in scan:
        for iv in intervals:
            if iv.contains(w):
                expected = {"stable": 1, "unstable": -1, "unstable_incl_endpoint": -1}.get(iv.verdict)
                if expected is not None and s != expected:
                    contradictions.append((w, s, iv.verdict))
    if contradictions:
        raise ConsistencyError(f"sign scan contradicts theory intervals: {contradictions}")

    return StabilityReport(
        p=nl.p, q=nl.q, regime=regime, omega_star=omega_star, omega0=omega0,
        theory_intervals=intervals, numeric_sign_scan=scan, mu_estimate=mu,
        mass_second_derivative_at_star=mpp, notes=notes,
    )


# --------------------------------------------------------------------------
# Sign-pattern audit on (h0, 3 s0)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AuditItem:
    passed: bool
    detail: str
    witnesses: list


@dataclass(frozen=True)
class SignPatternAudit:
    p: float
    q: float
    near_sign: AuditItem
    steep_start: AuditItem
    single_turn: AuditItem
    stays_positive: AuditItem

    @property
    def passed(self) -> bool:
        return all(i.passed for i in (self.near_sign, self.steep_start, self.single_turn,
                                      self.stays_positive))


def sign_pattern_audit(nl: Nonlinearity, points: int = 400, tol: float = DEFAULT_TOL) -> SignPatternAudit:
    """Check the structural sign facts of F0 and F1 on a dense h-grid.

    Items: sign of F0 just above h0 against the 2p+q trichotomy; growth of
    F0 difference quotients towards h0; at most one + to - sign change of
    F1 (hence of F0') on (h0, s0); and F0 staying positive once positive.
    Requires q < 5 and 9/5 <= p < 7/3.
    """
    nl.require_subcritical("sign_pattern_audit")
    p, q = nl.p, nl.q
    if not (_ge(p, NINE_FIFTHS) and not _ge(p, SEVEN_THIRDS)):
        raise DomainError(f"sign_pattern_audit needs 9/5 <= p < 7/3, got p={p}")
    cp = model.critical_points(nl)
    span = cp.s0 - cp.h0

    h_near = cp.h0 + BRACKET_INSET * span
    f_near = f_family(nl, h_near, 0, tol)
    expected = -1 if _gt(2 * p + q, 7.0) else 1
    near_sign = AuditItem(_sign(f_near) == expected,
                          f"sgn F0(h0+) = {_sign(f_near)}, expected {expected}",
                          [(h_near, f_near)])

    offsets = span * 10.0 ** -np.arange(1, 7, dtype=float)
    quotients = []
    for eps in offsets:
        a, b = cp.h0 + eps / 10.0, cp.h0 + eps
        quotients.append((a, (f_family(nl, b, 0, tol) - f_family(nl, a, 0, tol)) / (b - a)))
    slopes = [s for _, s in quotients]
    steep_start = AuditItem(bool(all(y > x for x, y in zip(slopes, slopes[1:])) and slopes[-1] > 0),
                            "F0 difference quotients increase towards h0", quotients)

    frac = np.geomspace(1e-5, 1.0, points)
    grid = cp.h0 + frac * (3.0 * cp.s0 - cp.h0)
    inside = grid[grid < cp.s0]
    f1_signs = [_sign(f_family(nl, h, 1, tol)) for h in inside]
    changes = [(float(inside[i]), f1_signs[i - 1], f1_signs[i])
               for i in range(1, len(f1_signs)) if f1_signs[i] != f1_signs[i - 1]]
    single_turn = AuditItem(len(changes) <= 1 and all(a > 0 > b for _, a, b in changes),
                            f"{len(changes)} sign change(s) of F1 on (h0, s0)", changes)

    f0 = [f_family(nl, h, 0, tol) for h in grid]
    first_pos = next((i for i, v in enumerate(f0) if v > 0 and grid[i] < cp.s0), None)
    if first_pos is None:
        stays = AuditItem(True, "F0 never positive on (h0, s0) grid; vacuous", [])
    else:
        bad = [(float(grid[i]), f0[i]) for i in range(first_pos, len(grid)) if f0[i] <= 0]
        stays = AuditItem(not bad, f"F0 > 0 from h = {grid[first_pos]:.6g} onward", bad or
                          [(float(grid[first_pos]), f0[first_pos])])
    return SignPatternAudit(p, q, near_sign, steep_start, single_turn, stays)
