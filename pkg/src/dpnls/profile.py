"""Standing-wave profile phi_omega and its integral functionals.

The profile solves -phi'' + omega phi + phi^p - phi^q = 0 with phi'(0) = 0 and
phi -> 0.  Integrating once gives (phi')^2 = W(phi^2; omega), so with
s = phi^2 the position is

    x(s) = int_s^h du / (2 u sqrt(omega - L(u))).

The inversion works in two charts so that no offset from the peak is lost to
rounding: t = sqrt(h - u) on [h/2, h] (where the integrand is smooth in t)
and v = log u below h/2.  Samples on a uniform x-grid come from Newton
iterations on the exact x(t) / x(v) maps.

Functionals are integrals over s in (0, h):

    M         = 1/2 int (omega - L)^(-1/2) ds
    |phi'|^2  = int sqrt(omega - L) ds
    |phi|_{r+1}^{r+1} = int s^((r-1)/2) (omega - L)^(-1/2) ds
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from . import model
from .errors import ConsistencyError, DomainError, QuadratureError
from .model import Nonlinearity
from .quadrature import DEFAULT_TOL, SingularityHint, integrate

TAIL_FRACTION = 1e-8
DEFAULT_SAMPLES = 2049
_GL_LOW, _GL_HIGH = (np.polynomial.legendre.leggauss(n) for n in (20, 28))
_T_ANCHORS = 64
_V_STEP = 0.25
_NEWTON_STEPS = 8


def _check_frequency(nl: Nonlinearity, omega: float) -> float:
    omega = float(omega)
    if not omega >= 0 or not math.isfinite(omega):
        raise DomainError(f"need omega >= 0, got {omega}")
    if omega == 0.0:
        nl.require_subcritical("the zero-frequency profile")
    return omega


def peak_squared(nl: Nonlinearity, omega: float) -> float:
    """h(omega); at omega = 0 the closed form h0 is used."""
    omega = _check_frequency(nl, omega)
    return model.h0(nl) if omega == 0.0 else model.h_of_omega(nl, omega)


def default_x_max(omega: float) -> float:
    """Starting guess before the tail check: max(20, 12/sqrt(omega)), or 60 at omega = 0."""
    return 60.0 if omega == 0.0 else max(20.0, 12.0 / math.sqrt(omega))


def _gap(nl: Nonlinearity, h: float, omega: float, s, dr):
    """omega - L(s) for 0 < s < h, using dr = h - s near the peak."""
    c = nl.coeffs
    s = np.asarray(s, dtype=float)
    dr = np.asarray(dr, dtype=float)
    near_top = dr < 0.5 * h
    s_low = np.where(near_top, 0.5 * h, s)
    low = omega - s_low**c.alpha * (c.d1 + c.d2 * s_low ** (c.beta - c.alpha))
    high = c.d1 * model.pow_gap(h, s, dr, c.alpha) + c.d2 * model.pow_gap(h, s, dr, c.beta)
    return np.where(near_top, high, low)


# --------------------------------------------------------------------------
# position as a function of amplitude
# --------------------------------------------------------------------------

class _PositionMap:
    """Exact x as a function of the chart variables t (upper) and v (lower)."""

    def __init__(self, nl: Nonlinearity, omega: float, h: float):
        self.nl, self.omega, self.h = nl, omega, h
        self.t_half = math.sqrt(0.5 * h)
        self.v_half = math.log(0.5 * h)
        anchors = np.linspace(0.0, self.t_half, _T_ANCHORS + 1)
        cum = np.concatenate(([0.0], np.cumsum(self._segments(self.dx_dt, anchors))))
        self.x_half = float(cum[-1])

    def dx_dt(self, t):
        t = np.asarray(t, dtype=float)
        c = self.nl.coeffs
        tt = t * t
        u = self.h - tt
        r = tt / self.h
        gap_over = (c.d1 * self.h ** (c.alpha - 1.0) * _ratio_pow(r, c.alpha)
                    + c.d2 * self.h ** (c.beta - 1.0) * _ratio_pow(r, c.beta))
        # gap = tt * gap_over, so t / (u sqrt(gap)) = 1 / (u sqrt(gap_over))
        return 1.0 / (u * np.sqrt(gap_over))

    def dx_dv(self, v):
        c = self.nl.coeffs
        u = np.exp(np.asarray(v, dtype=float))
        gap = self.omega - u**c.alpha * (c.d1 + c.d2 * u ** (c.beta - c.alpha))
        return -0.5 / np.sqrt(gap)

    @staticmethod
    def _segments(g, nodes):
        """Gauss-Legendre integrals of g over consecutive node pairs, cross-checked."""
        a, b = nodes[:-1], nodes[1:]
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        out = []
        for xg, wg in (_GL_LOW, _GL_HIGH):
            pts = mid[:, None] + half[:, None] * xg[None, :]
            out.append(half * (g(pts) @ wg))
        low, high = out
        scale = np.max(np.abs(np.cumsum(high))) if high.size else 0.0
        if high.size and np.max(np.abs(high - low)) > 1e-12 * max(scale, 1.0):
            raise QuadratureError("profile position integral did not converge on a segment")
        return high

    def x_of_t(self, t):
        t = np.asarray(t, dtype=float)
        anchors = np.linspace(0.0, self.t_half, _T_ANCHORS + 1)
        nodes = np.concatenate((anchors, t))
        idx = np.argsort(nodes, kind="stable")
        seg = self._segments(self.dx_dt, nodes[idx])
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        x = np.empty_like(nodes)
        x[idx] = cum
        return x[_T_ANCHORS + 1:]

    def x_of_v(self, v):
        v = np.asarray(v, dtype=float)
        v_min = min(float(np.min(v)), self.v_half) if v.size else self.v_half
        count = max(1, int(math.ceil((self.v_half - v_min) / _V_STEP)))
        anchors = np.linspace(self.v_half, self.v_half - count * _V_STEP, count + 1)
        nodes = np.concatenate((anchors, v))
        idx = np.argsort(-nodes, kind="stable")
        ordered = nodes[idx]
        seg = self._segments(self.dx_dv, ordered)  # negative widths times negative slope
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        x = np.empty_like(nodes)
        x[idx] = self.x_half + cum
        return x[count + 1:]

    def x_of_s(self, s):
        """Position at squared amplitude s in (0, h]."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        x = np.empty_like(s)
        up = s >= 0.5 * self.h
        x[up] = self.x_of_t(np.sqrt(self.h - s[up]))
        x[~up] = self.x_of_v(np.log(s[~up]))
        return x


def _ratio_pow(r, e):
    """(1 - (1 - r)^e) / r for 0 <= r <= 1/2, finite at r = 0."""
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    val = -np.expm1(e * np.log1p(-safe)) / safe
    return np.where(r > 0, val, e)


def _invert(pm: _PositionMap, x_target: np.ndarray, guess_s: np.ndarray) -> np.ndarray:
    """Squared amplitude s with x(s) = x_target, by Newton in the chart variables."""
    s = guess_s.copy()
    up = x_target <= pm.x_half
    t = np.sqrt(np.clip(pm.h - s[up], 0.0, 0.5 * pm.h))
    t = np.minimum(t, pm.t_half)
    v = np.log(np.minimum(s[~up], 0.5 * pm.h))
    xt, xv = x_target[up], x_target[~up]
    for _ in range(_NEWTON_STEPS):
        if t.size:
            t = np.clip(t + (xt - pm.x_of_t(t)) / pm.dx_dt(t), 0.0, pm.t_half)
        if v.size:
            v = np.minimum(v + (xv - pm.x_of_v(v)) / pm.dx_dv(v), pm.v_half)
    scale = max(1.0, float(np.max(x_target)))
    res_t = np.abs(pm.x_of_t(t) - xt) if t.size else np.zeros(0)
    res_v = np.abs(pm.x_of_v(v) - xv) if v.size else np.zeros(0)
    if max(res_t.max(initial=0.0), res_v.max(initial=0.0)) > 1e-10 * scale:
        raise ConsistencyError("profile inversion did not converge")
    s[up] = pm.h - t * t
    s[~up] = np.exp(v)
    return s


# --------------------------------------------------------------------------
# profile type
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SolitonProfile:
    """Samples of phi_omega on a uniform half-line grid, plus exact evaluation.

    ``phi(-x) = phi(x)``; calling the profile evaluates the even extension.
    Beyond ``x_max`` the tail is continued by its asymptotic form.
    """

    nl: Nonlinearity
    omega: float
    peak: float
    x: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    _map: _PositionMap = field(repr=False, compare=False)
    _guess: PchipInterpolator = field(repr=False, compare=False)

    @property
    def h(self) -> float:
        return self.peak**2

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    def __call__(self, x) -> np.ndarray:
        x = np.abs(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        inside = (x > 0) & (x <= self.x_max)
        out[x == 0] = self.peak
        if np.any(inside):
            xi = x[inside]
            s0 = np.exp(self._guess(xi))
            out[inside] = np.sqrt(_invert(self._map, xi, s0))
        beyond = x > self.x_max
        if np.any(beyond):
            out[beyond] = self._tail(x[beyond])
        return out if out.ndim else float(out)

    def _tail(self, x):
        end = float(self.phi[-1])
        if self.omega > 0:
            return end * np.exp(-math.sqrt(self.omega) * (x - self.x_max))
        return end * (self.x_max / x) ** (2.0 / (self.nl.p - 1.0))

    def derivative(self, x) -> np.ndarray:
        """phi'(x) = -sgn(x) sqrt(W(phi^2)) from the first integral."""
        x = np.asarray(x, dtype=float)
        s = np.asarray(self(x), dtype=float) ** 2
        w = s * _gap(self.nl, self.h, self.omega, s, self.h - s)
        return -np.sign(x) * np.sqrt(np.maximum(w, 0.0))


def build_profile(nl: Nonlinearity, omega: float, n_samples: int = DEFAULT_SAMPLES,
                  x_max: float | None = None, tail_fraction: float = TAIL_FRACTION) -> SolitonProfile:
    """Profile phi_omega sampled at ``n_samples`` uniform points on [0, x_max].

    With ``x_max=None`` the domain starts from :func:`default_x_max` and is
    extended until phi(x_max) < tail_fraction * peak; that bound is then
    verified on the computed samples.
    """
    if not 0 < tail_fraction < 1:
        raise DomainError(f"tail_fraction must lie in (0, 1), got {tail_fraction}")
    omega = _check_frequency(nl, omega)
    if int(n_samples) != n_samples or n_samples < 3:
        raise DomainError(f"n_samples must be an integer >= 3, got {n_samples}")
    n_samples = int(n_samples)
    h = peak_squared(nl, omega)
    peak = math.sqrt(h)
    pm = _PositionMap(nl, omega, h)

    auto = x_max is None
    s_tail = (0.5 * tail_fraction * peak) ** 2
    x_tail = float(pm.x_of_s(s_tail)[0])
    if auto:
        x_max = max(default_x_max(omega), x_tail)
    x_max = float(x_max)
    if not x_max > 0:
        raise DomainError(f"x_max must be positive, got {x_max}")

    # coarse amplitude grid in both charts, then a monotone guess for log s(x)
    t_nodes = np.linspace(0.0, pm.t_half, 257)[1:]
    v_low = math.log(min(s_tail, 0.25 * h))
    while True:
        v_nodes = np.linspace(pm.v_half, v_low, 400)[1:]
        x_far = float(pm.x_of_v(np.array([v_low]))[0])
        if x_far >= x_max:
            break
        v_low -= max(10.0, 0.5 * (pm.v_half - v_low))
    x_nodes = np.concatenate(([0.0], pm.x_of_t(t_nodes), pm.x_of_v(v_nodes)))
    s_nodes = np.concatenate(([h], h - t_nodes**2, np.exp(v_nodes)))
    keep = np.concatenate(([True], np.diff(x_nodes) > 0))
    guess = PchipInterpolator(x_nodes[keep], np.log(s_nodes[keep]), extrapolate=True)

    x = np.linspace(0.0, x_max, n_samples)
    s = np.empty_like(x)
    s[0] = h
    s[1:] = _invert(pm, x[1:], np.exp(guess(x[1:])))
    phi = np.sqrt(s)

    if not np.all(np.diff(phi) < 0):
        raise ConsistencyError("profile samples are not strictly decreasing")
    if auto and not phi[-1] < tail_fraction * peak:
        raise ConsistencyError(f"tail {phi[-1]:.3e} not below {tail_fraction:g} * peak")
    return SolitonProfile(nl, omega, peak, x, phi, pm, guess)


# --------------------------------------------------------------------------
# functionals
# --------------------------------------------------------------------------

def _inv_sqrt_gap(nl, h, omega, s, dr, c):
    """(omega - L(s))^(-1/2); at omega = 0 the s^alpha factor is pulled out
    so that tiny s does not underflow the gap to zero."""
    if omega > 0.0:
        return 1.0 / np.sqrt(_gap(nl, h, omega, s, dr))
    near_top = dr < 0.5 * h
    s_low = np.where(near_top, 0.5 * h, s)
    low = s_low ** (-0.5 * c.alpha) / np.sqrt(-(c.d1 + c.d2 * s_low ** (c.beta - c.alpha)))
    s_high = np.where(near_top, s, 0.5 * h)
    dr_high = np.where(near_top, dr, 0.5 * h)
    high = 1.0 / np.sqrt(_gap(nl, h, omega, s_high, dr_high))
    return np.where(near_top, high, low)


def _functional(nl: Nonlinearity, omega: float, weight, tol: float) -> float:
    h = peak_squared(nl, omega)

    c = nl.coeffs

    def f(s, dl, dr):
        return weight(dl, _inv_sqrt_gap(nl, h, omega, dl, dr, c))
    hint = SingularityHint(right_exponent=0.5)
    return integrate(f, 0.0, h, hint, tol, with_distances=True).value


def mass(nl: Nonlinearity, omega: float, tol: float = DEFAULT_TOL) -> float:
    """M(omega) = (1/2) int phi^2 dx = (1/2) int_0^h (omega - L(s))^(-1/2) ds."""
    return 0.5 * _functional(nl, omega, lambda s, rg: rg, tol)


@dataclass(frozen=True)
class ProfileNorms:
    grad_sq: float
    lp_norm: float  # |phi|_{p+1}^{p+1}
    lq_norm: float  # |phi|_{q+1}^{q+1}
    mass2: float  # |phi|_2^2
    energy: float


def norms_and_energy(nl: Nonlinearity, omega: float, tol: float = DEFAULT_TOL) -> ProfileNorms:
    """Whole-line integrals of phi_omega and the conserved energy.

    E = |phi'|^2 / 2 + |phi|_{p+1}^{p+1} / (p+1) - |phi|_{q+1}^{q+1} / (q+1).
    """
    p, q = nl.p, nl.q
    grad_sq = _functional(nl, omega, lambda s, rg: 1.0 / rg, tol)
    lp = _functional(nl, omega, lambda s, rg: s ** ((p - 1.0) / 2.0) * rg, tol)
    lq = _functional(nl, omega, lambda s, rg: s ** ((q - 1.0) / 2.0) * rg, tol)
    mass2 = 2.0 * mass(nl, omega, tol)
    energy = 0.5 * grad_sq + lp / (p + 1.0) - lq / (q + 1.0)
    return ProfileNorms(grad_sq, lp, lq, mass2, energy)


def scaling_second_derivative_at_zero(nl: Nonlinearity, tol: float = DEFAULT_TOL) -> float:
    """d^2/d lambda^2 of E(lambda^(1/2) phi_0(lambda x)) at lambda = 1.

    The scaled energy is lambda^2 G/2 + lambda^alpha P/(p+1) - lambda^beta Q/(q+1).
    """
    nl.require_subcritical("scaling_second_derivative_at_zero")
    c = nl.coeffs
    n = norms_and_energy(nl, 0.0, tol)
    return (n.grad_sq + c.alpha * (c.alpha - 1.0) * n.lp_norm / (nl.p + 1.0)
            - c.beta * (c.beta - 1.0) * n.lq_norm / (nl.q + 1.0))


def scaling_threshold(p: float) -> float:
    """gamma_1(p) = (23 - 3p) / (3 + p)."""
    return (23.0 - 3.0 * p) / (3.0 + p)


# --------------------------------------------------------------------------
# ODE shooting oracle
# --------------------------------------------------------------------------

def shoot(nl: Nonlinearity, omega: float, x_eval, rtol: float = 1e-12):
    """Integrate -phi'' + omega phi + phi^p - phi^q = 0 from the peak.

    Independent of the first integral: starts at phi(0) = sqrt(h), phi'(0) = 0.
    Returns (phi, phi') at the requested points.  Shooting outward is
    unstable in the tail, so only use moderate x.
    """
    p, q = nl.p, nl.q
    x_eval = np.atleast_1d(np.asarray(x_eval, dtype=float))
    peak = math.sqrt(peak_squared(nl, omega))

    def rhs(_, y):
        phi = max(y[0], 0.0)
        return [y[1], omega * phi + phi**p - phi**q]

    sol = solve_ivp(rhs, (0.0, float(x_eval.max())), [peak, 0.0], method="DOP853",
                    rtol=rtol, atol=1e-14 * peak, t_eval=np.sort(x_eval), dense_output=False)
    if not sol.success:
        raise QuadratureError(f"shooting integration failed: {sol.message}")
    order = np.argsort(np.argsort(x_eval))
    return sol.y[0][order], sol.y[1][order]
