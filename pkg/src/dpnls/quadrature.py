"""Double-exponential (tanh-sinh) quadrature for endpoint-singular integrands.

Integrands are called with numpy arrays of abscissae.  When the singular
endpoint sits at a non-zero coordinate, the offset ``x - a`` is destroyed by
rounding long before the nodes stop clustering, so integrands can opt into
``with_distances=True`` and receive ``f(x, dl, dr)`` where ``dl = x - a`` and
``dr = b - x`` are computed exactly from the transformation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, QuadratureError

DEFAULT_TOL = 1e-10
MAX_LEVEL = 12
T_MAX = 6.0  # outermost node sits ~1e-275 (relative) from the endpoint
EPS = np.finfo(float).eps
CUT_FRACTION = EPS**0.75


@dataclass(frozen=True)
class SingularityHint:
    """Known power-law blow-up rates ``|x - endpoint|^-exponent`` at each end."""

    left_exponent: Optional[float] = None
    right_exponent: Optional[float] = None

    def __post_init__(self):
        for name in ("left_exponent", "right_exponent"):
            e = getattr(self, name)
            if e is not None and not 0.0 <= e < 1.0:
                raise DomainError(f"{name}={e} is not integrable (need 0 <= exponent < 1)")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


def _level_abscissae(level: int) -> np.ndarray:
    if level == 0:
        j = np.arange(-int(T_MAX), int(T_MAX) + 1)
        return j.astype(float)
    h = 2.0**-level
    n = int(T_MAX / h)
    odd = np.arange(-n, n + 1)
    odd = odd[odd % 2 != 0]
    return odd * h


def _transform(t: np.ndarray, length: float):
    """Endpoint offsets and Jacobian weights (without the step) for nodes ``t``."""
    u = 0.5 * np.pi * np.sinh(t)
    dl = length / (1.0 + np.exp(-2.0 * u))
    dr = length / (1.0 + np.exp(2.0 * u))
    w = length * 0.25 * np.pi * np.cosh(t) / np.cosh(u) ** 2
    return dl, dr, w


def _tanh_sinh(g: Callable, a: float, b: float, tol: float, with_distances: bool,
               check_left: bool, check_right: bool):
    """Level-refined tanh-sinh sum of ``g`` over [a, b].

    Returns (value, error_estimate, evaluations).  ``check_*`` enable the
    non-integrability test on the outermost node contributions.
    """
    length = b - a
    total = 0.0
    abs_total = 0.0
    evaluations = 0
    previous = None
    diffs: list[float] = []
    edge_left = edge_right = 0.0
    for level in range(MAX_LEVEL + 1):
        t = _level_abscissae(level)
        dl, dr, w = _transform(t, length)
        keep = (dl > 0) & (dr > 0) & (w > 0)
        t, dl, dr, w = t[keep], dl[keep], dr[keep], w[keep]
        x = np.where(t <= 0, a + dl, b - dr)
        if not with_distances:
            inside = (x > a) & (x < b)
            t, dl, dr, w, x = t[inside], dl[inside], dr[inside], w[inside], x[inside]
        fx = np.asarray(g(x, dl, dr) if with_distances else g(x), dtype=float)
        fx = np.broadcast_to(fx, x.shape)
        evaluations += x.size
        if not np.all(np.isfinite(fx)):
            bad = x[~np.isfinite(fx)][0]
            raise QuadratureError(f"integrand not finite at x={bad!r}")
        contrib = w * fx
        total += float(np.sum(contrib))
        abs_total += float(np.sum(np.abs(contrib)))
        if level == 0:
            edge_left = abs(contrib[0]) if check_left else 0.0
            edge_right = abs(contrib[-1]) if check_right else 0.0
        h = 2.0**-level
        value = total * h
        scale = max(1.0, abs(value))
        if max(edge_left, edge_right) > max(tol, 1e-13) * scale:
            raise QuadratureError(
                "endpoint contribution does not decay; integrand is probably not integrable"
            )
        if previous is not None:
            diff = abs(value - previous)
            diffs.append(diff)
            noise = 100.0 * EPS * abs_total * h
            if level >= 3 and (diff <= tol * scale or diff <= noise):
                return value, diff, evaluations
            if len(diffs) >= 4 and diffs[-1] >= diffs[-2] >= diffs[-3]:
                raise QuadratureError(
                    f"refinement stalled at level {level} (estimate {diff:.3e} not shrinking)"
                )
        previous = value
    raise QuadratureError(
        f"no convergence after {MAX_LEVEL} levels (last estimate {diffs[-1]:.3e})"
    )


def integrate(f: Callable, a: float, b: float, hint: Optional[SingularityHint] = None,
              tol: float = DEFAULT_TOL, *, with_distances: bool = False) -> QuadratureResult:
    """Integrate ``f`` over the open interval (a, b).

    ``f`` is never evaluated at ``a`` or ``b``.  Power-law endpoint blow-up
    with exponent below one is handled by the double-exponential clustering.

    Parameters
    ----------
    f : callable
        Vectorised integrand ``f(x)``, or ``f(x, dl, dr)`` when
        ``with_distances`` is true.
    a, b : float
        Finite limits with ``a < b``.
    hint : SingularityHint, optional
        Known blow-up exponents.  Used for the analytic tail correction on the
        sliver that rounding makes unreachable near a non-zero endpoint.
    tol : float
        Target ``|error| <= tol * max(1, |value|)``.

    Raises
    ------
    QuadratureError
        Refinement stalls or the outermost contributions do not decay.
    """
    a = float(a)
    b = float(b)
    if not a < b:
        raise DomainError(f"need a < b, got a={a}, b={b}")
    hint = hint or SingularityHint()

    if with_distances:
        check_left = hint.left_exponent is None
        check_right = hint.right_exponent is None
        value, err, n = _tanh_sinh(f, a, b, tol, True, check_left, check_right)
        # mass beyond the outermost node, by the hinted power law
        tails = tail_err = 0.0
        t_edge = np.array([-T_MAX, T_MAX])
        dl, dr, _ = _transform(t_edge, b - a)
        edges = ((0, hint.left_exponent, dl[0], a + dl[0]),
                 (1, hint.right_exponent, dr[1], b - dr[1]))
        for i, exponent, offset, x_edge in edges:
            if exponent is None or offset <= 0:
                continue
            f_edge = float(np.asarray(f(np.array([x_edge]), dl[i:i + 1], dr[i:i + 1]),
                                      dtype=float).reshape(-1)[0])
            n += 1
            tail = f_edge * offset / (1.0 - exponent)
            tails += tail
            tail_err += abs(tail) * 0.1
        if abs(tails) > max(tol, 1e-13) * max(1.0, abs(value)) * 1e3:
            raise QuadratureError(
                f"endpoint tail {tails:.3e} too large to correct; exponent too close to 1"
            )
        return QuadratureResult(float(value + tails), float(err + tail_err), n)

    # Offsets below eps^(3/4)|endpoint| cannot be represented faithfully; cut
    # that sliver off and replace it by a power-law tail estimate.
    lo, hi = a, b
    tails = 0.0
    tail_err = 0.0
    evaluations = 0
    for side in ("left", "right"):
        end = a if side == "left" else b
        if end == 0.0:
            continue
        cut = CUT_FRACTION * abs(end)
        inner = end + cut if side == "left" else end - cut
        offset = abs(inner - end)
        if offset == 0.0 or offset >= 0.5 * (b - a):
            continue
        exponent = getattr(hint, f"{side}_exponent")
        f_edge = float(np.asarray(f(np.array([inner])), dtype=float).reshape(-1)[0])
        evaluations += 1
        if not math.isfinite(f_edge):
            raise QuadratureError(f"integrand not finite at x={inner!r}")
        tail = f_edge * offset / (1.0 - (exponent or 0.0))
        tails += tail
        tail_err += abs(tail) * (offset / (b - a) if exponent is not None else 1.0)
        # node positions next to the cut carry relative rounding eps|end|/offset
        tail_err += EPS * abs(end) * abs(f_edge) / max(1.0 - (exponent or 0.0), 0.1)
        if side == "left":
            lo = inner
        else:
            hi = inner
    value, err, n = _tanh_sinh(f, lo, hi, tol, False, lo == 0.0, hi == 0.0)
    return QuadratureResult(float(value + tails), float(err + tail_err), n + evaluations)


def _shifted(f: Callable, a: float, b: float, with_distances: bool, lo: float, hi: float):
    """Restrict ``f`` to a sub-interval while reporting offsets from (a, b)."""
    if not with_distances:
        return f
    off_l = lo - a
    off_r = b - hi

    def g(x, dl, dr):
        return f(x, off_l + dl, off_r + dr)
    return g


def detect_divergence(f: Callable, a: float, b: float, hint: Optional[SingularityHint] = None,
                      *, with_distances: bool = False, growth: float = 1.5,
                      runs: int = 4) -> bool:
    """Decide whether the integral of ``f`` over (a, b) diverges at an endpoint.

    Partial integrals over ``[a + e_k L, b - e_k L]`` with ``e_k = exp(-2^k)``
    are accumulated; divergence is declared when ``runs`` successive levels
    each grow the magnitude by more than ``growth``.  For ``|x|^-1`` the
    partial values double per level; for exponents below one they saturate.
    """
    a = float(a)
    b = float(b)
    if not a < b:
        raise DomainError(f"need a < b, got a={a}, b={b}")
    length = b - a
    tol = 1e-8

    def piece(lo, hi):
        g = _shifted(f, a, b, with_distances, lo, hi)
        return _tanh_sinh(g, lo, hi, tol, with_distances, False, False)[0]

    eps_prev = math.exp(-2.0)
    partial = piece(a + eps_prev * length, b - eps_prev * length)
    streak = 0
    for k in range(2, 10):
        eps_k = math.exp(-(2.0**k))
        lo_new, lo_old = a + eps_k * length, a + eps_prev * length
        hi_old, hi_new = b - eps_prev * length, b - eps_k * length
        if not with_distances and (lo_new <= a or hi_new >= b):
            break
        try:
            new = partial + piece(lo_new, lo_old) + piece(hi_old, hi_new)
        except QuadratureError:
            return True
        if not math.isfinite(new):
            return True
        if abs(new) > growth * abs(partial):
            streak += 1
            if streak >= runs:
                return True
        else:
            streak = 0
        partial = new
        eps_prev = eps_k
    return False
