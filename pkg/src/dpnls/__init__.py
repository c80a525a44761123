"""Orbital stability of standing waves for the 1D double-power NLS.

    i u_t + u_xx - |u|^{p-1} u + |u|^{q-1} u = 0,   1 < p < q.
"""
from .errors import (
    ConsistencyError,
    DivergenceError,
    DomainError,
    DpnlsError,
    NumericalError,
    PoleError,
    QuadratureError,
    RootFindingError,
    SeriesError,
)
from .model import Nonlinearity, critical_points, h_of_omega, ordering_flags
from .profile import build_profile, mass, norms_and_energy, scaling_second_derivative_at_zero
from .simulator import evolve, orbital_distance, stability_experiment
from .stability import (
    classify,
    dmass,
    f_family,
    h_limit_integral,
    sign_pattern_audit,
    threshold,
    zero_frequency_limit,
)

__version__ = "0.1.0"
