"""Entanglement dynamics of two harmonic oscillators in a common Markovian environment."""

from .dynamics import (
    Propagator,
    asymptotic_covariance,
    diffusion_matrix,
    drift_matrix,
    evolve,
    evolve_many,
    evolve_ode,
    integrate_ode,
    lyapunov_residual,
    propagator,
)
from .entanglement import (
    Classification,
    EntanglementReport,
    EntanglementWindow,
    asymptotic_det_c,
    asymptotic_entanglement_window,
    asymptotic_log_negativity,
    asymptotic_simon,
    classify,
    log_negativity,
    simon_function,
)
from .errors import (
    DegenerateCovariance,
    EventRefinementFailure,
    GaussEntangleError,
    InvalidEnvironment,
    InvalidParameter,
    NoAsymptoticState,
    PreconditionViolation,
)
from .model import (
    FIG1_INITIAL,
    FIG2_INITIAL,
    VACUUM,
    CovarianceMatrix,
    EnvironmentParams,
    MinorCheck,
    ValidationReport,
    physicality_check,
    validate_environment,
)
from .timeline import Event, EventKind, SweepGrid, Timeline, locate_events, sample_trajectory, sweep

__version__ = "0.1.0"
