"""Separability diagnostics for two-mode Gaussian states.

All quantities depend only on the covariance matrix. ``S`` is the Simon
separability function (S >= 0 iff separable). ``L`` is the base-2
logarithmic negativity (L > 0 certifies entanglement). ``f`` is the squared
smallest symplectic eigenvalue of the partially transposed covariance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

from .errors import DegenerateCovariance, PreconditionViolation
from .model import CovarianceMatrix, EnvironmentParams, physicality_check, symplectic_invariants

TOL_S = 1e-9
TOL_L = 1e-9
DISCRIMINANT_TOL = 1e-9

_LN2 = math.log(2.0)


class Classification(str, enum.Enum):
    SEPARABLE = "Separable"
    ENTANGLED = "Entangled"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class EntanglementReport:
    S: float
    L: float
    f: float
    nu_minus: float
    classification: Classification
    physical: bool = True
    consistent: bool = True

    @property
    def infinite_negativity(self) -> bool:
        return math.isinf(self.L)


def simon_function(sigma: CovarianceMatrix) -> float:
    """Simon separability function.

    S = det A det B + (1/4 - |det C|)^2 - tr(A J C J B J C^T J) - (det A + det B)/4
    """
    dA, dB, dC, trace_term, _ = symplectic_invariants(sigma)
    return dA * dB + (0.25 - abs(dC)) ** 2 - trace_term - 0.25 * (dA + dB)


def log_negativity(sigma: CovarianceMatrix) -> Tuple[float, float]:
    """Return ``(L, f)``.

    ``f <= 0`` happens only for states on or beyond the uncertainty boundary;
    ``L`` is then ``+inf``.
    """
    dA, dB, dC, _, det_sigma = symplectic_invariants(sigma)
    half = 0.5 * (dA + dB) - dC
    disc = half * half - det_sigma
    if disc < -DISCRIMINANT_TOL:
        raise DegenerateCovariance(
            f"partial-transpose discriminant {disc:.3e} is negative"
        )
    f = half - math.sqrt(max(disc, 0.0))
    if f <= 0.0:
        return math.inf, f
    return -0.5 * math.log(4.0 * f) / _LN2, f


def _sign(x: float, tol: float) -> int:
    if x > tol:
        return 1
    if x < -tol:
        return -1
    return 0


def classify(sigma: CovarianceMatrix, tol_s: float = TOL_S,
             tol_l: float = TOL_L) -> EntanglementReport:
    """Evaluate S, L, f and the physicality eigenvalue and classify the state.

    Classification follows the sign of S with a dead band of width ``tol_s``
    around zero. ``consistent`` is False when S and L both leave their dead
    bands but disagree on the verdict.
    """
    S = simon_function(sigma)
    L, f = log_negativity(sigma)
    nu_minus, physical = physicality_check(sigma)
    s_sign = _sign(S, tol_s)
    if s_sign < 0:
        cls = Classification.ENTANGLED
    elif s_sign > 0:
        cls = Classification.SEPARABLE
    else:
        cls = Classification.BOUNDARY
    l_sign = _sign(L, tol_l)
    consistent = not (s_sign and l_sign and l_sign != -s_sign)
    return EntanglementReport(S=S, L=L, f=f, nu_minus=nu_minus, classification=cls,
                              physical=physical, consistent=consistent)


def _require_gibbs(params: EnvironmentParams, *, need_dxy_zero: bool = False):
    if not (params.gibbs and params.symmetric_modes):
        raise PreconditionViolation(
            "closed-form asymptotics need an environment built with both the gibbs "
            "and symmetric-modes constraints"
        )
    if params.lam <= 0:
        raise PreconditionViolation("closed-form asymptotics need lambda > 0")
    if need_dxy_zero and params.d_xy != 0.0:
        raise PreconditionViolation(f"formula requires d_xy = 0, got {params.d_xy}")


def asymptotic_det_c(params: EnvironmentParams) -> float:
    """Closed-form determinant of the stationary cross-correlation block.

    Valid for mode-symmetric environments with ``lambda > 0``.
    """
    if not params.symmetric_modes or params.lam <= 0:
        raise PreconditionViolation("needs a mode-symmetric environment with lambda > 0")
    lam, m, w = params.lam, params.m, params.omega
    lead = m * w * w * params.d_xy + params.d_pxpy / m
    cross = params.d_xy * params.d_pxpy - params.d_xpy ** 2
    return (lead * lead + 4.0 * lam * lam * cross) / (4.0 * lam * lam * (lam * lam + w * w))


def asymptotic_simon(params: EnvironmentParams) -> float:
    """Closed-form S at t -> infinity for a gibbs, symmetric environment.

    The familiar polynomial in the coefficients is the partial-transpose
    branch (det C < 0). When the stationary det C is positive, the
    ``|det C|`` in S shifts the value by ``-det C``.
    """
    _require_gibbs(params)
    lam, m, w = params.lam, params.m, params.omega
    lw = lam * lam + w * w
    mw2 = (m * w) ** 2
    bracket = mw2 * (params.d_xx ** 2 - params.d_xy ** 2) / lam ** 2 \
        + params.d_xpy ** 2 / lw - 0.25
    s_ppt = bracket ** 2 - 4.0 * mw2 * params.d_xx ** 2 * params.d_xpy ** 2 / (lam ** 2 * lw)
    det_c = asymptotic_det_c(params)
    return s_ppt - det_c if det_c > 0 else s_ppt


def asymptotic_log_negativity(params: EnvironmentParams) -> float:
    """Closed-form L at t -> infinity (gibbs, symmetric, ``d_xy = 0``).

    Only ``|d_xpy|`` enters: flipping its sign is a local rotation of the
    second oscillator.
    """
    _require_gibbs(params, need_dxy_zero=True)
    lam, m, w = params.lam, params.m, params.omega
    arg = 2.0 * abs(m * w * params.d_xx / lam - abs(params.d_xpy) / math.sqrt(lam * lam + w * w))
    if arg == 0.0:
        return math.inf
    return -math.log(arg) / _LN2


class EntanglementWindow(NamedTuple):
    d_low: float
    d_high: float
    nonempty: bool


def asymptotic_entanglement_window(params: EnvironmentParams) -> EntanglementWindow:
    """Range of ``d_xpy`` giving an entangled stationary state.

    The open interval from the stationary Simon condition is capped by the
    Cauchy-Schwarz bound ``d_xpy <= m w d_xx``, which reduces to
    ``d_xpy <= d_xx`` for m = w = 1. The returned interval is
    ``(d_low, d_high]`` when the cap binds and ``(d_low, d_high)`` otherwise.
    """
    _require_gibbs(params, need_dxy_zero=True)
    lam, m, w = params.lam, params.m, params.omega
    u = m * w * params.d_xx / lam
    if u < 0.5:
        raise PreconditionViolation(
            f"m*omega*d_xx/lambda = {u} < 1/2 violates the single-mode uncertainty relation"
        )
    root = math.sqrt(lam * lam + w * w)
    low = (u - 0.5) * root
    high = min((u + 0.5) * root, m * w * params.d_xx)
    return EntanglementWindow(low, high, low < high)
