"""Covariance-matrix dynamics: drift, propagator, stationary state, evolution.

The second moments obey the linear equation

    d sigma / dt = Y sigma + sigma Y^T + 2 D

with a block-diagonal drift ``Y`` made of two damped rotation blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidParameter, NoAsymptoticState
from .model import COVARIANCE_ENTRIES, CovarianceMatrix, EnvironmentParams

DEFAULT_ODE_DT = 1e-3


@dataclass(frozen=True)
class Propagator:
    t: float
    M: np.ndarray


def drift_matrix(params: EnvironmentParams) -> np.ndarray:
    lam, m, w = params.lam, params.m, params.omega
    block = np.array([[-lam, 1.0 / m], [-m * w * w, -lam]])
    Y = np.zeros((4, 4))
    Y[:2, :2] = block
    Y[2:, 2:] = block
    return Y


def diffusion_matrix(params: EnvironmentParams) -> np.ndarray:
    return params.diffusion()


def _propagator_stack(params: EnvironmentParams, times: np.ndarray) -> np.ndarray:
    """exp(Y t) for every t in ``times``; shape ``(len(times), 4, 4)``."""
    m, w = params.m, params.omega
    times = np.asarray(times, dtype=float)
    c = np.cos(w * times)
    s = np.sin(w * times)
    decay = np.exp(-params.lam * times)
    M = np.zeros(times.shape + (4, 4))
    for k in (0, 2):
        M[..., k, k] = decay * c
        M[..., k, k + 1] = decay * s / (m * w)
        M[..., k + 1, k] = -decay * m * w * s
        M[..., k + 1, k + 1] = decay * c
    return M


def propagator(params: EnvironmentParams, t: float) -> Propagator:
    """Closed-form ``M(t) = exp(Y t)``: two damped rotation blocks."""
    return Propagator(t=float(t), M=_propagator_stack(params, np.array(t)))


def _lyapunov_system(Y: np.ndarray) -> np.ndarray:
    """Matrix of the map X -> Y X + X Y^T restricted to symmetric X.

    Rows and columns are indexed by the ten independent entries in
    ``COVARIANCE_ENTRIES`` order.
    """
    n = len(COVARIANCE_ENTRIES)
    K = np.zeros((n, n))
    for col, (_, i, j) in enumerate(COVARIANCE_ENTRIES):
        E = np.zeros((4, 4))
        E[i, j] = E[j, i] = 1.0
        image = Y @ E + E @ Y.T
        for row, (_, a, b) in enumerate(COVARIANCE_ENTRIES):
            K[row, col] = image[a, b]
    return K


def asymptotic_covariance(params: EnvironmentParams) -> CovarianceMatrix:
    """Stationary covariance solving ``Y s + s Y^T = -2 D``."""
    if params.lam <= 0:
        raise NoAsymptoticState(
            f"lambda = {params.lam} gives a drift matrix without decaying modes; "
            "no stationary state exists"
        )
    Y = drift_matrix(params)
    D = params.diffusion()
    K = _lyapunov_system(Y)
    rhs = np.array([-2.0 * D[i, j] for _, i, j in COVARIANCE_ENTRIES])
    x = np.linalg.solve(K, rhs)
    return CovarianceMatrix.from_entries(
        {name: float(v) for (name, _, _), v in zip(COVARIANCE_ENTRIES, x)}
    )


def lyapunov_residual(params: EnvironmentParams, sigma: CovarianceMatrix) -> float:
    Y = drift_matrix(params)
    S = sigma.matrix
    return float(np.max(np.abs(Y @ S + S @ Y.T + 2.0 * params.diffusion())))


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def evolve_many(sigma0: CovarianceMatrix, params: EnvironmentParams, times,
                sigma_inf: Optional[CovarianceMatrix] = None) -> np.ndarray:
    """Covariance matrices at all ``times`` as an array ``(n, 4, 4)``.

    Requires ``lambda > 0``. Pass ``sigma_inf`` to reuse a precomputed
    stationary state.
    """
    if sigma_inf is None:
        sigma_inf = asymptotic_covariance(params)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    M = _propagator_stack(params, times)
    dev = sigma0.matrix - sigma_inf.matrix
    out = M @ dev @ np.swapaxes(M, -1, -2) + sigma_inf.matrix
    out = _sym(out)
    # exact echo at t = 0
    out[times == 0.0] = sigma0.matrix
    return out


def evolve(sigma0: CovarianceMatrix, params: EnvironmentParams, t: float) -> CovarianceMatrix:
    """Covariance at time ``t`` from the closed-form solution.

    For ``lambda = 0`` there is no stationary state to relax towards and the
    equation is integrated numerically instead.
    """
    if t < 0:
        raise InvalidParameter(f"t must be >= 0, got {t}")
    if t == 0:
        return sigma0
    if params.lam == 0:
        return evolve_ode(sigma0, params, t, DEFAULT_ODE_DT)
    return CovarianceMatrix(evolve_many(sigma0, params, [t])[0])


def _rhs(Y: np.ndarray, twoD: np.ndarray, S: np.ndarray) -> np.ndarray:
    YS = Y @ S
    return YS + YS.T + twoD


def integrate_ode(sigma0: CovarianceMatrix, params: EnvironmentParams, t: float,
                  dt: float, record_every: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Fixed-step RK4 integration of the covariance equation.

    The step is shrunk to ``t / ceil(t / dt)`` so the last step lands on
    ``t``. With ``record_every = k > 0`` every k-th state is kept; the
    final state is always kept. Returns ``(times, states)``.
    """
    if dt <= 0:
        raise InvalidParameter(f"dt must be > 0, got {dt}")
    if t < 0:
        raise InvalidParameter(f"t must be >= 0, got {t}")
    n = max(1, math.ceil(t / dt - 1e-9)) if t > 0 else 0
    h = t / n if n else 0.0
    Y = drift_matrix(params)
    twoD = 2.0 * params.diffusion()
    S = np.array(sigma0.matrix)
    times, states = [0.0], [S.copy()]
    for k in range(1, n + 1):
        k1 = _rhs(Y, twoD, S)
        k2 = _rhs(Y, twoD, S + 0.5 * h * k1)
        k3 = _rhs(Y, twoD, S + 0.5 * h * k2)
        k4 = _rhs(Y, twoD, S + h * k3)
        S = S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        S = 0.5 * (S + S.T)
        if (record_every and k % record_every == 0) or k == n:
            times.append(k * h)
            states.append(S.copy())
    if n:
        times[-1] = t
    return np.array(times), np.array(states)


def evolve_ode(sigma0: CovarianceMatrix, params: EnvironmentParams, t: float,
               dt: float = DEFAULT_ODE_DT) -> CovarianceMatrix:
    """Covariance at ``t`` by direct RK4 integration (global error O(dt^4))."""
    _, states = integrate_ode(sigma0, params, t, dt)
    return CovarianceMatrix(states[-1])
