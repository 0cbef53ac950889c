import math

import numpy as np
import pytest

from gauss_entangle import CovarianceMatrix, EnvironmentParams, validate_environment

# filled by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []

OMEGA4 = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def expm_taylor(A, terms=30):
    """Scaling-and-squaring Taylor exponential, independent of the closed form."""
    norm = np.max(np.sum(np.abs(A), axis=1))
    k = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    B = A / 2.0 ** k
    E = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for n in range(1, terms):
        term = term @ B / n
        E = E + term
    for _ in range(k):
        E = E @ E
    return E


def symplectic_spectrum(S):
    """Symplectic eigenvalues as moduli of the eigenvalues of i Omega S."""
    ev = np.linalg.eigvals(1j * OMEGA4 @ S)
    return np.sort(np.abs(ev))[::2]


def partial_transpose(S):
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    return P @ S @ P


def _params_from_D(lam, m, omega, D, symmetric):
    kw = dict(
        d_xx=D[0, 0], d_xpx=D[0, 1], d_pxpx=D[1, 1], d_yy=D[2, 2], d_ypy=D[2, 3],
        d_pypy=D[3, 3], d_xy=D[0, 2], d_xpy=D[0, 3], d_ypx=D[1, 2], d_pxpy=D[1, 3],
    )
    return EnvironmentParams(lam=lam, m=m, omega=omega, symmetric_modes=symmetric, **kw)


def random_cp_env(rng, symmetric=False):
    """Random environment whose coefficient matrix is positive semidefinite.

    D >= (lambda/2) I is sufficient because i lambda Omega / 2 has spectrum
    +-lambda/2; for the mode-symmetric variant D is averaged with its
    mode-swapped copy, which keeps that bound.
    """
    while True:
        lam = rng.uniform(0.05, 1.5)
        m = rng.uniform(0.5, 2.0)
        omega = rng.uniform(0.3, 2.0)
        R = rng.normal(size=(4, 4)) * rng.uniform(0.05, 0.6)
        D = R @ R.T + (lam / 2 + rng.uniform(0.0, 0.2)) * np.eye(4)
        if symmetric:
            perm = [2, 3, 0, 1]
            D = 0.5 * (D + D[np.ix_(perm, perm)])
        p = _params_from_D(lam, m, omega, D, symmetric)
        if validate_environment(p).psd_ok:
            return p


def random_gibbs_env(rng, require_cp=True, zero_dxy=False):
    """Random gibbs-form environment (optionally rejection-sampled for CP)."""
    while True:
        lam = rng.uniform(0.05, 1.5)
        m = rng.uniform(0.5, 2.0)
        omega = rng.uniform(0.3, 2.0)
        base = lam / (2 * m * omega)
        d_xx = base * rng.uniform(1.0, 4.0)
        d_xy = 0.0 if zero_dxy else rng.uniform(-1, 1) * d_xx
        d_xpy = rng.uniform(-1, 1) * m * omega * d_xx
        p = EnvironmentParams.gibbs_form(lam, d_xx, d_xy=d_xy, d_xpy=d_xpy, m=m, omega=omega)
        if not require_cp or validate_environment(p).psd_ok:
            return p


def random_physical_state(rng):
    """Thermal-squeezed state: S diag(nu, nu, mu, mu) S^T with a random symplectic S."""
    H = rng.normal(size=(4, 4)) * 0.4
    H = 0.5 * (H + H.T)
    from scipy.linalg import expm

    Sp = expm(OMEGA4 @ H)
    nus = 0.5 + rng.exponential(0.5, size=2)
    core = np.diag([nus[0], nus[0], nus[1], nus[1]])
    return CovarianceMatrix.symmetrized(Sp @ core @ Sp.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def fig_env():
    """Reference environment with in-window cross diffusion."""
    return EnvironmentParams.gibbs_form(0.2, 0.115, d_xpy=0.1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
