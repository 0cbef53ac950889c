"""Physical parameter and state types, plus complete-positivity checks.

Units are natural throughout (hbar = 1). Canonical ordering of the phase
space is ``(x, p_x, y, p_y)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import DegenerateCovariance, InvalidEnvironment, InvalidParameter

DIFFUSION_FIELDS = (
    "d_xx",
    "d_xpx",
    "d_pxpx",
    "d_yy",
    "d_ypy",
    "d_pypy",
    "d_xy",
    "d_xpy",
    "d_ypx",
    "d_pxpy",
)

# (name, row, col) of every independent entry of a 4x4 covariance matrix
COVARIANCE_ENTRIES = (
    ("xx", 0, 0),
    ("xpx", 0, 1),
    ("xy", 0, 2),
    ("xpy", 0, 3),
    ("pxpx", 1, 1),
    ("ypx", 1, 2),
    ("pxpy", 1, 3),
    ("yy", 2, 2),
    ("ypy", 2, 3),
    ("pypy", 3, 3),
)

_FLAG_RTOL = 1e-12
PSD_RTOL = 1e-12
PHYSICALITY_TOL = 1e-9


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _FLAG_RTOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class EnvironmentParams:
    """Dissipation constant, oscillator constants and diffusion coefficients.

    ``lam`` is the dissipation rate lambda. The boolean flags record which
    structural constraints the coefficients were built to satisfy; they are
    checked on construction.
    """

    lam: float
    m: float = 1.0
    omega: float = 1.0
    d_xx: float = 0.0
    d_xpx: float = 0.0
    d_pxpx: float = 0.0
    d_yy: float = 0.0
    d_ypy: float = 0.0
    d_pypy: float = 0.0
    d_xy: float = 0.0
    d_xpy: float = 0.0
    d_ypx: float = 0.0
    d_pxpy: float = 0.0
    symmetric_modes: bool = False
    gibbs: bool = False

    def __post_init__(self):
        for name in ("lam", "m", "omega") + DIFFUSION_FIELDS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameter(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.m <= 0:
            raise InvalidParameter(f"mass m must be > 0, got {self.m}")
        if self.omega <= 0:
            raise InvalidParameter(f"frequency omega must be > 0, got {self.omega}")
        if self.lam < 0:
            raise InvalidParameter(f"dissipation lambda must be >= 0, got {self.lam}")

        if self.symmetric_modes:
            for a, b in (("d_xx", "d_yy"), ("d_xpx", "d_ypy"),
                         ("d_pxpx", "d_pypy"), ("d_xpy", "d_ypx")):
                if not _close(getattr(self, a), getattr(self, b)):
                    raise InvalidParameter(
                        f"symmetric-modes flag requires {a} == {b}, got "
                        f"{getattr(self, a)} != {getattr(self, b)}"
                    )
        if self.gibbs:
            mw2 = (self.m * self.omega) ** 2
            checks = (
                ("m^2 omega^2 d_xx == d_pxpx", mw2 * self.d_xx, self.d_pxpx),
                ("d_xpx == 0", self.d_xpx, 0.0),
                ("m^2 omega^2 d_xy == d_pxpy", mw2 * self.d_xy, self.d_pxpy),
            )
            for label, lhs, rhs in checks:
                if not _close(lhs, rhs):
                    raise InvalidParameter(
                        f"gibbs flag requires {label}, got {lhs} vs {rhs}"
                    )

    @classmethod
    def symmetric(cls, lam, m=1.0, omega=1.0, *, d_xx=0.0, d_xpx=0.0, d_pxpx=0.0,
                  d_xy=0.0, d_xpy=0.0, d_pxpy=0.0) -> "EnvironmentParams":
        """Identical single-mode blocks and a symmetric cross block."""
        return cls(
            lam=lam, m=m, omega=omega,
            d_xx=d_xx, d_xpx=d_xpx, d_pxpx=d_pxpx,
            d_yy=d_xx, d_ypy=d_xpx, d_pypy=d_pxpx,
            d_xy=d_xy, d_xpy=d_xpy, d_ypx=d_xpy, d_pxpy=d_pxpy,
            symmetric_modes=True,
        )

    @classmethod
    def gibbs_form(cls, lam, d_xx, d_xy=0.0, d_xpy=0.0, m=1.0,
                   omega=1.0) -> "EnvironmentParams":
        """Symmetric environment whose stationary state is thermal-like.

        The momentum diffusion coefficients are derived from the position ones
        (``d_pxpx = m^2 w^2 d_xx``, ``d_pxpy = m^2 w^2 d_xy``, ``d_xpx = 0``),
        leaving ``d_xx``, ``d_xy`` and ``d_xpy`` as the free knobs.
        """
        mw2 = (m * omega) ** 2
        params = cls.symmetric(lam, m, omega, d_xx=d_xx, d_pxpx=mw2 * d_xx,
                               d_xy=d_xy, d_xpy=d_xpy, d_pxpy=mw2 * d_xy)
        return dataclasses.replace(params, gibbs=True)

    def with_coefficient(self, name: str, value: float) -> "EnvironmentParams":
        """Return a copy with one coefficient changed, keeping the flags' constraints.

        Under the gibbs flag, derived entries are recomputed. Under the
        symmetric-modes flag, the mirrored entry of the other mode follows.
        """
        if name == "lambda":
            name = "lam"
        if name not in ("lam", "m", "omega") + DIFFUSION_FIELDS:
            raise InvalidParameter(f"unknown coefficient {name!r}")
        if self.gibbs:
            free = {"lam": self.lam, "m": self.m, "omega": self.omega,
                    "d_xx": self.d_xx, "d_xy": self.d_xy, "d_xpy": self.d_xpy}
            if name not in free:
                raise InvalidParameter(
                    f"{name} is derived under the gibbs flag; sweep one of {sorted(free)}"
                )
            free[name] = value
            return type(self).gibbs_form(**free)
        changes = {name: value}
        if self.symmetric_modes:
            mirror = dict(d_xx="d_yy", d_xpx="d_ypy", d_pxpx="d_pypy", d_xpy="d_ypx")
            mirror.update({v: k for k, v in mirror.items()})
            if name in mirror:
                changes[mirror[name]] = value
        return dataclasses.replace(self, **changes)

    def diffusion(self) -> np.ndarray:
        """Symmetric diffusion matrix D in ``(x, p_x, y, p_y)`` ordering."""
        return np.array([
            [self.d_xx, self.d_xpx, self.d_xy, self.d_xpy],
            [self.d_xpx, self.d_pxpx, self.d_ypx, self.d_pxpy],
            [self.d_xy, self.d_ypx, self.d_yy, self.d_ypy],
            [self.d_xpy, self.d_pxpy, self.d_ypy, self.d_pypy],
        ])

    def coefficient_matrix(self) -> np.ndarray:
        """Hermitian matrix whose positivity encodes complete positivity."""
        lam = self.lam
        return np.array([
            [self.d_xx, -self.d_xpx - 0.5j * lam, self.d_xy, -self.d_xpy],
            [-self.d_xpx + 0.5j * lam, self.d_pxpx, -self.d_ypx, self.d_pxpy],
            [self.d_xy, -self.d_ypx, self.d_yy, -self.d_ypy - 0.5j * lam],
            [-self.d_xpy, self.d_pxpy, -self.d_ypy + 0.5j * lam, self.d_pypy],
        ], dtype=complex)

    def as_dict(self) -> Dict[str, float]:
        out = {"lambda": self.lam, "m": self.m, "omega": self.omega}
        out.update({name: getattr(self, name) for name in DIFFUSION_FIELDS})
        out["symmetric_modes"] = self.symmetric_modes
        out["gibbs"] = self.gibbs
        return out


class CovarianceMatrix:
    """Real symmetric 4x4 covariance matrix with block views.

    Only the upper triangle of the input is read, so the stored matrix is
    exactly symmetric. The underlying array is read-only.
    """

    __slots__ = ("_m",)

    def __init__(self, matrix):
        arr = np.array(matrix, dtype=float)
        if arr.shape != (4, 4):
            raise InvalidParameter(f"covariance matrix must be 4x4, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameter("covariance matrix has non-finite entries")
        upper = np.triu(arr)
        arr = upper + np.triu(arr, 1).T
        arr.setflags(write=False)
        self._m = arr

    @classmethod
    def from_entries(cls, entries: Optional[Mapping[str, float]] = None,
                     **kwargs: float) -> "CovarianceMatrix":
        """Build from the ten named entries (``xx``, ``xpx``, ..., ``pypy``).

        Missing entries are zero.
        """
        values = dict(entries or {}, **kwargs)
        known = {name for name, _, _ in COVARIANCE_ENTRIES}
        unknown = set(values) - known
        if unknown:
            raise InvalidParameter(f"unknown covariance entries: {sorted(unknown)}")
        arr = np.zeros((4, 4))
        for name, i, j in COVARIANCE_ENTRIES:
            arr[i, j] = arr[j, i] = values.get(name, 0.0)
        return cls(arr)

    @classmethod
    def symmetrized(cls, matrix) -> "CovarianceMatrix":
        arr = np.asarray(matrix, dtype=float)
        return cls(0.5 * (arr + arr.T))

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def A(self) -> np.ndarray:
        return self._m[:2, :2]

    @property
    def B(self) -> np.ndarray:
        return self._m[2:, 2:]

    @property
    def C(self) -> np.ndarray:
        return self._m[:2, 2:]

    def entries(self) -> Dict[str, float]:
        return {name: float(self._m[i, j]) for name, i, j in COVARIANCE_ENTRIES}

    def swap_modes(self) -> "CovarianceMatrix":
        """Relabel the two oscillators (A <-> B, C <-> C^T)."""
        perm = [2, 3, 0, 1]
        return CovarianceMatrix(self._m[np.ix_(perm, perm)])

    def __eq__(self, other):
        if not isinstance(other, CovarianceMatrix):
            return NotImplemented
        return bool(np.array_equal(self._m, other._m))

    def __hash__(self):
        return hash(self._m.tobytes())

    def __repr__(self):
        inner = ", ".join(f"{k}={v:.6g}" for k, v in self.entries().items())
        return f"CovarianceMatrix({inner})"


def det2(m) -> float:
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


FIG1_INITIAL = CovarianceMatrix.from_entries(xx=1.0, pxpx=0.5, yy=1.0, pypy=0.5)
FIG2_INITIAL = CovarianceMatrix.from_entries(xx=1.0, pxpx=0.5, yy=1.0, pypy=0.5,
                                             xy=0.5, pxpy=-0.5)
VACUUM = CovarianceMatrix(0.5 * np.eye(4))


@dataclass(frozen=True)
class MinorCheck:
    name: str
    lhs: float
    bound: float
    satisfied: bool


@dataclass(frozen=True)
class ValidationReport:
    psd_ok: bool
    minor_checks: Tuple[MinorCheck, ...]
    min_eigenvalue: float
    physicality: Optional[float] = None
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return self.psd_ok and all(c.satisfied for c in self.minor_checks)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "psd_ok": self.psd_ok,
            "min_eigenvalue": self.min_eigenvalue,
            "minor_checks": [
                {"name": c.name, "lhs": c.lhs, "bound": c.bound, "satisfied": c.satisfied}
                for c in self.minor_checks
            ],
            "physicality": self.physicality,
            "warnings": list(self.warnings),
        }


def _minor_checks(p: EnvironmentParams, eps: float) -> List[MinorCheck]:
    quarter_lam2 = p.lam ** 2 / 4
    rows = [
        ("d_xx*d_pxpx - d_xpx^2 >= lambda^2/4", p.d_xx, p.d_pxpx,
         p.d_xx * p.d_pxpx - p.d_xpx ** 2, quarter_lam2),
        ("d_yy*d_pypy - d_ypy^2 >= lambda^2/4", p.d_yy, p.d_pypy,
         p.d_yy * p.d_pypy - p.d_ypy ** 2, quarter_lam2),
        ("d_xx*d_yy - d_xy^2 >= 0", p.d_xx, p.d_yy,
         p.d_xx * p.d_yy - p.d_xy ** 2, 0.0),
        ("d_pxpx*d_pypy - d_pxpy^2 >= 0", p.d_pxpx, p.d_pypy,
         p.d_pxpx * p.d_pypy - p.d_pxpy ** 2, 0.0),
        ("d_xx*d_pypy - d_xpy^2 >= 0", p.d_xx, p.d_pypy,
         p.d_xx * p.d_pypy - p.d_xpy ** 2, 0.0),
        ("d_yy*d_pxpx - d_ypx^2 >= 0", p.d_yy, p.d_pxpx,
         p.d_yy * p.d_pxpx - p.d_ypx ** 2, 0.0),
    ]
    checks = []
    for name, a, b, lhs, bound in rows:
        # slack matches the eigenvalue tolerance, so PSD within eps implies every minor passes
        slack = eps * (abs(a) + abs(b)) + eps * eps
        checks.append(MinorCheck(name, float(lhs), float(bound), bool(lhs - bound >= -slack)))
    return checks


def validate_environment(params: EnvironmentParams, strict: bool = False,
                         sigma: Optional[CovarianceMatrix] = None) -> ValidationReport:
    """Check the environment coefficients against complete positivity.

    Evaluates the six Cauchy-Schwarz minor inequalities and the positive
    semidefiniteness of the full Hermitian coefficient matrix. In strict mode
    the first failure raises :class:`InvalidEnvironment`; otherwise failures
    are collected as warnings. If ``sigma`` is given its smallest symplectic
    eigenvalue is reported too.
    """
    if params.m <= 0 or params.omega <= 0:
        raise InvalidParameter("m and omega must be positive")

    H = params.coefficient_matrix()
    scale = float(np.max(np.abs(H)))
    eps = PSD_RTOL * scale
    eigs = np.linalg.eigvalsh(H)
    min_eig = float(eigs[0])
    psd_ok = bool(min_eig >= -eps)

    checks = _minor_checks(params, eps)
    warnings = []
    for c in checks:
        if not c.satisfied:
            msg = f"inequality violated: {c.name} (lhs={c.lhs:.17g}, bound={c.bound:.17g})"
            if strict:
                raise InvalidEnvironment(msg)
            warnings.append(msg)
    if not psd_ok:
        msg = ("coefficient matrix is not positive semidefinite "
               f"(smallest eigenvalue {min_eig:.17g}); dynamics is not completely positive")
        if strict:
            raise InvalidEnvironment(msg)
        warnings.append(msg)

    nu = None
    if sigma is not None:
        nu, physical = physicality_check(sigma)
        if not physical:
            msg = f"state violates the uncertainty relation (nu_minus={nu:.17g} < 1/2)"
            if strict:
                raise InvalidEnvironment(msg)
            warnings.append(msg)

    return ValidationReport(psd_ok=psd_ok, minor_checks=tuple(checks),
                            min_eigenvalue=min_eig, physicality=nu,
                            warnings=tuple(warnings))


def symplectic_invariants(sigma: CovarianceMatrix) -> Tuple[float, float, float, float, float]:
    """Return ``(det A, det B, det C, tr(AJCJBJC^T J), det sigma)``.

    The trace term is averaged with its mode-swapped counterpart and
    ``det sigma`` is assembled from the block identity
    ``det A det B + (det C)^2 - tr(...)``. Both make every derived quantity
    exactly invariant under relabeling the two modes.
    """
    A, B, C = sigma.A, sigma.B, sigma.C
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    JCJ = J @ C @ J
    JCtJ = J @ C.T @ J
    t1 = float(np.trace(A @ JCJ @ B @ JCtJ))
    t2 = float(np.trace(B @ JCtJ @ A @ JCJ))
    trace_term = 0.5 * (t1 + t2)
    dA, dB, dC = float(det2(A)), float(det2(B)), float(det2(C))
    det_sigma = dA * dB + dC * dC - trace_term
    return dA, dB, dC, trace_term, det_sigma


def physicality_check(sigma: CovarianceMatrix, tol: float = PHYSICALITY_TOL) -> Tuple[float, bool]:
    """Smallest symplectic eigenvalue and whether it satisfies nu >= 1/2.

    Never rejects the state. Raises :class:`DegenerateCovariance` only when
    the symplectic discriminant is negative beyond rounding.
    """
    dA, dB, dC, _, det_sigma = symplectic_invariants(sigma)
    delta = dA + dB + 2.0 * dC
    disc = delta * delta - 4.0 * det_sigma
    if disc < -tol * max(1.0, delta * delta):
        raise DegenerateCovariance(
            f"symplectic discriminant {disc:.3e} < 0; matrix is not a valid covariance"
        )
    nu2 = 0.5 * (delta - math.sqrt(max(disc, 0.0)))
    nu_minus = math.sqrt(nu2) if nu2 > 0 else 0.0
    return nu_minus, nu_minus >= 0.5 - tol
