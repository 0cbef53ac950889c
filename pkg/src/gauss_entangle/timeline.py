"""Entanglement along trajectories: sampling, event location, parameter sweeps."""

from __future__ import annotations

import enum
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import asymptotic_covariance, evolve, evolve_many
from .entanglement import TOL_S, EntanglementReport, classify, log_negativity, simon_function
from .errors import EventRefinementFailure, InvalidEnvironment, InvalidParameter
from .model import CovarianceMatrix, EnvironmentParams, validate_environment

log = logging.getLogger(__name__)

SWEEPABLE = ("d_xpy", "d_xx", "d_xy", "lambda")
EVENT_T_TOL = 1e-10
EVENT_S_TOL = 1e-10
EVENT_MERGE_TOL = 1e-8
MAX_BISECTIONS = 200


class EventKind(str, enum.Enum):
    BIRTH = "Birth"  # S crosses from + to -
    DEATH = "Death"  # S crosses from - to +


@dataclass(frozen=True)
class Event:
    t: float
    kind: EventKind


@dataclass
class Timeline:
    times: np.ndarray
    reports: List[EntanglementReport]
    events: List[Event] = field(default_factory=list)

    @property
    def samples(self) -> List[Tuple[float, EntanglementReport]]:
        return list(zip(self.times.tolist(), self.reports))


@dataclass
class SweepGrid:
    times: np.ndarray
    coefficient: str
    values: np.ndarray
    surface: np.ndarray  # S, shape (len(times), len(values))
    surface_L: np.ndarray


def _simon_along(sigma0, params) -> Callable[[float], float]:
    if params.lam > 0:
        sigma_inf = asymptotic_covariance(params)

        def s_of_t(t):
            return simon_function(CovarianceMatrix(evolve_many(sigma0, params, [t], sigma_inf)[0]))
    else:
        def s_of_t(t):
            return simon_function(evolve(sigma0, params, t))
    return s_of_t


def bisect_crossing(s_of_t: Callable[[float], float], t_lo: float, t_hi: float,
                    s_lo: Optional[float] = None, *, t_tol: float = EVENT_T_TOL,
                    s_tol: float = EVENT_S_TOL, max_iter: int = MAX_BISECTIONS) -> float:
    """Locate a zero of ``s_of_t`` inside a sign-changing bracket by bisection.

    Stops when the bracket is narrower than ``t_tol`` or S hits exactly zero.
    ``s_tol`` bounds |S| at the returned point; exceeding it, or running out
    of iterations, raises :class:`EventRefinementFailure`.
    """
    if s_lo is None:
        s_lo = s_of_t(t_lo)
    lo, hi = t_lo, t_hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        s_mid = s_of_t(mid)
        if s_mid == 0.0 or hi - lo <= t_tol:
            if not abs(s_mid) <= s_tol:
                raise EventRefinementFailure(
                    f"bisection stalled at |S|={abs(s_mid):.3e} in [{lo!r}, {hi!r}]",
                    bracket=(lo, hi),
                )
            return mid
        if (s_mid > 0) == (s_lo > 0):
            lo, s_lo = mid, s_mid
        else:
            hi = mid
    raise EventRefinementFailure(
        f"no convergence after {max_iter} bisections in [{lo!r}, {hi!r}]", bracket=(lo, hi)
    )


def locate_events(times: Sequence[float], S: Sequence[float], params: EnvironmentParams,
                  sigma0: CovarianceMatrix, tol_s: float = 0.0) -> List[Event]:
    """Refine every sign change of the sampled Simon function.

    Samples with ``|S| <= tol_s`` are treated as sign-less and bridged over.
    Pairs of opposite events closer than ``EVENT_MERGE_TOL`` cancel out.
    """
    s_of_t = _simon_along(sigma0, params)
    events: List[Event] = []
    last_t, last_s = None, None
    for t, s in zip(times, S):
        if abs(s) <= tol_s or math.isnan(s):
            continue
        if last_s is not None and (s > 0) != (last_s > 0):
            t_star = bisect_crossing(s_of_t, last_t, t, last_s)
            kind = EventKind.BIRTH if last_s > 0 else EventKind.DEATH
            if events and events[-1].kind != kind and t_star - events[-1].t < EVENT_MERGE_TOL:
                events.pop()
            else:
                events.append(Event(float(t_star), kind))
        last_t, last_s = t, s
    return events


def _cross_check(times, reports):
    """Warn when the L zero-crossings do not line up with the S events."""
    mismatched = [t for t, r in zip(times, reports) if not r.consistent]
    if mismatched:
        warnings.warn(
            f"S and L disagree on the verdict at {len(mismatched)} sample(s), "
            f"first at t={mismatched[0]:.6g}",
            RuntimeWarning, stacklevel=3,
        )


def sample_trajectory(sigma0: CovarianceMatrix, params: EnvironmentParams, t_max: float,
                      n_steps: int, tol_s: float = TOL_S) -> Timeline:
    """Classify the state on the uniform grid ``t_k = k t_max / n_steps``, k = 0..n_steps."""
    if not t_max > 0:
        raise InvalidParameter(f"t_max must be > 0, got {t_max}")
    if n_steps < 2:
        raise InvalidParameter(f"n_steps must be >= 2, got {n_steps}")
    times = np.arange(n_steps + 1) * (t_max / n_steps)
    times[-1] = t_max
    if params.lam > 0:
        states = evolve_many(sigma0, params, times)
        reports = [classify(CovarianceMatrix(s), tol_s=tol_s) for s in states]
    else:
        reports = [classify(evolve(sigma0, params, t), tol_s=tol_s) for t in times]
    events = locate_events(times, [r.S for r in reports], params, sigma0, tol_s=tol_s)
    _cross_check(times, reports)
    return Timeline(times=times, reports=reports, events=events)


def _column(args) -> Tuple[np.ndarray, np.ndarray]:
    sigma0, params, times = args
    states = evolve_many(sigma0, params, times)
    S = np.empty(len(times))
    L = np.empty(len(times))
    for i, s in enumerate(states):
        cov = CovarianceMatrix(s)
        S[i] = simon_function(cov)
        L[i] = log_negativity(cov)[0]
    return S, L


def sweep(sigma0: CovarianceMatrix, template: EnvironmentParams, coefficient: str,
          values: Sequence[float], t_max: float, n_steps: int, strict: bool = False,
          workers: int = 1, order: Optional[Sequence[int]] = None) -> SweepGrid:
    """S and L surfaces over time and one environment coefficient.

    Column ``j`` uses ``template`` with ``coefficient`` set to ``values[j]``.
    Columns are independent; ``workers > 1`` evaluates them in a process
    pool and ``order`` permutes the evaluation sequence. Neither changes the
    result.
    """
    if coefficient not in SWEEPABLE:
        raise InvalidParameter(f"cannot sweep {coefficient!r}; choose one of {SWEEPABLE}")
    if not t_max > 0 or n_steps < 1:
        raise InvalidParameter("sweep needs t_max > 0 and n_steps >= 1")
    values = np.asarray(values, dtype=float)
    times = np.arange(n_steps + 1) * (t_max / n_steps)
    times[-1] = t_max

    envs = []
    for v in values.tolist():
        try:
            env = template.with_coefficient(coefficient, v)
            report = validate_environment(env, strict=strict)
        except (InvalidEnvironment, InvalidParameter) as exc:
            raise type(exc)(f"{coefficient}={v!r}: {exc}") from exc
        for w in report.warnings:
            log.warning("%s=%r: %s", coefficient, v, w)
        envs.append(env)

    idx = list(range(len(values))) if order is None else list(order)
    if sorted(idx) != list(range(len(values))):
        raise InvalidParameter("order must be a permutation of the value indices")
    jobs = [(sigma0, envs[j], times) for j in idx]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(_column, jobs))
    else:
        cols = [_column(job) for job in jobs]

    surface = np.empty((len(times), len(values)))
    surface_L = np.empty_like(surface)
    for j, (S, L) in zip(idx, cols):
        surface[:, j] = S
        surface_L[:, j] = L
    return SweepGrid(times=times, coefficient=coefficient, values=values,
                     surface=surface, surface_L=surface_L)
