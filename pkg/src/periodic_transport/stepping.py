"""Step-doubling time marcher shared by the mode and collocation solvers.

A step of size ``h`` is compared with two steps of size ``h/2``.  For a
fourth-order one-step method the difference divided by 15 estimates the
local error of the half-step result; that estimate is used both to accept
or reject the step and, through local extrapolation, to improve it.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, StepSizeError

StepFn = Callable[[np.ndarray, float, float], np.ndarray]

SAFETY = 0.9
MAX_GROWTH = 4.0
MIN_SHRINK = 0.2
MAX_STEPS = 5_000_000


REL_FLOOR = 1e-14


def error_scale(y: np.ndarray, rel_floor: float = REL_FLOOR) -> np.ndarray:
    """Componentwise relative weights, floored at ``rel_floor * max |y|``.

    Modes of growing solutions start many orders of magnitude below their
    final size, so absolute error control would let early errors get
    amplified along with the mode itself.
    """
    mag = np.abs(y)
    floor = rel_floor * float(np.max(mag, initial=0.0))
    return np.maximum(mag, max(floor, np.finfo(float).tiny))


def scaled_error(y_fine: np.ndarray, y_coarse: np.ndarray, rel_floor: float = REL_FLOOR) -> float:
    """Relative max-norm of the Richardson local error estimate."""
    diff = np.abs(y_fine - y_coarse) / error_scale(y_fine, rel_floor)
    return float(np.max(diff, initial=0.0)) / 15.0


def _targets(t_end: float, t_eval: Sequence[float] | None) -> list[float]:
    if t_eval is None:
        return [t_end]
    ts = sorted({float(t) for t in t_eval if 0.0 < t <= t_end})
    if not ts or ts[-1] < t_end:
        ts.append(t_end)
    return ts


def march(
    step: StepFn,
    y0: np.ndarray,
    t_end: float,
    *,
    dt: float,
    tol: float,
    adaptive: bool = True,
    t_eval: Sequence[float] | None = None,
    guard: float = np.inf,
    admissible: Callable[[np.ndarray, float], bool] | None = None,
    rel_floor: float = REL_FLOOR,
) -> tuple[list[float], list[np.ndarray]]:
    """Advance ``y0`` from ``t = 0`` to `t_end`.

    Parameters
    ----------
    step : callable
        One-step method ``step(y, t, h) -> y_new``.
    dt : float
        Initial step; also the largest step ever taken.
    tol : float
        Target for the scaled local error per step (ignored when not adaptive).
    t_eval : sequence of float, optional
        Output times.  Steps are shortened to land on them exactly and only
        these states are recorded.  By default every accepted step is kept.
    guard : float
        Divergence threshold on ``max |y|``.
    admissible : callable, optional
        ``admissible(y, h)`` returning False forces the step to be halved
        before it is attempted (CFL-type restriction).
    rel_floor : float
        Components below ``rel_floor * max |y|`` are controlled in absolute
        terms at that level; it must sit above the rounding noise of `step`.

    Returns
    -------
    times, states : list
        Recorded times (starting with 0) and the matching states.

    Raises
    ------
    DivergenceError
        When an accepted state exceeds `guard`; ``partial`` carries the
        ``(times, states)`` recorded so far.
    StepSizeError
        When the step size underflows.
    """
    y = np.array(y0, copy=True)
    t = 0.0
    times, states = [0.0], [y.copy()]
    if t_end <= 0.0:
        return times, states
    record_all = t_eval is None
    targets = _targets(t_end, t_eval)
    k = 0
    h = float(dt)
    for _ in range(MAX_STEPS):
        target = targets[k]
        h_try = min(h, dt, target - t)
        if admissible is not None:
            while not admissible(y, h_try):
                h_try *= 0.5
                h = h_try
                if h_try < 1e-14 * max(1.0, t):
                    raise StepSizeError(t, h_try)
        if h_try < 1e-14 * max(1.0, t):
            raise StepSizeError(t, h_try)
        y_coarse = step(y, t, h_try)
        if adaptive:
            y_mid = step(y, t, 0.5 * h_try)
            y_fine = step(y_mid, t + 0.5 * h_try, 0.5 * h_try)
            with np.errstate(over="ignore", invalid="ignore"):
                err = scaled_error(y_fine, y_coarse, rel_floor)
            if not np.isfinite(err):
                h = 0.25 * h_try
                continue
            if err > tol:
                h = h_try * max(MIN_SHRINK, SAFETY * (tol / err) ** 0.2)
                continue
            y_new = y_fine + (y_fine - y_coarse) / 15.0
            grow = MAX_GROWTH if err == 0.0 else min(MAX_GROWTH, SAFETY * (tol / err) ** 0.2)
            # a shortened landing step says nothing about the step the controller wanted
            h = max(h, h_try * grow) if h_try < h else h_try * grow
        else:
            y_new = y_coarse
        landed = target - (t + h_try) <= 1e-12 * max(1.0, target)
        peak = float(np.max(np.abs(y_new), initial=0.0))
        if not np.isfinite(peak) or peak > guard:
            raise DivergenceError(t, partial=(times, states))
        t = target if landed else t + h_try
        y = y_new
        if record_all or landed:
            times.append(t)
            states.append(y.copy())
        if landed:
            k += 1
            if k == len(targets):
                return times, states
    raise StepSizeError(t, h)
