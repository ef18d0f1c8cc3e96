"""Checks of the mode lower bounds, blow-up criteria and auxiliary inequalities.

The blow-up argument for odd data with ``A_n >= 2 delta / n^5`` runs through
the mode lower bound

    n w_n(t) >= delta / n^4 * (1/2 + delta t)^(n-1) * exp(-n kappa t),

which turns the Parseval sum into a series that diverges once
``g(t) = (1/2 + delta t) exp(-kappa t)`` exceeds 1.  This module evaluates
those quantities and compares them with computed trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, HypothesisError, InsufficientModesError, WrongCaseError
from .modes import IntegratorConfig, _Hierarchy, _integrate_hierarchy
from .pseudospectral import SpectralField, discrete_h1, field_sobolev_norm
from .quadrature import composite_gauss_legendre
from .spectrum import (
    InitialData,
    ModelParams,
    ModeState,
    ModeTrajectory,
    hypothesis_threshold,
    sobolev_norm,
)

__all__ = [
    "BoundReport",
    "StripFit",
    "SingularityFit",
    "EnergyProbe",
    "H1Verdict",
    "bound_tolerance",
    "lower_bound",
    "verify_bounds",
    "g_func",
    "critical_kappa",
    "g_crossings",
    "minorant_partial_sum",
    "minorant_term_ratio",
    "h_func",
    "fit_analyticity_strip",
    "estimate_blowup_time",
    "theorem_blowup_bound",
    "energy_ratio_probe",
    "amgm_rearrangement_check",
    "integrate_asymmetric",
    "h1_monotonicity_check",
]

TOL_FIT = 0.15
AMPLITUDE_FLOOR = 1e-14
MIN_FIT_MODES = 8


def bound_tolerance(integrator_tol: float) -> float:
    """Slack allowed below a lower bound: ``1e-8 + 10 * integrator_tol``."""
    return 1e-8 + 10.0 * integrator_tol


def lower_bound(n, t, delta: float, kappa: float):
    """``delta / n^4 * (1/2 + delta t)^(n-1) * exp(-n kappa t)``; broadcasts."""
    n = np.asarray(n, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        out = delta / n**4 * np.exp((n - 1.0) * np.log(0.5 + delta * t) - n * kappa * t)
    return out if out.ndim else float(out)


def _regime(params: ModelParams) -> str:
    if params.kappa == 0:
        return "inviscid"
    if params.alpha == 1:
        return "critical dissipation"
    if params.alpha < 1:
        return "supercritical dissipation"
    return "outside the proven range (alpha > 1)"


@dataclass(frozen=True)
class BoundReport:
    """Per-sample margins ``n w_n - lower_bound`` over a trajectory."""

    t: np.ndarray
    n: np.ndarray
    value: np.ndarray
    bound: np.ndarray
    margin: np.ndarray
    tol_bound: float
    regime: str

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))

    @property
    def first_violation(self) -> tuple[float, int] | None:
        bad = np.flatnonzero(self.margin < -self.tol_bound)
        if bad.size == 0:
            return None
        i = bad[0]
        return float(self.t[i]), int(self.n[i])

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tol_bound

    def rows(self):
        return zip(self.t, self.n, self.value, self.bound, self.margin)


def check_hypothesis(init: InitialData, delta: float) -> None:
    a = init.as_array()
    need = hypothesis_threshold(np.arange(1, a.size + 1), delta)
    # allow a few ulps so that data built as 2*delta/n**5 by another route still qualify
    bad = np.flatnonzero(a < need * (1.0 - 4 * np.finfo(float).eps))
    if bad.size:
        n = int(bad[0]) + 1
        raise HypothesisError(
            f"A_{n} = {a[n - 1]!r} is below 2 delta / n^5 = {need[n - 1]!r} (delta = {delta!r})"
        )


def verify_bounds(traj: ModeTrajectory, integrator_tol: float = 1e-10) -> BoundReport:
    """Compare every sampled ``n w_n(t)`` with the proven lower bound.

    Raises :class:`HypothesisError` before any comparison if the initial
    data violate ``A_n >= 2 delta / n^5``.
    """
    p = traj.params
    check_hypothesis(traj.init, p.delta)
    ts = traj.times
    w = traj.modes()
    n = np.arange(1, w.shape[1] + 1)
    tt, nn = np.meshgrid(ts, n, indexing="ij")
    value = nn * w
    bound = lower_bound(nn, tt, p.delta, p.kappa)
    return BoundReport(
        tt.ravel(),
        nn.ravel(),
        value.ravel(),
        bound.ravel(),
        (value - bound).ravel(),
        bound_tolerance(integrator_tol),
        _regime(p),
    )


def g_func(t, delta: float, kappa: float):
    """``(1/2 + delta t) exp(-kappa t)``."""
    return (0.5 + delta * np.asarray(t, dtype=float)) * np.exp(-kappa * np.asarray(t, dtype=float))


def critical_kappa(delta: float) -> float:
    """``2 delta / (2e - 1)``: below it ``g(1/kappa) > 1``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    return 2.0 * delta / (2.0 * math.e - 1.0)


def g_crossings(delta: float, kappa: float) -> list[float]:
    """Times in ``(0, inf)`` where ``g(t) = 1``, in increasing order.

    ``g`` starts at 1/2, peaks at ``t* = 1/kappa - 1/(2 delta)`` and decays,
    so there are zero or two crossings when ``kappa > 0`` (one, touching,
    in the degenerate case) and exactly one when ``kappa = 0``.
    """
    from scipy.optimize import brentq

    def f(t):
        return float(g_func(t, delta, kappa)) - 1.0

    if kappa == 0:
        return [1.0 / (2.0 * delta)]
    t_peak = 1.0 / kappa - 1.0 / (2.0 * delta)
    if t_peak <= 0 or f(t_peak) < 0:
        return []
    if f(t_peak) == 0:
        return [t_peak]
    up = brentq(f, 0.0, t_peak, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    hi = t_peak + 1.0
    while f(hi) > 0:
        hi = t_peak + 2.0 * (hi - t_peak)
    down = brentq(f, t_peak, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return [up, down]


def _log_minorant_terms(t: float, delta: float, kappa: float, n_terms: int) -> np.ndarray:
    g = float(g_func(t, delta, kappa))
    n = np.arange(1, n_terms + 1, dtype=float)
    return 2.0 * (n - 1.0) * math.log(g) - 10.0 * np.log(n)


def minorant_partial_sum(t: float, delta: float, kappa: float, N: int) -> float:
    """``4 pi delta^2 e^{-2 kappa t} sum_{n<=N} g(t)^{2(n-1)} / n^10``.

    Returns ``inf`` when the partial sum overflows.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    logs = _log_minorant_terms(t, delta, kappa, N)
    pref = 4.0 * math.pi * delta**2 * math.exp(-2.0 * kappa * t)
    peak = float(np.max(logs))
    if peak + math.log(pref) + math.log(N) > 709.0:
        return math.inf
    return pref * math.fsum(np.exp(logs).tolist())


def minorant_term_ratio(t: float, delta: float, kappa: float, n) -> np.ndarray | float:
    """Ratio of term ``n+1`` to term ``n``: ``g^2 (n / (n+1))^10``."""
    g = float(g_func(t, delta, kappa))
    n = np.asarray(n, dtype=float)
    out = g * g * (n / (n + 1.0)) ** 10
    return out if out.ndim else float(out)


def h_func(
    n: int,
    t: float,
    kappa: float,
    alpha: float,
    delta: float,
    quad_points: int = 16,
) -> float:
    """``e^{c t} int_0^t e^{-c s} q(s) ds - int_0^t q(s) ds``.

    Here ``c = (n - n^alpha) kappa`` and ``q(s) = (1/2 + delta s)^(n-2)``.
    The two integrals are evaluated separately by composite Gauss-Legendre
    with `quad_points` panels and then subtracted; a rerun on twice the
    panels must agree to 1e-12 (relative to ``max(1, |h|)``) or
    :class:`ConvergenceError` is raised.
    """
    if n < 2:
        raise ValueError("h is only used for n >= 2")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    c = (n - n**alpha) * kappa

    def q(s):
        return (0.5 + delta * s) ** (n - 2)

    def weighted(s):
        # e^{ct} e^{-cs} folded into one exponent to stay finite
        return np.exp(c * (t - s)) * q(s)

    def evaluate(panels):
        return composite_gauss_legendre(weighted, 0.0, t, panels) - composite_gauss_legendre(
            q, 0.0, t, panels
        )

    h = evaluate(quad_points)
    h2 = evaluate(2 * quad_points)
    if abs(h2 - h) > 1e-12 * max(1.0, abs(h2)):
        raise ConvergenceError(f"h quadrature not converged ({abs(h2 - h):.2e})", h2, abs(h2 - h))
    return h2


@dataclass(frozen=True)
class StripFit:
    """``w_n ~ C n^-gamma exp(-rho n)`` fitted on one snapshot."""

    t: float
    C: float
    gamma: float
    rho: float
    residual: float
    n_used: int


def fit_analyticity_strip(
    state: ModeState,
    n_min: int,
    amp_floor: float = AMPLITUDE_FLOOR,
) -> StripFit:
    """Least-squares fit of ``log w_n = log C - gamma log n - rho n``.

    Only modes ``n >= n_min`` with ``w_n > amp_floor`` enter; at least 8
    are required.  A negative ``rho`` means the coefficients grow
    geometrically, i.e. the snapshot is no longer analytic in a strip.
    """
    w = np.asarray(state.w, dtype=float)
    n = np.arange(1, w.size + 1, dtype=float)
    keep = (n >= n_min) & (w > amp_floor)
    if keep.sum() < MIN_FIT_MODES:
        raise InsufficientModesError(
            f"only {int(keep.sum())} modes with n >= {n_min} above {amp_floor:g} at t = {state.t!r}"
        )
    nk = n[keep]
    y = np.log(w[keep])
    design = np.column_stack([np.ones_like(nk), -np.log(nk), -nk])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return StripFit(
        float(state.t),
        float(math.exp(coef[0])),
        float(coef[1]),
        float(coef[2]),
        float(np.sqrt(np.mean(resid**2))),
        int(keep.sum()),
    )


@dataclass(frozen=True)
class SingularityFit:
    fits: tuple[StripFit, ...]
    T_fit: float | None
    bound: float
    tol_fit: float
    verdict: str

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.fits])

    @property
    def rho(self) -> np.ndarray:
        return np.array([f.rho for f in self.fits])

    @property
    def passed(self) -> bool:
        """True when blow-up is extrapolated no later than the proven time."""
        return self.T_fit is not None and self.T_fit <= self.bound * (1.0 + self.tol_fit)


def theorem_blowup_bound(params: ModelParams) -> float:
    """Time by which the minorant series has diverged: ``1/(2 delta)`` or ``1/kappa``."""
    if params.kappa == 0:
        return 1.0 / (2.0 * params.delta)
    return 1.0 / params.kappa


def estimate_blowup_time(
    traj: ModeTrajectory,
    tol_fit: float = TOL_FIT,
    n_min: int | None = None,
) -> SingularityFit:
    """Track the strip width over the trajectory and extrapolate it to zero.

    Each snapshot is fitted on modes ``n in [N/4, N]``.  A straight line
    through the last quarter of the fitted widths gives ``T_fit`` where it
    reaches zero, floored at 0 when the widths are already negative.  A
    non-decreasing width over that window yields the verdict
    ``"no blow-up trend"`` and ``T_fit = None``.
    """
    n_modes = traj.samples[0].n_modes
    if n_modes < 32:
        raise InsufficientModesError("blow-up fits need at least 32 modes")
    n_min = n_modes // 4 if n_min is None else n_min
    fits = []
    for s in traj.samples:
        try:
            fits.append(fit_analyticity_strip(s, n_min))
        except InsufficientModesError:
            continue
    bound = theorem_blowup_bound(traj.params)
    if len(fits) < 2:
        return SingularityFit(tuple(fits), None, bound, tol_fit, "too few fitted snapshots")
    k = max(2, int(math.ceil(len(fits) / 4)))
    window = fits[-k:]
    tw = np.array([f.t for f in window])
    rw = np.array([f.rho for f in window])
    slope, intercept = np.polyfit(tw, rw, 1)
    if slope >= 0:
        return SingularityFit(tuple(fits), None, bound, tol_fit, "no blow-up trend")
    t_zero = max(0.0, -intercept / slope)
    verdict = "analyticity lost" if rw[-1] <= 0 else "blow-up trend"
    return SingularityFit(tuple(fits), float(t_zero), bound, tol_fit, verdict)


class EnergyProbe(NamedTuple):
    t: np.ndarray
    r: np.ndarray

    @property
    def c_empirical(self) -> float:
        return float(np.max(self.r))


def _h3_series(snapshots) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(snapshots, ModeTrajectory):
        ts = snapshots.times
        norms = np.array([sobolev_norm(s, 3.0) for s in snapshots.samples])
    else:
        ts = np.array([f.t for f in snapshots])
        norms = np.array([field_sobolev_norm(f, 3.0) for f in snapshots])
    return ts, norms


def energy_ratio_probe(snapshots) -> EnergyProbe:
    """``(d/dt ||u||_{H^3}^2) / ||u||_{H^3}^3`` at interior snapshots.

    Accepts a :class:`ModeTrajectory` or a sequence of collocation
    snapshots.  The derivative is the three-point centred difference, which
    also handles uneven spacing.
    """
    ts, norms = _h3_series(snapshots)
    if ts.size < 3:
        raise ValueError("at least 3 snapshots are needed")
    e = norms**2
    h0 = ts[1:-1] - ts[:-2]
    h1 = ts[2:] - ts[1:-1]
    de = (
        -h1 / (h0 * (h0 + h1)) * e[:-2]
        + (h1 - h0) / (h0 * h1) * e[1:-1]
        + h0 / (h1 * (h0 + h1)) * e[2:]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(norms[1:-1] > 0, de / norms[1:-1] ** 3, 0.0)
    return EnergyProbe(ts[1:-1], r)


def amgm_rearrangement_check(w: Sequence[float], n: int) -> tuple[float, float, bool]:
    """Compare ``sum l w_l w_{n-l}`` with ``sum sqrt(l (n-l)) w_l w_{n-l}``."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("entries must be nonnegative")
    if n < 2 or w.size < n - 1:
        raise ValueError(f"need w_1..w_{n - 1}")
    l = np.arange(1, n)
    prod = w[l - 1] * w[n - l - 1]
    lhs = float(np.sum(l * prod))
    rhs = float(np.sum(np.sqrt(l * (n - l)) * prod))
    return lhs, rhs, lhs >= rhs - 1e-12


def integrate_asymmetric(
    init: InitialData,
    params: ModelParams,
    cfg: IntegratorConfig,
    symmetrized: bool = False,
) -> ModeTrajectory:
    """Integrate ``dw_n/dt = sum_l c_{l,n} w_l w_{n-l} - kappa n^alpha w_n``.

    ``c = l`` for the asymmetric system and ``c = sqrt(l (n - l))`` for its
    symmetrized minorant.
    """
    if np.any(init.as_array() < 0):
        raise ValueError("initial data must be nonnegative")
    k = np.arange(1, params.n_modes + 1, dtype=float)
    if symmetrized:
        left, right = np.sqrt(k), np.sqrt(k)
    else:
        left, right = k, np.ones_like(k)
    return _integrate_hierarchy(_Hierarchy(params, left, right), init, params, cfg)


class H1Verdict(NamedTuple):
    t: np.ndarray
    norms: np.ndarray
    max_increase: float
    passed: bool
    strictly_decreasing: bool


def h1_monotonicity_check(
    snapshots: Sequence[SpectralField],
    params: ModelParams,
    tol: float = 1e-9,
    homogeneous: bool = False,
) -> H1Verdict:
    """Check ``||u(t_{k+1})||_{H^1} <= ||u(t_k)||_{H^1} + tol`` for ``(a, b) = (0, 1)``.

    The full norm (weights ``1 + n^2``) is used unless `homogeneous`, in
    which case only ``||u_x||_{L^2}`` is compared; the latter is exactly
    conserved by the inviscid flow.
    """
    if params.case != (0, 1):
        raise WrongCaseError(f"the H^1 bound concerns (a, b) = (0, 1), got {params.case}")
    ts = np.array([f.t for f in snapshots])
    norms = np.array([discrete_h1(f, homogeneous=homogeneous) for f in snapshots])
    inc = np.diff(norms)
    max_inc = float(np.max(inc, initial=-np.inf))
    return H1Verdict(ts, norms, max_inc, bool(np.all(inc <= tol)), bool(np.all(inc < 0)))
