"""Lower-triangular mode hierarchy for odd data in the ``(a, b) = (1, 1)`` case.

With ``w_n = i u_n`` the equation reduces exactly to

    dw_n/dt = sum_{l=1}^{n-1} l w_l (n-l) w_{n-l} - kappa n^alpha w_n,
    w_n(0) = A_n / 2,

where mode ``n`` only sees modes ``1..n-1``.  Truncating at ``N`` modes is
therefore exact for the modes that are kept.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DivergenceError, WrongCaseError
from .quadrature import gauss_legendre_panels, panel_cumulative_matrix
from .spectrum import (
    InitialData,
    ModelParams,
    ModeState,
    ModeTrajectory,
    frac_laplacian_symbol,
    w_initial,
)
from .stepping import march

__all__ = [
    "IntegratorConfig",
    "DEFAULT_GUARD",
    "convolution_term",
    "rhs",
    "integrate",
    "picard_solve",
    "closed_form_w1",
    "rk4_step",
    "ifrk4_step",
]

# Products of two modes must stay representable: w^2 n^2 < 1e308.
DEFAULT_GUARD = 1e100

METHODS = ("rk4", "ifrk4")


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-stepping controls.

    ``method`` is ``"rk4"`` (classical Runge-Kutta) or ``"ifrk4"``
    (integrating factor on the dissipation).  With ``adaptive=False`` the
    step is fixed at ``dt``; otherwise ``dt`` is the first and largest step
    and step doubling keeps the scaled local error below ``tol``.
    """

    dt: float = 1e-2
    method: str = "rk4"
    tol: float = 1e-10
    t_end: float = 0.1
    adaptive: bool = True
    t_eval: tuple[float, ...] | None = None
    guard: float = DEFAULT_GUARD

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.t_eval is not None:
            object.__setattr__(self, "t_eval", tuple(float(t) for t in self.t_eval))


def convolution_term(w: Sequence[float], n: int) -> float:
    """``sum_{l=1}^{n-1} l w_l (n-l) w_{n-l}`` with 1-based mode indices."""
    w = np.asarray(w, dtype=float)
    if not 1 <= n <= w.size:
        raise IndexError(f"mode {n} outside 1..{w.size}")
    l = np.arange(1, n)
    return float(np.sum(l * w[l - 1] * (n - l) * w[n - l - 1]))


def _triangular_sum(w: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    # entry n-1 holds sum_{l=1}^{n-1} left_l w_l right_{n-l} w_{n-l}; zero for n = 1
    full = np.convolve(left * w, right * w)
    out = np.empty_like(w)
    out[0] = 0.0
    out[1:] = full[: w.size - 1]
    return out


class _Hierarchy:
    """Right-hand side ``S(w) - d * w`` of a triangular mode system."""

    def __init__(self, params: ModelParams, left: np.ndarray, right: np.ndarray):
        n = np.arange(1, params.n_modes + 1, dtype=float)
        self.left = left
        self.right = right
        self.damping = params.kappa * frac_laplacian_symbol(n, params.alpha)

    def nonlinear(self, w: np.ndarray) -> np.ndarray:
        return _triangular_sum(w, self.left, self.right)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return self.nonlinear(w) - self.damping * w


def _symmetric_weights(n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(1, n_modes + 1, dtype=float)
    return n, n


def rhs(state: ModeState, params: ModelParams) -> np.ndarray:
    """Time derivative of every stored mode for the ``(1, 1)`` equation."""
    if params.case != (1, 1):
        raise WrongCaseError(
            f"the mode hierarchy covers (a, b) = (1, 1) only, got {params.case}"
        )
    w = np.asarray(state.w, dtype=float)
    p = params if params.n_modes == w.size else _with_modes(params, w.size)
    return _Hierarchy(p, *_symmetric_weights(w.size))(w)


def _with_modes(params: ModelParams, n_modes: int) -> ModelParams:
    return ModelParams(params.a, params.b, params.kappa, params.alpha, params.delta, n_modes)


def rk4_step(f, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def ifrk4_step(nonlinear, damping: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    """Lawson integrating-factor RK4 for ``y' = N(y) - damping * y``."""
    e = np.exp(-damping * h)
    e2 = np.exp(-damping * 0.5 * h)
    k1 = nonlinear(y)
    k2 = nonlinear(e2 * (y + 0.5 * h * k1))
    k3 = nonlinear(e2 * y + 0.5 * h * k2)
    k4 = nonlinear(e * y + h * e2 * k3)
    return e * y + h / 6.0 * (e * k1 + 2.0 * e2 * (k2 + k3) + k4)


def _integrate_hierarchy(
    system: _Hierarchy,
    init: InitialData,
    params: ModelParams,
    cfg: IntegratorConfig,
) -> ModeTrajectory:
    init = init.truncated(params.n_modes)
    y0 = w_initial(init).w
    if cfg.method == "ifrk4":
        def step(y, t, h):
            return ifrk4_step(system.nonlinear, system.damping, y, h)
    else:
        def step(y, t, h):
            return rk4_step(system, y, h)

    def to_traj(times, states):
        return ModeTrajectory(params, init, tuple(ModeState(t, w) for t, w in zip(times, states)))

    try:
        times, states = march(
            step,
            y0,
            cfg.t_end,
            dt=cfg.dt,
            tol=cfg.tol,
            adaptive=cfg.adaptive,
            t_eval=cfg.t_eval,
            guard=cfg.guard,
        )
    except DivergenceError as exc:
        raise DivergenceError(exc.t_last, partial=to_traj(*exc.partial)) from None
    return to_traj(times, states)


def integrate(init: InitialData, params: ModelParams, cfg: IntegratorConfig) -> ModeTrajectory:
    """Integrate the truncated hierarchy from ``w_n(0) = A_n / 2``.

    `init` is truncated or zero padded to ``params.n_modes``.  Raises
    :class:`DivergenceError` (with the partial trajectory attached) once any
    mode exceeds ``cfg.guard``.
    """
    if params.case != (1, 1):
        raise WrongCaseError(
            f"the mode hierarchy covers (a, b) = (1, 1) only, got {params.case}"
        )
    system = _Hierarchy(params, *_symmetric_weights(params.n_modes))
    return _integrate_hierarchy(system, init, params, cfg)


def closed_form_w1(init: InitialData, params: ModelParams, t: float) -> float:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return 0.5 * init.coeffs[0] * math.exp(-params.kappa * t)


def _duhamel_sweep(
    a_half: np.ndarray,
    damping: np.ndarray,
    weights: np.ndarray,
    t: float,
    panels: int,
    order: int,
) -> np.ndarray:
    """One increasing-n pass of the Duhamel formula on a panel grid.

    Returns the modes at every node of the grid (shape ``(n_nodes, N)``),
    with node 0 at ``s = 0`` and the last node at ``s = t``.
    """
    n_modes = a_half.size
    edges, nodes = gauss_legendre_panels(t, panels, order)
    cum = panel_cumulative_matrix(order)  # maps node values to integrals from the panel start
    h = t / panels
    # node layout per panel: [start, gauss nodes..., end]; shared edges stored once
    s_all = np.concatenate([[0.0], np.concatenate([np.append(nd, e) for nd, e in zip(nodes, edges[1:])])])
    w_all = np.zeros((s_all.size, n_modes))
    n_idx = np.arange(1, n_modes + 1)
    stride = order + 1
    for n in n_idx:
        lam = damping[n - 1]
        if n == 1:
            w_all[:, 0] = a_half[0] * np.exp(-lam * s_all)
            continue
        l = np.arange(1, n)
        # integrand S_n(s) at every node from the already solved lower modes
        src = np.sum(
            weights[l - 1] * w_all[:, l - 1] * weights[n - l - 1] * w_all[:, n - l - 1], axis=1
        )
        col = np.empty(s_all.size)
        col[0] = a_half[n - 1]
        carry = a_half[n - 1]
        for k in range(panels):
            base = 1 + k * stride
            s0 = edges[k]
            sg = s_all[base : base + order]
            fg = src[base : base + order] * np.exp(-lam * (s0 + h - sg))
            # integrals of e^{-lam(s0+h-sigma)} S(sigma) from s0 to each gauss node and to s0+h
            partial = cum @ fg * h
            decay_nodes = np.exp(-lam * (sg - s0))
            col[base : base + order] = carry * decay_nodes + partial[:order] * np.exp(lam * (s0 + h - sg))
            carry = carry * math.exp(-lam * h) + partial[order]
            col[base + order] = carry
        w_all[:, n - 1] = col
    return w_all


def picard_solve(
    init: InitialData,
    params: ModelParams,
    t: float,
    iters: int = 2,
    quad_points: int = 16,
    order: int = 10,
) -> ModeState:
    """Evaluate the modes at time `t` from the Duhamel integral form.

    The hierarchy is triangular, so one sweep in increasing ``n`` with the
    already-computed lower modes inside the integrand solves it.  Each extra
    sweep doubles the panel count; if the last two disagree by more than
    1e-8 in scaled max norm a :class:`ConvergenceError` carrying the final
    state is raised.

    Parameters
    ----------
    quad_points : int
        Number of Gauss-Legendre panels on ``[0, t]`` for the first sweep.
    order : int
        Gauss-Legendre nodes per panel.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if params.case != (1, 1):
        raise WrongCaseError(f"(a, b) = (1, 1) required, got {params.case}")
    init = init.truncated(params.n_modes)
    a_half = w_initial(init).w
    if t == 0:
        return ModeState(0.0, a_half)
    n = np.arange(1, params.n_modes + 1, dtype=float)
    damping = params.kappa * frac_laplacian_symbol(n, params.alpha)
    prev = None
    panels = quad_points
    for _ in range(max(1, iters)):
        w = _duhamel_sweep(a_half, damping, n, t, panels, order)[-1]
        if prev is not None:
            change = float(np.max(np.abs(w - prev) / np.maximum(1.0, np.abs(w))))
            if change > 1e-8:
                raise ConvergenceError(
                    f"Duhamel sweeps differ by {change:.3e}", ModeState(t, w), change
                )
        prev = w
        panels *= 2
    return ModeState(t, prev)
