"""Fourier collocation solver for ``u_t = (H^a d_x^b u) u_x - kappa Lambda^alpha u``.

Fields are real, so only the coefficients of modes ``n = 0..M/2`` are
stored; the negative modes follow from ``hat[-n] = conj(hat[n])``.  The
coefficients are those of ``u(x) = sum_n hat[n] e^{i n x}`` on
``[-pi, pi]``; the shift of the grid origin to ``-pi`` contributes the
factor ``(-1)^n`` relative to the raw FFT of the samples.

The quadratic product is formed on the grid and dealiased with the 2/3
rule.  Runs are additionally truncated to the band ``|n| <= n_modes``, the
same Galerkin truncation as the mode hierarchy: for the ``(1, 1)`` flow the
modes above the band grow so fast that their rounding noise would swamp
the low modes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .modes import DEFAULT_GUARD, IntegratorConfig, ifrk4_step
from .spectrum import GridField, InitialData, ModelParams, ModeState, collocation_grid, frac_laplacian_symbol
from .stepping import REL_FLOOR, march

__all__ = [
    "SpectralField",
    "field_from_sine_series",
    "nonlinear_flux",
    "step_pde",
    "integrate_pde",
    "extract_modes",
    "discrete_h1",
    "field_sobolev_norm",
]


def _signs(m: int) -> np.ndarray:
    return np.where(np.arange(m // 2 + 1) % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True)
class SpectralField:
    """Snapshot of a real field through its nonnegative Fourier modes.

    ``hat[n]`` for ``n = 0..M/2``; `grid_points` is ``M``.
    """

    t: float
    hat: np.ndarray
    grid_points: int

    def __post_init__(self) -> None:
        hat = np.array(self.hat, dtype=complex)
        if hat.size != self.grid_points // 2 + 1:
            raise ValueError("hat must hold modes 0..M/2")
        hat.setflags(write=False)
        object.__setattr__(self, "hat", hat)

    @classmethod
    def from_values(cls, t: float, values) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        m = values.size
        return cls(t, np.fft.rfft(values) / m * _signs(m), m)

    def full_spectrum(self) -> np.ndarray:
        """All ``M`` coefficients in FFT order (``n = 0..M/2, -M/2+1..-1``)."""
        m = self.grid_points
        neg = np.conj(self.hat[1 : m // 2][::-1])
        return np.concatenate([self.hat, neg])

    def values(self) -> np.ndarray:
        m = self.grid_points
        return np.fft.irfft(self.hat * _signs(m) * m, n=m)

    def to_grid(self) -> GridField:
        return GridField(self.t, self.values())

    def wavenumbers(self) -> np.ndarray:
        return np.arange(self.grid_points // 2 + 1, dtype=float)


def field_from_sine_series(init: InitialData, grid_points: int) -> SpectralField:
    """Exact spectral image of ``sum A_n sin(n x)`` (``hat[n] = A_n / (2i)``)."""
    hat = np.zeros(grid_points // 2 + 1, dtype=complex)
    a = init.as_array()[: grid_points // 2]
    hat[1 : a.size + 1] = a / 2j
    return SpectralField(0.0, hat, grid_points)


def _multiplier(k: np.ndarray, a: int, b: int) -> np.ndarray:
    return (-1j * np.sign(k)) ** a * (1j * k) ** b


def _flux_hat(hat: np.ndarray, m: int, a: int, b: int, band: int) -> np.ndarray:
    k = np.arange(m // 2 + 1, dtype=float)
    sg = _signs(m)
    v = np.fft.irfft(_multiplier(k, a, b) * hat * sg * m, n=m)
    ux = np.fft.irfft(1j * k * hat * sg * m, n=m)
    out = np.fft.rfft(v * ux) / m * sg
    out[k > min(band, m / 3.0)] = 0.0
    return out


def nonlinear_flux(field: SpectralField, a: int, b: int) -> SpectralField:
    """Spectrum of ``(H^a d_x^b u) u_x`` with modes ``|n| > M/3`` removed."""
    if a not in (0, 1) or b not in (0, 1):
        raise ValueError(f"(a, b) must be in {{0, 1}}^2, got ({a}, {b})")
    m = field.grid_points
    return SpectralField(field.t, _flux_hat(field.hat, m, a, b, m // 2), m)


def noise_floor(tol: float) -> float:
    """Relative error floor that keeps FFT rounding noise out of step control."""
    return max(REL_FLOOR, 1e-15 / tol)


def _band(params: ModelParams) -> int:
    return min(params.n_modes, params.grid_points // 3)


def _damping(params: ModelParams) -> np.ndarray:
    k = np.arange(params.grid_points // 2 + 1)
    return params.kappa * frac_laplacian_symbol(k, params.alpha)


def _stepper(params: ModelParams, band: int):
    m, a, b = params.grid_points, params.a, params.b
    damping = _damping(params)

    def nonlinear(hat):
        return _flux_hat(hat, m, a, b, band)

    def step(hat, t, h):
        return ifrk4_step(nonlinear, damping, hat, h)

    return step


def step_pde(field: SpectralField, params: ModelParams, dt: float) -> SpectralField:
    """One integrating-factor RK4 step; dealiasing inside every stage."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if field.grid_points != params.grid_points:
        raise ValueError("field and params disagree on grid_points")
    step = _stepper(params, _band(params))
    hat = step(field.hat, field.t, dt)
    peak = float(np.max(np.abs(hat)))
    if not np.isfinite(peak) or peak > DEFAULT_GUARD:
        raise DivergenceError(field.t)
    return SpectralField(field.t + dt, hat, field.grid_points)


def integrate_pde(
    init: InitialData,
    params: ModelParams,
    cfg: IntegratorConfig,
    band: int | None = None,
    cfl: float | None = 1.0,
) -> list[SpectralField]:
    """Evolve the sine series `init` and return the recorded snapshots.

    Snapshots are taken at ``cfg.t_eval`` (or at every accepted step).  The
    retained band defaults to ``params.n_modes`` and never exceeds ``M/3``.
    A step is halved before it is tried whenever ``dt * max |n u_n| > cfl``;
    ``cfl=None`` leaves the step to the error controller alone.
    ``cfg.method`` is ignored: the dissipation is always treated by an
    integrating factor.
    """
    m = params.grid_points
    band = _band(params) if band is None else min(band, m // 3)
    f0 = field_from_sine_series(init, m)
    hat0 = f0.hat.copy()
    hat0[np.arange(hat0.size) > band] = 0.0
    k = np.arange(hat0.size, dtype=float)

    def admissible(hat, h):
        return h * float(np.max(k * np.abs(hat))) <= cfl

    def to_fields(times, states):
        return [SpectralField(t, s, m) for t, s in zip(times, states)]

    try:
        times, states = march(
            _stepper(params, band),
            hat0,
            cfg.t_end,
            dt=cfg.dt,
            tol=cfg.tol,
            adaptive=cfg.adaptive,
            t_eval=cfg.t_eval,
            guard=cfg.guard,
            admissible=None if cfl is None else admissible,
            rel_floor=noise_floor(cfg.tol),
        )
    except DivergenceError as exc:
        raise DivergenceError(exc.t_last, partial=to_fields(*exc.partial)) from None
    return to_fields(times, states)


def extract_modes(field: SpectralField, n_modes: int) -> tuple[ModeState, float]:
    """Read ``w_n = i u_n`` off the spectrum.

    Returns the mode state and ``max |Re hat[n]|`` over ``n = 1..n_modes``,
    which vanishes for odd fields.
    """
    h = np.zeros(n_modes, dtype=complex)
    avail = field.hat[1 : n_modes + 1]
    h[: avail.size] = avail
    w = (1j * h).real
    residual = float(np.max(np.abs(h.real), initial=0.0))
    return ModeState(field.t, w), residual


def _pair_multiplicity(field: SpectralField) -> np.ndarray:
    # every mode except n = 0 and the Nyquist mode has a conjugate partner
    mult = np.full(field.hat.size, 2.0)
    mult[0] = 1.0
    mult[-1] = 1.0
    return mult


def field_sobolev_norm(field: SpectralField, s: float) -> float:
    """H^s norm ``sqrt(2 pi sum_n (1 + n^2)^s |hat_n|^2)`` over all modes."""
    k = field.wavenumbers()
    a = np.abs(field.hat) * (1.0 + k**2) ** (s / 2.0)
    peak = float(np.max(a, initial=0.0))
    if peak == 0.0 or not np.isfinite(peak):
        return peak
    return float(peak * np.sqrt(2.0 * np.pi * np.sum(_pair_multiplicity(field) * (a / peak) ** 2)))


def discrete_h1(field: SpectralField, homogeneous: bool = True) -> float:
    """H^1 norm of the field over ``[-pi, pi]`` from its spectrum.

    ``homogeneous=True`` gives ``||u_x||_{L^2}``; otherwise the full norm
    with weights ``1 + n^2`` (mean mode included).
    """
    if not homogeneous:
        return field_sobolev_norm(field, 1.0)
    k = field.wavenumbers()
    power = k**2 * np.abs(field.hat) ** 2
    return float(np.sqrt(2.0 * np.pi * np.sum(_pair_multiplicity(field) * power)))


def grid_of(field: SpectralField) -> np.ndarray:
    return collocation_grid(field.grid_points)
