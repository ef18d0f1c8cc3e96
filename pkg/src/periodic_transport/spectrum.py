"""Shared types, Fourier symbols, initial data and norms.

The periodic domain is ``[-pi, pi]``.  Odd solutions are stored through the
real mode variables ``w_n = i u_n`` (``n >= 1``), so that

    u(t, x) = sum_n 2 w_n(t) sin(n x).

The zero mode is identically zero for odd data and is never stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ModelParams",
    "InitialData",
    "ModeState",
    "ModeTrajectory",
    "GridField",
    "hilbert_symbol",
    "frac_laplacian_symbol",
    "hypothesis_threshold",
    "build_initial_data",
    "explicit_initial_data",
    "w_initial",
    "reconstruct",
    "parseval_l2",
    "sobolev_norm",
    "collocation_grid",
]


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must lie in (0, 2], got {alpha!r}")


def _default_grid(n_modes: int) -> int:
    # smallest power of two that dealiases n_modes retained modes with the 2/3 rule
    m = 4
    while m < 3 * n_modes + 1:
        m *= 2
    return m


@dataclass(frozen=True)
class ModelParams:
    """One instance of ``u_t - (H^a d_x^b u) u_x + kappa Lambda^alpha u = 0``.

    ``grid_points`` is only used by the collocation solver; when omitted it
    defaults to the smallest power of two that dealiases ``n_modes`` modes.
    """

    a: int = 1
    b: int = 1
    kappa: float = 0.0
    alpha: float = 1.0
    delta: float = 1.0
    n_modes: int = 32
    grid_points: int | None = None

    def __post_init__(self) -> None:
        if self.a not in (0, 1) or self.b not in (0, 1):
            raise ValueError(f"(a, b) must be in {{0, 1}}^2, got ({self.a}, {self.b})")
        if not self.kappa >= 0.0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa!r}")
        _check_alpha(self.alpha)
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError(f"n_modes must be a positive integer, got {self.n_modes!r}")
        if self.grid_points is None:
            object.__setattr__(self, "grid_points", _default_grid(self.n_modes))
        m = self.grid_points
        if int(m) != m or m < 4 or m % 2:
            raise ValueError(f"grid_points must be an even integer >= 4, got {m!r}")
        if 3 * m < 4 * self.n_modes:
            raise ValueError(
                f"grid_points={m} leaves no dealiasing headroom for n_modes={self.n_modes}"
            )

    @property
    def case(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class InitialData:
    """Sine coefficients ``A_1..A_N`` of an odd initial datum.

    ``hypothesis_n`` is the largest ``n`` up to which ``A_k >= 2 delta / k^5``
    holds for every ``k <= n`` (``None`` when it was not evaluated).
    """

    coeffs: tuple[float, ...]
    family_tag: str = "explicit"
    hypothesis_n: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def n_modes(self) -> int:
        return len(self.coeffs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def truncated(self, n_modes: int) -> "InitialData":
        """Return the first `n_modes` coefficients, zero padded if needed."""
        c = list(self.coeffs[:n_modes]) + [0.0] * max(0, n_modes - len(self.coeffs))
        return InitialData(tuple(c), self.family_tag, self.hypothesis_n)


@dataclass(frozen=True)
class ModeState:
    t: float
    w: np.ndarray

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"time must be nonnegative, got {self.t!r}")
        w = np.array(self.w, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n_modes(self) -> int:
        return self.w.size


@dataclass(frozen=True)
class ModeTrajectory:
    params: ModelParams
    init: InitialData
    samples: tuple[ModeState, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        if samples:
            ts = np.array([s.t for s in samples])
            if np.any(np.diff(ts) <= 0):
                raise ValueError("sample times must be strictly increasing")
            if len({s.n_modes for s in samples}) != 1:
                raise ValueError("all samples must carry the same mode count")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def modes(self) -> np.ndarray:
        """Array of shape ``(n_samples, n_modes)``."""
        return np.array([s.w for s in self.samples])

    @property
    def final(self) -> ModeState:
        return self.samples[-1]


@dataclass(frozen=True)
class GridField:
    t: float
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return collocation_grid(self.values.size)

    def oddness_residual(self) -> float:
        v = self.values
        return float(np.max(np.abs(v + np.roll(v[::-1], 1))))


def collocation_grid(m: int) -> np.ndarray:
    """Points ``x_j = -pi + 2 pi j / m``, ``j = 0..m-1``."""
    return -np.pi + 2.0 * np.pi * np.arange(m) / m


def hilbert_symbol(n: int) -> complex:
    """Fourier multiplier ``-i sgn(n)`` of the periodic Hilbert transform."""
    return -1j * float(np.sign(n))


def frac_laplacian_symbol(n, alpha: float):
    """Fourier multiplier ``|n|^alpha`` of ``Lambda^alpha``; accepts arrays."""
    _check_alpha(alpha)
    return np.abs(n) ** float(alpha)


def hypothesis_threshold(n, delta: float):
    """Lower bound ``2 delta / n^5`` required of ``A_n`` by the blow-up theorems."""
    return 2.0 * delta / np.asarray(n, dtype=float) ** 5


def build_initial_data(delta: float, p: float, n_modes: int) -> InitialData:
    """Power family ``A_n = (2 delta + 1) / n^p``.

    ``p >= 5`` keeps the sine series in H^3.  For ``p > 5`` the coefficients
    eventually drop below ``2 delta / n^5``; the last index where the
    hypothesis still holds is recorded in ``hypothesis_n``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    if not p >= 5:
        raise ValueError(f"p must be >= 5 for H^3 initial data, got {p!r}")
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    n = np.arange(1, n_modes + 1, dtype=float)
    coeffs = (2.0 * delta + 1.0) / n**p
    ok = coeffs >= hypothesis_threshold(n, delta)
    hyp_n = n_modes if ok.all() else int(np.argmin(ok))
    return InitialData(tuple(coeffs), f"power:p={p!r}", hyp_n)


def explicit_initial_data(coeffs: Sequence[float], delta: float | None = None) -> InitialData:
    coeffs = tuple(float(c) for c in coeffs)
    hyp_n = None
    if delta is not None:
        ok = np.asarray(coeffs) >= hypothesis_threshold(np.arange(1, len(coeffs) + 1), delta)
        hyp_n = len(coeffs) if ok.all() else int(np.argmin(ok))
    return InitialData(coeffs, "explicit", hyp_n)


def w_initial(init: InitialData) -> ModeState:
    return ModeState(0.0, init.as_array() / 2.0)


def reconstruct(state: ModeState, xs) -> np.ndarray:
    """Evaluate ``u(t, x) = sum 2 w_n sin(n x)`` at the points `xs`."""
    xs = np.asarray(xs, dtype=float)
    n = np.arange(1, state.n_modes + 1, dtype=float)
    return 2.0 * np.sin(np.multiply.outer(xs, n)) @ state.w


def parseval_l2(state: ModeState) -> float:
    """L^2 norm over ``[-pi, pi]``, ``sqrt(4 pi sum w_n^2)``."""
    return sobolev_norm(state, 0.0)


def sobolev_norm(state: ModeState, s: float) -> float:
    """H^s norm with weights ``(1 + n^2)^s`` and the L^2 prefactor ``4 pi``."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    n = np.arange(1, state.n_modes + 1, dtype=float)
    # factor the largest weight out so that huge near-blow-up states do not overflow
    a = np.abs(state.w) * (1.0 + n**2) ** (s / 2.0)
    peak = a.max(initial=0.0)
    if peak == 0.0 or not math.isfinite(peak):
        return float(peak)
    return float(peak * math.sqrt(4.0 * math.pi * np.sum((a / peak) ** 2)))
