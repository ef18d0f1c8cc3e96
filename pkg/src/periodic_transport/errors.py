"""Exception types raised by the solvers and verifiers."""
from __future__ import annotations


class TransportError(Exception):
    pass


class DivergenceError(TransportError):
    """Solution exceeded the overflow guard before the requested end time.

    ``partial`` holds whatever was produced up to ``t_last`` (a trajectory
    or a list of snapshots, depending on the solver).
    """

    def __init__(self, t_last: float, partial=None, message: str | None = None):
        self.t_last = t_last
        self.partial = partial
        super().__init__(message or f"solution diverged after t = {t_last!r}")


class StepSizeError(TransportError):
    """Adaptive step size underflowed."""

    def __init__(self, t: float, h: float):
        self.t = t
        self.h = h
        super().__init__(f"step size underflow at t = {t!r} (h = {h!r})")


class ConvergenceError(TransportError):
    """Successive refinements of a quadrature or sweep disagree."""

    def __init__(self, message: str, value=None, change: float | None = None):
        self.value = value
        self.change = change
        super().__init__(message)


class HypothesisError(TransportError, ValueError):
    """Initial data violate ``A_n >= 2 delta / n^5``."""


class InsufficientModesError(TransportError, ValueError):
    pass


class WrongCaseError(TransportError, ValueError):
    pass
