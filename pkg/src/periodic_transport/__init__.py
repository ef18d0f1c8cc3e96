"""Spectral solvers and blow-up diagnostics for the periodic transport family

    u_t - (H^a d_x^b u) u_x + kappa Lambda^alpha u = 0   on [-pi, pi],

with ``H`` the periodic Hilbert transform and ``Lambda^alpha`` the
fractional Laplacian.
"""
from .errors import (
    ConvergenceError,
    DivergenceError,
    HypothesisError,
    InsufficientModesError,
    StepSizeError,
    TransportError,
    WrongCaseError,
)
from .modes import IntegratorConfig, closed_form_w1, integrate, picard_solve, rhs
from .pseudospectral import SpectralField, extract_modes, integrate_pde
from .spectrum import (
    GridField,
    InitialData,
    ModelParams,
    ModeState,
    ModeTrajectory,
    build_initial_data,
    explicit_initial_data,
    parseval_l2,
    reconstruct,
    sobolev_norm,
)

__version__ = "0.1.0"
