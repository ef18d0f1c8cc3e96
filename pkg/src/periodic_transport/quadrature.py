"""Composite Gauss-Legendre rules."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre


@lru_cache(maxsize=None)
def _reference(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0


def gauss_legendre_panels(t: float, panels: int, order: int):
    """Split ``[0, t]`` into equal panels with `order` Gauss nodes each.

    Returns the panel edges and a list with the nodes of every panel.
    """
    x, _ = _reference(order)
    edges = np.linspace(0.0, t, panels + 1)
    h = t / panels
    return edges, [e + h * x for e in edges[:-1]]


def composite_gauss_legendre(f, a: float, b: float, panels: int, order: int = 10) -> float:
    """Integrate the vectorised callable `f` over ``[a, b]``."""
    if b == a:
        return 0.0
    x, w = _reference(order)
    h = (b - a) / panels
    starts = a + h * np.arange(panels)
    s = (starts[:, None] + h * x[None, :]).ravel()
    return float(h * np.sum(np.tile(w, panels) * f(s)))


@lru_cache(maxsize=None)
def panel_cumulative_matrix(order: int) -> np.ndarray:
    """Spectral integration matrix on the reference panel ``[0, 1]``.

    Row ``i < order`` maps values at the Gauss nodes to the integral of
    their interpolant from 0 to node ``i``; the last row integrates over
    the whole panel.
    """
    x = 2.0 * _reference(order)[0] - 1.0
    coef = np.linalg.inv(legendre.legvander(x, order - 1))
    out = np.empty((order + 1, order))
    targets = np.append(x, 1.0)
    for j in range(order):
        antideriv = legendre.legint(coef[:, j], lbnd=-1.0)
        out[:, j] = 0.5 * legendre.legval(targets, antideriv)
    out.setflags(write=False)
    return out
