"""Superadditive variation controls built from window-modulus grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oscillation import OscillationData

__all__ = ["OscillationControl", "variation_control", "vmo_alpha_seminorm"]


def _rho_matrix(rho) -> np.ndarray:
    if isinstance(rho, OscillationData):
        rho = rho.rho
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("rho grid must be a square matrix")
    return rho


@dataclass
class OscillationControl:
    """p-variation control ``w`` of a modulus grid.

    ``w[s, t]`` is the supremum of ``sum_k rho[u_k, u_{k+1}]^p`` over grid
    partitions of [s, t]; it is superadditive in adjacent windows by
    construction and dominates ``rho^p`` cell by cell.
    """

    w: np.ndarray
    p: float

    @property
    def depth(self) -> int:
        return self.w.shape[0] - 1

    @property
    def total(self) -> float:
        return float(self.w[0, self.depth])

    def window(self, s: int, t: int) -> float:
        return float(self.w[s, t])


def variation_control(rho, p: float) -> OscillationControl:
    """Interval dynamic program for the p-variation control of a modulus grid.

    w[s, t] = max( rho[s, t]^p, max over s < u < t of w[s, u] + w[u, t] ).
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    rho = _rho_matrix(rho)
    d = rho.shape[0] - 1
    w = np.zeros_like(rho)
    for width in range(1, d + 1):
        for s in range(0, d - width + 1):
            t = s + width
            best = rho[s, t] ** p
            for u in range(s + 1, t):
                best = max(best, w[s, u] + w[u, t])
            w[s, t] = best
    return OscillationControl(w=w, p=float(p))


def vmo_alpha_seminorm(rho, alpha: float, dt: float = 1.0) -> float:
    """Largest ratio rho[s, t] / ((t - s) * dt)^alpha over grid pairs s < t."""
    if alpha <= 0.0:
        raise ValueError("alpha must be > 0")
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    rho = _rho_matrix(rho)
    d = rho.shape[0] - 1
    best = 0.0
    for s in range(d):
        for t in range(s + 1, d + 1):
            best = max(best, float(rho[s, t]) / ((t - s) * dt) ** alpha)
    return best
