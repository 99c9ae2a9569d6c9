"""Closed-form oscillation bounds.

Pure scalar formulas, kept separate from the engines that estimate or verify
them. Everything is evaluated in log space first so that out-of-range
parameters saturate to ``inf`` instead of raising overflow errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BoundParameters",
    "PartitionTooCoarseError",
    "jn_moment_bound",
    "khasminskii_product",
    "vmo_exp_bound",
    "vmo_moment_bound",
    "holder_exp_bound",
]

_LOG_MAX = math.log(1.7976931348623157e308)
_LN2 = math.log(2.0)


class PartitionTooCoarseError(ValueError):
    """A cell modulus is too large for the requested exponential rate."""


def _exp_or_inf(log_value: float) -> float:
    return math.inf if log_value > _LOG_MAX else math.exp(log_value)


@dataclass(frozen=True)
class BoundParameters:
    """Validated parameter bundle for the bound formulas."""

    p: float = 2.0
    m: int = 2
    lam: float = 1.0
    alpha: float = 0.5
    c_p: float = 1.0

    def __post_init__(self):
        if self.p < 1.0:
            raise ValueError("p must be >= 1")
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.lam <= 0.0:
            raise ValueError("lam must be > 0")
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError("alpha must lie in (0, 1/2]")
        if self.c_p <= 0.0:
            raise ValueError("c_p must be > 0")


def jn_moment_bound(rho: float, p: int) -> float:
    """Moment bound p! * (11 rho)^p for a window with modulus ``rho``."""
    if rho < 0.0:
        raise ValueError("rho must be >= 0")
    if p < 1 or int(p) != p:
        raise ValueError("p must be a positive integer")
    p = int(p)
    if rho == 0.0:
        return 0.0
    return _exp_or_inf(math.lgamma(p + 1) + p * math.log(11.0 * rho))


def khasminskii_product(lam: float, cell_moduli) -> float:
    """Product bound prod_k (1 - lam * rho_k)^(-1) over partition cells.

    Raises :class:`PartitionTooCoarseError` when any ``lam * rho_k >= 1``:
    the exponential moment over that cell cannot be controlled at this rate
    and the partition must be refined.
    """
    if lam < 0.0:
        raise ValueError("lam must be >= 0")
    log_total = 0.0
    for k, rho in enumerate(cell_moduli):
        if rho < 0.0:
            raise ValueError(f"cell {k} has negative modulus")
        x = lam * rho
        if x >= 1.0:
            raise PartitionTooCoarseError(
                f"partition too coarse: lam * rho = {x:.6g} >= 1 at cell {k}"
            )
        log_total -= math.log1p(-x)
    return _exp_or_inf(log_total)


def vmo_exp_bound(lam: float, p: float, w_total: float) -> float:
    """Exponential moment bound 2^(1 + (22 lam)^p * w_total)."""
    if lam < 0.0 or w_total < 0.0:
        raise ValueError("lam and w_total must be >= 0")
    if p < 1.0:
        raise ValueError("p must be >= 1")
    return _exp_or_inf(_LN2 * (1.0 + (22.0 * lam) ** p * w_total))


def vmo_moment_bound(m: int, p: float, w_total: float, c_p: float = 1.0) -> float:
    """Moment bound c_p * Gamma(m (1 - 1/p) + 1) * w_total^(m/p).

    Only meaningful for p > 1; at p = 1 the Gamma factor degenerates and the
    sharp statement is the pathwise increment bound, so direct users are sent
    to that check instead.
    """
    if p <= 1.0:
        raise ValueError(
            "p must be > 1; for p = 1 use the pathwise increment check "
            "(|V_t - V_s| <= 22 w) instead of a moment bound"
        )
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    if w_total < 0.0 or c_p <= 0.0:
        raise ValueError("w_total must be >= 0 and c_p > 0")
    if w_total == 0.0:
        return 0.0
    log_val = math.log(c_p) + math.lgamma(m * (1.0 - 1.0 / p) + 1.0) + (m / p) * math.log(w_total)
    return _exp_or_inf(log_val)


def holder_exp_bound(lam: float, alpha: float, seminorm: float, tau: float) -> float:
    """Exponential bound 2^(1 + (22 seminorm lam)^(1/alpha) * tau).

    Specialization of :func:`vmo_exp_bound` to a process whose window modulus
    is controlled by ``seminorm * (t - s)^alpha``: then p = 1/alpha and the
    total control over [0, tau] is ``seminorm^(1/alpha) * tau``.
    """
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    if lam < 0.0 or seminorm < 0.0 or tau < 0.0:
        raise ValueError("lam, seminorm, tau must be >= 0")
    return _exp_or_inf(_LN2 * (1.0 + (22.0 * seminorm * lam) ** (1.0 / alpha) * tau))
