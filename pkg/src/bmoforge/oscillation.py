"""Exact oscillation moduli over stopping-time windows.

The window modulus of an adapted process V over levels [s, t] is

    sup over stopping pairs s <= S <= T <= t of
        ess-sup E_S | V_T - anchor(S) |

where the anchor is the left limit ``V_{S-}`` (grid convention) and, because
the embedded step process also admits stopping times strictly inside a grid
interval, the own value ``V_S`` (intra-interval convention). Both are taken
by default; dropping the intra convention underestimates the modulus of the
embedded process.

The supremum over pairs factors through stop atoms: every node u at a level
j in [s, t] is a stop atom of some S, and conditionally on stopping at u the
supremum over continuations T is a finite optimal-stopping problem solved
exactly by backward induction. The result therefore equals the brute-force
supremum over the full enumeration, at polynomial cost. The enumeration cap
is still enforced so that the engine only reports values inside the regime
where the claim can be re-checked by literal enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .processes import AdaptedProcess
from .space import FiniteFilteredSpace
from .stopping import DEFAULT_ENUMERATION_CAP, StoppingTime, _check_cap

__all__ = [
    "oscillation_modulus",
    "jump_modulus",
    "deterministic_modulus",
    "deterministic_pair_modulus",
    "oscillation_grid",
    "pair_oscillation",
    "OscillationData",
]


def _snell_levels(space: FiniteFilteredSpace, payoffs: list[np.ndarray], j: int, t: int) -> np.ndarray:
    """Value of sup over subtree stopping rules in [j, t] of E[payoff at stop].

    ``payoffs[k - j]`` is indexed by level-k atoms; the returned array is
    indexed by level-j atoms. Exact backward induction.
    """
    g = payoffs[t - j]
    for k in range(t - 1, j - 1, -1):
        g = np.maximum(payoffs[k - j], space.step_expectation(g, k))
    return g


def _anchored_payoffs(process: AdaptedProcess, anchors: np.ndarray, j: int, t: int) -> list[np.ndarray]:
    space = process.space
    out = []
    for k in range(j, t + 1):
        rep = np.repeat(anchors, space.branching ** (k - j))
        out.append(np.abs(process.values[k] - rep))
    return out


def oscillation_modulus(
    process: AdaptedProcess,
    s: int,
    t: int,
    include_intra: bool = True,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Exact window modulus of ``process`` over levels [s, t]."""
    space = process.space
    if not 0 <= s <= t <= space.depth:
        raise ValueError(f"window [{s}, {t}] outside [0, {space.depth}]")
    _check_cap(space, s, t, cap)
    best = 0.0
    for j in range(s, t + 1):
        anchor_sets = [process.left_limit(j)]
        if include_intra:
            anchor_sets.append(process.values[j])
        for anchors in anchor_sets:
            payoffs = _anchored_payoffs(process, anchors, j, t)
            best = max(best, float(np.max(_snell_levels(space, payoffs, j, t))))
    return best


def jump_modulus(process: AdaptedProcess) -> float:
    """Largest single-step oscillation: max over levels of ess-sup |V_k - V_{k-1}|.

    This is the closed form of the limit of window moduli over shrinking
    windows straddling one grid time; constant processes give 0.
    """
    if process.depth == 0:
        return 0.0
    return max(float(np.max(np.abs(inc))) for inc in process.increments())


def deterministic_pair_modulus(
    process: AdaptedProcess, j: int, k: int, left_limit: bool = True
) -> float:
    """ess-sup of E_j |V_k - anchor| for the deterministic pair j <= k."""
    space = process.space
    if not 0 <= j <= k <= space.depth:
        raise ValueError(f"pair ({j}, {k}) outside [0, {space.depth}]")
    anchors = process.left_limit(j) if left_limit else process.values[j]
    vals = np.abs(process.values[k] - np.repeat(anchors, space.branching ** (k - j)))
    for lev in range(k - 1, j - 1, -1):
        vals = space.step_expectation(vals, lev)
    return float(np.max(vals))


def deterministic_modulus(
    process: AdaptedProcess, s: int, t: int, left_limit: bool = True
) -> float:
    """Max of the deterministic-pair moduli over s <= j <= k <= t."""
    best = 0.0
    for j in range(s, t + 1):
        for k in range(j, t + 1):
            best = max(best, deterministic_pair_modulus(process, j, k, left_limit))
    return best


def pair_oscillation(
    process: AdaptedProcess,
    stop_s: StoppingTime,
    stop_t: StoppingTime,
    convention: str = "grid",
) -> float:
    """ess-sup over atoms of F_S of E_S |V_T - anchor| for one stopping pair.

    ``convention`` is ``"grid"`` (anchor V_{S-}) or ``"intra"`` (anchor V_S).
    Used as the literal-enumeration oracle for :func:`oscillation_modulus`.
    """
    if not stop_t.dominates(stop_s):
        raise ValueError("requires T >= S pathwise")
    space = process.space
    _, t = stop_s.window
    b = space.branching
    n_atoms = space.level_size(t)
    # Value of V at T's stop node, per level-t atom.
    v_stop = np.empty(n_atoms)
    for m in range(n_atoms):
        lev = int(stop_t.atom_levels[m])
        v_stop[m] = process.values[lev][m // b ** (t - lev)]
    probs_t = space.atom_probs[t]
    best = 0.0
    for lev, idx in stop_s.stop_nodes():
        if convention == "grid":
            anchor = process.left_limit(lev)[idx]
        elif convention == "intra":
            anchor = process.values[lev][idx]
        else:
            raise ValueError(f"unknown convention {convention!r}")
        block = b ** (t - lev)
        sel = slice(idx * block, (idx + 1) * block)
        w = probs_t[sel]
        best = max(best, float(np.sum(w * np.abs(v_stop[sel] - anchor)) / np.sum(w)))
    return best


@dataclass
class OscillationData:
    """Window moduli for every grid pair, plus jump summaries.

    ``rho[s, t]`` is the exact modulus over [s, t] for s <= t (NaN below the
    diagonal). Diagonal entries are the single-time jump terms E_S|V_S - V_{S-}|
    with S = s, zero at s = 0 by the ``V_{0-} = V_0`` convention.
    """

    rho: np.ndarray
    kappa: float
    max_jump: float

    @property
    def depth(self) -> int:
        return self.rho.shape[0] - 1

    def window(self, s: int, t: int) -> float:
        return float(self.rho[s, t])

    def cell_moduli(self, partition) -> list[float]:
        """Moduli of consecutive cells of a grid partition."""
        pts = list(partition)
        return [float(self.rho[a, b]) for a, b in zip(pts[:-1], pts[1:])]


def oscillation_grid(
    process: AdaptedProcess,
    include_intra: bool = True,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> OscillationData:
    """Exact window modulus for every grid pair 0 <= s <= t <= depth."""
    d = process.depth
    rho = np.full((d + 1, d + 1), np.nan)
    for s in range(d + 1):
        for t in range(s, d + 1):
            rho[s, t] = oscillation_modulus(process, s, t, include_intra=include_intra, cap=cap)
    kappa = jump_modulus(process)
    # Independent route for the same quantity: pathwise jumps off the full
    # trajectory matrix, rather than per-level increment arrays.
    paths = process.path_matrix()
    max_jump = float(np.max(np.abs(np.diff(paths, axis=1)))) if d > 0 else 0.0
    return OscillationData(rho=rho, kappa=kappa, max_jump=max_jump)
