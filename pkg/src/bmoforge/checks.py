"""Inequality checkers on finite filtered spaces.

Every checker compares an exactly computed left-hand side against a
closed-form bound and returns a :class:`CheckReport`. Comparisons use the
uniform tolerance ``rhs * 1e-9 + 1e-12``; exponential-moment checks compare
in log space so that large rates saturate instead of overflowing.

Hypothesis preconditions (domination for the good-lambda lemma, the uniform
conditional-increment bound for the energy lemma) are verified exhaustively
over all stopping times before the conclusion is tested, and a violating
stopping pair is reported when verification fails.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import jn_moment_bound, khasminskii_product, vmo_exp_bound
from .controls import OscillationControl, variation_control
from .oscillation import (
    OscillationData,
    _snell_levels,
    deterministic_modulus,
    deterministic_pair_modulus,
    jump_modulus,
    oscillation_grid,
    oscillation_modulus,
)
from .processes import AdaptedProcess, maximal_process
from .stopping import DEFAULT_ENUMERATION_CAP

__all__ = [
    "CheckReport",
    "check_tolerance",
    "jn_moment_check",
    "maximal_check",
    "garsia_check",
    "energy_constant",
    "energy_check",
    "khasminskii_check",
    "exp_vmoa_check",
    "pathwise_increment_check",
    "stopping_pair_bound_check",
    "jump_kappa_check",
    "monotonicity_check",
    "triangle_check",
    "superadditivity_check",
    "control_domination_check",
    "reports_to_jsonl",
    "summarize_reports",
    "write_summary_csv",
]


def check_tolerance(rhs: float) -> float:
    """Slack allowed when testing lhs <= rhs: rhs * 1e-9 + 1e-12."""
    if math.isinf(rhs):
        return math.inf
    return abs(rhs) * 1e-9 + 1e-12


@dataclass
class CheckReport:
    """Outcome of one inequality check."""

    name: str
    holds: bool
    lhs: float
    rhs: float
    tolerance: float
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "holds": bool(self.holds),
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "tolerance": float(self.tolerance),
            "witness": self.witness,
        }


def _report(name, lhs, rhs, witness=None) -> CheckReport:
    tol = check_tolerance(rhs)
    return CheckReport(
        name=name,
        holds=bool(lhs <= rhs + tol),
        lhs=float(lhs),
        rhs=float(rhs),
        tolerance=tol,
        witness=witness or {},
    )


def _saturating_exp(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


def _log_report(name, log_lhs, log_rhs, witness=None) -> CheckReport:
    # Equivalent of the linear tolerance, applied on the log scale so that
    # saturating values still compare meaningfully.
    holds = log_lhs <= log_rhs + 1e-9 or log_rhs == math.inf
    return CheckReport(
        name=name,
        holds=bool(holds),
        lhs=_saturating_exp(log_lhs),
        rhs=_saturating_exp(log_rhs),
        tolerance=check_tolerance(_saturating_exp(log_rhs)),
        witness=witness or {},
    )


def _cond_log_mean_exp(space, leaf_exponents: np.ndarray, level: int) -> np.ndarray:
    """log E[ exp(g) | F_level ] computed stably level by level."""
    g = np.asarray(leaf_exponents, dtype=float)
    b = space.branching
    for k in range(space.depth - 1, level - 1, -1):
        g2 = g.reshape(space.level_size(k), b)
        m = g2.max(axis=1)
        g = m + np.log((space.transitions[k] * np.exp(g2 - m[:, None])).sum(axis=1))
    return g


# -- moment and exponential checks ----------------------------------------


def jn_moment_check(process: AdaptedProcess, r: int, p: int,
                    cap: int = DEFAULT_ENUMERATION_CAP) -> CheckReport:
    """Conditional p-th moment of the forward running maximum vs p!(11 rho)^p."""
    space = process.space
    tau = space.depth
    if not 0 <= r <= tau:
        raise ValueError(f"r = {r} outside [0, {tau}]")
    paths = process.path_matrix()
    anchor = process.value_at_leaves(r)
    dev = np.abs(paths[:, r:] - anchor[:, None]).max(axis=1) ** p
    lhs_atoms = space.cond_expectation(dev, r)
    rho = oscillation_modulus(process, r, tau, cap=cap)
    rhs = jn_moment_bound(rho, p)
    worst = int(np.argmax(lhs_atoms))
    return _report(
        "jn-moment",
        float(lhs_atoms[worst]),
        rhs,
        {"r": r, "p": p, "rho": rho, "atom": worst},
    )


def maximal_check(process: AdaptedProcess, s: int, t: int,
                  cap: int = DEFAULT_ENUMERATION_CAP) -> CheckReport:
    """Window modulus of the running maximum vs 11x the modulus of V.

    Also verifies the intermediate bound: the conditional expected sup of
    |V_r - V_{s-}| over the window is at most 4x the window modulus.
    """
    space = process.space
    rho_v = oscillation_modulus(process, s, t, cap=cap)
    rho_star = oscillation_modulus(maximal_process(space, process), s, t, cap=cap)
    paths = process.path_matrix()
    anchor = space.broadcast_to_leaves(process.left_limit(s), s)
    sup_dev = np.abs(paths[:, s:t + 1] - anchor[:, None]).max(axis=1)
    lhs_mid = float(np.max(space.cond_expectation(sup_dev, s)))
    rhs_mid = 4.0 * rho_v
    mid_holds = lhs_mid <= rhs_mid + check_tolerance(rhs_mid)
    report = _report(
        "maximal-modulus",
        rho_star,
        11.0 * rho_v,
        {"s": s, "t": t, "sup_lhs": lhs_mid, "sup_rhs": rhs_mid, "sup_holds": bool(mid_holds)},
    )
    report.holds = bool(report.holds and mid_holds)
    return report


def _snell_argmax_nodes(space, payoffs, j, t, root_idx) -> list[tuple[int, int]]:
    """Stop nodes of a rule attaining the subtree optimal-stopping value."""
    values = [payoffs[t - j]]
    for k in range(t - 1, j - 1, -1):
        values.append(np.maximum(payoffs[k - j], space.step_expectation(values[-1], k)))
    values.reverse()  # values[k - j] now holds the level-k value array
    nodes = []
    stack = [(j, root_idx)]
    while stack:
        k, i = stack.pop()
        if k == t or payoffs[k - j][i] >= values[k - j][i] - 1e-12:
            nodes.append((k, i))
        else:
            base = i * space.branching
            stack.extend((k + 1, base + c) for c in range(space.branching))
    return sorted(nodes)


def garsia_check(process: AdaptedProcess, u_leaf, y, s: int,
                 alpha: float, beta: float) -> CheckReport:
    """Distributional bound beta P_s(X* >= alpha+beta) <= E_s(U ; X* >= alpha).

    Here X* is the pathwise sup of |V_r - Y| over levels r in [s, depth],
    with Y fixed per level-s atom. The domination hypothesis
    E_S|V_T - V_{S-}| <= E_S U is first verified over every stopping pair
    s <= S <= T <= depth; a violating pair is reported if it fails.
    """
    space = process.space
    tau = space.depth
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("alpha and beta must be > 0")
    u_leaf = np.asarray(u_leaf, dtype=float)
    if u_leaf.shape != (space.n_leaves,):
        raise ValueError("U must be a leaf-indexed variable")
    if np.min(u_leaf) < 0.0:
        raise ValueError("U must be nonnegative")
    y = np.broadcast_to(np.asarray(y, dtype=float), (space.level_size(s),))

    # Levels of E[U | F_k], k = s .. tau.
    eu = [u_leaf]
    for k in range(tau - 1, -1, -1):
        eu.append(space.step_expectation(eu[-1], k))
    eu.reverse()

    # Hypothesis sweep: for every stop atom u at level j and every
    # continuation rule T on its subtree, E_u|V_T - V_{u-}| - E_u U <= 0.
    # The sup over T is an exact optimal-stopping value per node.
    for j in range(s, tau + 1):
        anchors = process.left_limit(j)
        payoffs = [
            np.abs(process.values[k] - np.repeat(anchors, space.branching ** (k - j))) - eu[k]
            for k in range(j, tau + 1)
        ]
        gap = _snell_levels(space, payoffs, j, tau)
        worst = int(np.argmax(gap))
        if gap[worst] > 1e-12:
            rule = _snell_argmax_nodes(space, payoffs, j, tau, worst)
            raise ValueError(
                "domination hypothesis fails: stopping pair with S at node "
                f"(level {j}, atom {worst}) and T stopping at {rule} exceeds "
                f"E_S U by {gap[worst]:.3e}"
            )

    paths = process.path_matrix()
    y_leaf = space.broadcast_to_leaves(y, s)
    x_star = np.abs(paths[:, s:] - y_leaf[:, None]).max(axis=1)
    p_tail = space.cond_expectation((x_star >= alpha + beta).astype(float), s)
    rhs_atoms = space.cond_expectation(u_leaf * (x_star >= alpha), s)
    lhs_atoms = beta * p_tail
    worst = int(np.argmax(lhs_atoms - rhs_atoms))
    report = _report(
        "garsia-tail",
        float(lhs_atoms[worst]),
        float(rhs_atoms[worst]),
        {"s": s, "alpha": alpha, "beta": beta, "atom": worst},
    )
    # Per-atom inequality: every atom must pass, not just the reported one.
    tol = np.array([check_tolerance(v) for v in rhs_atoms])
    report.holds = bool(np.all(lhs_atoms <= rhs_atoms + tol))
    return report


def energy_constant(process: AdaptedProcess) -> float:
    """Smallest c with E_S(A_tau - A_{S-}) <= c over all stopping times S.

    The supremum is attained at a stop atom, so it equals the max over nodes
    u of E_u(A_tau) - A_{u-}.
    """
    space = process.space
    tau = space.depth
    ea = process.values[tau]
    best = -math.inf
    for j in range(tau, -1, -1):
        if j < tau:
            ea = space.step_expectation(ea, j)
        best = max(best, float(np.max(ea - process.left_limit(j))))
    return best


def energy_check(process: AdaptedProcess, s: int, c: float | None = None,
                 p: int = 2) -> CheckReport:
    """Energy inequality: ess-sup E_s (A_tau - A_s)^p <= p! c^p.

    ``c`` must dominate E_S(A_tau - A_{S-}) for every stopping time S; it is
    verified exhaustively (and computed, when omitted) via the stop-atom sweep
    of :func:`energy_constant`.
    """
    space = process.space
    if p < 1 or int(p) != p:
        raise ValueError("p must be a positive integer")
    if not process.is_nondecreasing():
        raise ValueError("process must be nondecreasing")
    c_star = energy_constant(process)
    if c is None:
        c = c_star
    elif c_star > c + check_tolerance(c):
        raise ValueError(
            f"hypothesis fails: some stopping time gives E_S(A_tau - A_S-) = "
            f"{c_star:.6g} > c = {c:.6g}"
        )
    a_tau = process.value_at_leaves(space.depth)
    a_s = process.value_at_leaves(s)
    lhs_atoms = space.cond_expectation((a_tau - a_s) ** p, s)
    rhs = math.factorial(int(p)) * float(c) ** p
    worst = int(np.argmax(lhs_atoms))
    return _report(
        "energy-moment",
        float(lhs_atoms[worst]),
        rhs,
        {"s": s, "p": int(p), "c": float(c), "atom": worst},
    )


def khasminskii_check(process: AdaptedProcess, r: int, lam: float, partition,
                      cap: int = DEFAULT_ENUMERATION_CAP) -> CheckReport:
    """Conditional exponential moment vs the per-cell product bound.

    rhs multiplies (1 - lam * rho_cell)^(-1) over the partition cells to the
    right of r (the first such cell clipped at r). Requires a nondecreasing
    process and lam * rho_cell < 1 on every used cell.
    """
    space = process.space
    tau = space.depth
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    if not 0 <= r <= tau:
        raise ValueError(f"r = {r} outside [0, {tau}]")
    if not process.is_nondecreasing():
        raise ValueError("process must be nondecreasing")
    pts = [int(x) for x in partition]
    if pts != sorted(set(pts)) or pts[0] != 0 or pts[-1] != tau:
        raise ValueError("partition must be strictly increasing grid points from 0 to depth")
    cells = [(max(a, r), b) for a, b in zip(pts[:-1], pts[1:]) if b > r]
    moduli = [oscillation_modulus(process, a, b, cap=cap) for a, b in cells]
    rhs = khasminskii_product(lam, moduli)  # raises PartitionTooCoarseError
    log_rhs = -sum(math.log1p(-lam * rho) for rho in moduli)
    a_tau = process.value_at_leaves(tau)
    a_r = process.value_at_leaves(r)
    log_lhs = float(np.max(_cond_log_mean_exp(space, lam * (a_tau - a_r), r)))
    return _log_report(
        "khasminskii-exp",
        log_lhs,
        log_rhs,
        {"r": r, "lam": lam, "cells": [list(c) for c in cells], "cell_moduli": moduli},
    )


def exp_vmoa_check(process: AdaptedProcess, lam: float, p: float,
                   cap: int = DEFAULT_ENUMERATION_CAP) -> CheckReport:
    """Uniform conditional exponential moment of the forward running sup.

    For every level r, ess-sup E_r exp(lam * sup_{r<=k<=tau} |V_k - V_r|)
    must stay below 2^(1 + (22 lam)^p * w_total) with w_total the total
    p-variation control of the exact modulus grid.
    """
    space = process.space
    tau = space.depth
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    grid = oscillation_grid(process, cap=cap)
    control = variation_control(grid, p)
    rhs = vmo_exp_bound(lam, p, control.total)
    log_rhs = math.log(2.0) * (1.0 + (22.0 * lam) ** p * control.total)
    paths = process.path_matrix()
    log_lhs = -math.inf
    worst_r = 0
    for r in range(tau + 1):
        anchor = process.value_at_leaves(r)
        sup_dev = np.abs(paths[:, r:] - anchor[:, None]).max(axis=1)
        val = float(np.max(_cond_log_mean_exp(space, lam * sup_dev, r)))
        if val > log_lhs:
            log_lhs, worst_r = val, r
    return _log_report(
        "exp-vmo",
        log_lhs,
        log_rhs,
        {"lam": lam, "p": p, "w_total": control.total, "worst_r": worst_r},
    )


# -- structural checks -----------------------------------------------------


def pathwise_increment_check(process: AdaptedProcess,
                             cap: int = DEFAULT_ENUMERATION_CAP) -> CheckReport:
    """Pathwise |V_t - V_s| <= 22 * w[s, t] with the 1-variation control."""
    grid = oscillation_grid(process, cap=cap)
    w = variation_control(grid, 1.0).w
    paths = process.path_matrix()
    d = process.depth
    worst = (0.0, 0.0, (0, 0))
    holds = True
    for s in range(d):
        for t in range(s + 1, d + 1):
            lhs = float(np.max(np.abs(paths[:, t] - paths[:, s])))
            rhs = 22.0 * float(w[s, t])
            if lhs > rhs + check_tolerance(rhs):
                holds = False
            if lhs - rhs > worst[0] - worst[1]:
                worst = (lhs, rhs, (s, t))
    report = _report("pathwise-increment", worst[0], worst[1], {"window": list(worst[2])})
    report.holds = bool(holds)
    return report


def stopping_pair_bound_check(process: AdaptedProcess, s: int, t: int,
                              cap: int = DEFAULT_ENUMERATION_CAP) -> CheckReport:
    """Stopping-pair modulus vs 2B + 3C from deterministic data only.

    B is the deterministic-pair modulus (left-limit anchors) and C the
    largest single jump inside the window; the supremum over stopping pairs
    (left-limit anchors) must not exceed 2B + 3C.
    """
    lhs = oscillation_modulus(process, s, t, include_intra=False, cap=cap)
    b_det = deterministic_modulus(process, s, t, left_limit=True)
    jumps = [float(np.max(np.abs(inc))) for inc in process.increments()]
    window_jumps = [jumps[j - 1] for j in range(max(s, 1), t + 1)]
    c_jump = max(window_jumps, default=0.0)
    return _report(
        "stopping-pair-bound",
        lhs,
        2.0 * b_det + 3.0 * c_jump,
        {"s": s, "t": t, "B": b_det, "C": c_jump},
    )


def jump_kappa_check(process: AdaptedProcess) -> CheckReport:
    """Vanishing-window modulus equals the largest pathwise jump, exactly."""
    kappa = jump_modulus(process)
    paths = process.path_matrix()
    max_jump = float(np.max(np.abs(np.diff(paths, axis=1)))) if process.depth else 0.0
    report = _report("jump-kappa", max_jump, kappa)
    report.holds = bool(abs(max_jump - kappa) <= 1e-12)
    return report


def monotonicity_check(grid: OscillationData) -> CheckReport:
    """Window modulus is monotone under window inclusion."""
    d = grid.depth
    worst = (0.0, 0.0, None)
    holds = True
    for s in range(d + 1):
        for t in range(s, d + 1):
            outer = grid.rho[s, t]
            for u in range(s, t + 1):
                for v in range(u, t + 1):
                    inner = grid.rho[u, v]
                    if inner > outer + check_tolerance(outer):
                        holds = False
                    if inner - outer > worst[0] - worst[1]:
                        worst = (float(inner), float(outer), [s, t, u, v])
    report = _report("modulus-monotone", worst[0], worst[1], {"windows": worst[2]})
    report.holds = bool(holds)
    return report


def triangle_check(grid: OscillationData) -> CheckReport:
    """Window modulus satisfies rho[s,t] <= rho[s,u] + rho[u,t]."""
    d = grid.depth
    worst = (0.0, 0.0, None)
    holds = True
    for s in range(d + 1):
        for t in range(s, d + 1):
            lhs = grid.rho[s, t]
            for u in range(s, t + 1):
                rhs = grid.rho[s, u] + grid.rho[u, t]
                if lhs > rhs + check_tolerance(rhs):
                    holds = False
                if lhs - rhs > worst[0] - worst[1]:
                    worst = (float(lhs), float(rhs), [s, u, t])
    report = _report("modulus-triangle", worst[0], worst[1], {"split": worst[2]})
    report.holds = bool(holds)
    return report


def superadditivity_check(control: OscillationControl) -> CheckReport:
    """w[s,u] + w[u,t] <= w[s,t] for every split point."""
    d = control.depth
    worst = (0.0, 0.0, None)
    holds = True
    for s in range(d + 1):
        for t in range(s, d + 1):
            rhs = control.w[s, t]
            for u in range(s, t + 1):
                lhs = control.w[s, u] + control.w[u, t]
                if lhs > rhs + check_tolerance(rhs):
                    holds = False
                if lhs - rhs > worst[0] - worst[1]:
                    worst = (float(lhs), float(rhs), [s, u, t])
    report = _report("control-superadditive", worst[0], worst[1], {"split": worst[2]})
    report.holds = bool(holds)
    return report


def control_domination_check(process: AdaptedProcess, control: OscillationControl) -> CheckReport:
    """Deterministic conditional increments obey E_s|V_t - V_s| <= w[s,t]^(1/p)."""
    d = process.depth
    worst = (0.0, 0.0, None)
    holds = True
    for s in range(d):
        for t in range(s + 1, d + 1):
            lhs = deterministic_pair_modulus(process, s, t, left_limit=False)
            rhs = float(control.w[s, t]) ** (1.0 / control.p)
            if lhs > rhs + check_tolerance(rhs):
                holds = False
            if lhs - rhs > worst[0] - worst[1]:
                worst = (lhs, rhs, [s, t])
    report = _report("control-dominates-increments", worst[0], worst[1], {"window": worst[2]})
    report.holds = bool(holds)
    return report


# -- report IO -------------------------------------------------------------


def reports_to_jsonl(reports, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report.to_dict(), sort_keys=True))
            fh.write("\n")


def summarize_reports(reports) -> list[dict]:
    """Aggregate rows (check, n_cases, violations, worst_ratio) by check name."""
    order: list[str] = []
    buckets: dict[str, list[CheckReport]] = {}
    for report in reports:
        if report.name not in buckets:
            buckets[report.name] = []
            order.append(report.name)
        buckets[report.name].append(report)
    rows = []
    for name in order:
        group = buckets[name]
        ratios = []
        for rep in group:
            if rep.rhs > 0.0 and math.isfinite(rep.rhs):
                ratios.append(rep.lhs / rep.rhs)
            elif rep.lhs <= rep.tolerance:
                ratios.append(0.0)
            elif math.isinf(rep.rhs):
                ratios.append(0.0)
            else:
                ratios.append(math.inf)
        rows.append(
            {
                "check": name,
                "n_cases": len(group),
                "violations": sum(0 if rep.holds else 1 for rep in group),
                "worst_ratio": max(ratios) if ratios else 0.0,
            }
        )
    return rows


def write_summary_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["check", "n_cases", "violations", "worst_ratio"])
        for row in rows:
            writer.writerow(
                [row["check"], row["n_cases"], row["violations"], repr(float(row["worst_ratio"]))]
            )
