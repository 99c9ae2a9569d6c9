"""Numerical schemes on Brownian ensembles: the tamed explicit Euler solver,
the quadrature-error process, the shift-averaging functional, and the coupled
strong-error experiment.

All solvers consume increments from a :class:`~bmoforge.ensemble.PathEnsemble`
and evaluate solutions on the ensemble's fine grid; coarse meshes must divide
the fine step count exactly, otherwise a mesh mismatch is raised.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ensemble import PathEnsemble
from .estimators import MomentEstimate, RateFit, rate_fit
from .rng import PURPOSE_INNER, PURPOSE_OUTER, philox_stream
from .sde import SdeModel, TamingPolicy

__all__ = [
    "tamed_euler_solve",
    "quadrature_error",
    "davie_functional",
    "davie_moments",
    "sup_process_moment",
    "strong_error",
    "StrongErrorResult",
    "quadrature_modulus_proxy",
    "QuadratureModulusResult",
]


def _mesh_ratio(n_fine: int, n_coarse: int) -> int:
    if n_coarse < 1 or n_fine % n_coarse != 0:
        raise ValueError(
            f"mesh mismatch: coarse mesh {n_coarse} does not divide the fine "
            f"step count {n_fine}"
        )
    return n_fine // n_coarse


def _solve_on_increments(
    model: SdeModel,
    level: float | None,
    n: int,
    inc: np.ndarray,
    horizon: float,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Explicit Euler with coefficients frozen at the coarse anchor state.

    Within each coarse block the drift and diffusion are evaluated once, at
    the block's opening time and state, so the solution on the fine grid is
    affine in the accumulated Brownian increments of the block.
    """
    n_paths, n_fine, dim = inc.shape
    ratio = _mesh_ratio(n_fine, n)
    h_fine = horizon / n_fine
    if out is None:
        out = np.empty((n_paths, n_fine + 1, dim))
    w = np.zeros((n_paths, n_fine + 1, dim))
    np.cumsum(inc, axis=1, out=w[:, 1:, :])
    out[:, 0, :] = model.x0
    state = model.initial_states(n_paths)
    drift_times = h_fine * np.arange(1, ratio + 1)
    for j in range(n):
        t_j = j * horizon / n
        b_vals = np.asarray(model.drift(t_j, state), dtype=float)
        if level is not None:
            b_vals = np.clip(b_vals, -level, level)
        s_vals = np.asarray(model.diffusion(t_j, state), dtype=float)
        a = j * ratio
        # Anchored so the noise term is a pure read of the shared cumulative
        # sum; solutions on nested meshes then couple bitwise when the drift
        # contribution vanishes.
        c = state - s_vals * w[:, a, :]
        seg = (
            c[:, None, :]
            + b_vals[:, None, :] * drift_times[None, :, None]
            + s_vals[:, None, :] * w[:, a + 1 : a + ratio + 1, :]
        )
        out[:, a + 1 : a + ratio + 1, :] = seg
        state = seg[:, -1, :].copy()
    return out


def tamed_euler_solve(
    model: SdeModel,
    taming: TamingPolicy | None,
    n: int,
    ensemble: PathEnsemble,
) -> np.ndarray:
    """Solve the model on the coarse mesh {j/n}, evaluated on the fine grid.

    Returns an array of shape (n_paths, n_steps + 1, dim). The drift is
    clipped at the policy's level for this n; ``taming=None`` disables the
    clip entirely.
    """
    if ensemble.dim != model.dim:
        raise ValueError(f"ensemble dim {ensemble.dim} != model dim {model.dim}")
    level = None if taming is None else taming.clip_level(n)
    return _solve_on_increments(
        model, level, n, ensemble.increments(), ensemble.horizon
    )


# -- quadrature error --------------------------------------------------------

def quadrature_error(f, ensemble: PathEnsemble, n: int, chunk_size: int = 2048) -> np.ndarray:
    """Per-path trajectory of the mesh-point quadrature error.

    V_t = integral_0^t [f(r, B_r) - f(r, B at the last coarse mesh point)] dr
    computed as a left-point Riemann sum on the fine grid, chunked over paths.
    Returns an array of shape (n_paths, n_steps + 1).
    """
    if ensemble.dim != 1:
        raise ValueError("quadrature_error expects a one-dimensional ensemble")
    ratio = _mesh_ratio(ensemble.n_steps, n)
    h = ensemble.dt
    left_times = ensemble.times[:-1]
    anchor_idx = (np.arange(ensemble.n_steps) // ratio) * ratio
    out = np.zeros((ensemble.n_paths, ensemble.n_steps + 1))
    for start, inc in ensemble.iter_chunks(chunk_size):
        m = inc.shape[0]
        b = np.zeros((m, ensemble.n_steps))
        np.cumsum(inc[:, :-1, 0], axis=1, out=b[:, 1:])
        integrand = np.asarray(f(left_times, b), dtype=float) - np.asarray(
            f(left_times, b[:, anchor_idx]), dtype=float
        )
        np.cumsum(integrand, axis=1, out=out[start : start + m, 1:])
        out[start : start + m, 1:] *= h
    return out


# -- shift averaging ---------------------------------------------------------

def davie_functional(
    g,
    shift: float,
    ensemble: PathEnsemble,
    enforce_bound: bool = True,
    chunk_size: int = 4096,
) -> np.ndarray:
    """Per-path samples of integral_0^1 [g(t, B_t + shift) - g(t, B_t)] dt.

    The averaging bound needs |g| <= 1; out-of-range values are clipped with a
    warning unless ``enforce_bound`` is False (useful for exact test fields
    like g(t, y) = y where the integral telescopes to the shift itself).
    """
    if ensemble.dim != 1:
        raise ValueError("davie_functional expects a one-dimensional ensemble")
    if abs(ensemble.horizon - 1.0) > 1e-12:
        raise ValueError("davie_functional is defined over the unit horizon")
    h = ensemble.dt
    left_times = ensemble.times[:-1]
    samples = np.empty(ensemble.n_paths)
    warned = False
    for start, inc in ensemble.iter_chunks(chunk_size):
        m = inc.shape[0]
        b = np.zeros((m, ensemble.n_steps))
        np.cumsum(inc[:, :-1, 0], axis=1, out=b[:, 1:])
        shifted = np.asarray(g(left_times, b + shift), dtype=float)
        plain = np.asarray(g(left_times, b), dtype=float)
        if enforce_bound:
            peak = max(np.abs(shifted).max(initial=0.0), np.abs(plain).max(initial=0.0))
            if peak > 1.0 + 1e-12:
                if not warned:
                    warnings.warn(
                        f"integrand exceeds magnitude 1 (max {peak:.6g}); clipping",
                        stacklevel=2,
                    )
                    warned = True
                np.clip(shifted, -1.0, 1.0, out=shifted)
                np.clip(plain, -1.0, 1.0, out=plain)
        samples[start : start + m] = (shifted - plain).sum(axis=1) * h
    return samples


def davie_moments(samples: np.ndarray, ms=(2, 4)) -> dict[int, MomentEstimate]:
    """Empirical even moments of the shift-functional samples, with stderr."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        raise ValueError("need at least two samples")
    out = {}
    for m in ms:
        if m < 1 or m % 2 != 0:
            raise ValueError("moment orders must be positive even integers")
        powered = samples**m
        out[m] = MomentEstimate(
            value=float(powered.mean()),
            stderr=float(powered.std(ddof=1) / math.sqrt(n)),
            n_outer=n,
            n_inner=1,
        )
    return out


def sup_process_moment(trajectories: np.ndarray, m: int) -> MomentEstimate:
    """Empirical m-th moment of the pathwise running-sup of |trajectory|."""
    if m < 1:
        raise ValueError("m must be >= 1")
    traj = np.asarray(trajectories, dtype=float)
    if traj.ndim == 3:
        sup = np.abs(traj).max(axis=(1, 2))
    elif traj.ndim == 2:
        sup = np.abs(traj).max(axis=1)
    else:
        raise ValueError("trajectories must be (paths, times) or (paths, times, dim)")
    powered = sup ** float(m)
    n = powered.size
    stderr = float(powered.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return MomentEstimate(value=float(powered.mean()), stderr=stderr, n_outer=n, n_inner=1)


# -- coupled strong error ----------------------------------------------------

@dataclass
class StrongErrorResult:
    ns: list[int]
    mean_sup_error: list[float]
    stderr: list[float]
    l2: list[float]
    l4: list[float]
    reference_n: int
    fit: RateFit | None = None

    def rows(self) -> list[dict]:
        return [
            {"n": n, "mean_sup_error": e, "stderr": s, "L2": l2, "L4": l4}
            for n, e, s, l2, l4 in zip(
                self.ns, self.mean_sup_error, self.stderr, self.l2, self.l4
            )
        ]


def strong_error(
    model: SdeModel,
    taming: TamingPolicy | None,
    ns,
    fine_factor: int,
    ensemble: PathEnsemble,
    chunk_size: int = 256,
) -> StrongErrorResult:
    """Self-convergence of the tamed scheme against a coupled finer reference.

    The reference is the same scheme on the mesh fine_factor * max(ns), which
    must equal the ensemble's fine grid; every n must divide it. Coarse and
    reference solutions for one path consume the same increments, so the
    b = 0 control has error exactly zero.
    """
    ns = sorted(set(int(n) for n in ns))
    if not ns or ns[0] < 1:
        raise ValueError("ns must be positive integers")
    if fine_factor < 2:
        raise ValueError("fine_factor must be >= 2")
    n_ref = fine_factor * ns[-1]
    if ensemble.n_steps != n_ref:
        raise ValueError(
            f"mesh mismatch: ensemble has {ensemble.n_steps} steps but the "
            f"reference mesh needs {n_ref}"
        )
    for n in ns:
        _mesh_ratio(n_ref, n)
    level_ref = None if taming is None else taming.clip_level(n_ref)
    sup_err = np.empty((len(ns), ensemble.n_paths))
    ref_buf = None
    coarse_buf = None
    for start, inc in ensemble.iter_chunks(chunk_size):
        m = inc.shape[0]
        if ref_buf is None or ref_buf.shape[0] != m:
            ref_buf = np.empty((m, n_ref + 1, model.dim))
            coarse_buf = np.empty_like(ref_buf)
        ref = _solve_on_increments(model, level_ref, n_ref, inc, ensemble.horizon, out=ref_buf)
        for k, n in enumerate(ns):
            level = None if taming is None else taming.clip_level(n)
            coarse = _solve_on_increments(model, level, n, inc, ensemble.horizon, out=coarse_buf)
            err = np.abs(coarse - ref).max(axis=(1, 2))
            sup_err[k, start : start + m] = err
    means, errs, l2s, l4s = [], [], [], []
    n_paths = ensemble.n_paths
    for k in range(len(ns)):
        e = sup_err[k]
        means.append(float(e.mean()))
        errs.append(float(e.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.inf)
        l2s.append(float(np.sqrt(np.mean(e**2))))
        l4s.append(float(np.mean(e**4) ** 0.25))
    fit = rate_fit(ns, means) if len(ns) >= 3 and all(v > 0.0 for v in means) else None
    return StrongErrorResult(
        ns=ns, mean_sup_error=means, stderr=errs, l2=l2s, l4=l4s,
        reference_n=n_ref, fit=fit,
    )


# -- conditional modulus proxy for the quadrature process --------------------

@dataclass
class QuadratureModulusResult:
    ns: list[int]
    values: list[float]
    stderrs: list[float]
    anchor_times: list[float]
    per_anchor: dict = field(default_factory=dict)
    fit: RateFit | None = None


def quadrature_modulus_proxy(
    f,
    ns,
    seed: int,
    n_outer: int = 64,
    n_inner: int = 256,
    anchor_times=(0.0, 0.25, 0.5, 0.75),
    fine_per_block: int = 4,
) -> QuadratureModulusResult:
    """Worst conditional first moment of the tail quadrature error, per mesh.

    For each anchor time s and each sampled state of B_s, the inner mean of
    |V_1 - V_s| is estimated on fresh continuations; the modulus proxy for a
    mesh n is the max over anchors and outer states. All meshes reuse the
    same continuations (anchored sums only differ), so the fitted exponent is
    read off a coupled family.

    Every anchor time must sit on every coarse mesh, and every mesh must
    divide the finest one.
    """
    ns = sorted(set(int(n) for n in ns))
    if ns[0] < 1:
        raise ValueError("ns must be positive")
    n_max = ns[-1]
    for n in ns:
        _mesh_ratio(n_max, n)
    anchor_times = [float(s) for s in anchor_times]
    for s in anchor_times:
        if not 0.0 <= s < 1.0:
            raise ValueError("anchor times must lie in [0, 1)")
        for n in ns:
            if abs(round(s * n) - s * n) > 1e-9:
                raise ValueError(f"anchor time {s} is not a mesh point of n={n}")
    f_unit = n_max * fine_per_block
    h = 1.0 / f_unit
    values = {n: -math.inf for n in ns}
    errors = {n: math.nan for n in ns}
    per_anchor = {n: {} for n in ns}
    for s_idx, s in enumerate(anchor_times):
        n_fine = round((1.0 - s) * f_unit)
        left_times = s + h * np.arange(n_fine)
        anchor_idx = {n: (np.arange(n_fine) // (f_unit // n)) * (f_unit // n) for n in ns}
        means = {n: np.empty(n_outer) for n in ns}
        sds = {n: np.empty(n_outer) for n in ns}
        for o in range(n_outer):
            rng_outer = philox_stream(seed, PURPOSE_OUTER, o, s_idx)
            x0 = rng_outer.standard_normal() * math.sqrt(s) if s > 0.0 else 0.0
            rng = philox_stream(seed, PURPOSE_INNER, o, s_idx + 1)
            inc = rng.standard_normal((n_inner, n_fine)) * math.sqrt(h)
            b = np.empty((n_inner, n_fine))
            b[:, 0] = x0
            np.cumsum(inc[:, :-1], axis=1, out=b[:, 1:])
            b[:, 1:] += x0
            f_left = np.asarray(f(left_times, b), dtype=float)
            for n in ns:
                diff = f_left - np.asarray(f(left_times, b[:, anchor_idx[n]]), dtype=float)
                d = np.abs(diff.sum(axis=1) * h)
                means[n][o] = d.mean()
                sds[n][o] = d.std(ddof=1) / math.sqrt(n_inner)
        for n in ns:
            pick = int(np.argmax(means[n]))
            per_anchor[n][s] = (float(means[n][pick]), float(sds[n][pick]))
            if means[n][pick] > values[n]:
                values[n] = float(means[n][pick])
                errors[n] = float(sds[n][pick])
    vals = [values[n] for n in ns]
    fit = rate_fit(ns, vals) if len(ns) >= 3 and all(v > 0.0 for v in vals) else None
    return QuadratureModulusResult(
        ns=ns,
        values=vals,
        stderrs=[errors[n] for n in ns],
        anchor_times=anchor_times,
        per_anchor=per_anchor,
        fit=fit,
    )
