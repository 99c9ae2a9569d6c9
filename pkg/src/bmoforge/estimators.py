"""Monte Carlo estimators: nested conditional moments, exponential moments,
empirical modulus grids, and log-log rate fits.

Scalar integrand fields are vectorized callables ``f(times, states)`` where
``times`` has shape (m,) and ``states`` shape (..., m, dim); the result has
shape (..., m). ``scalar_field_registry`` provides the standard named fields
operating on the first coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import PURPOSE_INNER, PURPOSE_OUTER, philox_stream

__all__ = [
    "MomentEstimate",
    "RateFit",
    "ExpMomentResult",
    "EmpiricalOscillationGrid",
    "scalar_field_registry",
    "state_functional",
    "markov_conditional_moment",
    "empirical_rho_grid",
    "holder_exponent_fit",
    "exp_moment",
    "rate_fit",
    "loglog_fit",
    "pooled_slope",
]


@dataclass
class MomentEstimate:
    value: float
    stderr: float
    n_outer: int
    n_inner: int


@dataclass
class RateFit:
    """Least-squares fit of log(error) against log(1/n)."""

    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float
    table: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class ExpMomentResult:
    estimate: MomentEstimate
    truncated_fraction: float


# -- integrand fields -------------------------------------------------------

def _inv_abs_clip(t, x, clip=100.0):
    with np.errstate(divide="ignore"):
        return np.minimum(1.0 / np.abs(x), clip)


scalar_field_registry = {
    "one": lambda t, x: np.ones_like(x),
    "coordinate": lambda t, x: np.asarray(x, dtype=float),
    "sign": lambda t, x: np.sign(x),
    "inv-abs-clip": _inv_abs_clip,
}


def state_functional(name: str):
    """Named scalar field lifted to the (times, states) contract."""
    if name not in scalar_field_registry:
        raise KeyError(f"unknown field {name!r}; known: {sorted(scalar_field_registry)}")
    base = scalar_field_registry[name]
    return lambda times, states: base(times, states[..., 0])


# -- nested conditional moments ---------------------------------------------

def markov_conditional_moment(
    f,
    s: float,
    t: float,
    x_law,
    n_inner: int,
    n_steps: int,
    seed: int,
    proxy: str = "max",
    quantile: float = 0.99,
    dim: int = 1,
    stream_index: int = 0,
    inner_chunk: int = 1024,
) -> MomentEstimate:
    """Worst-case conditional first moment of | integral_s^t f(r, X_r) dr |.

    For each outer state x the inner mean over Brownian continuations from x
    is estimated with a left-point Riemann sum on ``n_steps`` uniform steps.
    The essential supremum over the conditioning state is then proxied by the
    max (default) or an upper quantile over the outer samples; the reported
    stderr is the inner-mean standard error at the selected outer sample.

    Inner paths are generated in chunks to bound memory; each outer state
    draws from one stream sequentially, so results do not depend on the
    chunk size.
    """
    if t <= s:
        raise ValueError("need t > s")
    if n_inner < 2 or n_steps < 1:
        raise ValueError("n_inner must be >= 2 and n_steps >= 1")
    x_arr = np.atleast_1d(np.asarray(x_law, dtype=float))
    if x_arr.ndim == 1:
        x_arr = x_arr[:, None]
    if x_arr.shape[1] != dim:
        raise ValueError(f"outer states have dim {x_arr.shape[1]}, expected {dim}")
    n_outer = x_arr.shape[0]
    h = (t - s) / n_steps
    times = s + h * np.arange(n_steps)
    means = np.empty(n_outer)
    errs = np.empty(n_outer)
    samples = np.empty(n_inner)
    for o in range(n_outer):
        rng = philox_stream(seed, PURPOSE_INNER, o, stream_index)
        for lo in range(0, n_inner, inner_chunk):
            m = min(inner_chunk, n_inner - lo)
            inc = rng.standard_normal((m, n_steps, dim)) * math.sqrt(h)
            states = np.empty((m, n_steps, dim))
            states[:, 0, :] = x_arr[o]
            np.cumsum(inc[:, :-1, :], axis=1, out=states[:, 1:, :])
            states[:, 1:, :] += x_arr[o]
            samples[lo : lo + m] = np.abs(f(times, states).sum(axis=1) * h)
        means[o] = samples.mean()
        errs[o] = samples.std(ddof=1) / math.sqrt(n_inner)
    if proxy == "max":
        pick = int(np.argmax(means))
    elif proxy == "quantile":
        order = np.argsort(means)
        pick = int(order[min(n_outer - 1, int(math.ceil(quantile * n_outer)) - 1)])
    else:
        raise ValueError(f"unknown proxy {proxy!r}")
    return MomentEstimate(
        value=float(means[pick]), stderr=float(errs[pick]), n_outer=n_outer, n_inner=n_inner
    )


@dataclass
class EmpiricalOscillationGrid:
    """Monte Carlo modulus surrogate over deterministic time pairs."""

    times: np.ndarray
    values: np.ndarray
    stderrs: np.ndarray
    n_outer: int
    n_inner: int
    monotone_violations: list[dict] = field(default_factory=list)


def empirical_rho_grid(
    f,
    grid_times,
    n_outer: int,
    n_inner: int,
    steps_per_unit: int,
    seed: int,
    proxy: str = "max",
) -> EmpiricalOscillationGrid:
    """Estimate the conditional-modulus surrogate for every grid pair s < t.

    Outer states are Brownian values sampled at the grid times from streams
    (seed, outer, path); each pair then gets an independent inner estimate via
    :func:`markov_conditional_moment`. Pairs violating inclusion monotonicity
    beyond three combined standard errors are flagged.
    """
    times = np.asarray(list(grid_times), dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0.0) or times[0] < 0.0:
        raise ValueError("grid_times must be increasing and nonnegative")
    n = len(times)
    states = np.empty((n_outer, n))
    for o in range(n_outer):
        rng = philox_stream(seed, PURPOSE_OUTER, o)
        prev_t, x = 0.0, 0.0
        for k, tk in enumerate(times):
            gap = tk - prev_t
            if gap > 0.0:
                x += rng.standard_normal() * math.sqrt(gap)
            states[o, k] = x
            prev_t = tk
    values = np.full((n, n), np.nan)
    stderrs = np.full((n, n), np.nan)
    pair_id = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            span = times[j] - times[i]
            est = markov_conditional_moment(
                f,
                float(times[i]),
                float(times[j]),
                states[:, i],
                n_inner=n_inner,
                n_steps=max(1, int(round(steps_per_unit * span))),
                seed=seed,
                proxy=proxy,
                stream_index=pair_id + 1,
            )
            values[i, j] = est.value
            stderrs[i, j] = est.stderr
            pair_id += 1
    violations = []
    for i in range(n - 1):
        for j in range(i + 1, n):
            for a in range(i, j):
                for b in range(a + 1, j + 1):
                    if (i, j) == (a, b):
                        continue
                    slack = 3.0 * (stderrs[a, b] + stderrs[i, j])
                    if values[a, b] > values[i, j] + slack:
                        violations.append(
                            {"inner": [int(a), int(b)], "outer": [int(i), int(j)],
                             "inner_value": float(values[a, b]), "outer_value": float(values[i, j])}
                        )
    return EmpiricalOscillationGrid(
        times=times, values=values, stderrs=stderrs,
        n_outer=n_outer, n_inner=n_inner, monotone_violations=violations,
    )


def holder_exponent_fit(grid: EmpiricalOscillationGrid) -> RateFit:
    """Fit log(value) against log(t - s) over all estimated grid pairs."""
    xs, ys = [], []
    n = len(grid.times)
    for i in range(n - 1):
        for j in range(i + 1, n):
            v = grid.values[i, j]
            if np.isfinite(v) and v > 0.0:
                xs.append(math.log(grid.times[j] - grid.times[i]))
                ys.append(math.log(v))
    if len(xs) < 2:
        raise ValueError("need at least two positive grid values to fit")
    fit = loglog_fit(np.array(xs), np.array(ys))
    fit.table = [(float(math.exp(x)), float(math.exp(y))) for x, y in zip(xs, ys)]
    return fit


# -- exponential moments -----------------------------------------------------

def exp_moment(samples, lam: float, truncation: float | None = None) -> ExpMomentResult:
    """Empirical E[exp(lam * X)] with optional hard truncation of the integrand."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    with np.errstate(over="ignore"):
        vals = np.exp(lam * samples)
    if truncation is not None:
        if truncation <= 0.0:
            raise ValueError("truncation must be > 0")
        hit = vals >= truncation
        vals = np.minimum(vals, truncation)
    else:
        hit = np.isinf(vals)
    n = samples.size
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 and np.all(np.isfinite(vals)) else math.inf
    if not math.isfinite(mean):
        stderr = math.inf
    est = MomentEstimate(value=mean, stderr=stderr, n_outer=n, n_inner=1)
    return ExpMomentResult(estimate=est, truncated_fraction=float(hit.mean()))


# -- rate fitting ------------------------------------------------------------

def loglog_fit(x: np.ndarray, y: np.ndarray) -> RateFit:
    """Plain least squares of y against x with slope stderr and r^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two 1-d arrays of equal length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.sum(dx * dx))
    if sxx == 0.0:
        raise ValueError("x values are all equal")
    slope = float(np.sum(dx * dy)) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum(dy * dy))
    r_squared = 1.0 if ss_tot <= 1e-30 else max(0.0, 1.0 - ss_res / ss_tot)
    dof = len(x) - 2
    slope_stderr = math.sqrt(ss_res / dof / sxx) if dof > 0 else 0.0
    return RateFit(slope=slope, intercept=intercept, r_squared=r_squared, slope_stderr=slope_stderr)


def rate_fit(ns, errors) -> RateFit:
    """Convergence-rate fit: slope of log(error) against log(1/n).

    A positive slope means the error decays like n^(-slope).
    """
    ns = np.asarray(list(ns), dtype=float)
    errors = np.asarray(list(errors), dtype=float)
    if len(ns) < 3:
        raise ValueError("need at least three (n, error) points")
    if np.any(ns <= 0.0):
        raise ValueError("ns must be positive")
    if np.any(errors <= 0.0):
        raise ValueError("errors must be positive to fit in log space")
    fit = loglog_fit(-np.log(ns), np.log(errors))
    fit.table = [(float(n), float(e)) for n, e in zip(ns, errors)]
    return fit


def pooled_slope(fits) -> tuple[float, float]:
    """Inverse-variance pooling of fitted slopes; returns (slope, stderr)."""
    fits = list(fits)
    if not fits:
        raise ValueError("need at least one fit")
    weights = [1.0 / max(f.slope_stderr, 1e-12) ** 2 for f in fits]
    total = sum(weights)
    slope = sum(w * f.slope for w, f in zip(weights, fits)) / total
    return slope, math.sqrt(1.0 / total)
