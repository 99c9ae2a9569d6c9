"""Adapted processes on finite filtered spaces, plus corpus generators.

A process assigns one value per tree node, so measurability with respect to
the level filtration is structural. Time is the level index; the embedded
right-continuous step process is constant on [k, k+1). Left limits follow
the convention ``V_{k-} = V_{k-1}`` with ``V_{0-} = V_0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import FiniteFilteredSpace, build_tree

__all__ = [
    "AdaptedProcess",
    "maximal_process",
    "deterministic_process",
    "random_space",
    "random_process",
    "random_nondecreasing_process",
]


@dataclass
class AdaptedProcess:
    """Node-indexed values: ``values[k]`` has one entry per level-k atom."""

    space: FiniteFilteredSpace
    values: list[np.ndarray]

    def __post_init__(self):
        if len(self.values) != self.space.depth + 1:
            raise ValueError(
                f"expected {self.space.depth + 1} value levels, got {len(self.values)}"
            )
        clean = []
        for k, v in enumerate(self.values):
            v = np.asarray(v, dtype=float)
            if v.shape != (self.space.level_size(k),):
                raise ValueError(f"level {k} has shape {v.shape}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"level {k} has non-finite values")
            clean.append(v)
        self.values = clean

    @property
    def depth(self) -> int:
        return self.space.depth

    def value_at_leaves(self, level: int) -> np.ndarray:
        """The level-``level`` value of each path, at leaf granularity."""
        return self.space.broadcast_to_leaves(self.values[level], level)

    def left_limit(self, level: int) -> np.ndarray:
        """Values of ``V_{level-}`` indexed by level-``level`` atoms."""
        if level == 0:
            return self.values[0].copy()
        return np.repeat(self.values[level - 1], self.space.branching)

    def path_matrix(self) -> np.ndarray:
        """Shape ``(n_leaves, depth+1)``: the full trajectory of each path."""
        return np.stack([self.value_at_leaves(k) for k in range(self.depth + 1)], axis=1)

    def increments(self) -> list[np.ndarray]:
        """Per-level jumps ``V_k - V_{k-1}`` indexed by level-k atoms."""
        return [
            self.values[k] - np.repeat(self.values[k - 1], self.space.branching)
            for k in range(1, self.depth + 1)
        ]

    def is_nondecreasing(self, tol: float = 1e-12) -> bool:
        return all(np.min(inc) >= -tol for inc in self.increments()) if self.depth else True


def maximal_process(space: FiniteFilteredSpace, process: AdaptedProcess) -> AdaptedProcess:
    """Running maximum of ``|V_k - V_0|`` along each path, as a process."""
    out = [np.zeros(1)]
    v0 = process.values[0][0] if space.depth >= 0 else 0.0
    # V_0 is a single root value; |V_0 - V_0| = 0 seeds the running max.
    prev = np.zeros(1)
    for k in range(1, space.depth + 1):
        dev = np.abs(process.values[k] - v0)
        prev = np.maximum(np.repeat(prev, space.branching), dev)
        out.append(prev)
    return AdaptedProcess(space=space, values=out)


def deterministic_process(space: FiniteFilteredSpace, level_values) -> AdaptedProcess:
    """Process equal to ``level_values[k]`` on every level-k atom."""
    if len(level_values) != space.depth + 1:
        raise ValueError("need one value per level")
    return AdaptedProcess(
        space=space,
        values=[np.full(space.level_size(k), float(level_values[k])) for k in range(space.depth + 1)],
    )


def random_space(rng: np.random.Generator, depth: int, branching: int = 2,
                 random_transitions: bool = False) -> FiniteFilteredSpace:
    """Uniform tree, or one with Dirichlet transition rows bounded away from 0."""
    if not random_transitions:
        return build_tree(depth, branching)
    levels = []
    for k in range(depth):
        rows = rng.dirichlet(np.ones(branching), size=branching**k)
        rows = 0.9 * rows + 0.1 / branching  # keep transitions bounded away from zero
        levels.append(rows)
    return build_tree(depth, branching, levels)


def random_process(space: FiniteFilteredSpace, rng: np.random.Generator,
                   kind: str = "gaussian", scale: float = 1.0) -> AdaptedProcess:
    """Randomized adapted process families used by verification corpora.

    Kinds: ``gaussian`` (iid node values), ``walk`` (signed-increment walk),
    ``uniform`` (iid U[-1,1] values), ``integers`` (small integer values),
    ``heavy`` (student-t node values).
    """
    values = []
    if kind in ("gaussian", "uniform", "integers", "heavy"):
        for k in range(space.depth + 1):
            n = space.level_size(k)
            if kind == "gaussian":
                v = rng.normal(0.0, scale, size=n)
            elif kind == "uniform":
                v = rng.uniform(-scale, scale, size=n)
            elif kind == "integers":
                v = rng.integers(-3, 4, size=n).astype(float) * scale
            else:
                v = rng.standard_t(df=3, size=n) * scale
            values.append(v)
    elif kind == "walk":
        values.append(np.zeros(1))
        step = scale * rng.uniform(0.5, 1.5)
        for k in range(1, space.depth + 1):
            inc = rng.choice([-step, step], size=space.level_size(k))
            values.append(np.repeat(values[k - 1], space.branching) + inc)
    else:
        raise ValueError(f"unknown process kind {kind!r}")
    return AdaptedProcess(space=space, values=values)


def random_nondecreasing_process(space: FiniteFilteredSpace, rng: np.random.Generator,
                                 kind: str = "abs-gaussian", scale: float = 1.0) -> AdaptedProcess:
    """Nondecreasing adapted process with nonnegative random increments."""
    values = [np.abs(rng.normal(0.0, scale, size=1)) if kind == "abs-gaussian" else np.zeros(1)]
    for k in range(1, space.depth + 1):
        n = space.level_size(k)
        if kind == "abs-gaussian":
            inc = np.abs(rng.normal(0.0, scale, size=n))
        elif kind == "bernoulli":
            inc = rng.choice([0.0, scale], size=n)
        else:
            raise ValueError(f"unknown increment kind {kind!r}")
        values.append(np.repeat(values[k - 1], space.branching) + inc)
    return AdaptedProcess(space=space, values=values)
