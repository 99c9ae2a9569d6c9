"""Finite filtered probability spaces on rooted trees.

A space is a uniform-branching tree of a given depth. Level k carries the
atoms of the filtration at time k; the leaves of level ``depth`` are the
elementary outcomes. Every expectation on such a space is a finite weighted
sum, so conditional expectations are exact up to floating point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FiniteFilteredSpace",
    "build_tree",
    "cond_expectation",
    "save_space",
    "load_space",
]

_PROB_TOL = 1e-12
SCHEMA = "bmoforge/space-v1"


@dataclass
class FiniteFilteredSpace:
    """Rooted tree with per-edge transition probabilities.

    ``transitions[k]`` has shape ``(branching**k, branching)``; row ``i`` is
    the child distribution of node ``i`` at level ``k``. ``atom_probs[k]``
    holds absolute atom probabilities at level ``k`` (they sum to one).
    """

    depth: int
    branching: int
    transitions: list[np.ndarray]
    atom_probs: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.branching < 2:
            raise ValueError("branching must be >= 2")
        if len(self.transitions) != self.depth:
            raise ValueError(
                f"expected {self.depth} transition levels, got {len(self.transitions)}"
            )
        clean = []
        for k, rows in enumerate(self.transitions):
            rows = np.asarray(rows, dtype=float)
            if rows.shape != (self.level_size(k), self.branching):
                raise ValueError(
                    f"transition level {k} has shape {rows.shape}, "
                    f"expected {(self.level_size(k), self.branching)}"
                )
            if np.any(rows <= 0.0):
                raise ValueError(f"transition level {k} has non-positive entries")
            sums = rows.sum(axis=1)
            if np.max(np.abs(sums - 1.0)) > _PROB_TOL:
                raise ValueError(f"transition level {k} rows do not sum to 1")
            clean.append(rows)
        self.transitions = clean
        self.atom_probs = self._compute_atom_probs()

    # -- structure ---------------------------------------------------------

    def level_size(self, k: int) -> int:
        return self.branching**k

    @property
    def n_leaves(self) -> int:
        return self.level_size(self.depth)

    def parent_index(self, k: int, i: int) -> int:
        if k == 0:
            raise ValueError("root has no parent")
        return i // self.branching

    def _compute_atom_probs(self) -> list[np.ndarray]:
        probs = [np.ones(1)]
        for k in range(self.depth):
            probs.append(np.repeat(probs[k], self.branching) * self.transitions[k].ravel())
        return probs

    # -- expectations ------------------------------------------------------

    def step_expectation(self, values: np.ndarray, k: int) -> np.ndarray:
        """One backward step: level-(k+1) values to level-k conditional means."""
        values = np.asarray(values, dtype=float)
        b = self.branching
        return (values.reshape(self.level_size(k), b) * self.transitions[k]).sum(axis=1)

    def cond_expectation(self, leaf_values: np.ndarray, level: int) -> np.ndarray:
        """Exact conditional expectation of a leaf variable given level ``level``."""
        leaf_values = np.asarray(leaf_values, dtype=float)
        if leaf_values.shape != (self.n_leaves,):
            raise ValueError(f"expected {self.n_leaves} leaf values, got {leaf_values.shape}")
        if not 0 <= level <= self.depth:
            raise ValueError(f"level {level} outside [0, {self.depth}]")
        out = leaf_values
        for k in range(self.depth - 1, level - 1, -1):
            out = self.step_expectation(out, k)
        return out

    def expectation(self, leaf_values: np.ndarray) -> float:
        return float(self.cond_expectation(leaf_values, 0)[0])

    def broadcast_to_leaves(self, values: np.ndarray, level: int) -> np.ndarray:
        """Lift a level-``level`` variable to leaf granularity."""
        values = np.asarray(values, dtype=float)
        return np.repeat(values, self.branching ** (self.depth - level))

    def atom_probability(self, level: int, index: int) -> float:
        return float(self.atom_probs[level][index])

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "depth": self.depth,
            "branching": self.branching,
            "transitions": [t.tolist() for t in self.transitions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteFilteredSpace":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unrecognized schema {data.get('schema')!r}")
        return cls(
            depth=int(data["depth"]),
            branching=int(data["branching"]),
            transitions=[np.asarray(t, dtype=float) for t in data["transitions"]],
        )


def build_tree(
    depth: int,
    branching: int = 2,
    transition_probs=None,
) -> FiniteFilteredSpace:
    """Construct a uniform-branching filtered space.

    ``transition_probs`` may be None (uniform), a single length-``branching``
    vector reused at every node, or a list of per-level ``(nodes, branching)``
    arrays.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if branching < 2:
        raise ValueError("branching must be >= 2")
    levels: list[np.ndarray] = []
    if transition_probs is None:
        row = np.full(branching, 1.0 / branching)
        for k in range(depth):
            levels.append(np.tile(row, (branching**k, 1)))
    else:
        seq = list(transition_probs)
        if seq and np.ndim(seq[0]) == 0:
            probe = np.asarray(seq, dtype=float)
            if probe.shape != (branching,):
                raise ValueError(f"transition vector must have length {branching}")
            for k in range(depth):
                levels.append(np.tile(probe, (branching**k, 1)))
        else:
            if len(seq) != depth:
                raise ValueError(f"expected {depth} per-level transition arrays")
            levels = [np.asarray(t, dtype=float) for t in seq]
    return FiniteFilteredSpace(depth=depth, branching=branching, transitions=levels)


def cond_expectation(space: FiniteFilteredSpace, leaf_values, level: int) -> np.ndarray:
    """Functional form of :meth:`FiniteFilteredSpace.cond_expectation`."""
    return space.cond_expectation(leaf_values, level)


def save_space(path, space: FiniteFilteredSpace, processes: dict | None = None) -> None:
    """Write a space, and optionally named adapted processes, as JSON."""
    payload = space.to_dict()
    if processes:
        payload["processes"] = {
            name: [np.asarray(v, dtype=float).tolist() for v in values]
            for name, values in processes.items()
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_space(path) -> tuple[FiniteFilteredSpace, dict[str, list[np.ndarray]]]:
    """Read a space JSON file; returns the space and any stored processes."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    space = FiniteFilteredSpace.from_dict(data)
    processes = {
        name: [np.asarray(v, dtype=float) for v in values]
        for name, values in data.get("processes", {}).items()
    }
    return space, processes
