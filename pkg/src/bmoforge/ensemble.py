"""Brownian path ensembles with per-path reproducible streams."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import PURPOSE_OUTER, philox_stream

__all__ = ["PathEnsemble", "brownian_paths"]

# Hard cap on total draws at construction; full materialization has its own cap.
_MAX_TOTAL_DRAWS = 2**33
_DEFAULT_MATERIALIZE_BYTES = 2**31  # 2 GiB


@dataclass
class PathEnsemble:
    """Lazy ensemble of Brownian increments on a uniform grid over [0, horizon].

    Increment arrays are regenerated on demand from the per-path streams, so
    a chunked consumer never holds more than its chunk while a small ensemble
    can still materialize everything at once. Path i always receives the same
    increments for a given seed, independent of chunking or worker count.
    """

    n_paths: int
    n_steps: int
    dim: int
    horizon: float
    seed: int
    max_bytes: int = _DEFAULT_MATERIALIZE_BYTES

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1 or self.dim < 1:
            raise ValueError("n_paths, n_steps, dim must be positive")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be > 0")
        total = self.n_paths * self.n_steps * self.dim
        if total > _MAX_TOTAL_DRAWS:
            raise ValueError(
                f"resource cap exceeded: {total} normal draws requested, cap is {_MAX_TOTAL_DRAWS}"
            )
        self._cache = None

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def increments(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Increments of paths [start, stop), shape (paths, n_steps, dim)."""
        stop = self.n_paths if stop is None else stop
        if not 0 <= start <= stop <= self.n_paths:
            raise ValueError(f"path range [{start}, {stop}) out of bounds")
        n = stop - start
        need = n * self.n_steps * self.dim * 8
        if need > self.max_bytes:
            raise MemoryError(
                f"resource cap exceeded: materializing {need} bytes of increments, "
                f"cap is {self.max_bytes}; iterate in chunks instead"
            )
        if self._cache is not None and start == 0 and stop == self.n_paths:
            return self._cache
        out = np.empty((n, self.n_steps, self.dim))
        scale = math.sqrt(self.dt)
        for offset in range(n):
            rng = philox_stream(self.seed, PURPOSE_OUTER, start + offset)
            out[offset] = rng.standard_normal((self.n_steps, self.dim)) * scale
        if start == 0 and stop == self.n_paths:
            self._cache = out
        return out

    def paths(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Brownian paths including time 0, shape (paths, n_steps + 1, dim)."""
        inc = self.increments(start, stop)
        out = np.zeros((inc.shape[0], self.n_steps + 1, self.dim))
        np.cumsum(inc, axis=1, out=out[:, 1:, :])
        return out

    def iter_chunks(self, chunk_size: int):
        """Yield (start, increments) over consecutive path chunks."""
        if chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        for start in range(0, self.n_paths, chunk_size):
            stop = min(start + chunk_size, self.n_paths)
            yield start, self.increments(start, stop)


def brownian_paths(
    n_paths: int,
    n_steps: int,
    dim: int = 1,
    horizon: float = 1.0,
    seed: int = 0,
    max_bytes: int = _DEFAULT_MATERIALIZE_BYTES,
) -> PathEnsemble:
    """Construct a reproducible Brownian increment ensemble."""
    return PathEnsemble(
        n_paths=n_paths, n_steps=n_steps, dim=dim, horizon=horizon, seed=seed, max_bytes=max_bytes
    )
