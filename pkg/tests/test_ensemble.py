import math

import numpy as np
import pytest

from bmoforge.ensemble import PathEnsemble, brownian_paths


def test_regeneration_is_bit_identical():
    ens = PathEnsemble(n_paths=8, n_steps=16, dim=2, horizon=1.0, seed=9)
    a = ens.increments().copy()
    b = PathEnsemble(n_paths=8, n_steps=16, dim=2, horizon=1.0, seed=9).increments()
    np.testing.assert_array_equal(a, b)


def test_chunks_equal_full_materialization():
    ens = PathEnsemble(n_paths=10, n_steps=8, dim=1, horizon=2.0, seed=3)
    full = ens.increments()
    for chunk_size in (1, 3, 10):
        pieces = [inc for _, inc in ens.iter_chunks(chunk_size)]
        np.testing.assert_array_equal(np.concatenate(pieces, axis=0), full)


def test_path_subsets_are_stable():
    # Path i does not depend on which slice requests it.
    ens = PathEnsemble(n_paths=6, n_steps=4, dim=1, horizon=1.0, seed=1)
    np.testing.assert_array_equal(ens.increments(2, 5)[1], ens.increments()[3])


def test_extra_paths_extend_not_reshuffle():
    small = PathEnsemble(n_paths=4, n_steps=8, dim=1, horizon=1.0, seed=5).increments()
    large = PathEnsemble(n_paths=9, n_steps=8, dim=1, horizon=1.0, seed=5).increments()
    np.testing.assert_array_equal(large[:4], small)


def test_paths_prepend_zero_and_cumsum():
    ens = PathEnsemble(n_paths=3, n_steps=5, dim=2, horizon=1.0, seed=0)
    p = ens.paths()
    assert p.shape == (3, 6, 2)
    np.testing.assert_array_equal(p[:, 0, :], 0.0)
    np.testing.assert_allclose(np.diff(p, axis=1), ens.increments(), atol=1e-15)


def test_grid_properties():
    ens = PathEnsemble(n_paths=1, n_steps=4, dim=1, horizon=2.0, seed=0)
    assert ens.dt == pytest.approx(0.5)
    np.testing.assert_allclose(ens.times, [0.0, 0.5, 1.0, 1.5, 2.0])


def test_terminal_variance_and_independence():
    # E B_T^2 = T and consecutive increments are uncorrelated, within 3 stderr.
    ens = PathEnsemble(n_paths=20000, n_steps=16, dim=1, horizon=2.0, seed=11)
    inc = ens.increments()[:, :, 0]
    b_t = inc.sum(axis=1)
    var = float(np.mean(b_t**2))
    se = float(np.std(b_t**2, ddof=1) / math.sqrt(ens.n_paths))
    assert abs(var - 2.0) <= 3 * se
    lag = inc[:, :-1] * inc[:, 1:]
    corr = float(np.mean(lag))
    se_corr = float(np.std(lag, ddof=1) / math.sqrt(lag.size))
    assert abs(corr) <= 3 * se_corr


def test_validation_and_caps():
    with pytest.raises(ValueError, match="positive"):
        PathEnsemble(n_paths=0, n_steps=4, dim=1, horizon=1.0, seed=0)
    with pytest.raises(ValueError, match="horizon"):
        PathEnsemble(n_paths=1, n_steps=4, dim=1, horizon=0.0, seed=0)
    with pytest.raises(ValueError, match="resource cap"):
        PathEnsemble(n_paths=2**20, n_steps=2**14, dim=1, horizon=1.0, seed=0)
    small = PathEnsemble(n_paths=64, n_steps=64, dim=1, horizon=1.0, seed=0, max_bytes=1024)
    with pytest.raises(MemoryError, match="chunks"):
        small.increments()
    # Chunked access stays under the cap.
    total = sum(inc.shape[0] for _, inc in small.iter_chunks(2))
    assert total == 64
    with pytest.raises(ValueError, match="out of bounds"):
        small.increments(5, 3)
    with pytest.raises(ValueError, match="chunk_size"):
        next(small.iter_chunks(0))


def test_brownian_paths_helper():
    ens = brownian_paths(2, 3, dim=1, horizon=1.0, seed=7)
    assert isinstance(ens, PathEnsemble)
    assert ens.n_paths == 2
