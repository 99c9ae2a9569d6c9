import numpy as np
import pytest

from bmoforge.controls import variation_control, vmo_alpha_seminorm
from bmoforge.oscillation import oscillation_grid
from bmoforge.processes import random_process, random_space


def grid_matrix():
    # Hand grid: rho[0,1] = 1, rho[1,2] = 1, rho[0,2] = 1.5.
    return np.array([[0.0, 1.0, 1.5], [np.nan, 0.0, 1.0], [np.nan, np.nan, 0.0]])


def test_variation_control_frozen():
    rho = grid_matrix()
    # p = 2: max(1.5^2, 1 + 1) = 2.25; p = 1: max(1.5, 2) = 2.
    c2 = variation_control(rho, 2.0)
    assert c2.w[0, 2] == pytest.approx(2.25)
    assert c2.total == pytest.approx(2.25)
    assert c2.depth == 2
    assert c2.window(0, 1) == pytest.approx(1.0)
    c1 = variation_control(rho, 1.0)
    assert c1.w[0, 2] == pytest.approx(2.0)


def test_variation_control_accepts_grid_object():
    rng = np.random.default_rng(2)
    sp = random_space(rng, depth=3, branching=2)
    grid = oscillation_grid(random_process(sp, rng, kind="walk"))
    control = variation_control(grid, 2.0)
    assert control.w.shape == grid.rho.shape


def test_control_dominates_cells_and_is_superadditive():
    rng = np.random.default_rng(4)
    sp = random_space(rng, depth=3, branching=2, random_transitions=True)
    grid = oscillation_grid(random_process(sp, rng, kind="gaussian"))
    for p in (1.0, 2.0, 3.0):
        control = variation_control(grid, p)
        d = control.depth
        for s in range(d + 1):
            # Degenerate windows are not partition cells.
            assert control.w[s, s] == 0.0
            for t in range(s + 1, d + 1):
                assert control.w[s, t] >= grid.rho[s, t] ** p - 1e-12
                for u in range(s, t + 1):
                    assert control.w[s, u] + control.w[u, t] <= control.w[s, t] + 1e-12


def test_variation_control_validation():
    with pytest.raises(ValueError, match="p must be"):
        variation_control(grid_matrix(), 0.5)
    with pytest.raises(ValueError, match="square"):
        variation_control(np.zeros((2, 3)), 2.0)


def test_vmo_alpha_seminorm_exact():
    # rho[s,t] = ((t-s) dt)^alpha has seminorm exactly 1.
    d = 4
    alpha = 0.5
    dt = 0.25
    rho = np.zeros((d + 1, d + 1))
    for s in range(d + 1):
        for t in range(s + 1, d + 1):
            rho[s, t] = ((t - s) * dt) ** alpha
    assert vmo_alpha_seminorm(rho, alpha, dt) == pytest.approx(1.0)


def test_vmo_alpha_seminorm_scaling_and_validation():
    rho = np.array([[0.0, 3.0], [np.nan, 0.0]])
    assert vmo_alpha_seminorm(rho, 0.5, 1.0) == pytest.approx(3.0)
    assert vmo_alpha_seminorm(rho, 0.5, 4.0) == pytest.approx(1.5)
    with pytest.raises(ValueError, match="alpha"):
        vmo_alpha_seminorm(rho, 0.0)
    with pytest.raises(ValueError, match="dt"):
        vmo_alpha_seminorm(rho, 0.5, 0.0)
