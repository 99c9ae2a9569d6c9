import math

import numpy as np
import pytest

from bmoforge.estimators import (
    empirical_rho_grid,
    exp_moment,
    holder_exponent_fit,
    loglog_fit,
    markov_conditional_moment,
    pooled_slope,
    rate_fit,
    scalar_field_registry,
    state_functional,
)


def test_registry_fields():
    t = np.zeros(3)
    x = np.array([-2.0, 0.0, 0.5])
    np.testing.assert_array_equal(scalar_field_registry["one"](t, x), [1.0, 1.0, 1.0])
    np.testing.assert_array_equal(scalar_field_registry["sign"](t, x), [-1.0, 0.0, 1.0])
    np.testing.assert_array_equal(scalar_field_registry["coordinate"](t, x), x)
    # Reciprocal magnitude clips at 100.
    np.testing.assert_allclose(
        scalar_field_registry["inv-abs-clip"](t, x), [0.5, 100.0, 2.0]
    )
    with pytest.raises(KeyError, match="unknown field"):
        state_functional("sine")


def test_state_functional_uses_first_coordinate():
    f = state_functional("coordinate")
    states = np.arange(12.0).reshape(2, 3, 2)
    np.testing.assert_array_equal(f(np.zeros(3), states), states[..., 0])


def test_markov_moment_exact_for_flat_fields():
    zero = lambda times, states: np.zeros(states.shape[:-1])
    est = markov_conditional_moment(zero, 0.0, 1.0, [0.0, 3.0], n_inner=16, n_steps=8, seed=0)
    assert est.value == 0.0
    assert est.stderr == 0.0
    one = state_functional("one")
    est = markov_conditional_moment(one, 0.5, 2.0, [1.0], n_inner=16, n_steps=8, seed=0)
    assert est.value == pytest.approx(1.5)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)


def test_markov_moment_gaussian_oracle():
    # E | integral_0^1 B dr | = sqrt(2/(3 pi)) for the coordinate field.
    f = state_functional("coordinate")
    est = markov_conditional_moment(f, 0.0, 1.0, [0.0], n_inner=4000, n_steps=512, seed=7)
    exact = math.sqrt(2.0 / (3.0 * math.pi))
    assert abs(est.value - exact) <= 3.0 * est.stderr
    assert est.n_outer == 1
    assert est.n_inner == 4000


def test_markov_moment_chunk_invariance():
    f = state_functional("sign")
    a = markov_conditional_moment(f, 0.0, 1.0, [0.0], n_inner=500, n_steps=32, seed=5,
                                  inner_chunk=1024)
    b = markov_conditional_moment(f, 0.0, 1.0, [0.0], n_inner=500, n_steps=32, seed=5,
                                  inner_chunk=17)
    assert a.value == b.value
    assert a.stderr == b.stderr


def test_markov_moment_grows_with_horizon():
    f = state_functional("coordinate")
    vals = [
        markov_conditional_moment(f, 0.0, t, [0.0], n_inner=2000, n_steps=128, seed=3).value
        for t in (0.5, 1.0, 2.0)
    ]
    assert vals[0] < vals[1] < vals[2]


def test_markov_moment_stderr_shrinks():
    f = state_functional("coordinate")
    small = markov_conditional_moment(f, 0.0, 1.0, [0.0], n_inner=800, n_steps=64, seed=9)
    large = markov_conditional_moment(f, 0.0, 1.0, [0.0], n_inner=3200, n_steps=64, seed=9)
    ratio = large.stderr / small.stderr
    assert 0.3 <= ratio <= 0.7  # 4x samples halve the stderr, up to noise


def test_markov_moment_proxy_and_validation():
    f = state_functional("coordinate")
    xs = [0.0, 1.0, -2.0]
    hi = markov_conditional_moment(f, 0.0, 1.0, xs, n_inner=64, n_steps=16, seed=1, proxy="max")
    q = markov_conditional_moment(f, 0.0, 1.0, xs, n_inner=64, n_steps=16, seed=1,
                                  proxy="quantile", quantile=0.5)
    assert q.value <= hi.value
    with pytest.raises(ValueError, match="proxy"):
        markov_conditional_moment(f, 0.0, 1.0, xs, n_inner=64, n_steps=16, seed=1, proxy="mean")
    with pytest.raises(ValueError, match="t > s"):
        markov_conditional_moment(f, 1.0, 1.0, xs, n_inner=64, n_steps=16, seed=1)
    with pytest.raises(ValueError, match="dim"):
        markov_conditional_moment(f, 0.0, 1.0, np.zeros((2, 2)), n_inner=64, n_steps=16,
                                  seed=1, dim=1)


def test_rho_grid_exact_fields():
    zero = lambda times, states: np.zeros(states.shape[:-1])
    grid = empirical_rho_grid(zero, [0.5, 1.0, 1.5], n_outer=4, n_inner=8,
                              steps_per_unit=8, seed=2)
    assert np.all(grid.values[np.triu_indices(3, 1)] == 0.0)
    assert not grid.monotone_violations
    one = state_functional("one")
    grid = empirical_rho_grid(one, [0.5, 1.0, 2.0], n_outer=4, n_inner=8,
                              steps_per_unit=8, seed=2)
    # | integral of 1 | = t - s exactly, for every pair.
    for i, j, want in [(0, 1, 0.5), (0, 2, 1.5), (1, 2, 1.0)]:
        assert grid.values[i, j] == pytest.approx(want)
    assert not grid.monotone_violations


def test_rho_grid_validation():
    one = state_functional("one")
    with pytest.raises(ValueError, match="increasing"):
        empirical_rho_grid(one, [1.0, 0.5], n_outer=2, n_inner=8, steps_per_unit=4, seed=0)
    with pytest.raises(ValueError, match="increasing"):
        empirical_rho_grid(one, [1.0], n_outer=2, n_inner=8, steps_per_unit=4, seed=0)


def test_holder_exponent_sign_field():
    # Scale invariance of sign makes the modulus linear in the window width.
    f = state_functional("sign")
    grid = empirical_rho_grid(f, [0.25, 0.5, 1.0, 2.0], n_outer=24, n_inner=600,
                              steps_per_unit=256, seed=29)
    fit = holder_exponent_fit(grid)
    assert 0.8 <= fit.slope <= 1.1
    assert not grid.monotone_violations


def test_holder_exponent_clipped_reciprocal():
    # Singular reciprocal field: modulus grows like the square root of the window.
    f = state_functional("inv-abs-clip")
    grid = empirical_rho_grid(f, [0.25, 0.5, 1.0, 2.0], n_outer=24, n_inner=600,
                              steps_per_unit=256, seed=29)
    fit = holder_exponent_fit(grid)
    assert 0.4 <= fit.slope <= 0.7


def test_holder_fit_needs_positive_values():
    zero = lambda times, states: np.zeros(states.shape[:-1])
    grid = empirical_rho_grid(zero, [0.5, 1.0], n_outer=2, n_inner=8,
                              steps_per_unit=4, seed=0)
    with pytest.raises(ValueError, match="positive grid values"):
        holder_exponent_fit(grid)


def test_exp_moment_frozen():
    r = exp_moment([0.0, 1.0, 2.0], 1.0)
    assert r.estimate.value == pytest.approx((1 + math.e + math.e**2) / 3)
    assert r.truncated_fraction == 0.0
    r = exp_moment([0.0, 1.0, 2.0], 1.0, truncation=5.0)
    assert r.estimate.value == pytest.approx((1 + math.e + 5.0) / 3)
    assert r.truncated_fraction == pytest.approx(1.0 / 3.0)


def test_exp_moment_half_normal():
    # E exp(|Z|/2) = 2 e^(1/8) Phi(1/2).
    rng = np.random.default_rng(17)
    r = exp_moment(np.abs(rng.standard_normal(200000)), 0.5)
    exact = 1.5670592366928566
    assert abs(r.estimate.value - exact) <= 3.0 * r.estimate.stderr


def test_exp_moment_overflow_and_validation():
    r = exp_moment([1e6], 1.0)
    assert r.estimate.value == math.inf
    assert r.truncated_fraction == 1.0
    with pytest.raises(ValueError, match="nonempty"):
        exp_moment([], 1.0)
    with pytest.raises(ValueError, match="truncation"):
        exp_moment([1.0], 1.0, truncation=0.0)


def test_loglog_fit_exact_line():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    fit = loglog_fit(x, 2.0 * x + 1.0)
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError, match="equal length"):
        loglog_fit(x, x[:2])
    with pytest.raises(ValueError, match="all equal"):
        loglog_fit(np.ones(3), np.arange(3.0))


def test_rate_fit_exact_and_frozen():
    ns = [8, 16, 32, 64, 128, 256, 512]
    fit = rate_fit(ns, [1.0 / n for n in ns])
    assert fit.slope == pytest.approx(1.0)
    fit = rate_fit(ns, [n ** -0.5 for n in ns])
    assert fit.slope == pytest.approx(0.5)
    # The reference envelope sqrt(log(n+1)/n) fits to a visibly smaller
    # exponent over this range; the log factor drags the slope down.
    fit = rate_fit(ns, [math.sqrt(math.log(n + 1) / n) for n in ns])
    assert fit.slope == pytest.approx(0.3762074091, abs=1e-9)
    assert fit.table[0] == (8.0, pytest.approx(math.sqrt(math.log(9.0) / 8.0)))


def test_rate_fit_validation():
    with pytest.raises(ValueError, match="three"):
        rate_fit([4, 8], [1.0, 0.5])
    with pytest.raises(ValueError, match="positive"):
        rate_fit([4, 8, 16], [1.0, 0.5, 0.0])
    with pytest.raises(ValueError, match="ns must be positive"):
        rate_fit([0, 8, 16], [1.0, 0.5, 0.2])


def test_pooled_slope_frozen():
    class Fit:
        def __init__(self, slope, stderr):
            self.slope = slope
            self.slope_stderr = stderr

    slope, se = pooled_slope([Fit(2.0, 0.1), Fit(2.2, 0.2)])
    assert slope == pytest.approx(2.04)
    assert se == pytest.approx(math.sqrt(1.0 / 125.0))
    with pytest.raises(ValueError, match="at least one"):
        pooled_slope([])
