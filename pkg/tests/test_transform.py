import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impnet import (HistoryFunction, ImpulseSchedule, SingularTransformError, simulate_transformed,
                    to_impulsive, to_nonimpulsive, transformed_rhs)
from impnet.transform import grid_products, impulse_product


def test_product_excludes_event_time():
    sched = ImpulseSchedule([0.5], [[0.5]], 1.0)
    assert impulse_product(sched, 0, 0.5) == 1.0
    assert impulse_product(sched, 0, 0.5000001) == 0.5
    assert impulse_product(sched, 0, 2.6) == 0.125


def test_gamma_one_is_singular():
    sched = ImpulseSchedule([0.5], [[1.0]], 1.0)
    with pytest.raises(SingularTransformError):
        to_nonimpulsive(np.array([1.0]), sched, 0.7)


def test_grid_products():
    sched = ImpulseSchedule([0.5], [[0.5], [-1.0]], 1.0)
    times = np.linspace(0, 2, 9)
    jump, p_left, p_right, mask = grid_products(times, sched)
    assert list(np.nonzero(mask)[0]) == [2, 6]
    np.testing.assert_array_equal(p_right[-1], [0.25, 4.0])
    np.testing.assert_array_equal(p_left[2], [1.0, 1.0])
    np.testing.assert_array_equal(p_right[2], [0.5, 2.0])


def test_off_grid_impulse_rejected():
    sched = ImpulseSchedule([0.3], [[0.5]], 1.0)
    with pytest.raises(ValueError):
        grid_products(np.linspace(0, 1, 5), sched)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.9, 0.9), min_size=2, max_size=2), st.floats(0.0, 5.0),
       st.lists(st.floats(-10, 10), min_size=2, max_size=2))
def test_state_round_trip(gammas, t, x):
    sched = ImpulseSchedule([0.4], [[gammas[0]], [gammas[1]]], 1.0)
    x = np.array(x)
    y = to_nonimpulsive(x, sched, t)
    np.testing.assert_allclose(to_impulsive(y, sched, t), x, rtol=1e-12, atol=1e-300)


def test_trajectory_round_trip(f_impulsive):
    y = simulate_transformed(f_impulsive, HistoryFunction.constant(0.5, 2), 3.0)
    x = to_impulsive(y, f_impulsive.impulses)
    assert x.kind == "x" and int(x.impulse.sum()) == 6
    again = to_nonimpulsive(x, f_impulsive.impulses)
    np.testing.assert_allclose(again.left, y.left, rtol=1e-14)
    np.testing.assert_allclose(again.right, y.right, rtol=1e-14)


def test_transformed_rhs_matches_integrator(f_impulsive):
    phi = HistoryFunction.random(np.random.default_rng(2), 2)
    y = simulate_transformed(f_impulsive, phi, 2.5)
    for t in (0.15, 0.55, 1.25, 1.9, 2.45):
        k = int(y.nearest(t)[0])
        rhs = transformed_rhs(f_impulsive, lambda s: y(s), y.times[k])
        np.testing.assert_allclose(rhs, y.dleft[k], atol=1e-6)


def test_transformed_solution_is_continuous(f_impulsive):
    y = simulate_transformed(f_impulsive, HistoryFunction.constant(1.0, 2), 3.0)
    np.testing.assert_array_equal(y.left, y.right)
    assert np.max(np.abs(np.diff(y.left, axis=0))) < 0.05
