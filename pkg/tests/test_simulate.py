import math

import numpy as np
import pytest

from impnet import (ActivationSpec, DelayFunction, HistoryFunction, HistoryUnderflowError, Kernel, NetworkSpec,
                    memory_init, simulate, simulate_transformed)
from impnet.fixtures import load_fixture
from impnet.simulate import build_grid


def test_scalar_decay_matches_exponential():
    spec, hist = load_fixture("scalar-decay")
    traj = simulate(spec, hist, 5.0)
    np.testing.assert_allclose(traj.left[:, 0], np.exp(-traj.times), atol=1e-8, rtol=0)
    mid = np.linspace(0.0, 5.0, 777)
    np.testing.assert_allclose(traj(mid)[:, 0], np.exp(-mid), atol=1e-8, rtol=0)


def test_single_impulse_halves_state():
    spec = NetworkSpec.build([1.0], impulses=([1.0], [[0.5]]), omega=5.0)
    traj = simulate(spec, HistoryFunction.constant(1.0, 1), 2.0)
    k = int(np.nonzero(traj.impulse)[0][0])
    assert traj.times[k] == pytest.approx(1.0)
    assert traj.left[k, 0] == pytest.approx(math.exp(-1.0), abs=1e-9)
    assert traj.right[k, 0] == pytest.approx(0.5 * math.exp(-1.0), abs=1e-9)
    assert traj(2.0)[0] == pytest.approx(0.5 * math.exp(-2.0), abs=1e-9)


def _delay_closed_form(t):
    # x' = -x(t - 1), history 1: x = 1 - t on [0, 1], then 1 - t + (t - 1)^2 / 2
    return np.where(t <= 1.0, 1.0 - t, 1.0 - t + 0.5 * (t - 1.0) ** 2)


def test_discrete_delay_method_of_steps():
    spec, hist = load_fixture("discrete-delay")
    traj = simulate(spec, hist, 2.0)
    np.testing.assert_allclose(traj.left[:, 0], _delay_closed_form(traj.times), atol=1e-8, rtol=0)
    assert traj.left[-1, 0] == pytest.approx(-0.5, abs=1e-8)


def test_memory_init_examples():
    # phi(s) = e^s, k = e^{-u}, f identity: int_0^inf e^{-2u} du = 1/2
    assert memory_init(Kernel.exponential(1.0), lambda s: math.exp(s), lambda v: v) == pytest.approx(0.5, abs=1e-10)
    # constant history: the memory equals f(c) for any kernel of unit mass
    for k in (Kernel.exponential(3.0), Kernel.gamma2(2.0), Kernel.uniform(0.4)):
        phi = HistoryFunction.constant(0.7, 1)
        assert memory_init(k, phi, math.tanh) == pytest.approx(math.tanh(0.7), abs=1e-12)


def test_memory_init_gamma_kernel():
    # int_0^inf b^2 u e^{-bu} e^{-u} du = (b / (b + 1))^2
    b = 2.0
    val = memory_init(Kernel.gamma2(b), lambda s: math.exp(s), lambda v: v)
    assert val == pytest.approx((b / (b + 1)) ** 2, abs=1e-10)


def test_chain_and_quadrature_memory_agree(two_neuron):
    phi = HistoryFunction.random(np.random.default_rng(7), 2)
    chain = simulate(two_neuron, phi, 3.0)
    quad = simulate(two_neuron, phi, 3.0, memory="quadrature")
    np.testing.assert_allclose(chain.left, quad.left, atol=1e-6, rtol=0)


def test_gamma_kernel_chain_and_quadrature_agree():
    spec = NetworkSpec.build([2.0, 3.0], A=[[0.2, 0.1], [0.0, 0.3]], C=[[0.5, 0.4], [0.3, 0.2]],
                             I=[0.5, -0.2], kernel=Kernel.gamma2(3.0))
    phi = HistoryFunction.random(np.random.default_rng(3), 2)
    chain = simulate(spec, phi, 3.0)
    quad = simulate(spec, phi, 3.0, memory="quadrature")
    np.testing.assert_allclose(chain.left, quad.left, atol=1e-6, rtol=0)


def test_uniform_kernel_against_reference_rhs():
    from impnet.simulate import network_rhs
    spec = NetworkSpec.build([2.0], C=[[1.0]], I=[0.3], kernel=Kernel.uniform(0.5))
    traj = simulate(spec, HistoryFunction.random(np.random.default_rng(1), 1), 2.0)
    for t in (0.25, 0.75, 1.6):
        k = int(traj.nearest(t)[0])
        assert network_rhs(spec, traj, traj.times[k]) == pytest.approx(traj.dleft[k], abs=1e-6)


def test_jumps_are_exact(f_impulsive):
    traj = simulate(f_impulsive, HistoryFunction.constant(0.2, 2), 3.0)
    sched = f_impulsive.impulses
    hits = np.nonzero(traj.impulse)[0]
    assert hits.size == 6
    for k in hits:
        phase = traj.times[k] - math.floor(traj.times[k] + 1e-9)
        col = int(np.argmin(np.abs(sched.times - phase)))
        np.testing.assert_array_equal(traj.right[k], sched.factors[:, col] * traj.left[k])


def test_transformed_run_maps_back(f_impulsive):
    from impnet import to_impulsive
    phi = HistoryFunction.random(np.random.default_rng(11), 2)
    x = simulate(f_impulsive, phi, 4.0)
    y = simulate_transformed(f_impulsive, phi, 4.0)
    assert not np.any(y.impulse)
    back = to_impulsive(y, f_impulsive.impulses)
    np.testing.assert_allclose(back.left, x.left, atol=1e-6, rtol=0)
    np.testing.assert_allclose(back.right, x.right, atol=1e-6, rtol=0)


def test_empty_schedule_transform_is_identity(two_neuron):
    phi = HistoryFunction.random(np.random.default_rng(5), 2)
    x = simulate(two_neuron, phi, 2.0)
    y = simulate_transformed(two_neuron, phi, 2.0)
    np.testing.assert_array_equal(x.left, y.left)
    np.testing.assert_array_equal(x.right, y.right)


def test_history_underflow_is_raised():
    spec = NetworkSpec.build([1.0], B=[[0.5]], delay=DelayFunction.constant(0.5))
    phi = HistoryFunction([0.0], [1.0], [2.0], horizon=0.2, tail=False)
    with pytest.raises(HistoryUnderflowError):
        simulate(spec, phi, 1.0)


def test_zero_decay_is_simulable():
    spec = NetworkSpec.build([0.0], I=[1.0])
    traj = simulate(spec, HistoryFunction.constant(0.0, 1), 1.0)
    assert traj.left[-1, 0] == pytest.approx(1.0, abs=1e-12)


def test_bounded_activation_keeps_state_bounded(two_neuron):
    # |x_i| <= max(|phi|, (sum_j (|A|+|B|+|C|)_ij + |I_i|) / a_i) with |f| <= 1
    cap = (np.abs(two_neuron.A) + np.abs(two_neuron.B) + np.abs(two_neuron.C)).sum(axis=1) + np.abs(two_neuron.I)
    cap = np.maximum(cap / two_neuron.a, 3.0)
    traj = simulate(two_neuron, HistoryFunction.constant(3.0, 2), 10.0)
    assert np.all(np.abs(traj.left) <= cap + 1e-9)


def test_grid_contains_breaks(f_impulsive):
    grid = build_grid(f_impulsive, 2.0)
    for t in (0.3, 0.7, 1.0, 1.3, 1.7, 2.0):
        assert np.min(np.abs(grid.times - t)) < 1e-12
    assert np.all(np.diff(grid.times) <= 1e-3 + 1e-12)


def test_shifted_log_clamps_negative_states():
    act = ActivationSpec("shifted-log", 3.0, (0.0, 100.0))
    spec = NetworkSpec.build([1.0], A=[[1.0]], activation=act)
    traj = simulate(spec, HistoryFunction.constant(-1.0, 1), 1.0)
    # f = 0 below zero, so x = -e^{-t} as long as the state stays negative
    np.testing.assert_allclose(traj.left[:, 0], -np.exp(-traj.times), atol=1e-9, rtol=0)
