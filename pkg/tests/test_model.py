import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impnet import (ActivationSpec, AssumptionError, DelayFunction, ImpulseSchedule, Kernel, NetworkSpec,
                    StructureError, apriori_bounds, validate_network)
from impnet.fixtures import FIXTURE_NAMES, load_fixture


def test_zero_coupling_passes_everything():
    report = validate_network(NetworkSpec.build([1.0]))
    assert report.ok
    assert set(report.status.values()) == {"pass"}


def test_gamma_at_least_one_is_flagged_with_index():
    spec = NetworkSpec.build([1.0], impulses=([0.5], [[1.5]]))
    bad = validate_network(spec).failures("E")
    assert len(bad) == 1 and bad[0].index == (1, 1)
    assert bad[0].severity == "error"


def test_f_holds_for_half_and_minus_one():
    sched = ImpulseSchedule([0.3, 0.7], [[0.5, -1.0]], 1.0)
    assert sched.f_holds()
    assert sched.period_products()[0] == 1.0
    spec = NetworkSpec.build([1.0], impulses=sched)
    assert not validate_network(spec).failures("F")


def test_f_failure_is_a_warning():
    spec = NetworkSpec.build([1.0], impulses=([0.5], [[0.5]]))
    report = validate_network(spec)
    assert report.ok
    assert report.failures("F")[0].severity == "warning"


def test_structural_mismatch_is_not_an_assumption_failure():
    with pytest.raises(StructureError):
        NetworkSpec.build([1.0, 2.0], A=np.zeros((3, 3)))
    with pytest.raises(StructureError):
        NetworkSpec.build([1.0, 2.0], impulses=([0.5], [[0.1, 0.2]]))


def test_nonpositive_decay_and_bad_delay():
    spec = NetworkSpec.build([0.0, 1.0], delay=DelayFunction("sinusoidal", 0.1, 0.2))
    report = validate_network(spec)
    assert report.failures("A")
    assert any(x.index == (1,) for x in report.failures("A"))


def test_validation_is_idempotent(two_neuron):
    assert validate_network(two_neuron).to_dict() == validate_network(two_neuron).to_dict()


@pytest.mark.parametrize("family,gain,L,M", [
    ("hyperbolic-tangent", 2.0, 2.0, 1.0),
    ("logistic", 2.0, 0.5, 1.0),
    ("saturating-linear", 1.5, 1.5, 1.0),
])
def test_activation_constants(family, gain, L, M):
    f = ActivationSpec(family, gain)
    assert f.lipschitz == pytest.approx(L)
    assert f.bound == pytest.approx(M)


@given(st.sampled_from(["hyperbolic-tangent", "logistic", "saturating-linear"]),
       st.floats(0.1, 5.0), st.floats(-10, 10), st.floats(-10, 10))
def test_activation_lipschitz_spot_check(family, gain, x, y):
    f = ActivationSpec(family, gain)
    assert abs(f(x) - f(y)) <= f.lipschitz * abs(x - y) + 1e-12
    assert abs(f(x)) <= f.bound + 1e-12


def test_shifted_log_needs_a_domain():
    with pytest.raises(StructureError):
        ActivationSpec("shifted-log", 3.0)
    with pytest.raises(StructureError):
        ActivationSpec("shifted-log", 3.0, (-1.0, 1.0))
    free = ActivationSpec("shifted-log", 3.0, (0.0, math.inf))
    assert not math.isfinite(free.bound)
    spec = NetworkSpec.build([1.0], activation=free)
    assert validate_network(spec).failures("D")
    held = ActivationSpec("shifted-log", 3.0, (0.0, 100.0))
    assert held.lipschitz == 3.0
    assert held.bound == pytest.approx(math.log(301.0))
    assert held(-5.0) == 0.0


def test_delay_bound_and_values():
    d = DelayFunction("sinusoidal", 0.3, 0.2, 0.0)
    assert d.bound == pytest.approx(0.5)
    t = np.linspace(0, 3, 301)
    assert np.all(d(t, 1.0) <= 0.5 + 1e-15) and np.all(d(t, 1.0) >= 0.1 - 1e-15)
    np.testing.assert_allclose(d(t, 1.0), d(t + 1.0, 1.0), atol=1e-12)


def test_impulse_product_excludes_current_time():
    sched = ImpulseSchedule([0.3, 0.7], [[0.5, -1.0]], 1.0)
    assert sched.product(0, 0.3) == 1.0
    assert sched.product(0, 0.31) == 0.5
    assert sched.product(0, 0.71) == 1.0
    assert sched.product(0, 1.31) == 0.5


# a-priori bounds


def test_bounds_zero_coupling_constant_input():
    spec = NetworkSpec.build([1.0], I=[2.0])
    b = apriori_bounds(spec)
    assert (b.a, b.b, b.c) == (0.0, 0.0, 0.0)
    assert b.N == pytest.approx(1.0)
    assert b.A_i[0] == pytest.approx(2.0)
    assert b.D_i[0] == pytest.approx(2.0 * math.e + b.B_i[0])


def test_bounds_zero_instance():
    b = apriori_bounds(NetworkSpec.build([1.0]))
    assert b.A_i[0] == 0.0 and b.B_i[0] == 0.0 and b.D_i[0] == 0.0


def test_bounds_n_and_n_star_with_impulses():
    # P = 1 on (0, 0.3], 0.5 on (0.3, 0.7], 1 after: int 1/P = 0.3 + 0.8 + 0.3
    spec = NetworkSpec.build([1.0], I=[1.0], impulses=([0.3, 0.7], [[0.5, -1.0]]))
    b = apriori_bounds(spec)
    assert b.N == pytest.approx(1.4)
    assert b.N_star == pytest.approx(2.0)


def test_bounds_reject_unbounded_activation():
    spec = NetworkSpec.build([1.0], activation=ActivationSpec("shifted-log", 3.0, (0.0, math.inf)))
    with pytest.raises(AssumptionError):
        apriori_bounds(spec)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(1.0, 3.0), st.sampled_from(["A", "B", "C", "I"]))
def test_bounds_monotone_in_coefficients(seed, factor, key):
    rng = np.random.default_rng(seed)
    n = 3
    spec = NetworkSpec.build(rng.uniform(1, 3, n), rng.normal(size=(n, n)), rng.normal(size=(n, n)),
                             rng.normal(size=(n, n)), rng.normal(size=n))
    bigger = spec.replace(**{key: getattr(spec, key) * factor})
    lo, hi = apriori_bounds(spec), apriori_bounds(bigger)
    assert np.all(hi.A_i >= lo.A_i - 1e-12)
    assert np.all(hi.D_i >= lo.D_i - 1e-12)


def test_fixtures_load_and_validate():
    for name in FIXTURE_NAMES:
        spec, _ = load_fixture(name)
        report = validate_network(spec)
        if name == "discrete-delay":
            assert report.failures("A")
        else:
            assert report.ok, name


def test_kernel_checks_in_validation():
    spec = NetworkSpec.build([1.0], C=[[1.0]], kernel=Kernel.exponential(-1.0))
    assert validate_network(spec).failures("B")
