import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from impnet import (CertificateError, Kernel, NetworkSpec, assess, certificate, coupling_matrix, find_alpha,
                    find_xi, spectral_radius)
from impnet.certify import alpha_rows, default_delta_cap
from impnet.fixtures import load_fixture, random_network

# two-neuron fixture: W = [[1.0, 0.5], [0.5, 0.9]], diag(a) - W = [[3, -0.5], [-0.5, 4.1]], det 12.05
XI_TWO = np.array([4.6 / 12.05, 3.5 / 12.05])


def test_zero_coupling_gives_unit_weights():
    cert = certificate(load_fixture("zero-coupling")[0])
    np.testing.assert_allclose(cert.xi, [1.0])
    assert cert.spectral_radius == 0.0


def test_two_neuron_weights(two_neuron):
    cert = certificate(two_neuron)
    np.testing.assert_allclose(cert.xi, XI_TWO, rtol=1e-13)
    np.testing.assert_allclose(cert.xi, [0.3817, 0.2905], atol=5e-5)
    assert np.all(cert.margins < 0)


def test_two_neuron_alpha_by_root_finding(two_neuron):
    # each row of G(alpha) solved independently; alpha* is the smallest root
    xi, a, tau, b = XI_TWO, two_neuron.a, 0.5, 4.0
    W0 = np.abs(two_neuron.A)
    WB = np.abs(two_neuron.B)
    WC = np.abs(two_neuron.C)

    def row(i, al):
        return xi[i] * (al - a[i]) + (W0[i] + math.exp(al * tau) * WB[i] + WC[i] * b / (b - al)) @ xi

    roots = [optimize.brentq(lambda al: row(i, al), 0.0, 3.99, xtol=1e-14) for i in range(2)]
    cert = certificate(two_neuron)
    assert cert.alpha == pytest.approx(min(roots), abs=1e-8)
    assert cert.alpha <= min(roots)
    assert cert.beta == pytest.approx(1.1 * XI_TWO.max() / XI_TWO.min())


def test_rho_above_one_names_rows():
    spec = load_fixture("rho-gt-1")[0]
    with pytest.raises(CertificateError) as exc:
        certificate(spec)
    part = exc.value.partial
    assert not part.feasible
    assert part.spectral_radius == pytest.approx(2.0)
    assert part.violating_rows == [1, 2]
    assert "[1, 2]" in str(exc.value)


def test_scalar_alpha_is_capped():
    # x' = -3x: G(alpha) = alpha - 3, cap 0.999 * 3
    spec = NetworkSpec.build([3.0])
    cert = certificate(spec)
    assert cert.alpha == pytest.approx(0.999 * 3.0)


def test_kernel_rate_caps_alpha():
    spec = NetworkSpec.build([5.0], C=[[0.1]], kernel=Kernel.exponential(1.0))
    assert default_delta_cap(spec) == pytest.approx(0.999)
    assert certificate(spec).alpha <= 0.999


def test_uniform_kernel_does_not_cap():
    spec = NetworkSpec.build([2.0], C=[[0.1]], kernel=Kernel.uniform(0.5))
    assert default_delta_cap(spec) == pytest.approx(0.999 * 2.0)


def test_find_alpha_rows_negative(two_neuron):
    cert = certificate(two_neuron)
    assert np.all(alpha_rows(two_neuron, cert.xi, cert.alpha) <= -1e-9)
    assert np.max(alpha_rows(two_neuron, cert.xi, cert.alpha + 1e-8)) > -1e-9


def test_find_alpha_needs_positive_xi(two_neuron):
    with pytest.raises(CertificateError):
        find_alpha(two_neuron, [1.0, -1.0])


def test_impulse_hypothesis_reported_separately(f_impulsive):
    cert = certificate(f_impulsive)
    assert cert.feasible
    assert not cert.impulses_contractive
    assert not cert.certified


def test_spectral_radius_bounds():
    M = np.array([[0.0, 2.0], [0.5, 0.0]])  # rho = 1, cyclic
    rho, v, (lo, hi) = spectral_radius(M)
    assert rho == pytest.approx(1.0, abs=1e-10)
    assert lo <= 1.0 + 1e-12 and hi >= 1.0 - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_power_iteration_matches_eigenvalues(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    M = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.7)
    rho = spectral_radius(M)[0]
    assert rho == pytest.approx(np.max(np.abs(np.linalg.eigvals(M))), abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 3.0))
def test_feasibility_is_spectral(seed, rho):
    spec = random_network(np.random.default_rng(seed), n_max=5, rho=rho, impulses=None)
    cert = find_xi(spec)
    if abs(rho - 1.0) > 1e-6:
        assert cert.feasible == (rho < 1.0)
        assert cert.verdicts_agree
    if cert.feasible and rho < 0.999:
        assert np.all(cert.xi > 0)
        D = np.diag(spec.a) - coupling_matrix(spec)
        np.testing.assert_allclose(D @ cert.xi, 1.0, atol=1e-9)


def test_gamma_does_not_enter_feasibility(two_neuron):
    base = assess(two_neuron)
    for g in (-0.9, 0.0, 0.5, 0.9):
        spec = two_neuron.replace(impulses=type(two_neuron.impulses)([0.5], [[g], [g]], 1.0))
        cert = assess(spec)
        assert cert.feasible == base.feasible
        np.testing.assert_allclose(cert.xi, base.xi)


def test_nonpositive_decay_is_infeasible():
    spec = NetworkSpec.build([0.0], B=[[-1.0]])
    cert = assess(spec)
    assert not cert.feasible
    assert cert.violating_rows == [1]


def test_assess_does_not_raise():
    assert not assess(load_fixture("rho-gt-1")[0]).feasible


def test_to_dict_is_json_ready(two_neuron):
    d = certificate(two_neuron).to_dict()
    assert d["feasible"] and d["violating_rows"] == []
    assert d["tolerances"]["alpha_tol"] == 1e-10
