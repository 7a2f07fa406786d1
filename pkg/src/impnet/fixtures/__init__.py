"""Bundled network fixtures and random instance generators."""
from __future__ import annotations

from importlib import resources

import numpy as np

from ..certify import coupling_matrix, spectral_radius
from ..io import loads_spec
from ..kernels import Kernel
from ..model import ActivationSpec, DelayFunction, ImpulseSchedule, NetworkSpec

FIXTURE_NAMES = (
    "zero-coupling",
    "scalar-decay",
    "discrete-delay",
    "two-neuron",
    "rho-gt-1",
    "f-impulsive",
    "example-1",
)

# certified and F-satisfying, bounded activations
PERIODIC_FIXTURES = ("zero-coupling", "scalar-decay", "two-neuron", "f-impulsive")

BOUNDED = ("hyperbolic-tangent", "logistic", "saturating-linear")


def fixture_path(name: str):
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURE_NAMES)}")
    return resources.files(__name__).joinpath(f"{name}.json")


def load_fixture(name: str):
    """``(spec, history or None)`` for a bundled fixture."""
    path = fixture_path(name)
    return loads_spec(path.read_text(), source=f"{name}.json")


def f_schedule(rng, n, omega=1.0, m=None, spread=0.5):
    """Random schedule whose per-period products are exactly 1 in exact arithmetic.

    Factors ``1 - gamma`` are drawn from ``[1 - spread, 1 + spread]``; the
    last factor of each row closes the product.
    """
    m = int(rng.integers(1, 4)) if m is None else m
    times = np.sort(rng.uniform(0.05, 0.95, m)) * omega
    while m > 1 and np.min(np.diff(times)) < 0.05 * omega:
        times = np.sort(rng.uniform(0.05, 0.95, m)) * omega
    factors = rng.uniform(1.0 - spread, 1.0 + spread, (n, m))
    factors[:, -1] = 1.0 / np.prod(factors[:, :-1], axis=1)
    return ImpulseSchedule(times, 1.0 - factors, omega)


def contractive_schedule(rng, n, omega=1.0, m=None):
    """Random schedule with ``0 <= gamma < 1`` (F generally fails)."""
    m = int(rng.integers(1, 4)) if m is None else m
    times = np.sort(rng.uniform(0.05, 0.95, m)) * omega
    return ImpulseSchedule(times, rng.uniform(0.0, 0.8, (n, m)), omega)


def _random_kernel(rng):
    family = rng.choice(["exponential", "gamma-2", "uniform"])
    if family == "exponential":
        return Kernel.exponential(rng.uniform(1.0, 5.0))
    if family == "gamma-2":
        return Kernel.gamma2(rng.uniform(2.0, 6.0))
    return Kernel.uniform(rng.uniform(0.2, 1.0))


def _random_delay(rng, tau_max):
    base = rng.uniform(0.05, tau_max)
    if rng.random() < 0.5:
        return DelayFunction.constant(base)
    return DelayFunction("sinusoidal", base, rng.uniform(0.0, base), rng.uniform(0, 2 * np.pi))


def random_network(rng, n=None, n_max=4, rho=None, impulses="f", omega=1.0, tau_max=0.5,
                   per_entry=False, kernels=None, name="random"):
    """Random network instance.

    ``rho`` rescales the couplings so that ``rho(diag(a)^-1 W)`` takes that
    value; ``impulses`` is ``"f"`` (F-satisfying), ``"contractive"`` or
    ``None``.  ``per_entry`` draws separate delays and kernels per entry.
    """
    n = int(rng.integers(1, n_max + 1)) if n is None else n
    a = rng.uniform(1.0, 5.0, n)
    A, B, C = (rng.normal(size=(n, n)) * (rng.random((n, n)) < 0.8) for _ in range(3))
    acts = [ActivationSpec(str(rng.choice(BOUNDED)), float(rng.uniform(0.5, 2.0))) for _ in range(n)]
    if per_entry:
        delays = [[_random_delay(rng, tau_max) for _ in range(n)] for _ in range(n)]
        kerns = [[_random_kernel(rng) for _ in range(n)] for _ in range(n)]
    else:
        delays = _random_delay(rng, tau_max)
        kerns = _random_kernel(rng)
    if kernels is not None:
        kerns = kernels
    if impulses == "f":
        sched = f_schedule(rng, n, omega)
    elif impulses == "contractive":
        sched = contractive_schedule(rng, n, omega)
    else:
        sched = None
    I = rng.uniform(-1.0, 1.0, n)
    spec = NetworkSpec.build(a, A, B, C, I, acts, delays, kerns, sched, omega, name=name)
    if rho is not None:
        current = spectral_radius(coupling_matrix(spec) / spec.a[:, None])[0]
        if current == 0.0:
            spec = spec.replace(A=spec.A + np.eye(n))
            current = spectral_radius(coupling_matrix(spec) / spec.a[:, None])[0]
        s = rho / current
        spec = spec.replace(A=spec.A * s, B=spec.B * s, C=spec.C * s)
    return spec


__all__ = ["FIXTURE_NAMES", "PERIODIC_FIXTURES", "load_fixture", "fixture_path", "random_network",
           "f_schedule", "contractive_schedule"]
