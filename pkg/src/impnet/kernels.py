"""Distributed-delay kernels.

Three unit-mass families are supported::

    exponential   k(s) = b exp(-b s)
    gamma-2       k(s) = b^2 s exp(-b s)
    uniform       k(s) = 1/T on [0, T]

Closed forms are given for the mass, the first moment and the exponential
moment ``p(alpha) = int_0^inf exp(alpha s) k(s) ds``.  The logarithmic weight
``lambda(alpha) = int_0^inf log(e + alpha s) k(s) ds`` has no convenient closed
form and is computed by adaptive quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import KernelDivergenceError

FAMILIES = ("exponential", "gamma-2", "uniform")
FAMILY_CODE = {name: code for code, name in enumerate(FAMILIES)}

LOG_MOMENT_RTOL = 1e-8


@dataclass(frozen=True)
class Kernel:
    """A kernel family with its single parameter.

    ``param`` is the rate ``b`` (1/time) for the exponential and gamma-2
    families and the support width ``T`` (time) for the uniform family.
    """

    family: str
    param: float

    def __post_init__(self):
        if self.family not in FAMILY_CODE:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "param", float(self.param))

    @classmethod
    def exponential(cls, rate):
        return cls("exponential", rate)

    @classmethod
    def gamma2(cls, rate):
        return cls("gamma-2", rate)

    @classmethod
    def uniform(cls, width):
        return cls("uniform", width)

    @property
    def code(self) -> int:
        return FAMILY_CODE[self.family]

    @property
    def is_valid(self) -> bool:
        return math.isfinite(self.param) and self.param > 0

    @property
    def convergence_bound(self) -> float:
        """Supremum of the alphas for which the exponential moment is finite."""
        return math.inf if self.family == "uniform" else self.param

    def to_dict(self):
        key = "width" if self.family == "uniform" else "rate"
        return {"family": self.family, key: self.param}

    @classmethod
    def from_dict(cls, d):
        family = d["family"]
        key = "width" if family == "uniform" else "rate"
        if key not in d:
            raise KeyError(key)
        return cls(family, d[key])


def kernel_eval(k: Kernel, s):
    """Density of ``k`` at delay ``s >= 0``; accepts scalars or arrays."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("kernel evaluated at negative delay")
    b = k.param
    if k.family == "exponential":
        out = b * np.exp(-b * s_arr)
    elif k.family == "gamma-2":
        out = b * b * s_arr * np.exp(-b * s_arr)
    else:
        out = np.where(s_arr <= b, 1.0 / b, 0.0)
    return float(out) if out.ndim == 0 else out


def survival(k: Kernel, s: float) -> float:
    """Tail mass ``int_s^inf k(u) du``."""
    if s <= 0:
        return 1.0
    b = k.param
    if k.family == "exponential":
        return math.exp(-b * s)
    if k.family == "gamma-2":
        return (1.0 + b * s) * math.exp(-b * s)
    return max(0.0, 1.0 - s / b)


def tail_horizon(k: Kernel, tol: float = 1e-10) -> float:
    """Smallest horizon ``T_tail`` with ``int_{T_tail}^inf k < tol`` (up to root tolerance)."""
    b = k.param
    if k.family == "uniform":
        return b
    if k.family == "exponential":
        return math.log(1.0 / tol) / b * (1.0 + 1e-12)
    # gamma-2: (1 + b s) e^{-b s} = tol
    hi = math.log(1.0 / tol) / b
    while survival(k, hi) >= tol:
        hi *= 2.0
    root = optimize.brentq(lambda s: survival(k, s) - tol, 0.0, hi, xtol=1e-14, rtol=1e-14)
    return root * (1.0 + 1e-12)


def kernel_moments(k: Kernel) -> tuple[float, float]:
    """Closed-form (mass, first moment)."""
    if k.family == "exponential":
        return 1.0, 1.0 / k.param
    if k.family == "gamma-2":
        return 1.0, 2.0 / k.param
    return 1.0, k.param / 2.0


def exp_moment(k: Kernel, alpha: float) -> float:
    """``p(alpha) = int_0^inf exp(alpha s) k(s) ds`` in closed form.

    Raises KernelDivergenceError when ``alpha`` reaches the kernel's rate.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return 1.0
    b = k.param
    if k.family == "uniform":
        x = alpha * b
        return math.expm1(x) / x
    if alpha >= b:
        raise KernelDivergenceError(
            f"exponential moment of {k.family} kernel diverges for alpha >= rate {b}"
        )
    ratio = b / (b - alpha)
    return ratio if k.family == "exponential" else ratio * ratio


def log_moment(k: Kernel, alpha: float) -> float:
    """``lambda(alpha) = int_0^inf log(e + alpha s) k(s) ds`` by adaptive quadrature."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return 1.0

    def integrand(s):
        return math.log(math.e + alpha * s) * kernel_eval(k, s)

    if k.family == "uniform":
        val, _ = integrate.quad(integrand, 0.0, k.param, epsabs=0.0, epsrel=LOG_MOMENT_RTOL, limit=200)
    else:
        val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=LOG_MOMENT_RTOL, limit=200)
    return val


def moments_by_quadrature(k: Kernel, alpha: float | None = None):
    """Adaptive-quadrature (mass, first moment[, exponential moment]).

    Independent of the closed forms above; used to cross-check them.
    """
    upper = k.param if k.family == "uniform" else np.inf

    def q(f):
        return integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=1e-12, limit=400)[0]

    mass = q(lambda s: kernel_eval(k, s))
    first = q(lambda s: s * kernel_eval(k, s))
    if alpha is None:
        return mass, first
    return mass, first, q(lambda s: math.exp(alpha * s) * kernel_eval(k, s))
