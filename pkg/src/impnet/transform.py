"""Equivalence between the impulsive network and a jump-free delay system.

With ``P_i(t) = prod_{0 <= t_k < t} (1 - gamma_ik)`` the substitution
``y_i = x_i / P_i`` removes the jumps:

    y_i' = -a_i y_i + P_i(t)^{-1} sum_j [ A_ij f_j(P_j(t) y_j(t))
                                        + B_ij f_j(P_j(t - tau_ij) y_j(t - tau_ij))
                                        + C_ij int k_ij(t - s) f_j(P_j(s) y_j(s)) ds ]
           + P_i(t)^{-1} I_i
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

from .errors import SingularTransformError
from .kernels import kernel_eval, tail_horizon
from .model import ImpulseSchedule, NetworkSpec
from .trajectory import Trajectory

EVENT_MATCH_TOL = 1e-9


def impulse_product(schedule: ImpulseSchedule, i: int, t: float) -> float:
    """``prod_{0 <= t_k < t} (1 - gamma_ik)``; the impulse at ``t`` itself is excluded."""
    value = schedule.product(i, t)
    if value == 0.0:
        raise SingularTransformError(f"impulse product of neuron {i + 1} vanishes before t={t}")
    return value


def product_vector(schedule: ImpulseSchedule, t: float) -> np.ndarray:
    return np.array([impulse_product(schedule, i, t) for i in range(schedule.n)])


def grid_products(times, schedule: ImpulseSchedule):
    """Impulse products on a time grid.

    Returns ``(jump, p_left, p_right, mask)`` where ``jump[k]`` is the factor
    applied at ``times[k]``, ``p_left[k] = P(times[k])`` (strict) and
    ``p_right[k]`` includes impulses at ``times[k]``.  Every event up to the
    last grid time must coincide with a grid point.
    """
    times = np.asarray(times, dtype=float)
    n = schedule.n
    jump = np.ones((times.size, n))
    mask = np.zeros(times.size, dtype=bool)
    tol = EVENT_MATCH_TOL * max(1.0, schedule.omega)
    for tk, k in schedule.events(times[-1] + tol, t_start=0.0):
        idx = int(np.searchsorted(times, tk - tol))
        if idx >= times.size or abs(times[idx] - tk) > tol:
            if tk > times[-1]:
                continue
            raise ValueError(f"impulse at t={tk} is not on the trajectory grid")
        jump[idx] *= schedule.factors[:, k]
        mask[idx] = True
    p_right = np.cumprod(jump, axis=0)
    p_left = np.vstack([np.ones((1, n)), p_right[:-1]])
    return jump, p_left, p_right, mask


def _check_singular(p):
    if np.any(p == 0.0):
        raise SingularTransformError("an impulse with gamma = 1 makes the transform singular")


def to_nonimpulsive(x, schedule: ImpulseSchedule, t=None):
    """Map impulsive states to the jump-free system: ``y_i = x_i / P_i(t)``.

    ``x`` is either a Trajectory (``t`` ignored) or a state vector at time ``t``.
    """
    if isinstance(x, Trajectory):
        _, p_left, p_right, _ = grid_products(x.times, schedule)
        _check_singular(p_right)
        return x.replace_values(x.left / p_left, x.right / p_right,
                                x.dleft / p_left, x.dright / p_right, kind="y",
                                impulse=np.zeros(x.times.size, dtype=bool))
    p = product_vector(schedule, t)
    return np.asarray(x, dtype=float) / p


def to_impulsive(y, schedule: ImpulseSchedule, t=None):
    """Inverse of :func:`to_nonimpulsive`; reinstates ``x(t_k+) = (1 - gamma_ik) x(t_k)``."""
    if isinstance(y, Trajectory):
        _, p_left, p_right, mask = grid_products(y.times, schedule)
        _check_singular(p_right)
        return y.replace_values(y.left * p_left, y.right * p_right,
                                y.dleft * p_left, y.dright * p_right, kind="x",
                                impulse=y.impulse | mask)
    p = product_vector(schedule, t)
    return np.asarray(y, dtype=float) * p


def _reference_rhs(spec: NetworkSpec, history, t, products, tail_tol=1e-12):
    """Right-hand side at a non-impulse time ``t`` by direct quadrature.

    ``history(s)`` returns the full state vector at ``s <= t`` (left-continuous);
    ``products(j, s)`` returns the impulse-product factor of neuron ``j``.
    Slow; intended as an independent check of the fast integrator.
    """
    n = spec.n
    acts = spec.activations
    y_now = np.asarray(history(t), dtype=float)
    p_now = np.array([products(i, t) for i in range(n)])
    f_now = np.array([float(acts[j](p_now[j] * y_now[j])) for j in range(n)])
    ev_times = [tk for tk, _ in spec.impulses.events(t)]
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += spec.A[i, j] * f_now[j]
            if spec.B[i, j] != 0.0:
                s = t - float(spec.delays[i][j](t, spec.omega))
                acc += spec.B[i, j] * float(acts[j](products(j, s) * history(s)[j]))
            if spec.C[i, j] != 0.0:
                k = spec.kernels[i][j]
                upper = tail_horizon(k, tail_tol)
                pts = sorted({t - tk for tk in ev_times if 0 < t - tk < upper} | ({t} if t < upper else set()))

                def integrand(u, j=j, k=k):
                    s = t - u
                    return kernel_eval(k, u) * float(acts[j](products(j, s) * history(s)[j]))

                with warnings.catch_warnings():
                    # piecewise-cubic histories trip the roundoff detector well below 1e-10
                    warnings.simplefilter("ignore", integrate.IntegrationWarning)
                    val, _ = integrate.quad(integrand, 0.0, upper, points=pts or None,
                                            epsabs=1e-12, epsrel=1e-10, limit=500)
                acc += spec.C[i, j] * val
        out[i] = -spec.a[i] * y_now[i] + acc / p_now[i] + spec.I[i] / p_now[i]
    return out


def transformed_rhs(spec: NetworkSpec, y_history, t: float) -> np.ndarray:
    """Jump-free right-hand side at a non-impulse time ``t``.

    ``y_history(s)`` must return the y-state vector at any ``s <= t``.
    """
    sched = spec.impulses
    return _reference_rhs(spec, y_history, t, lambda j, s: impulse_product(sched, j, s))
