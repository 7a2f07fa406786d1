"""Fixed-step integration of the impulsive network and of its jump-free form.

Both integrators run the same compiled RK4 core on the same grid.  The grid
contains every impulse time, every period boundary and, up to a cap, the
points where the initial kink at ``t = 0`` and the impulse jumps resurface
through the discrete delays and uniform kernels.  Between those points the
solution is smooth, so classical RK4 keeps its fourth order.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as spi

from . import _engine
from .errors import AssumptionError, HistoryUnderflowError, StructureError
from .kernels import Kernel, kernel_eval, survival, tail_horizon
from .model import NetworkSpec, validate_network
from .trajectory import HistoryFunction, Trajectory
from .transform import _reference_rhs, grid_products

DEFAULT_STEP = 1e-3
MERGE_TOL = 1e-9
MEMORY_MODES = ("auto", "chain", "quadrature")


@dataclass(frozen=True, eq=False)
class Grid:
    """Integration grid with impulse bookkeeping.

    ``jump[k]`` is applied to the state at ``times[k]``; ``p_right[k]`` is
    the impulse product valid on ``(times[k], times[k+1]]``.  ``level`` is
    the deepest discontinuity order that was tracked.
    """

    times: np.ndarray
    impulse: np.ndarray
    jump: np.ndarray
    p_right: np.ndarray
    breaks: np.ndarray
    level: int
    h: float


def _delay_roots(delay, d, omega, t_end):
    """All ``t > d`` with ``t - tau(t) = d_i`` for each origin ``d_i``."""
    if delay.kind == "constant":
        if delay.base <= 0:
            return np.empty(0)
        return d + delay.base
    lo_tau = delay.base - delay.amplitude
    hi_tau = delay.base + delay.amplitude
    if hi_tau <= 0:
        return np.empty(0)
    period = delay.period if delay.period is not None else omega
    samples = max(17, int(math.ceil(64 * (hi_tau - lo_tau) / period)) + 1)
    offs = np.linspace(lo_tau, hi_tau, samples)
    tt = d[:, None] + offs[None, :]
    u = tt - delay(tt, omega) - d[:, None]
    left = u[:, :-1]
    right = u[:, 1:]
    rows, cols = np.nonzero((left < 0) & (right >= 0) | (left > 0) & (right <= 0))
    if rows.size == 0:
        return np.empty(0)
    a = tt[rows, cols]
    b = tt[rows, cols + 1]
    fa = left[rows, cols]
    dd = d[rows]
    for _ in range(60):
        mid = 0.5 * (a + b)
        fm = mid - delay(mid, omega) - dd
        same = np.sign(fm) == np.sign(fa)
        a = np.where(same, mid, a)
        fa = np.where(same, fm, fa)
        b = np.where(same, b, mid)
    roots = 0.5 * (a + b)
    return roots[roots > dd + MERGE_TOL]


def _discontinuities(spec, t_end, impulse_times, levels, cap):
    """Propagated discontinuity points up to order ``levels`` (at most ``cap`` of them)."""
    n = spec.n
    delays, widths = {}, set()
    for i in range(n):
        for j in range(n):
            if spec.B[i, j] != 0.0:
                d = spec.delays[i][j]
                delays[tuple(sorted(d.to_dict().items()))] = d
            k = spec.kernels[i][j]
            if spec.C[i, j] != 0.0 and k.family == "uniform":
                widths.add(k.param)
    # order 0: impulse jumps; order 1: kink between history and solution at 0
    found = {0: np.asarray(impulse_times, dtype=float), 1: np.array([0.0])}
    for lvl in range(2, levels + 1):
        found[lvl] = np.empty(0)
    total = sum(v.size for v in found.values())
    reached = levels
    for lvl in range(levels):
        src = found[lvl]
        if src.size == 0:
            continue
        fan = len(delays) * 3 + len(widths)
        if total + src.size * fan > cap:
            reached = lvl
            break
        for d in delays.values():
            roots = _delay_roots(d, src, spec.omega, t_end)
            found[lvl + 1] = np.concatenate([found[lvl + 1], roots[roots <= t_end]])
        if lvl + 2 <= levels:
            for w in widths:
                shifted = src + w
                found[lvl + 2] = np.concatenate([found[lvl + 2], shifted[shifted <= t_end]])
        total = sum(v.size for v in found.values())
    pts = [found[lvl] for lvl in range(1, reached + 1)]
    out = np.unique(np.concatenate(pts)) if pts else np.empty(0)
    return out, reached


def _merge(accepted, candidates, tol):
    """Add candidates farther than ``tol`` from every accepted point (and each other)."""
    if candidates.size == 0:
        return accepted
    candidates = np.sort(candidates)
    idx = np.clip(np.searchsorted(accepted, candidates), 1, accepted.size - 1)
    dist = np.minimum(np.abs(candidates - accepted[idx - 1]), np.abs(accepted[idx] - candidates))
    keep = candidates[dist > tol]
    if keep.size > 1:
        keep = keep[np.concatenate(([True], np.diff(keep) > tol))]
    return np.union1d(accepted, keep)


def build_grid(spec: NetworkSpec, t_end: float, h: float = DEFAULT_STEP, track_levels: int = 3,
               max_breaks: int | None = None) -> Grid:
    """Integration grid on ``[0, t_end]`` aligned to impulses, periods and tracked kinks."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not h > 0:
        raise ValueError("step must be positive")
    omega = spec.omega
    tol = MERGE_TOL * max(1.0, omega)
    events = spec.impulses.events(t_end)
    imp = np.array([tk for tk, _ in events])
    primary = np.union1d(np.array([0.0]), imp)
    if primary[-1] < t_end - tol:
        primary = np.append(primary, float(t_end))
    periods = np.arange(1, int(math.floor(t_end / omega)) + 1) * omega
    grid_pts = _merge(primary, periods[periods < t_end], tol)
    cap = max_breaks if max_breaks is not None else max(1000, int(math.ceil(t_end / h)))
    breaks, level = _discontinuities(spec, t_end, imp, track_levels, cap)
    breaks = breaks[(breaks > 0) & (breaks < t_end)]
    grid_pts = _merge(grid_pts, breaks, tol)

    lengths = np.diff(grid_pts)
    counts = np.maximum(1, np.ceil(lengths / h - 1e-9).astype(np.int64))
    seg = np.repeat(np.arange(lengths.size), counts)
    offset = np.arange(seg.size) - np.repeat(np.cumsum(counts) - counts, counts)
    times = np.append(grid_pts[seg] + lengths[seg] * offset / counts[seg], grid_pts[-1])
    jump, _, p_right, mask = grid_products(times, spec.impulses)
    return Grid(times, mask, jump, p_right, breaks, level, float(h))


def _check_simulable(spec: NetworkSpec):
    """Reject what the integrator cannot handle; a nonpositive decay rate is allowed."""
    report = validate_network(spec)
    blocking = [x for x in report.errors if not (x.assumption == "A" and len(x.index) == 1)]
    if blocking:
        raise AssumptionError("cannot simulate: " + "; ".join(x.message for x in blocking))


def _history_integral(kernel: Kernel, F, horizon: float, tail_value, tail_tol: float):
    """``int_0^inf k(u) F(u) du`` with ``F(u) = tail_value`` beyond ``horizon``."""
    upper = tail_horizon(kernel, tail_tol)
    head_end = min(horizon, upper)
    val = 0.0
    if head_end > 0:
        val, _ = spi.quad(lambda u: kernel_eval(kernel, u) * F(u), 0.0, head_end,
                          epsabs=1e-13, epsrel=1e-11, limit=400)
    if tail_value is not None:
        val += survival(kernel, head_end) * tail_value
    elif upper > head_end:
        more, _ = spi.quad(lambda u: kernel_eval(kernel, u) * F(u), head_end, upper,
                           epsabs=1e-13, epsrel=1e-11, limit=400)
        val += more
    return val


def memory_init(kernel: Kernel, phi, activation, tail_tol: float = 1e-10) -> float:
    """Initial memory ``int_{-inf}^0 k(-s) f(phi(s)) ds``.

    ``phi`` is a one-neuron HistoryFunction or any callable on ``s <= 0``;
    ``activation`` is any callable.  For a HistoryFunction the constant tail
    before ``-H`` is integrated exactly.  If the history does not extend past
    ``-H`` (``tail=False`` with a moving segment) the kernel mass beyond
    ``-H`` is charged to the constant value and a warning reports the bound.
    """
    if isinstance(phi, HistoryFunction):
        hist = phi
        if hist.n != 1:
            raise StructureError("memory_init expects a one-neuron history; use HistoryFunction for neuron j")
        c_val = float(activation(float(hist.value[0])))
        if hist.is_constant:
            return c_val
        H = hist.horizon
        if not hist.tail:
            mass = survival(kernel, H)
            if mass > tail_tol:
                grid = np.linspace(-H, 0.0, 257)
                spread = 2.0 * float(np.max(np.abs([activation(v) for v in hist(grid)[:, 0]])))
                warnings.warn(
                    f"history known only on [-{H:g}, 0]; kernel mass {mass:.3g} beyond it is"
                    f" approximated, induced error <= {mass * spread:.3g}", RuntimeWarning, stacklevel=2)
        f1 = hist.neuron(0)
        return _history_integral(kernel, lambda u: float(activation(f1(-u))), H, c_val, tail_tol)
    return _history_integral(kernel, lambda u: float(activation(phi(-u))), 0.0, None, tail_tol)


def _neuron_history(phi: HistoryFunction, j: int) -> HistoryFunction:
    return HistoryFunction(phi.value[j:j + 1], phi.amplitude[j:j + 1], phi.frequency[j:j + 1],
                           phi.horizon, phi.tail)


def _memory_layout(spec, memory, tail_tol, h):
    n = spec.n
    mode = np.zeros((n, n), dtype=np.int64)
    window = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if spec.C[i, j] == 0.0:
                continue
            k = spec.kernels[i][j]
            if k.family == "uniform":
                if memory == "chain":
                    raise ValueError("uniform kernels have no chain reduction; use quadrature memory")
                if k.param <= h:
                    raise ValueError(f"uniform kernel width {k.param} must exceed the step {h}")
                mode[i, j] = 2
                window[i, j] = k.param
            elif memory == "quadrature":
                mode[i, j] = 2
                window[i, j] = tail_horizon(k, tail_tol)
            else:
                mode[i, j] = 1
    return mode, window


def _pack(spec, phi, grid, memory, tail_tol, transformed):
    n = spec.n
    h = grid.h
    T = grid.times
    K = T.size - 1
    if transformed:
        P = np.ascontiguousarray(grid.p_right)
        jump = np.ones((K + 1, n))
    else:
        P = np.ones((K + 1, n))
        jump = np.ascontiguousarray(grid.jump)
    net = (np.ascontiguousarray(spec.a), np.ascontiguousarray(spec.A), np.ascontiguousarray(spec.B),
           np.ascontiguousarray(spec.C), np.ascontiguousarray(spec.I), P)
    acts = spec.activations
    act = (np.array([f.code for f in acts], dtype=np.int64), np.array([f.gain for f in acts]),
           np.array([f.lo for f in acts]), np.array([f.hi for f in acts]))
    d = spec.delays
    dly = (np.array([[0 if x.kind == "constant" else 1 for x in row] for row in d], dtype=np.int64),
           np.array([[x.base for x in row] for row in d]),
           np.array([[x.amplitude for x in row] for row in d]),
           np.array([[x.phase for x in row] for row in d]),
           np.array([[x.period if x.period is not None else spec.omega for x in row] for row in d]))
    mode, window = _memory_layout(spec, memory, tail_tol, h)
    ker = (np.array([[k.code for k in row] for row in spec.kernels], dtype=np.int64),
           np.array([[k.param for k in row] for row in spec.kernels]), mode, window)
    hist = (np.ascontiguousarray(phi.value), np.ascontiguousarray(phi.amplitude),
            np.ascontiguousarray(phi.frequency), float(phi.horizon), int(bool(phi.tail)))

    if np.any(mode == 2):
        npre = int(math.ceil(window.max() / h)) + 1
        TE = np.concatenate([np.linspace(-npre * h, 0.0, npre + 1), T[1:]])
        FN = np.zeros((npre + K, 3, n))
        cum = np.zeros((npre + K + 1, n))
    else:
        npre = 0
        TE = T
        FN = np.zeros((0, 3, n))
        cum = np.zeros((1, n))
    quad = (TE, npre, FN, cum)

    Z0 = np.zeros((n, n, 2))
    for i in range(n):
        for j in range(n):
            if mode[i, j] != 1:
                continue
            k = spec.kernels[i][j]
            hj = _neuron_history(phi, j)
            f = acts[j]
            if k.family == "exponential":
                Z0[i, j, 0] = memory_init(k, hj, f, tail_tol)
            else:
                Z0[i, j, 0] = memory_init(Kernel.exponential(k.param), hj, f, tail_tol)
                Z0[i, j, 1] = memory_init(k, hj, f, tail_tol)
    return T, jump, Z0, net, act, dly, ker, hist, quad


def _run(spec, phi, t_end, h, tail_tol, memory, transformed, track_levels, max_breaks):
    if memory not in MEMORY_MODES:
        raise ValueError(f"memory must be one of {MEMORY_MODES}")
    _check_simulable(spec)
    n = spec.n
    if phi is None:
        phi = HistoryFunction.constant(1.0, n)
    if phi.n != n:
        raise StructureError(f"history has {phi.n} neurons, network has {n}")
    if t_end is None:
        t_end = 5.0 * spec.omega
    grid = build_grid(spec, t_end, h, track_levels, max_breaks)
    T, jump, Z0, net, act, dly, ker, hist, quad = _pack(spec, phi, grid, memory, tail_tol, transformed)
    K = T.size - 1
    XL = np.zeros((K + 1, n))
    XR = np.zeros((K + 1, n))
    DL = np.zeros((K + 1, n))
    DR = np.zeros((K + 1, n))
    XL[0] = phi(0.0)
    XR[0] = jump[0] * XL[0]
    status, last = _engine.integrate(T, jump, grid.impulse, Z0, (XL, XR, DL, DR), net, act, dly, ker, hist, quad)
    if status == _engine.UNDERFLOW:
        raise HistoryUnderflowError(
            f"a discrete delay reaches before the history horizon -{phi.horizon:g} near t={T[last]:.6g}"
        )
    if status == _engine.NONFINITE:
        raise FloatingPointError(f"state became non-finite near t={T[last + 1]:.6g}")
    impulse = np.zeros(K + 1, dtype=bool) if transformed else grid.impulse
    return Trajectory(T, XL, XR, DL, DR, impulse, phi, spec.omega, float(h), "y" if transformed else "x")


def simulate(spec: NetworkSpec, phi: HistoryFunction | None = None, t_end: float | None = None,
             h: float = DEFAULT_STEP, tail_tol: float = 1e-10, memory: str = "auto",
             track_levels: int = 3, max_breaks: int | None = None) -> Trajectory:
    """Integrate the impulsive network on ``[0, t_end]`` (default ``5 omega``).

    ``phi`` defaults to the constant history 1.  ``memory="auto"`` uses the
    linear chain for exponential and gamma-2 kernels and a sliding window for
    uniform ones; ``"quadrature"`` forces the window everywhere.
    """
    return _run(spec, phi, t_end, h, tail_tol, memory, False, track_levels, max_breaks)


def simulate_transformed(spec: NetworkSpec, phi: HistoryFunction | None = None, t_end: float | None = None,
                         h: float = DEFAULT_STEP, tail_tol: float = 1e-10, memory: str = "auto",
                         track_levels: int = 3, max_breaks: int | None = None) -> Trajectory:
    """Integrate the jump-free system ``y = x / P(t)`` on the same grid as :func:`simulate`."""
    return _run(spec, phi, t_end, h, tail_tol, memory, True, track_levels, max_breaks)


def network_rhs(spec: NetworkSpec, traj: Trajectory, t: float) -> np.ndarray:
    """Right-hand side of the impulsive network at a non-impulse time, by quadrature.

    Reads the state history from ``traj``; slow reference for tests.
    """
    return _reference_rhs(spec, traj, t, lambda j, s: 1.0)
