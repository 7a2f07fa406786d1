"""Periodic orbits, deviation envelopes, decay-rate fits and the Lyapunov monitor."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certify import Certificate
from .errors import AssumptionError, CertificateError, GridMismatchError
from .kernels import tail_horizon
from .model import F_TOL, ImpulseSchedule, NetworkSpec
from .simulate import DEFAULT_STEP, simulate, simulate_transformed
from .trajectory import HistoryFunction, Trajectory, hermite_derivative

# Absolute floor for envelope comparisons: deviations this small are
# integrator and rounding noise, not dynamics.
ATOL = 1e-9
DECAY_FLOOR = 1e-11
SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    """One period of a detected periodic solution.

    ``record`` covers ``[0, omega]`` in phase; ``residual`` is the largest
    change between the last two simulated periods.
    """

    record: Trajectory
    residual: float
    transients: int
    tol: float
    omega: float

    @property
    def converged(self) -> bool:
        return bool(self.residual < self.tol)

    @property
    def kind(self) -> str:
        return self.record.kind

    @property
    def n(self) -> int:
        return self.record.n

    def _phase(self, t, side):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self.omega
        if side == "right":
            ph = t - np.floor(t / w + SNAP) * w
            return np.clip(ph, 0.0, w)
        ph = t - (np.ceil(t / w - SNAP) - 1.0) * w
        return np.clip(ph, 0.0, w)

    def __call__(self, t, side="left"):
        """Orbit value at absolute time ``t`` (any sign), tiled with period omega."""
        ph = self._phase(t, side)
        return self.record(ph, side=side, tol=SNAP * self.omega)

    def derivative(self, t, side="left"):
        ph = self._phase(t, side)
        rec = self.record
        idx = rec.nearest(ph)
        hit = np.abs(rec.times[idx] - ph) <= SNAP * self.omega
        stored = rec.dright if side == "right" else rec.dleft
        out = np.empty((ph.size, self.n))
        out[hit] = stored[idx[hit]]
        if np.any(~hit):
            p = ph[~hit]
            m = np.clip(np.searchsorted(rec.times, p) - 1, 0, rec.times.size - 2)
            hh = rec.times[m + 1] - rec.times[m]
            out[~hit] = hermite_derivative(rec.right[m], rec.dright[m], rec.left[m + 1], rec.dleft[m + 1],
                                           hh[:, None], ((p - rec.times[m]) / hh)[:, None])
        return out

    def sup_norm(self) -> np.ndarray:
        """Per-neuron ``sup_t |x*_i(t)|`` over both one-sided limits."""
        return np.maximum(np.abs(self.record.left).max(axis=0), np.abs(self.record.right).max(axis=0))

    def distance(self, other: "PeriodicOrbit") -> float:
        """Sup-norm distance between two orbits, sampled on both records' phases."""
        ph = np.union1d(self.record.times, other.record.times)
        d_left = np.abs(self(ph[1:], "left") - other(ph[1:], "left")).max()
        d_right = np.abs(self(ph[:-1], "right") - other(ph[:-1], "right")).max()
        return float(max(d_left, d_right))

    def to_dict(self):
        return {
            "kind": self.kind, "omega": self.omega, "residual": self.residual, "tol": self.tol,
            "converged": self.converged, "transients": self.transients,
            "sup": self.sup_norm().tolist(),
        }

    def to_csv(self, path):
        self.record.to_csv(path)


def _require_f(schedule: ImpulseSchedule):
    if not schedule.f_holds(F_TOL):
        prods = schedule.period_products()
        bad = [f"neuron {i + 1}: {p!r}" for i, p in enumerate(prods) if abs(p - 1.0) > F_TOL]
        raise AssumptionError(
            "per-period impulse products differ from 1 (" + ", ".join(bad) + "); "
            "the impulsive system cannot have an omega-periodic solution"
        )


def period_residual(traj: Trajectory, omega: float) -> float:
    """``max |x(t) - x(t - omega)|`` over the last simulated period, both limits."""
    t_last = traj.t_end
    start = t_last - omega
    if start < -SNAP:
        raise ValueError("trajectory shorter than one period")
    sel = traj.times >= start - SNAP * omega
    ts = traj.times[sel]
    back = ts - omega
    tol = SNAP * omega
    usable = back >= -tol
    ts, back = ts[usable], np.maximum(back[usable], 0.0)
    left_now = traj.left[sel][usable]
    right_now = traj.right[sel][usable]
    d_left = np.abs(left_now - traj(back, "left", tol=tol)).max()
    d_right = np.abs(right_now - traj(back, "right", tol=tol)).max()
    return float(max(d_left, d_right))


def find_periodic(spec: NetworkSpec, phi: HistoryFunction | None = None, transients: int = 50,
                  tol: float = 1e-6, h: float = DEFAULT_STEP, transformed: bool = False,
                  **sim_opts) -> PeriodicOrbit:
    """Detect the periodic solution as a fixed point of the period map.

    Simulates ``transients + 1`` periods and returns the last one.  Refuses
    schedules whose per-period impulse product is not 1.  Non-convergence
    is reported through ``residual`` and ``converged``, not raised.
    """
    _require_f(spec.impulses)
    if transients < 1:
        raise ValueError("need at least one transient period")
    if phi is None:
        phi = HistoryFunction.constant(0.0, spec.n)
    omega = spec.omega
    run = simulate_transformed if transformed else simulate
    traj = run(spec, phi, (transients + 1) * omega, h=h, **sim_opts)
    residual = period_residual(traj, omega)
    start = transients * omega
    i0 = int(traj.nearest(start)[0])
    if abs(traj.times[i0] - start) > SNAP * omega:
        raise GridMismatchError("period boundary missing from the integration grid")
    times = traj.times[i0:] - traj.times[i0]
    times[-1] = omega if abs(times[-1] - omega) <= SNAP * omega else times[-1]
    rec = Trajectory(times, traj.left[i0:], traj.right[i0:], traj.dleft[i0:], traj.dright[i0:],
                     traj.impulse[i0:], None, omega, traj.h, traj.kind)
    return PeriodicOrbit(rec, residual, int(transients), float(tol), omega)


def deviation(traj: Trajectory, orbit: PeriodicOrbit) -> Trajectory:
    """``y = x - x*`` on the trajectory grid, limits and derivatives included."""
    if abs(traj.omega - orbit.omega) > SNAP * orbit.omega:
        raise GridMismatchError(f"trajectory period {traj.omega} differs from orbit period {orbit.omega}")
    if traj.kind != orbit.kind:
        raise GridMismatchError(f"cannot subtract a {orbit.kind}-orbit from a {traj.kind}-trajectory")
    if traj.n != orbit.n:
        raise GridMismatchError("neuron counts differ")
    tol = SNAP * orbit.omega
    orbit_imp = orbit.record.times[orbit.record.impulse]
    for t in traj.times[traj.impulse]:
        ph = float(orbit._phase(t, "left")[0])
        if orbit_imp.size == 0 or np.min(np.abs(orbit_imp - ph)) > tol:
            raise GridMismatchError(f"impulse at t={t} has no counterpart in the orbit record")
    if orbit_imp.size and not np.any(traj.impulse) and traj.t_end > orbit_imp.min() + tol:
        raise GridMismatchError("orbit has impulses but the trajectory has none")
    T = traj.times
    left = traj.left - orbit(T, "left")
    right = traj.right - orbit(T, "right")
    dleft = traj.dleft - orbit.derivative(T, "left")
    dright = traj.dright - orbit.derivative(T, "right")
    return Trajectory(T, left, right, dleft, dright, traj.impulse, None, traj.omega, traj.h, traj.kind)


def history_span(spec: NetworkSpec, phi: HistoryFunction, tail_tol: float = 1e-10) -> float:
    """``max(H, tau, memory window) + omega``: past interval on which ``||psi||`` is taken."""
    window = 0.0
    for i in range(spec.n):
        for j in range(spec.n):
            if spec.C[i, j] != 0.0:
                window = max(window, tail_horizon(spec.kernels[i][j], tail_tol))
    return max(phi.horizon, spec.delay_bound, window) + spec.omega


def psi_norm(phi: HistoryFunction, orbit: PeriodicOrbit, spec: NetworkSpec | None = None,
             span: float | None = None, samples_per_period: int = 2000) -> float:
    """``max_i sup_{s <= 0} |phi_i(s) - x*_i(s)|`` over the representable past.

    The history is constant before ``-H`` and the orbit is periodic, so one
    extra period past ``-H`` already covers every combination.
    """
    if span is None:
        span = history_span(spec, phi) if spec is not None else phi.horizon + orbit.omega
    w = orbit.omega
    reps = int(math.ceil(span / w))
    phases = np.union1d(orbit.record.times, np.linspace(0.0, w, samples_per_period + 1))
    s = np.concatenate([phases - p * w for p in range(1, reps + 1)])
    if phi.horizon > 0:
        s = np.concatenate([s, np.linspace(-phi.horizon, 0.0, samples_per_period + 1)])
    s = np.unique(np.clip(s, -span, 0.0))
    hist = phi(s)
    d = max(np.abs(hist - orbit(s, "left")).max(), np.abs(hist - orbit(s, "right")).max())
    return float(d)


def _weight(kind, alpha, t):
    if kind in ("exp", "exponential"):
        return np.exp(alpha * t)
    if kind in ("log", "logarithmic"):
        return np.log(math.e + alpha * t)
    raise ValueError(f"unknown weight {kind!r}; expected 'exp' or 'log'")


@dataclass(frozen=True)
class EnvelopeReport:
    """Weighted-deviation check against ``xi_i l_0`` and the ``beta ||psi||`` form."""

    weight: str
    alpha: float
    psi: float
    l0: float
    beta: float
    sup_weighted: np.ndarray
    bound: np.ndarray
    passed: bool
    beta_passed: bool
    worst_time: float
    worst_ratio: float
    degenerate: bool = False
    slack: float = 1.0
    atol: float = ATOL

    def to_dict(self):
        return {
            "weight": self.weight, "alpha": self.alpha, "psi": self.psi, "l0": self.l0, "beta": self.beta,
            "sup_weighted": self.sup_weighted.tolist(), "bound": self.bound.tolist(),
            "pass": self.passed, "beta_pass": self.beta_passed, "worst_time": self.worst_time,
            "worst_ratio": self.worst_ratio, "degenerate": self.degenerate,
            "slack": self.slack, "atol": self.atol,
        }


def _samples(y: Trajectory):
    t = np.concatenate([y.times, y.times[y.impulse]])
    v = np.concatenate([y.left, y.right[y.impulse]])
    return t, np.abs(v)


def envelope_check(y: Trajectory, cert: Certificate, weight: str = "exp", delta: float | None = None,
                   psi: float = 0.0, alpha: float | None = None, slack: float = 1.0,
                   atol: float = ATOL) -> EnvelopeReport:
    """Check ``|y_i(t)| <= slack * xi_i l_0 / w(t) + atol`` on every sample.

    ``w`` is ``exp(alpha t)`` or ``log(e + alpha t)``; ``alpha`` defaults to
    the certified rate and ``delta`` to the certificate's margin.  The
    ``beta ||psi|| / w(t)`` form is checked alongside.
    """
    if not cert.feasible:
        raise CertificateError("envelope check needs a feasible certificate", partial=cert)
    delta = cert.delta_margin if delta is None else float(delta)
    alpha = cert.alpha if alpha is None else float(alpha)
    xi = cert.xi
    l0 = (1.0 + delta) * psi / cert.xi_min
    beta = (1.0 + delta) * cert.xi_max / cert.xi_min
    t, v = _samples(y)
    w = _weight(weight, alpha, t)[:, None]
    bound = xi * l0
    weighted = v * w
    sup_weighted = weighted.max(axis=0)
    lim = slack * bound[None, :] / w + atol
    passed = bool(np.all(v <= lim))
    beta_passed = bool(np.all(v <= slack * beta * psi / w + atol))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound[None, :] > 0, weighted / bound[None, :], np.where(weighted > 0, np.inf, 0.0))
    r_idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return EnvelopeReport(
        "exponential" if weight in ("exp", "exponential") else "logarithmic", alpha, float(psi), float(l0),
        float(beta), sup_weighted, bound, passed, beta_passed, float(t[r_idx[0]]), float(ratio[r_idx]),
        degenerate=psi == 0.0, slack=float(slack), atol=float(atol),
    )


@dataclass(frozen=True)
class DecayFit:
    alpha_hat: float
    residual: float
    window: tuple
    shrunk: bool
    points: int

    def to_dict(self):
        return {"alpha_hat": self.alpha_hat, "residual": self.residual, "window": list(self.window),
                "shrunk": self.shrunk, "points": self.points}


def decay_rate_fit(y: Trajectory, window: tuple | None = None, floor: float = DECAY_FLOOR) -> DecayFit:
    """Least-squares slope of ``-log max_i |y_i(t)|`` over ``window``.

    The window is cut short before the first sample at or below ``floor``
    (a zero of the deviation or pure noise); that is flagged as ``shrunk``.
    """
    t = y.times
    m = np.abs(y.left).max(axis=1)
    lo, hi = (t[0], t[-1]) if window is None else (float(window[0]), float(window[1]))
    sel = (t >= lo) & (t <= hi)
    t, m = t[sel], m[sel]
    shrunk = False
    low = np.nonzero(m <= floor)[0]
    if low.size:
        shrunk = True
        t, m = t[:low[0]], m[:low[0]]
        hi = float(t[-1]) if t.size else lo
    if t.size < 3:
        raise ValueError("fewer than three usable samples in the decay window")
    coef, res, *_ = np.polyfit(t, -np.log(m), 1, full=True)
    rms = float(math.sqrt(res[0] / t.size)) if res.size else 0.0
    return DecayFit(float(coef[0]), rms, (float(lo), float(hi)), shrunk, int(t.size))


@dataclass(frozen=True)
class Violation:
    time: float
    neuron: int
    kind: str
    value: float
    bound: float

    def to_dict(self):
        return {"time": self.time, "neuron": self.neuron, "kind": self.kind, "value": self.value,
                "bound": self.bound}


@dataclass(frozen=True)
class MonitorReport:
    alpha: float
    l0: float
    violations: tuple = ()
    amplifying: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"alpha": self.alpha, "l0": self.l0, "ok": self.ok,
                "violations": [v.to_dict() for v in self.violations[:100]],
                "violation_count": len(self.violations),
                "amplifying_impulses": [list(a) for a in self.amplifying[:100]]}


def _impulse_strengths(schedule: ImpulseSchedule, t):
    """gamma_{., k} of the impulse at absolute time ``t`` (None if none)."""
    if schedule is None or schedule.m == 0:
        return None
    ph = t - math.floor(t / schedule.omega + SNAP) * schedule.omega
    if ph <= SNAP * schedule.omega:
        ph += schedule.omega
    k = int(np.argmin(np.abs(schedule.times - ph)))
    if abs(schedule.times[k] - ph) > 1e-7 * schedule.omega:
        return None
    return schedule.strengths[:, k]


def lyapunov_monitor(y: Trajectory, cert: Certificate, psi: float, alpha: float | None = None,
                     delta: float | None = None, schedule: ImpulseSchedule | None = None,
                     atol: float = ATOL) -> MonitorReport:
    """Check ``V_i = e^{alpha t} |y_i|`` against ``xi_i l_0`` and across impulses.

    The level check is done in deviation space, ``|y_i| <= xi_i l_0 e^{-alpha t} + atol``.
    ``V`` must not increase at impulses with ``0 <= gamma_ik < 1``; jumps at
    amplifying impulses (known from ``schedule``) are listed separately.
    """
    if not cert.feasible:
        raise CertificateError("monitor needs a feasible certificate", partial=cert)
    alpha = cert.alpha if alpha is None else float(alpha)
    delta = cert.delta_margin if delta is None else float(delta)
    l0 = (1.0 + delta) * psi / cert.xi_min
    bound = cert.xi * l0
    t, v = _samples(y)
    decay = np.exp(-alpha * t)[:, None]
    lim = bound[None, :] * decay + atol
    out = []
    rows, cols = np.nonzero(v > lim)
    order = np.lexsort((cols, t[rows]))
    for r, c in zip(rows[order], cols[order]):
        out.append(Violation(float(t[r]), int(c) + 1, "level", float(v[r, c]), float(lim[r, c])))
    amplifying = []
    for k in np.nonzero(y.impulse)[0]:
        gam = _impulse_strengths(schedule, y.times[k])
        before, after = np.abs(y.left[k]), np.abs(y.right[k])
        for i in range(y.n):
            contractive = gam is None or 0.0 <= gam[i] < 1.0
            grew = after[i] > before[i] * (1.0 + 1e-12) + atol * 1e-3
            if grew and contractive:
                out.append(Violation(float(y.times[k]), i + 1, "impulse", float(after[i]), float(before[i])))
            elif not contractive:
                amplifying.append((float(y.times[k]), i + 1, float(gam[i])))
    return MonitorReport(alpha, float(l0), tuple(out), tuple(amplifying))
