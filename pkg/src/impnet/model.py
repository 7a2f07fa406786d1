"""Network instances, assumption checks and a-priori bounds.

A network is the integro-differential system

    x_i' = -a_i x_i + sum_j [ A_ij f_j(x_j(t)) + B_ij f_j(x_j(t - tau_ij(t)))
                              + C_ij int_{-inf}^t k_ij(t - s) f_j(x_j(s)) ds ] + I_i

between impulse times, with jumps ``x_i(t_k+) = (1 - gamma_ik) x_i(t_k)``.
States are left-continuous: ``x(t_k)`` is the value before the jump.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, StructureError
from .kernels import Kernel, kernel_moments

ACTIVATIONS = ("hyperbolic-tangent", "logistic", "saturating-linear", "shifted-log")
ACTIVATION_CODE = {name: code for code, name in enumerate(ACTIVATIONS)}

F_TOL = 1e-12


def _frozen(x, shape=None, name="array"):
    arr = np.array(x, dtype=float)
    if shape is not None and arr.shape != shape:
        raise StructureError(f"{name} has shape {arr.shape}, expected {shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ActivationSpec:
    """Activation ``f_j`` with gain ``g``.

    * hyperbolic-tangent: ``tanh(g u)``
    * logistic: ``1 / (1 + exp(-g u))``
    * saturating-linear: ``clip(g u, -1, 1)``
    * shifted-log: ``log(g u + 1)``; needs ``domain`` with a nonnegative lower end.

    ``domain`` clamps the argument before evaluation.
    """

    family: str = "hyperbolic-tangent"
    gain: float = 1.0
    domain: tuple[float, float] | None = None

    def __post_init__(self):
        if self.family not in ACTIVATION_CODE:
            raise StructureError(f"unknown activation family {self.family!r}")
        object.__setattr__(self, "gain", float(self.gain))
        if self.domain is not None:
            lo, hi = (float(v) for v in self.domain)
            if not lo < hi:
                raise StructureError(f"empty activation domain {self.domain}")
            object.__setattr__(self, "domain", (lo, hi))
        if self.family == "shifted-log" and (self.domain is None or self.domain[0] < 0):
            raise StructureError(
                "shifted-log activation requires an explicit state-domain restriction with lower end >= 0"
            )

    @property
    def code(self) -> int:
        return ACTIVATION_CODE[self.family]

    @property
    def lo(self) -> float:
        return -math.inf if self.domain is None else self.domain[0]

    @property
    def hi(self) -> float:
        return math.inf if self.domain is None else self.domain[1]

    @property
    def unbounded_family(self) -> bool:
        return self.family == "shifted-log"

    @property
    def lipschitz(self) -> float:
        g = self.gain
        if self.family == "logistic":
            return g / 4.0
        if self.family == "shifted-log":
            # sup of the derivative g / (g u + 1) over the restricted domain
            return g / (g * max(self.lo, 0.0) + 1.0)
        return g

    @property
    def bound(self) -> float:
        """``M_j = sup |f_j|`` over the admitted domain (inf when unbounded)."""
        if self.family != "shifted-log":
            return 1.0
        if math.isinf(self.hi):
            return math.inf
        return math.log(self.gain * self.hi + 1.0)

    def __call__(self, u):
        u = np.clip(np.asarray(u, dtype=float), self.lo, self.hi)
        g = self.gain
        if self.family == "hyperbolic-tangent":
            return np.tanh(g * u)
        if self.family == "logistic":
            return 1.0 / (1.0 + np.exp(-g * u))
        if self.family == "saturating-linear":
            return np.clip(g * u, -1.0, 1.0)
        return np.log(g * u + 1.0)

    def to_dict(self):
        d = {"family": self.family, "gain": self.gain}
        if self.domain is not None:
            d["domain"] = list(self.domain)
        return d

    @classmethod
    def from_dict(cls, d):
        dom = d.get("domain")
        return cls(d["family"], d.get("gain", 1.0), tuple(dom) if dom is not None else None)


@dataclass(frozen=True)
class DelayFunction:
    """``tau(t) = base`` or ``base + amplitude * sin(2 pi t / period + phase)``.

    ``period=None`` means "the network period".
    """

    kind: str = "constant"
    base: float = 0.0
    amplitude: float = 0.0
    phase: float = 0.0
    period: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoidal"):
            raise StructureError(f"unknown delay kind {self.kind!r}")
        for name in ("base", "amplitude", "phase"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.period is not None:
            object.__setattr__(self, "period", float(self.period))

    @classmethod
    def constant(cls, value):
        return cls("constant", value)

    @property
    def bound(self) -> float:
        return self.base + (self.amplitude if self.kind == "sinusoidal" else 0.0)

    def __call__(self, t, omega=None):
        if self.kind == "constant":
            return np.full_like(np.asarray(t, dtype=float), self.base) + 0.0
        period = self.period if self.period is not None else omega
        return self.base + self.amplitude * np.sin(2.0 * np.pi * np.asarray(t, dtype=float) / period + self.phase)

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "base": self.base}
        d = {"kind": "sinusoidal", "base": self.base, "amplitude": self.amplitude, "phase": self.phase}
        if self.period is not None:
            d["period"] = self.period
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("kind", "constant"), d.get("base", 0.0), d.get("amplitude", 0.0),
                   d.get("phase", 0.0), d.get("period"))


@dataclass(frozen=True, eq=False)
class ImpulseSchedule:
    """Impulse base times ``t_1 < ... < t_m`` in ``(0, omega]`` repeated with period ``omega``.

    ``strengths[i, k]`` is ``gamma_ik``; at time ``t_k + p*omega`` neuron ``i``
    is multiplied by ``1 - gamma_ik``.
    """

    times: np.ndarray
    strengths: np.ndarray
    omega: float

    def __post_init__(self):
        times = _frozen(np.atleast_1d(np.asarray(self.times, dtype=float)).reshape(-1), name="impulse times")
        strengths = np.asarray(self.strengths, dtype=float)
        if strengths.size == 0 and strengths.ndim != 2:
            strengths = np.zeros((0, 0))
        if strengths.ndim != 2 or strengths.shape[1] != times.size:
            raise StructureError(
                f"impulse strengths must have shape (n, {times.size}), got {strengths.shape}"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "strengths", _frozen(strengths, name="impulse strengths"))
        object.__setattr__(self, "omega", float(self.omega))

    @classmethod
    def empty(cls, n, omega):
        return cls(np.zeros(0), np.zeros((n, 0)), omega)

    @property
    def m(self) -> int:
        return int(self.times.size)

    @property
    def n(self) -> int:
        return int(self.strengths.shape[0])

    @property
    def factors(self) -> np.ndarray:
        """``1 - gamma_ik``, shape (n, m)."""
        return 1.0 - self.strengths

    def period_products(self) -> np.ndarray:
        """Per-neuron product of ``1 - gamma_ik`` over one period."""
        if self.m == 0:
            return np.ones(self.n)
        return np.prod(self.factors, axis=1)

    def f_holds(self, tol=F_TOL) -> bool:
        return bool(np.all(np.abs(self.period_products() - 1.0) <= tol))

    @property
    def contractive(self) -> bool:
        """Every impulse shrinks (or keeps) the state: ``0 <= gamma_ik < 1``."""
        return bool(np.all((self.strengths >= 0.0) & (self.strengths < 1.0)))

    def event_time(self, k, p) -> float:
        # Single expression used everywhere an absolute impulse time is needed.
        return float(self.times[k] + p * self.omega)

    def events(self, t_end, t_start=0.0):
        """Absolute impulse events ``(time, k)`` with ``t_start < time <= t_end``, sorted."""
        if self.m == 0 or t_end <= t_start:
            return []
        out = []
        p = max(0, int(math.floor(t_start / self.omega)) - 1)
        while True:
            if self.event_time(0, p) > t_end:
                break
            for k in range(self.m):
                tk = self.event_time(k, p)
                if t_start < tk <= t_end:
                    out.append((tk, k))
            p += 1
        return out

    def product(self, i, t) -> float:
        """``prod_{0 <= t_k < t} (1 - gamma_ik)`` (empty product is 1)."""
        if self.m == 0 or t <= 0:
            return 1.0
        fac = self.factors[i]
        # whole periods strictly before the last two, then explicit events
        p0 = max(0, int(math.floor(t / self.omega)) - 2)
        value = float(np.prod(fac)) ** p0 if p0 else 1.0
        p = p0
        while True:
            done = False
            for k in range(self.m):
                tk = self.event_time(k, p)
                if tk < t:
                    value *= fac[k]
                else:
                    done = True
                    break
            if done:
                return value
            p += 1

    def to_dict(self):
        return {"times": self.times.tolist(), "strengths": self.strengths.tolist()}


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """A full network instance (see module docstring)."""

    a: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    I: np.ndarray
    activations: tuple
    delays: tuple
    kernels: tuple
    impulses: ImpulseSchedule
    omega: float
    name: str = ""
    interpretive: bool = False
    notes: str = ""

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if a.ndim != 1 or a.size == 0:
            raise StructureError("decay vector a must be a nonempty 1-d array")
        n = a.size
        object.__setattr__(self, "a", _frozen(a))
        for key in ("A", "B", "C"):
            object.__setattr__(self, key, _frozen(getattr(self, key), (n, n), key))
        object.__setattr__(self, "I", _frozen(getattr(self, "I"), (n,), "I"))
        acts = tuple(self.activations)
        if len(acts) != n or not all(isinstance(f, ActivationSpec) for f in acts):
            raise StructureError(f"need {n} ActivationSpec entries, got {len(acts)}")
        object.__setattr__(self, "activations", acts)
        for key, typ in (("delays", DelayFunction), ("kernels", Kernel)):
            rows = tuple(tuple(r) for r in getattr(self, key))
            if len(rows) != n or any(len(r) != n for r in rows):
                raise StructureError(f"{key} must be an {n}x{n} table")
            if not all(isinstance(x, typ) for r in rows for x in r):
                raise StructureError(f"{key} entries must be {typ.__name__}")
            object.__setattr__(self, key, rows)
        if not isinstance(self.impulses, ImpulseSchedule):
            raise StructureError("impulses must be an ImpulseSchedule")
        if self.impulses.n != n and not (self.impulses.m == 0):
            raise StructureError(f"impulse strengths have {self.impulses.n} rows, expected {n}")
        if self.impulses.m == 0 and self.impulses.n != n:
            object.__setattr__(self, "impulses", ImpulseSchedule.empty(n, self.omega))
        object.__setattr__(self, "omega", float(self.omega))
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise StructureError("omega must be a positive finite period")
        if abs(self.impulses.omega - self.omega) > 1e-12 * self.omega:
            raise StructureError("impulse schedule period differs from network omega")

    @classmethod
    def build(cls, a, A=None, B=None, C=None, I=None, activation=None, delay=None,
              kernel=None, impulses=None, omega=1.0, **meta):
        """Convenience constructor broadcasting scalar defaults.

        ``activation`` may be one ActivationSpec or a sequence of n; ``delay``
        and ``kernel`` may be one object or an n x n nested sequence;
        ``impulses`` may be an ImpulseSchedule or a ``(times, strengths)`` pair.
        """
        a = np.atleast_1d(np.asarray(a, dtype=float))
        n = a.size
        zero = np.zeros((n, n))
        activation = activation if activation is not None else ActivationSpec()
        acts = [activation] * n if isinstance(activation, ActivationSpec) else list(activation)
        delay = delay if delay is not None else DelayFunction()
        delays = [[delay] * n for _ in range(n)] if isinstance(delay, DelayFunction) else delay
        kernel = kernel if kernel is not None else Kernel.exponential(1.0)
        kernels = [[kernel] * n for _ in range(n)] if isinstance(kernel, Kernel) else kernel
        if impulses is None:
            sched = ImpulseSchedule.empty(n, omega)
        elif isinstance(impulses, ImpulseSchedule):
            sched = impulses
        else:
            times, strengths = impulses
            sched = ImpulseSchedule(times, strengths, omega)
        return cls(a, zero if A is None else A, zero if B is None else B, zero if C is None else C,
                   np.zeros(n) if I is None else I, acts, delays, kernels, sched, omega, **meta)

    @property
    def n(self) -> int:
        return int(self.a.size)

    @property
    def lipschitz(self) -> np.ndarray:
        return np.array([f.lipschitz for f in self.activations])

    @property
    def activation_bounds(self) -> np.ndarray:
        return np.array([f.bound for f in self.activations])

    @property
    def delay_bound(self) -> float:
        """Global bound ``tau`` over all discrete delays."""
        return max(d.bound for row in self.delays for d in row)

    def replace(self, **changes) -> "NetworkSpec":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return NetworkSpec(**fields)


@dataclass(frozen=True)
class Issue:
    assumption: str
    severity: str  # "error" or "warning"
    message: str
    index: tuple = ()


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the assumption checks A-F.

    Indices in issues are 1-based, matching the ``gamma_ik`` notation.
    """

    issues: tuple = ()
    notes: tuple = ()

    @property
    def errors(self):
        return [x for x in self.issues if x.severity == "error"]

    @property
    def warnings(self):
        return [x for x in self.issues if x.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def status(self) -> dict:
        failed = {x.assumption for x in self.issues}
        return {key: ("fail" if key in failed else "pass") for key in "ABCDEF"}

    def failures(self, assumption):
        return [x for x in self.issues if x.assumption == assumption]

    def to_dict(self):
        return {
            "status": self.status,
            "issues": [
                {"assumption": x.assumption, "severity": x.severity, "message": x.message, "index": list(x.index)}
                for x in self.issues
            ],
            "notes": list(self.notes),
        }


def validate_network(spec: NetworkSpec) -> ValidationReport:
    """Check assumptions A-F; F failures are warnings, everything else is an error."""
    n = spec.n
    issues = []
    notes = []

    def err(key, msg, index=()):
        issues.append(Issue(key, "error", msg, tuple(index)))

    for i in range(n):
        if not spec.a[i] > 0:
            err("A", f"decay rate a_{i + 1} = {spec.a[i]} is not positive", (i + 1,))
    for i in range(n):
        for j in range(n):
            d = spec.delays[i][j]
            idx = (i + 1, j + 1)
            if not (math.isfinite(d.base) and math.isfinite(d.amplitude)):
                err("A", f"delay tau_{i + 1}{j + 1} is not finite", idx)
            elif d.base < 0 or d.amplitude < 0:
                err("A", f"delay tau_{i + 1}{j + 1} has negative base or amplitude", idx)
            elif d.kind == "sinusoidal" and d.amplitude > d.base:
                err("A", f"delay tau_{i + 1}{j + 1} goes negative (amplitude > base)", idx)
            if d.kind == "sinusoidal" and d.period is not None and abs(d.period - spec.omega) > 1e-12 * spec.omega:
                err("A", f"delay tau_{i + 1}{j + 1} period {d.period} differs from omega {spec.omega}", idx)

    for i in range(n):
        for j in range(n):
            k = spec.kernels[i][j]
            if not k.is_valid:
                err("B", f"kernel k_{i + 1}{j + 1} has invalid parameter {k.param}", (i + 1, j + 1))
                continue
            mass, first = kernel_moments(k)
            if abs(mass - 1.0) > 1e-12 or not math.isfinite(first):
                err("B", f"kernel k_{i + 1}{j + 1} violates unit mass / finite first moment", (i + 1, j + 1))

    for j, f in enumerate(spec.activations):
        L = f.lipschitz
        if not (math.isfinite(L) and L > 0):
            err("C", f"activation f_{j + 1} has Lipschitz constant {L}", (j + 1,))
        if not math.isfinite(f.bound):
            err("D", f"activation f_{j + 1} ({f.family}) is unbounded on its domain", (j + 1,))
        elif f.unbounded_family:
            notes.append(f"f_{j + 1} ({f.family}) is unbounded on R; bounded only through its domain {f.domain}")

    sched = spec.impulses
    t = sched.times
    if sched.m:
        if np.any(np.diff(t) <= 0):
            err("E", "impulse base times are not strictly increasing")
        if t[0] <= 0 or t[-1] > spec.omega:
            err("E", f"impulse base times must lie in (0, omega={spec.omega}]")
        for i in range(n):
            for k in range(sched.m):
                g = sched.strengths[i, k]
                if not g < 1:
                    err("E", f"gamma_{i + 1}{k + 1} = {g} is not < 1", (i + 1, k + 1))
        prods = sched.period_products()
        for i in range(n):
            if abs(prods[i] - 1.0) > F_TOL:
                issues.append(Issue(
                    "F", "warning",
                    f"per-period impulse product for neuron {i + 1} is {prods[i]!r}, not 1", (i + 1,),
                ))
    return ValidationReport(tuple(issues), tuple(notes))


@dataclass(frozen=True)
class BoundsReport:
    """Max-abs coefficients and the per-neuron a-priori bounds ``A_i, B_i, D_i``."""

    a: float
    b: float
    c: float
    M: float
    I: float
    N: float
    N_star: float
    A_i: np.ndarray
    B_i: np.ndarray
    D_i: np.ndarray
    margin_E: float = 1.0

    @property
    def radius(self) -> float:
        """Radius ``sum_i D_i + E`` of the ball in which the periodic solution is sought."""
        return float(np.sum(self.D_i) + self.margin_E)

    def to_dict(self):
        return {
            "a": self.a, "b": self.b, "c": self.c, "M": self.M, "I": self.I,
            "N": self.N, "N_star": self.N_star,
            "A_i": self.A_i.tolist(), "B_i": self.B_i.tolist(), "D_i": self.D_i.tolist(),
            "margin_E": self.margin_E, "radius": self.radius,
        }


def inverse_product_profile(schedule: ImpulseSchedule, i: int):
    """Segment lengths and ``1/P_i`` values covering ``(0, omega]``."""
    edges = np.concatenate(([0.0], schedule.times, [schedule.omega]))
    lengths = np.diff(edges)
    prods = np.concatenate(([1.0], np.cumprod(schedule.factors[i]))) if schedule.m else np.ones(1)
    return lengths, 1.0 / prods


def apriori_bounds(spec: NetworkSpec, margin_E: float = 1.0) -> BoundsReport:
    """A-priori bounds on any periodic solution of the jump-free system.

    ``A_i = (N / a_i) [n (a + b + c) M + I]``,
    ``B_i = N* [n (a + b + c) M + I] int_0^omega exp(a_i t) dt``,
    ``D_i = A_i exp(omega a_i) + B_i``.
    """
    report = validate_network(spec)
    if not report.ok:
        raise AssumptionError("apriori_bounds needs a valid network: " + "; ".join(x.message for x in report.errors))
    Ms = spec.activation_bounds
    if not np.all(np.isfinite(Ms)):
        raise AssumptionError("M undefined: an activation is unbounded")
    n = spec.n
    a_max = float(np.max(np.abs(spec.A)))
    b_max = float(np.max(np.abs(spec.B)))
    c_max = float(np.max(np.abs(spec.C)))
    M = float(np.max(Ms))
    I_max = float(np.max(np.abs(spec.I)))
    integrals, sups = [], []
    for i in range(n):
        lengths, inv = inverse_product_profile(spec.impulses, i)
        nonempty = lengths > 0
        integrals.append(float(np.sum(lengths * inv)))
        sups.append(float(np.max(inv[nonempty])) if np.any(nonempty) else 1.0)
    N = max(integrals)
    N_star = max(sups)
    core = n * (a_max + b_max + c_max) * M + I_max
    omega = spec.omega
    A_i = N / spec.a * core
    exp_int = np.expm1(spec.a * omega) / spec.a
    B_i = N_star * core * exp_int
    D_i = A_i * np.exp(omega * spec.a) + B_i
    return BoundsReport(a_max, b_max, c_max, M, I_max, N, N_star,
                        _frozen(A_i), _frozen(B_i), _frozen(D_i), margin_E)
