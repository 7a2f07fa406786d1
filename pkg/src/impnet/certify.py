"""Exponential-stability certificate.

The certificate asks for a positive weight vector ``xi`` with

    -xi_i a_i + sum_j xi_j (|A_ij| + |B_ij| + |C_ij|) L_j < 0        (rows)

and then for the largest decay rate ``alpha`` keeping

    G_i(alpha) = xi_i (-a_i + alpha)
                 + sum_j xi_j (|A_ij| + e^{alpha tau} |B_ij| + |C_ij| p_ij(alpha)) L_j < 0.

Deviations then obey ``|y_i(t)| <= beta ||psi|| e^{-alpha t}`` with
``beta = (1 + delta) xi_max / xi_min``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError
from .kernels import exp_moment
from .model import NetworkSpec

POWER_ITERATIONS = 200
POWER_TOL = 1e-12
ALPHA_TOL = 1e-10
EPS_MARGIN = 1e-9
CAP_FACTOR = 0.999
SINGULAR_COND = 1e14


@dataclass(frozen=True)
class Certificate:
    """Outcome of the stability check.

    ``feasible`` covers the two coefficient inequalities only.  The impulse
    hypothesis ``0 <= gamma_ik < 1`` is reported separately in
    ``impulses_contractive``; ``certified`` requires both.
    """

    feasible: bool
    xi: np.ndarray
    spectral_radius: float
    margins: np.ndarray
    alpha: float = float("nan")
    beta: float = float("nan")
    delta_margin: float = 0.1
    delta_cap: float = float("nan")
    tau: float = 0.0
    impulses_contractive: bool = True
    radius_bounds: tuple = (float("nan"), float("nan"))
    verdicts_agree: bool = True
    borderline: bool = False
    alpha_rows: np.ndarray = field(default_factory=lambda: np.zeros(0))
    notes: tuple = ()

    @property
    def certified(self) -> bool:
        return self.feasible and self.impulses_contractive

    @property
    def violating_rows(self) -> list:
        """1-based rows of the coefficient inequality that are not strictly negative."""
        return [i + 1 for i, m in enumerate(self.margins) if not m < 0]

    @property
    def xi_min(self) -> float:
        return float(np.min(self.xi))

    @property
    def xi_max(self) -> float:
        return float(np.max(self.xi))

    def to_dict(self):
        def num(x):
            x = float(x)
            return x if math.isfinite(x) else None

        return {
            "feasible": bool(self.feasible),
            "certified": bool(self.certified),
            "impulses_contractive": bool(self.impulses_contractive),
            "xi": [float(v) for v in self.xi],
            "alpha": num(self.alpha),
            "beta": num(self.beta),
            "spectral_radius": num(self.spectral_radius),
            "spectral_radius_bounds": [num(v) for v in self.radius_bounds],
            "verdicts_agree": bool(self.verdicts_agree),
            "borderline": bool(self.borderline),
            "margins": [float(v) for v in self.margins],
            "violating_rows": self.violating_rows,
            "alpha_rows": [float(v) for v in self.alpha_rows],
            "delta_margin": self.delta_margin,
            "delta_cap": num(self.delta_cap),
            "tau": self.tau,
            "tolerances": {
                "power_iterations": POWER_ITERATIONS, "power_tol": POWER_TOL,
                "alpha_tol": ALPHA_TOL, "eps_margin": EPS_MARGIN,
            },
            "notes": list(self.notes),
        }


def coupling_matrix(spec: NetworkSpec) -> np.ndarray:
    """``W_ij = (|A_ij| + |B_ij| + |C_ij|) L_j``."""
    return (np.abs(spec.A) + np.abs(spec.B) + np.abs(spec.C)) * spec.lipschitz[None, :]


def spectral_radius(M, iterations=POWER_ITERATIONS, tol=POWER_TOL):
    """Perron root of a nonnegative matrix by power iteration on ``M + I``.

    Returns ``(rho, vector, (lower, upper))`` where the bounds are the
    Collatz-Wielandt quotients of the final iterate.  The shift keeps the
    iteration convergent for reducible or cyclic ``M``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    S = M + np.eye(n)
    v = np.ones(n) / n
    lo, hi = 0.0, math.inf
    for _ in range(iterations):
        w = S @ v
        ratio = w / v
        lo, hi = float(ratio.min()) - 1.0, float(ratio.max()) - 1.0
        v = w / w.sum()
        if hi - lo <= tol * max(1.0, abs(hi)):
            return 0.5 * (lo + hi), v, (max(lo, 0.0), hi)
    # reducible matrices can stall with vanishing components; the bounds
    # stay valid but the midpoint does not, so take the dense answer
    rho = float(np.max(np.abs(np.linalg.eigvals(M)))) if n else 0.0
    return rho, v, (max(lo, 0.0), hi)


def _decay_ok(spec):
    return bool(np.all(spec.a > 0))


def find_xi(spec: NetworkSpec) -> Certificate:
    """Canonical weight vector from ``(diag(a) - W) xi = 1`` with the spectral cross-check."""
    n = spec.n
    W = coupling_matrix(spec)
    notes = []
    if not _decay_ok(spec):
        rows = [i + 1 for i in range(n) if not spec.a[i] > 0]
        notes.append(f"decay rates of rows {rows} are not positive")
        margins = -spec.a + W.sum(axis=1)
        margins = np.where(spec.a > 0, margins, np.maximum(margins, 0.0))
        return Certificate(False, np.full(n, np.nan), math.inf, margins,
                           impulses_contractive=spec.impulses.contractive,
                           radius_bounds=(math.inf, math.inf), notes=tuple(notes))

    rho, perron, (lo, hi) = spectral_radius(W / spec.a[:, None])
    if lo <= 1.0 <= hi and hi - lo > POWER_TOL:
        # power iteration did not separate rho from 1; settle it with a dense solve
        rho = float(np.max(np.abs(np.linalg.eigvals(W / spec.a[:, None]))))
        notes.append("power iteration inconclusive near rho = 1; dense eigenvalues used")
    spectral_verdict = rho < 1.0

    D = np.diag(spec.a) - W
    borderline = False
    try:
        cond = np.linalg.cond(D)
        if not math.isfinite(cond) or cond > SINGULAR_COND:
            raise np.linalg.LinAlgError("ill-conditioned")
        xi = np.linalg.solve(D, np.ones(n))
        solve_verdict = bool(np.all(xi > 0))
    except np.linalg.LinAlgError:
        borderline = True
        xi = np.full(n, np.nan)
        solve_verdict = False
        notes.append("diag(a) - W is singular: borderline infeasible")

    feasible = solve_verdict
    witness = xi if feasible else perron
    margins = -witness * spec.a + W @ witness
    agree = borderline or (solve_verdict == spectral_verdict)
    if not agree:
        notes.append(f"linear-solve verdict {solve_verdict} disagrees with rho = {rho!r}")
    return Certificate(feasible, xi, float(rho), margins,
                       impulses_contractive=spec.impulses.contractive,
                       radius_bounds=(lo, hi), verdicts_agree=agree, borderline=borderline,
                       notes=tuple(notes))


def _active_kernels(spec):
    return [spec.kernels[i][j] for i in range(spec.n) for j in range(spec.n) if spec.C[i, j] != 0.0]


def default_delta_cap(spec: NetworkSpec) -> float:
    """``0.999 * min(kernel convergence bounds, min_i a_i)``."""
    bounds = [k.convergence_bound for k in _active_kernels(spec)] + [float(np.min(spec.a))]
    return CAP_FACTOR * min(bounds)


def alpha_rows(spec: NetworkSpec, xi, alpha: float, tau: float | None = None) -> np.ndarray:
    """``G_i(alpha)`` for every row."""
    xi = np.asarray(xi, dtype=float)
    tau = spec.delay_bound if tau is None else tau
    n = spec.n
    L = spec.lipschitz
    P = np.ones((n, n))
    for i in range(n):
        for j in range(n):
            if spec.C[i, j] != 0.0:
                P[i, j] = exp_moment(spec.kernels[i][j], alpha)
    coeff = (np.abs(spec.A) + math.exp(alpha * tau) * np.abs(spec.B) + np.abs(spec.C) * P) * L[None, :]
    return xi * (-spec.a + alpha) + coeff @ xi


def find_alpha(spec: NetworkSpec, xi, delta_cap: float | None = None, tol: float = ALPHA_TOL,
               eps: float = EPS_MARGIN) -> float:
    """Largest ``alpha`` in ``(0, delta_cap]`` with ``max_i G_i(alpha) <= -eps``, by bisection."""
    xi = np.asarray(xi, dtype=float)
    if not np.all(xi > 0):
        raise CertificateError("find_alpha needs a positive weight vector")
    cap = default_delta_cap(spec) if delta_cap is None else float(delta_cap)
    if not cap > 0:
        raise ValueError(f"delta cap must be positive, got {cap}")

    def worst(alpha):
        return float(np.max(alpha_rows(spec, xi, alpha)))

    if worst(0.0) > -eps:
        raise CertificateError("the decay inequality already fails at alpha = 0")
    if worst(cap) <= -eps:
        return cap
    lo, hi = 0.0, cap
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if worst(mid) <= -eps:
            lo = mid
        else:
            hi = mid
    return lo


def certificate(spec: NetworkSpec, delta_margin: float = 0.1, delta_cap: float | None = None) -> Certificate:
    """Full certificate; raises CertificateError (with ``partial``) when infeasible."""
    if delta_margin < 0:
        raise ValueError("delta_margin must be nonnegative")
    part = find_xi(spec)
    part = _replace(part, delta_margin=float(delta_margin), tau=float(spec.delay_bound))
    if not part.feasible:
        rows = part.violating_rows
        raise CertificateError(
            f"coefficient inequality infeasible (rho = {part.spectral_radius:.6g}); violating rows {rows}",
            partial=part,
        )
    cap = default_delta_cap(spec) if delta_cap is None else float(delta_cap)
    alpha = find_alpha(spec, part.xi, cap)
    beta = (1.0 + delta_margin) * part.xi_max / part.xi_min
    notes = part.notes
    if not part.impulses_contractive:
        notes = notes + ("impulse strengths outside [0, 1): the envelope is not covered by the certificate",)
    return _replace(part, alpha=float(alpha), beta=float(beta), delta_cap=float(cap),
                    alpha_rows=alpha_rows(spec, part.xi, alpha), notes=notes)


def assess(spec: NetworkSpec, delta_margin: float = 0.1) -> Certificate:
    """Like :func:`certificate` but returns the partial certificate instead of raising."""
    try:
        return certificate(spec, delta_margin)
    except CertificateError as exc:
        if exc.partial is None:
            raise
        return exc.partial


def _replace(cert: Certificate, **changes) -> Certificate:
    fields = {k: getattr(cert, k) for k in cert.__dataclass_fields__}
    fields.update(changes)
    return Certificate(**fields)
