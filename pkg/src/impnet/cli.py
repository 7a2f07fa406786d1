"""Command-line front end.

Exit codes:

    0  success (certify: certificate feasible)
    1  certificate infeasible, or an applicable stability check failed
    2  input error (unreadable or malformed spec, bad options, empty sweep grid)
    3  a delay reached before the initial history
    4  the impulse schedule violates the per-period product condition
    5  no periodic orbit within the transient budget
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (decay_rate_fit, deviation, envelope_check, find_periodic, lyapunov_monitor,
                       psi_norm)
from .certify import assess
from .errors import (AssumptionError, HistoryUnderflowError, ImpnetError, SpecFormatError,
                     StructureError)
from .io import dumps_report, fingerprint, load_spec
from .model import DelayFunction, ImpulseSchedule, apriori_bounds, validate_network
from .simulate import DEFAULT_STEP, simulate, simulate_transformed
from .trajectory import HistoryFunction

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_UNDERFLOW = 3
EXIT_F_VIOLATED = 4
EXIT_NO_ORBIT = 5

SWEEP_PARAMS = ("scale", "gamma", "tau")


def _emit(text: str, out, filename: str):
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / filename).write_text(text)


def _history(args, spec, hist):
    if args.seed is not None:
        return HistoryFunction.random(np.random.default_rng(args.seed), spec.n)
    if hist is not None:
        return hist
    return HistoryFunction.constant(1.0, spec.n)


def _header(cmd, args, spec):
    return {"command": cmd, "version": __version__, "spec": {"name": spec.name, "sha256": fingerprint(spec)},
            "interpretive": bool(spec.interpretive), "seed": args.seed}


def cmd_certify(args) -> int:
    spec, _ = load_spec(args.spec)
    cert = assess(spec, args.delta)
    report = _header("certify", args, spec)
    report["validation"] = validate_network(spec).to_dict()
    report["certificate"] = cert.to_dict()
    _emit(dumps_report(report), args.out, "certificate.json")
    return EXIT_OK if cert.feasible else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    spec, hist = load_spec(args.spec)
    phi = _history(args, spec, hist)
    run = simulate_transformed if args.transformed else simulate
    traj = run(spec, phi, args.t_end, h=args.step)
    buf = _io.StringIO()
    traj.to_csv(buf)
    _emit(buf.getvalue(), args.out, "trajectory.csv")
    return EXIT_OK


def _analyze(args, spec, hist):
    report = _header("analyze", args, spec)
    validation = validate_network(spec)
    report["validation"] = validation.to_dict()
    if validation.failures("F"):
        report["error"] = "per-period impulse products differ from 1; no periodic orbit can exist"
        return report, EXIT_F_VIOLATED
    cert = assess(spec, args.delta)
    report["certificate"] = cert.to_dict()

    orbit = find_periodic(spec, None, args.transients, args.tol, h=args.step)
    report["orbit"] = orbit.to_dict()
    if not orbit.converged:
        report["error"] = f"period-map residual {orbit.residual:.3e} above tolerance {args.tol:g}"
        return report, EXIT_NO_ORBIT

    checks = {}
    try:
        bounds = apriori_bounds(spec)
        y_orbit = orbit if not spec.impulses.m else find_periodic(spec, None, args.transients, args.tol,
                                                                  h=args.step, transformed=True)
        sup = y_orbit.sup_norm()
        report["bounds"] = bounds.to_dict()
        report["bounds"]["orbit_sup"] = sup.tolist()
        checks["bounds"] = bool(np.all(sup <= bounds.D_i))
    except AssumptionError as exc:
        report["bounds"] = {"applicable": False, "reason": str(exc)}

    if not cert.feasible:
        report["stability"] = {"applicable": False, "reason": "certificate infeasible"}
        report["checks"] = checks
        return report, EXIT_OK if all(checks.values()) else EXIT_INFEASIBLE

    phi = _history(args, spec, hist)
    t_end = args.t_end if args.t_end is not None else 10.0 * spec.omega
    traj = simulate(spec, phi, t_end, h=args.step)
    y = deviation(traj, orbit)
    psi = psi_norm(phi, orbit, spec)
    envelopes = {w: envelope_check(y, cert, w, psi=psi) for w in ("exp", "log")}
    monitor = lyapunov_monitor(y, cert, psi, schedule=spec.impulses)
    stability = {"psi": psi, "t_end": t_end, "history": phi.to_dict(), "primary_weight": args.weight,
                 "envelopes": {w: e.to_dict() for w, e in envelopes.items()}, "monitor": monitor.to_dict()}
    try:
        stability["decay"] = decay_rate_fit(y).to_dict()
    except ValueError as exc:
        stability["decay"] = {"applicable": False, "reason": str(exc)}
    report["stability"] = stability
    checks["envelope"] = envelopes[args.weight].passed
    checks["monitor"] = monitor.ok
    report["checks"] = checks
    certified_failure = cert.certified and not all(checks.values())
    return report, EXIT_INFEASIBLE if certified_failure else EXIT_OK


def cmd_analyze(args) -> int:
    spec, hist = load_spec(args.spec)
    report, code = _analyze(args, spec, hist)
    report["exit_code"] = code
    _emit(dumps_report(report), args.out, "analysis.json")
    return code


def _sweep_spec(spec, param, value):
    if param == "scale":
        return spec.replace(A=spec.A * value, B=spec.B * value, C=spec.C * value)
    if param == "tau":
        d = DelayFunction.constant(value)
        return spec.replace(delays=[[d] * spec.n for _ in range(spec.n)])
    sched = spec.impulses
    times = sched.times if sched.m else np.array([0.5 * spec.omega])
    return spec.replace(impulses=ImpulseSchedule(times, np.full((spec.n, times.size), value), spec.omega))


def _cell(spec, param, value, delta):
    cert = assess(_sweep_spec(spec, param, value), delta)
    return [repr(float(value)), int(cert.feasible), int(cert.certified), repr(float(cert.spectral_radius)),
            repr(float(cert.alpha)), repr(float(cert.beta))]


def cmd_sweep(args) -> int:
    spec, _ = load_spec(args.spec)
    if args.num < 1 or (args.num > 1 and not args.stop >= args.start):
        raise StructureError("empty sweep grid")
    values = np.linspace(args.start, args.stop, args.num)
    with ThreadPoolExecutor() as pool:
        rows = list(pool.map(lambda v: _cell(spec, args.param, v, args.delta), values))
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([args.param, "feasible", "certified", "spectral_radius", "alpha", "beta"])
    w.writerows(rows)
    _emit(buf.getvalue(), args.out, "sweep.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="impnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--spec", required=True, help="network document (JSON)")
        sp.add_argument("--out", help="output directory; stdout when omitted")
        sp.add_argument("--delta", type=float, default=0.1, help="margin delta in beta = (1+delta) xi_max/xi_min")
        sp.add_argument("--seed", type=int, help="random initial history")

    def numeric(sp, t_end_help):
        sp.add_argument("--step", type=float, default=DEFAULT_STEP, help="integration step h")
        sp.add_argument("--t-end", type=float, help=t_end_help)

    sp = sub.add_parser("certify", help="stability certificate")
    common(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("simulate", help="trajectory CSV")
    common(sp)
    numeric(sp, "final time (default 5 omega)")
    sp.add_argument("--transformed", action="store_true", help="integrate the jump-free system y = x / P")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="orbit, envelopes, decay fit and monitor")
    common(sp)
    numeric(sp, "length of the deviation run (default 10 omega)")
    sp.add_argument("--transients", type=int, default=50)
    sp.add_argument("--tol", type=float, default=1e-6, help="period-map residual tolerance")
    sp.add_argument("--weight", choices=("exp", "log"), default="exp", help="envelope that sets the verdict")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("sweep", help="certificate over a parameter grid")
    common(sp)
    sp.add_argument("--param", choices=SWEEP_PARAMS, default="scale")
    sp.add_argument("--start", type=float, required=True)
    sp.add_argument("--stop", type=float, required=True)
    sp.add_argument("--num", type=int, default=11)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except SpecFormatError as exc:
        print(f"impnet: spec error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HistoryUnderflowError as exc:
        print(f"impnet: {exc}", file=sys.stderr)
        return EXIT_UNDERFLOW
    except (StructureError, AssumptionError, ValueError) as exc:
        print(f"impnet: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ImpnetError as exc:
        print(f"impnet: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
