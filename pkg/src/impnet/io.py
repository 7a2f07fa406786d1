"""JSON network documents.

A document is one JSON object::

    {
      "name": "two-neuron", "omega": 1.0,
      "a": [4, 5], "A": [[...]], "B": [[...]], "C": [[...]], "I": [1, -0.5],
      "activations": {"family": "hyperbolic-tangent", "gain": 1.0},
      "delays": {"kind": "sinusoidal", "base": 0.3, "amplitude": 0.2, "phase": 0.0},
      "kernels": {"family": "exponential", "rate": 4.0},
      "impulses": {"times": [0.3, 0.7], "strengths": [[0.5, -1.0], [0.5, -1.0]]},
      "history": {"value": [0.0, 0.0]}
    }

``activations`` may be a list of n objects; ``delays`` and ``kernels`` may be
n x n nested lists.  ``A``, ``B``, ``C`` and ``I`` default to zero, the
impulse schedule to empty, ``history`` is optional.  Floats are written with
``repr`` precision so a dump/load cycle is lossless.
"""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .errors import SpecFormatError, StructureError
from .kernels import Kernel
from .model import ActivationSpec, DelayFunction, ImpulseSchedule, NetworkSpec
from .trajectory import HistoryFunction

KNOWN_KEYS = {"name", "interpretive", "notes", "omega", "a", "A", "B", "C", "I", "activations",
              "delays", "kernels", "impulses", "history"}


def _line_of(text, key):
    """1-based line of the first ``"key":`` in ``text`` (None if absent)."""
    if text is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _table(value, n, cls, key):
    if isinstance(value, dict):
        item = cls.from_dict(value)
        return [[item] * n for _ in range(n)]
    if not isinstance(value, list) or len(value) != n or any(not isinstance(r, list) or len(r) != n
                                                              for r in value):
        raise StructureError(f"{key} must be one object or an {n}x{n} table")
    return [[cls.from_dict(x) for x in row] for row in value]


def spec_from_dict(doc: dict, text: str | None = None, source: str | None = None):
    """Build ``(NetworkSpec, HistoryFunction | None)`` from a parsed document."""

    def fail(msg, key=None):
        raise SpecFormatError(msg, _line_of(text, key) if key else None, source)

    if not isinstance(doc, dict):
        fail("top level must be a JSON object")
    unknown = sorted(set(doc) - KNOWN_KEYS)
    if unknown:
        fail(f"unknown field {unknown[0]!r}", unknown[0])
    if "a" not in doc:
        fail("missing required field 'a'")
    key = None
    try:
        key = "a"
        a = np.asarray(doc["a"], dtype=float)
        if a.ndim != 1 or a.size == 0:
            fail("'a' must be a nonempty list of numbers", "a")
        n = a.size
        key = "omega"
        omega = float(doc.get("omega", 1.0))
        mats = {}
        for key in ("A", "B", "C"):
            mats[key] = np.asarray(doc.get(key, np.zeros((n, n))), dtype=float)
            if mats[key].shape != (n, n):
                fail(f"{key} has shape {mats[key].shape}, expected ({n}, {n})", key)
        key = "I"
        I = np.asarray(doc.get("I", np.zeros(n)), dtype=float)
        if I.shape != (n,):
            fail(f"I has shape {I.shape}, expected ({n},)", "I")
        key = "activations"
        acts = doc.get("activations", {"family": "hyperbolic-tangent", "gain": 1.0})
        acts = [ActivationSpec.from_dict(acts)] * n if isinstance(acts, dict) else [
            ActivationSpec.from_dict(x) for x in acts]
        key = "delays"
        delays = _table(doc.get("delays", {"kind": "constant", "base": 0.0}), n, DelayFunction, key)
        key = "kernels"
        kernels = _table(doc.get("kernels", {"family": "exponential", "rate": 1.0}), n, Kernel, key)
        key = "impulses"
        imp = doc.get("impulses")
        if imp is None or not imp.get("times"):
            sched = ImpulseSchedule.empty(n, omega)
        else:
            sched = ImpulseSchedule(imp["times"], imp["strengths"], omega)
        key = "history"
        hist = HistoryFunction.from_dict(doc["history"], n) if "history" in doc else None
        key = None
        spec = NetworkSpec(a, mats["A"], mats["B"], mats["C"], I, acts, delays, kernels, sched, omega,
                           name=str(doc.get("name", "")), interpretive=bool(doc.get("interpretive", False)),
                           notes=str(doc.get("notes", "")))
    except SpecFormatError:
        raise
    except KeyError as exc:
        fail(f"field {key!r} is missing entry {exc.args[0]!r}", key)
    except (StructureError, ValueError, TypeError, AttributeError) as exc:
        fail(f"{key}: {exc}" if key else str(exc), key)
    if hist is not None and hist.n != spec.n:
        fail(f"history has {hist.n} neurons, expected {spec.n}", "history")
    return spec, hist


def _uniform(table):
    first = table[0][0]
    return first if all(x == first for row in table for x in row) else None


def spec_to_dict(spec: NetworkSpec, history: HistoryFunction | None = None) -> dict:
    acts = spec.activations
    delay = _uniform(spec.delays)
    kernel = _uniform(spec.kernels)
    doc = {
        "name": spec.name,
        "interpretive": spec.interpretive,
        "notes": spec.notes,
        "omega": spec.omega,
        "a": spec.a.tolist(),
        "A": spec.A.tolist(),
        "B": spec.B.tolist(),
        "C": spec.C.tolist(),
        "I": spec.I.tolist(),
        "activations": acts[0].to_dict() if all(f == acts[0] for f in acts) else [f.to_dict() for f in acts],
        "delays": delay.to_dict() if delay is not None else [[d.to_dict() for d in r] for r in spec.delays],
        "kernels": kernel.to_dict() if kernel is not None else [[k.to_dict() for k in r] for r in spec.kernels],
        "impulses": spec.impulses.to_dict(),
    }
    if history is not None:
        doc["history"] = history.to_dict()
    return doc


def loads_spec(text: str, source: str | None = None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(exc.msg, exc.lineno, source) from None
    return spec_from_dict(doc, text, source)


def load_spec(path):
    """Read a network document; returns ``(spec, history or None)``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecFormatError(f"cannot read spec: {exc.strerror}", None, str(path)) from None
    return loads_spec(text, str(path))


def dumps_spec(spec: NetworkSpec, history: HistoryFunction | None = None) -> str:
    return json.dumps(spec_to_dict(spec, history), indent=2) + "\n"


def dump_spec(spec: NetworkSpec, path, history: HistoryFunction | None = None):
    Path(path).write_text(dumps_spec(spec, history))


def fingerprint(spec: NetworkSpec) -> str:
    """sha256 of the canonical document; identical specs give identical digests."""
    canon = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def dumps_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, non-finite numbers as null."""
    return json.dumps(_plain(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: dict, path):
    Path(path).write_text(dumps_report(report))
