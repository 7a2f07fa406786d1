"""Initial histories and piecewise-smooth trajectories with dense output."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import HistoryUnderflowError


@dataclass(frozen=True, eq=False)
class HistoryFunction:
    """Initial function on ``(-inf, 0]``.

    On ``[-H, 0]`` neuron ``i`` follows ``value_i + amplitude_i sin(frequency_i (s + H))``;
    before ``-H`` it sits at ``value_i`` when ``tail`` is true.  With ``tail``
    false, nothing before ``-H`` is known for neurons with a nonzero amplitude.
    """

    value: np.ndarray
    amplitude: np.ndarray
    frequency: np.ndarray
    horizon: float = 1.0
    tail: bool = True

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.value, dtype=float))
        n = v.size
        amp = np.broadcast_to(np.asarray(self.amplitude, dtype=float), (n,)).copy()
        freq = np.broadcast_to(np.asarray(self.frequency, dtype=float), (n,)).copy()
        for arr in (v, amp, freq):
            arr.setflags(write=False)
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "frequency", freq)
        object.__setattr__(self, "horizon", float(self.horizon))
        if self.horizon < 0:
            raise ValueError("history horizon must be nonnegative")

    @classmethod
    def constant(cls, value, n=None):
        v = np.full(n, float(value)) if n is not None else np.atleast_1d(np.asarray(value, dtype=float))
        return cls(v, np.zeros(v.size), np.zeros(v.size), 0.0, True)

    @classmethod
    def random(cls, rng, n, scale=1.0, center=None, horizon=2.0):
        """Random smooth history; used for soundness sweeps."""
        center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        value = center + rng.uniform(-scale, scale, n)
        amplitude = rng.uniform(-0.5 * scale, 0.5 * scale, n)
        frequency = rng.uniform(0.5, 4.0, n)
        return cls(value, amplitude, frequency, horizon, True)

    @property
    def n(self) -> int:
        return int(self.value.size)

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.amplitude == 0.0)) or self.horizon == 0.0

    def neuron(self, j):
        """Scalar callable ``s -> phi_j(s)``."""
        return lambda s: float(self(np.asarray([s], dtype=float))[0, j])

    def __call__(self, s):
        """Values at times ``s <= 0``; returns shape (n,) for scalar ``s`` else (len(s), n)."""
        s_arr = np.asarray(s, dtype=float)
        scalar = s_arr.ndim == 0
        s_arr = np.atleast_1d(s_arr)
        if np.any(s_arr > 1e-12):
            raise ValueError("history evaluated at positive time")
        H = self.horizon
        before = s_arr < -H
        if not self.tail and np.any(before) and np.any(self.amplitude != 0.0):
            raise HistoryUnderflowError(
                f"history queried at s={s_arr[before].min():.6g} before its horizon -{H:g}"
            )
        phase = np.where(before, 0.0, s_arr + H)[:, None]
        out = self.value[None, :] + self.amplitude[None, :] * np.sin(self.frequency[None, :] * phase)
        return out[0] if scalar else out

    def to_dict(self):
        return {
            "value": self.value.tolist(), "amplitude": self.amplitude.tolist(),
            "frequency": self.frequency.tolist(), "horizon": self.horizon, "tail": self.tail,
        }

    @classmethod
    def from_dict(cls, d, n=None):
        value = d["value"]
        if np.ndim(value) == 0 and n is not None:
            value = [value] * n
        size = np.size(value)
        return cls(value, d.get("amplitude", np.zeros(size)), d.get("frequency", np.zeros(size)),
                   d.get("horizon", 0.0), d.get("tail", True))


def hermite(x0, d0, x1, d1, h, theta):
    t2 = theta * theta
    om = 1.0 - theta
    return ((1.0 + 2.0 * theta) * om * om * x0 + theta * om * om * h * d0
            + t2 * (3.0 - 2.0 * theta) * x1 + t2 * (theta - 1.0) * h * d1)


def hermite_derivative(x0, d0, x1, d1, h, theta):
    om = 1.0 - theta
    return (6.0 * theta * (theta - 1.0) * (x0 - x1) / h + om * (1.0 - 3.0 * theta) * d0
            + theta * (3.0 * theta - 2.0) * d1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Grid samples with left/right limits and Hermite dense output.

    ``left[k]``/``right[k]`` are the limits at ``times[k]``; they differ only
    where ``impulse[k]`` is set.  ``dleft``/``dright`` are the one-sided
    derivatives used by the cubic interpolant on each step.  ``kind`` is
    ``"x"`` for the impulsive system and ``"y"`` for the jump-free one.
    """

    times: np.ndarray
    left: np.ndarray
    right: np.ndarray
    dleft: np.ndarray
    dright: np.ndarray
    impulse: np.ndarray
    history: HistoryFunction | None
    omega: float
    h: float
    kind: str = "x"

    def __post_init__(self):
        for name in ("times", "left", "right", "dleft", "dright", "impulse"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return int(self.left.shape[1])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _step(self, t):
        idx = np.searchsorted(self.times, t, side="left")
        return np.clip(idx - 1, 0, self.times.size - 2)

    def nearest(self, t):
        """Index of the grid time closest to each ``t``."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.times, t_arr), 1, self.times.size - 1)
        prev_closer = np.abs(t_arr - self.times[idx - 1]) <= np.abs(self.times[idx] - t_arr)
        return np.where(prev_closer, idx - 1, idx)

    def __call__(self, t, side="left", tol=0.0):
        """Interpolated state at ``t``; left-continuous unless ``side="right"``.

        Times within ``tol`` of a grid point return that point's stored limit.
        """
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        t_arr = np.atleast_1d(t_arr)
        out = np.empty((t_arr.size, self.n))
        near = self.nearest(t_arr)
        hit = np.abs(self.times[near] - t_arr) <= tol
        stored = self.right if side == "right" else self.left
        out[hit] = stored[near[hit]]
        past = ~hit & (t_arr <= self.times[0])
        if np.any(past):
            if self.history is None:
                raise ValueError("trajectory has no history attached")
            out[past] = self.history(np.minimum(t_arr[past], 0.0))
        fut = ~hit & ~past
        if np.any(fut):
            tt = t_arr[fut]
            if np.any(tt > self.times[-1] + tol + 1e-12 * max(1.0, abs(self.times[-1]))):
                raise ValueError("time beyond the end of the trajectory")
            m = self._step(tt)
            h = self.times[m + 1] - self.times[m]
            th = np.clip((tt - self.times[m]) / h, 0.0, 1.0)[:, None]
            out[fut] = hermite(self.right[m], self.dright[m], self.left[m + 1], self.dleft[m + 1],
                               h[:, None], th)
        return out[0] if scalar else out

    def derivative(self, t):
        """Derivative of the dense interpolant at ``0 < t`` (left-sided at grid points)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        m = self._step(t_arr)
        h = self.times[m + 1] - self.times[m]
        th = ((t_arr - self.times[m]) / h)[:, None]
        return hermite_derivative(self.right[m], self.dright[m], self.left[m + 1], self.dleft[m + 1],
                                  h[:, None], th)

    def samples(self):
        """All samples in time order with impulse points doubled: (times, values, side)."""
        idx = np.repeat(np.arange(self.times.size), np.where(self.impulse, 2, 1))
        first = np.ones(idx.size, dtype=bool)
        first[1:] = idx[1:] != idx[:-1]
        values = np.where(first[:, None], self.left[idx], self.right[idx])
        side = np.where(self.impulse[idx], np.where(first, "left", "right"), "none")
        return self.times[idx], values, side

    def final(self, side="right"):
        return (self.right if side == "right" else self.left)[-1].copy()

    def replace_values(self, left, right, dleft, dright, kind=None, impulse=None):
        return Trajectory(self.times, left, right, dleft, dright,
                          self.impulse if impulse is None else impulse, self.history,
                          self.omega, self.h, self.kind if kind is None else kind)

    def to_csv(self, path):
        """Write ``t, <kind>1..n, jump, side`` rows; impulse rows appear twice."""
        times, values, side = self.samples()
        if hasattr(path, "write"):
            self._write_csv(path, times, values, side)
            return
        with open(path, "w", newline="") as fh:
            self._write_csv(fh, times, values, side)

    def _write_csv(self, fh, times, values, side):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"{self.kind}{i + 1}" for i in range(self.n)] + ["jump", "side"])
        for t, row, s in zip(times, values, side):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row] + [int(s != "none"), s])
