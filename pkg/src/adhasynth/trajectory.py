"""Time series, piecewise-affine trajectories and their epsilon-tubes."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .dynamics import AffineDynamics, as_affine, flow
from .geometry import Box, Polytope


class OutOfDomain(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeSeries:
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        X = np.asarray(self.states, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if len(t) != len(X):
            raise ValueError("times and states differ in length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        t.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", X)

    def __len__(self):
        return len(self.times)

    @property
    def dim(self):
        return self.states.shape[1]

    def window(self, i, j) -> "TimeSeries":
        """Samples ``i..j`` inclusive."""
        return TimeSeries(self.times[i : j + 1], self.states[i : j + 1])


@dataclass(frozen=True, eq=False)
class PwaTrajectory:
    """Continuous PWA function given by switch times, piece dynamics and ``x0``.

    Only the tuple is stored; states at switch times are derived.
    """

    switch_times: tuple[float, ...]
    pieces: tuple[AffineDynamics, ...]
    x0: np.ndarray

    def __post_init__(self):
        ts = tuple(float(t) for t in self.switch_times)
        pieces = tuple(as_affine(p) for p in self.pieces)
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if len(ts) != len(pieces) + 1:
            raise ValueError("need one more switch time than pieces")
        if ts[0] != 0.0:
            raise ValueError("trajectories start at t = 0")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("switch times must be strictly increasing")
        if any(p.dim != len(x0) for p in pieces):
            raise ValueError("piece dimension differs from the initial state")
        x0.setflags(write=False)
        object.__setattr__(self, "switch_times", ts)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self):
        return len(self.x0)

    @property
    def num_pieces(self):
        return len(self.pieces)

    @property
    def duration(self):
        return self.switch_times[-1]

    def piece_duration(self, i) -> float:
        return self.switch_times[i + 1] - self.switch_times[i]

    @cached_property
    def switch_states(self) -> np.ndarray:
        """State at every switch time, shape ``(k + 1, n)``."""
        states = [self.x0]
        for i, p in enumerate(self.pieces):
            states.append(flow(p, states[-1], self.piece_duration(i)))
        return np.array(states)

    def piece_index(self, t) -> int:
        if not (0.0 <= t <= self.duration) or not self.pieces:
            if t == 0.0 and not self.pieces:
                return -1
            raise OutOfDomain(f"t={t} outside [0, {self.duration}]")
        i = bisect.bisect_right(self.switch_times, t) - 1
        return min(i, len(self.pieces) - 1)


def evaluate(f: PwaTrajectory, t: float) -> np.ndarray:
    i = f.piece_index(t)
    if i < 0:
        return f.x0.copy()
    return flow(f.pieces[i], f.switch_states[i], t - f.switch_times[i])


def evaluate_many(f: PwaTrajectory, times) -> np.ndarray:
    return np.array([evaluate(f, t) for t in times])


@dataclass(frozen=True)
class Tube:
    trajectory: PwaTrajectory
    epsilon: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("tube radius must be nonnegative")


def tube_at(T: Tube, t: float) -> Box:
    return Box(tuple(evaluate(T.trajectory, t)), T.epsilon)


def tube_polytope(f: PwaTrajectory, epsilon: float, t: float) -> Polytope:
    return tube_at(Tube(f, epsilon), t).to_polytope()


def restrict(f: PwaTrajectory, a: float, b: float) -> PwaTrajectory:
    """Restriction to ``[a, b]``, shifted to start at time 0."""
    if not (0.0 <= a < b <= f.duration):
        raise OutOfDomain(f"[{a}, {b}] not inside [0, {f.duration}]")
    ts = f.switch_times
    first = f.piece_index(a)
    # the last piece touching the open interval (a, b)
    last = bisect.bisect_left(ts, b) - 1
    times = [0.0]
    pieces = []
    for i in range(first, last + 1):
        end = min(ts[i + 1], b)
        pieces.append(f.pieces[i])
        times.append(end - a)
    return PwaTrajectory(tuple(times), tuple(pieces), evaluate(f, a))


def max_deviation(f: PwaTrajectory, s: TimeSeries) -> float:
    if s.times[0] < 0 or s.times[-1] > f.duration + 1e-12:
        raise OutOfDomain("series extends beyond the trajectory domain")
    F = evaluate_many(f, np.minimum(s.times, f.duration))
    return float(np.max(np.abs(F - s.states)))


def delta_captures(f: PwaTrajectory, s: TimeSeries, delta: float) -> bool:
    return max_deviation(f, s) <= delta


def concatenate(pieces: Sequence[AffineDynamics], durations: Sequence[float], x0) -> PwaTrajectory:
    times = np.concatenate([[0.0], np.cumsum(durations)])
    return PwaTrajectory(tuple(times), tuple(pieces), x0)
