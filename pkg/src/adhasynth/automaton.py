"""Hybrid automata with affine dynamics, executions, and the q-update edit."""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .dynamics import AffineDynamics, as_affine
from .geometry import Polytope, chull, subset
from .membership import PathLengthMismatch
from .trajectory import PwaTrajectory, evaluate


class InjectivityViolation(ValueError):
    pass


class InvalidPath(ValueError):
    pass


FLOW_TOL = 1e-9


class _Fresh:
    def __repr__(self):
        return "FRESH"


FRESH = _Fresh()


@dataclass(frozen=True)
class Location:
    flow: AffineDynamics
    invariant: Polytope


@dataclass(frozen=True, eq=False)
class Adha:
    """Locations with flows and invariants, transitions with guards."""

    dimension: int
    locations: Mapping[str, Location]
    transitions: Mapping[tuple[str, str], Polytope]

    def __post_init__(self):
        object.__setattr__(self, "locations", MappingProxyType(dict(self.locations)))
        object.__setattr__(self, "transitions", MappingProxyType(dict(self.transitions)))

    @classmethod
    def empty(cls, dimension: int) -> "Adha":
        return cls(dimension, {}, {})

    @property
    def names(self) -> list[str]:
        return list(self.locations)

    def flow(self, q) -> AffineDynamics:
        return self.locations[q].flow

    def invariant(self, q) -> Polytope:
        return self.locations[q].invariant

    def guard(self, src, dst) -> Polytope | None:
        return self.transitions.get((src, dst))

    def successors(self, q) -> list[str]:
        return [d for (s, d) in self.transitions if s == q]

    def is_path(self, path: Sequence[str]) -> bool:
        if any(q not in self.locations for q in path):
            return False
        return all((a, b) in self.transitions for a, b in zip(path, path[1:]))

    def fresh_name(self) -> str:
        k = len(self.locations) + 1
        while f"q{k}" in self.locations:
            k += 1
        return f"q{k}"

    def location_with_flow(self, d: AffineDynamics, tol=FLOW_TOL) -> str | None:
        for q, loc in self.locations.items():
            if loc.flow.close_to(d, tol):
                return q
        return None

    def __repr__(self):
        return f"Adha(n={self.dimension}, |Q|={len(self.locations)}, |E|={len(self.transitions)})"


@dataclass(frozen=True)
class Execution:
    trajectory: PwaTrajectory
    path: tuple[str, ...]


def validate(H: Adha) -> list[str]:
    """Well-formedness problems; empty if none."""
    problems = []
    names = list(H.locations)
    for i, p in enumerate(names):
        for q in names[i + 1:]:
            if H.flow(p).close_to(H.flow(q)):
                problems.append(f"flow not injective: {p} and {q} share dynamics")
    for q, loc in H.locations.items():
        if loc.flow.dim != H.dimension or loc.invariant.dim != H.dimension:
            problems.append(f"dimension mismatch in location {q}")
        elif not loc.invariant.is_bounded():
            problems.append(f"unbounded invariant in location {q}")
    for (s, d), g in H.transitions.items():
        for end in (s, d):
            if end not in H.locations:
                problems.append(f"dangling transition {s}->{d}: unknown location {end}")
        if g.dim != H.dimension:
            problems.append(f"dimension mismatch in guard {s}->{d}")
    return problems


def check_execution(H: Adha, e: Execution, tol=1e-9, pitch=None) -> bool:
    """Def.-2 conditions: flows match, invariants hold on a time grid, guards at switches."""
    f = e.trajectory
    if len(e.path) != f.num_pieces:
        raise PathLengthMismatch(f"{len(e.path)} locations for {f.num_pieces} pieces")
    if not H.is_path(e.path):
        return False
    pitch = pitch if pitch is not None else 1e-2
    for i, q in enumerate(e.path):
        loc = H.locations[q]
        if not (np.array_equal(loc.flow.A, f.pieces[i].A) and np.array_equal(loc.flow.b, f.pieces[i].b)):
            return False
        t0, t1 = f.switch_times[i], f.switch_times[i + 1]
        k = max(2, int(np.ceil((t1 - t0) / pitch)) + 1)
        for t in np.linspace(t0, t1, k):
            if not loc.invariant.contains_point(evaluate(f, t), tol=tol):
                return False
        if i + 1 < len(e.path):
            g = H.guard(q, e.path[i + 1])
            if not g.contains_point(f.switch_states[i + 1], tol=tol):
                return False
    return True


def enlarges(old: Polytope | None, extra: Polytope, tol=1e-9) -> bool:
    """Whether ``chull(old | extra)`` is strictly bigger than ``old``."""
    if extra.is_empty():
        return False
    if old is None or old.is_empty():
        return True
    return not subset(extra, old, tol)


def _widen(old: Polytope | None, extra: Polytope) -> Polytope:
    if not enlarges(old, extra):
        return old
    if old is None or old.is_empty():
        return chull(extra.vertices)
    return chull(np.vstack([old.vertices, extra.vertices]))


def q_update(
    H: Adha, path: Sequence[str], q, R_I: Polytope, R_G: Polytope | None,
    dynamics: AffineDynamics | None = None,
) -> Adha:
    """Widen ``H`` so that the next piece can run in location ``q`` after ``path``.

    ``q`` is an existing location name, ``FRESH``, or a new name.  ``R_G`` is
    ignored when ``path`` is empty (no incoming transition).
    """
    path = tuple(path)
    if path and not H.is_path(path):
        raise InvalidPath(f"{path} is not a path of the automaton")
    locations = dict(H.locations)
    transitions = dict(H.transitions)
    last = path[-1] if path else None
    if q is not FRESH and q in H.locations:
        loc = H.locations[q]
        locations[q] = Location(loc.flow, _widen(loc.invariant, R_I))
        if last is not None:
            transitions[(last, q)] = _widen(H.guard(last, q), R_G)
        return Adha(H.dimension, locations, transitions)

    if dynamics is None:
        raise ValueError("a fresh location needs dynamics")
    dynamics = as_affine(dynamics)
    clash = H.location_with_flow(dynamics)
    if clash is not None:
        raise InjectivityViolation(f"dynamics already used by location {clash}")
    name = H.fresh_name() if q is FRESH else q
    locations[name] = Location(dynamics, chull(R_I.vertices))
    if last is not None:
        transitions[(last, name)] = chull(R_G.vertices)
    return Adha(H.dimension, locations, transitions)
