"""JSON/CSV formats for polytopes, trajectories, automata, series and run manifests.

Floats go through ``repr`` (shortest round-tripping decimal), so parse(emit(x))
reproduces every value bit for bit.
"""
from __future__ import annotations

import csv
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .automaton import Adha, Location
from .dynamics import AffineDynamics
from .geometry import Polytope
from .trajectory import PwaTrajectory, TimeSeries


class FormatError(ValueError):
    pass


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


# -- polytopes -----------------------------------------------------------------

def polytope_to_dict(P: Polytope) -> dict:
    cons = [{"normal": _floats(a), "offset": float(c), "relation": "le"} for a, c in zip(P.A, P.b)]
    cons += [{"normal": _floats(a), "offset": float(c), "relation": "eq"} for a, c in zip(P.Aeq, P.beq)]
    return {"dimension": P.dim, "constraints": cons}


def polytope_from_dict(d: dict, dim: int | None = None) -> Polytope:
    try:
        cons = d["constraints"]
        dim = d.get("dimension", dim)
        if dim is None:
            dim = len(cons[0]["normal"])
        A = [c["normal"] for c in cons if c["relation"] == "le"]
        b = [c["offset"] for c in cons if c["relation"] == "le"]
        Aeq = [c["normal"] for c in cons if c["relation"] == "eq"]
        beq = [c["offset"] for c in cons if c["relation"] == "eq"]
        if any(c["relation"] not in ("le", "eq") for c in cons):
            raise FormatError("relation must be 'le' or 'eq'")
    except (KeyError, IndexError, TypeError) as e:
        raise FormatError(f"malformed polytope: {e}") from e
    return Polytope.from_arrays(
        np.array(A, float).reshape(-1, dim), np.array(b, float),
        np.array(Aeq, float).reshape(-1, dim), np.array(beq, float), dim=dim,
    )


# -- trajectories ----------------------------------------------------------------

def dynamics_to_dict(d: AffineDynamics) -> dict:
    return {"A": _floats(d.A), "b": _floats(d.b)}


def trajectory_to_dict(f: PwaTrajectory) -> dict:
    return {
        "switch_times": list(f.switch_times),
        "pieces": [dynamics_to_dict(p) for p in f.pieces],
        "x0": _floats(f.x0),
    }


def trajectory_from_dict(d: dict) -> PwaTrajectory:
    try:
        pieces = tuple(AffineDynamics(p["A"], p["b"]) for p in d["pieces"])
        return PwaTrajectory(tuple(d["switch_times"]), pieces, d["x0"])
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed trajectory: {e}") from e


# -- automata --------------------------------------------------------------------

def adha_to_dict(H: Adha) -> dict:
    return {
        "dimension": H.dimension,
        "locations": {
            q: {**dynamics_to_dict(loc.flow), "invariant": polytope_to_dict(loc.invariant)}
            for q, loc in H.locations.items()
        },
        "transitions": [
            {"from": s, "to": t, "guard": polytope_to_dict(g)} for (s, t), g in H.transitions.items()
        ],
    }


def adha_from_dict(d: dict) -> Adha:
    try:
        n = int(d["dimension"])
        locs = {
            q: Location(AffineDynamics(v["A"], v["b"]), polytope_from_dict(v["invariant"], n))
            for q, v in d["locations"].items()
        }
        trans = {(e["from"], e["to"]): polytope_from_dict(e["guard"], n) for e in d["transitions"]}
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed automaton: {e}") from e
    return Adha(n, locs, trans)


def dump_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: {e}") from e


def save_trajectory(f, path):
    dump_json(trajectory_to_dict(f), path)


def load_trajectory(path) -> PwaTrajectory:
    return trajectory_from_dict(load_json(path))


def save_adha(H, path):
    dump_json(adha_to_dict(H), path)


def load_adha(path) -> Adha:
    return adha_from_dict(load_json(path))


# -- time series -------------------------------------------------------------------

def save_series(s: TimeSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(s.dim)])
        for t, x in zip(s.times, s.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x])


def load_series(path) -> TimeSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "t":
        raise FormatError(f"{path}: header must start with 't'")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from e
    if data.ndim != 2 or data.shape[1] != len(rows[0]):
        raise FormatError(f"{path}: ragged rows")
    try:
        return TimeSeries(data[:, 0], data[:, 1:])
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from e


def write_sets_csv(chain, path) -> None:
    """Per-piece over/under polytopes as rows of constraints, for plotting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        n = None
        for i, s in enumerate(chain):
            for kind, P in (("over", s.over), ("under", s.under)):
                if n is None:
                    n = P.dim
                    w.writerow(["piece", "set", "relation"] + [f"a{j + 1}" for j in range(n)] + ["offset"])
                if P.is_empty():
                    w.writerow([i, kind, "empty"] + [""] * n + [""])
                    continue
                for a, c in zip(P.A, P.b):
                    w.writerow([i, kind, "le"] + [repr(float(v)) for v in a] + [repr(float(c))])
                for a, c in zip(P.Aeq, P.beq):
                    w.writerow([i, kind, "eq"] + [repr(float(v)) for v in a] + [repr(float(c))])


# -- manifests -----------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    argv: list[str]
    inputs: list[str]
    parameters: dict
    version: str = __version__
    python: str = field(default_factory=lambda: sys.version.split()[0])
    numpy: str = np.__version__
    platform: str = field(default_factory=platform.platform)
    started: float = field(default_factory=time.time)
    wall_time: float = 0.0
    result: dict = field(default_factory=dict)

    def save(self, path) -> None:
        dump_json(asdict(self), path)

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**load_json(path))
