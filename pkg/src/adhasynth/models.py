"""Reference automata used for benchmarks: a heater and a four-gear gearbox."""
from __future__ import annotations

import numpy as np

from .automaton import Adha, Location
from .dynamics import AffineDynamics
from .geometry import Polytope

HEATER_RATE = 0.1


def heater(a: float = HEATER_RATE) -> Adha:
    """Thermostat: heat towards 30 degrees when ON, cool towards 0 when OFF.

    Both invariants are closed to [18, 22] so that initial states can be sampled.
    """
    box = lambda lo, hi: Polytope.box([lo], [hi])
    return Adha(
        1,
        {
            "ON": Location(AffineDynamics([[-a]], [30 * a]), box(18.0, 22.0)),
            "OFF": Location(AffineDynamics([[-a]], [0.0]), box(18.0, 22.0)),
        },
        {("ON", "OFF"): box(21.0, 22.0), ("OFF", "ON"): box(18.0, 19.0)},
    )


# gearbox state is (v, w): v is the speed that each gear brings down to its
# shift point, w accumulates the work done
GEARBOX_A = {
    "G1": [[-0.05, 0.0], [0.035, 0.0]],
    "G2": [[-0.06, 0.0], [0.06, 0.0]],
    "G3": [[-0.2, 0.0], [0.3, 0.0]],
    "G4": [[0.0, -0.05], [0.0, 0.05]],
}
GEARBOX_INV = {
    "G1": ([20.0, -1.0], [28.0, 10.0]),
    "G2": ([14.0, 0.0], [23.0, 20.0]),
    "G3": ([5.0, 0.0], [19.0, 35.0]),
    "G4": ([-2.0, 10.0], [13.0, 45.0]),
}
GEARBOX_GUARDS = {
    ("G1", "G2"): ([20.0, -1.0], [20.2, 10.0]),
    ("G2", "G3"): ([14.0, 0.0], [14.2, 20.0]),
    ("G3", "G4"): ([5.0, 0.0], [5.3, 35.0]),
}
GEARBOX_START = ("G1", Polytope.box([26.0, 0.0], [28.0, 0.0]))


def gearbox() -> Adha:
    locs = {q: Location(AffineDynamics(A, np.zeros(2)), Polytope.box(*GEARBOX_INV[q]))
            for q, A in GEARBOX_A.items()}
    guards = {e: Polytope.box(*lohi) for e, lohi in GEARBOX_GUARDS.items()}
    return Adha(2, locs, guards)


MODELS = {"heater": heater, "gearbox": gearbox}
