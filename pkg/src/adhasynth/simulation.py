"""Random executions of an automaton with per-visit perturbed dynamics."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .automaton import Adha, Execution
from .dynamics import AffineDynamics, flow_map
from .geometry import Polytope
from .trajectory import PwaTrajectory

REJECTION_ATTEMPTS = 10_000


class EmptyInvariant(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    path_length: int = 6
    max_dwell: float = 7.0
    time_step: float = 0.05
    max_perturbation: float = 1e-3
    seed: int = 0
    # optional fixed start: location name and a polytope of initial states
    initial_location: str | None = None
    initial_set: Polytope | None = None

    def __post_init__(self):
        if self.path_length < 1 or self.max_dwell <= 0 or self.time_step <= 0:
            raise ValueError("path_length, max_dwell and time_step must be positive")
        if self.max_perturbation < 0:
            raise ValueError("max_perturbation must be nonnegative")


@dataclass(frozen=True)
class SampledExecution(Execution):
    """Execution plus the nominal (unperturbed) flows and the grid it was built on."""

    nominal: tuple[AffineDynamics, ...] = ()
    steps: tuple[int, ...] = ()


def perturb(d: AffineDynamics, rng: np.random.Generator, magnitude: float) -> AffineDynamics:
    """Uniform additive noise in [-magnitude, magnitude] on non-zero entries of (A, b)."""
    if magnitude == 0:
        return d
    M = np.hstack([d.A, d.b[:, None]])
    noise = rng.uniform(-magnitude, magnitude, M.shape)
    M = np.where(M != 0, M + noise, M)
    return AffineDynamics(M[:, :-1], M[:, -1])


def sample_point(P: Polytope, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample over the bounding box, rejected into ``P``."""
    if P.is_empty():
        raise EmptyInvariant("cannot sample from an empty set")
    lo, hi = P.interval_bounds()
    for _ in range(REJECTION_ATTEMPTS):
        x = rng.uniform(lo, hi)
        if P.contains_point(x):
            return x
    raise EmptyInvariant(f"no sample landed in the set after {REJECTION_ATTEMPTS} attempts")


def sample_execution(H: Adha, cfg: SimConfig) -> SampledExecution:
    rng = np.random.default_rng(cfg.seed)
    if not H.locations:
        raise EmptyInvariant("automaton has no locations")
    names = sorted(H.locations)
    dt = cfg.time_step
    for _ in range(REJECTION_ATTEMPTS):
        if cfg.initial_location is not None:
            q = cfg.initial_location
        else:
            q = names[rng.integers(len(names))]
        x = sample_point(cfg.initial_set if cfg.initial_set is not None else H.invariant(q), rng)
        # the first step under nominal dynamics must stay inside the invariant
        Phi, phi = flow_map(H.flow(q), dt)
        if H.invariant(q).contains_point(Phi @ x + phi):
            break
    else:
        raise EmptyInvariant("no initial state admits a time step")
    x0 = x.copy()
    max_steps = int(np.floor(cfg.max_dwell / dt + 1e-9))
    path, pieces, nominal, steps = [], [], [], []
    while len(path) < cfg.path_length:
        d = perturb(H.flow(q), rng, cfg.max_perturbation)
        Phi, phi = flow_map(d, dt)
        inv = H.invariant(q)
        outgoing = sorted(dst for (src, dst) in H.transitions if src == q)
        options, states = [], [x]
        for j in range(1, max_steps + 1):
            y = Phi @ states[-1] + phi
            if not inv.contains_point(y):
                break
            states.append(y)
            for dst in outgoing:
                if H.guard(q, dst).contains_point(y) and H.invariant(dst).contains_point(y):
                    options.append((dst, j))
        if options:
            dst, j = options[rng.integers(len(options))]
        else:
            dst, j = None, len(states) - 1
        if j > 0:
            path.append(q)
            pieces.append(d)
            nominal.append(H.flow(q))
            steps.append(j)
        if dst is None:
            break
        q, x = dst, states[j]
    if not pieces:
        raise EmptyInvariant(f"no time can elapse in location {q} from {x0}")
    times = np.concatenate([[0.0], np.cumsum(steps) * dt])
    f = PwaTrajectory(tuple(times), tuple(pieces), x0)
    return SampledExecution(f, tuple(path), tuple(nominal), tuple(steps))


def to_pwa(e: Execution, record_perturbed: bool = True) -> PwaTrajectory:
    """Trajectory of ``e``; with ``record_perturbed=False`` the nominal flows are used."""
    f = e.trajectory
    if record_perturbed or not getattr(e, "nominal", ()):
        return f
    return PwaTrajectory(f.switch_times, e.nominal, f.x0)


def sample_corpus(H: Adha, count: int, cfg: SimConfig, unperturbed_first: bool = True) -> list[SampledExecution]:
    """``count`` executions with independent child seeds of ``cfg.seed``."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(count)
    out = []
    for k, ss in enumerate(seeds):
        c = replace(cfg, seed=int(ss.generate_state(1)[0]))
        if k == 0 and unperturbed_first:
            c = replace(c, max_perturbation=0.0)
        out.append(sample_execution(H, c))
    return out
