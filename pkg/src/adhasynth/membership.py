"""Synchronized reachability: does a location path epsilon-capture a PWA trajectory?

Over-approximations come from sampled reach-and-intersect steps, under-
approximations from point checks at polytope vertices (contracted inward until
every vertex passes).  Sets are chained piece by piece and simplified to
octagonal templates in between.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .dynamics import AffineDynamics, as_affine, flow, flow_map, invert
from .geometry import (
    TAU_FEAS,
    Polytope,
    clip_polygon,
    hull_2d,
    chull,
    contract,
    intersect,
    template_overapprox,
    template_underapprox,
)
from .trajectory import PwaTrajectory, tube_polytope

log = logging.getLogger(__name__)

SCAN_POINTS = 512
SYNC_TOL = 1e-9
REFINE_XTOL = 1e-10


class PathLengthMismatch(ValueError):
    pass


class Outcome(enum.Enum):
    CAPTURED = "Captured"
    NOT_CAPTURED = "NotCaptured"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class SReachApprox:
    under: Polytope
    over: Polytope

    @classmethod
    def empty(cls, dim):
        e = Polytope.empty(dim)
        return cls(e, e)


@dataclass
class MembershipVerdict:
    outcome: Outcome
    witness_path: tuple[str, ...] | None = None
    final_sets: SReachApprox | None = None
    chain: list[SReachApprox] = field(default_factory=list, repr=False)


def default_m(T: float) -> int:
    return max(10, math.ceil(20.0 * T))


def default_contraction(epsilon: float) -> float:
    return epsilon / 10.0 if epsilon > 0 else 1e-9


# -- point synchronization check ------------------------------------------------


class SyncChecker:
    """Decides, for start states ``y0``, whether the location execution stays
    within ``epsilon`` of the trajectory ``t -> e^{Bt} x0`` on ``[0, T]``.

    The grid of flow maps is shared by all queries against the same piece.
    ``landing`` optionally requires the end state to lie in a polytope.
    """

    def __init__(self, loc, traj, x0, epsilon, T, landing: Polytope | None = None, n_scan=SCAN_POINTS):
        self.loc = as_affine(loc)
        self.traj = as_affine(traj)
        self.x0 = np.asarray(x0, dtype=float)
        self.epsilon = float(epsilon)
        self.T = float(T)
        self.landing = landing
        n = self.loc.dim
        self.times = np.linspace(0.0, self.T, n_scan)
        dt = self.times[1] - self.times[0] if n_scan > 1 else 0.0
        self.M_loc = self.loc.homogeneous()
        self.M_traj = self.traj.homogeneous()
        E_loc = expm(self.M_loc * dt)
        E_traj = expm(self.M_traj * dt)
        stack = np.empty((n_scan, n + 1, n + 1))
        z = np.append(self.x0, 1.0)
        F = np.empty((n_scan, n))
        cur = np.eye(n + 1)
        for j in range(n_scan):
            stack[j] = cur
            F[j] = z[:n]
            cur = E_loc @ cur
            z = E_traj @ z
        # end points use exact flow maps rather than accumulated products
        Phi_T, phi_T = flow_map(self.loc, self.T)
        stack[-1, :n, :n], stack[-1, :n, n] = Phi_T, phi_T
        F[-1] = flow(self.traj, self.x0, self.T)
        self._stack = stack
        self._F = F
        self.cache: dict[tuple, bool] = {}

    def _h(self, y0, i, t):
        n = len(self.x0)
        sig = expm(self.M_loc * t) @ np.append(y0, 1.0)
        f = expm(self.M_traj * t) @ np.append(self.x0, 1.0)
        return f[i] - sig[i]

    def peak(self, y0) -> float:
        """Max over ``[0, T]`` and coordinates of ``|f(t) - sigma(t)|``."""
        y0 = np.asarray(y0, dtype=float)
        n = len(y0)
        Y = self._stack[:, :n, :n] @ y0 + self._stack[:, :n, n]
        H = np.abs(self._F - Y)
        best = float(H.max())
        for i in range(n):
            j = int(np.argmax(H[:, i]))
            lo = self.times[max(j - 1, 0)]
            hi = self.times[min(j + 1, len(self.times) - 1)]
            if hi <= lo:
                continue
            res = minimize_scalar(
                lambda t: -abs(self._h(y0, i, t)), bounds=(lo, hi), method="bounded",
                options={"xatol": REFINE_XTOL},
            )
            best = max(best, -float(res.fun))
        return best

    def __call__(self, y0) -> bool:
        y0 = np.asarray(y0, dtype=float)
        key = tuple(np.round(y0, 12))
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        ok = self._decide(y0)
        self.cache[key] = ok
        return ok

    def _decide(self, y0) -> bool:
        eps = self.epsilon + SYNC_TOL
        n = len(y0)
        if np.max(np.abs(self.x0 - y0)) > eps:
            return False
        end = self._stack[-1, :n, :n] @ y0 + self._stack[-1, :n, n]
        if np.max(np.abs(self._F[-1] - end)) > eps:
            return False
        if self.landing is not None and not self.landing.contains_point(end):
            return False
        Y = self._stack[:, :n, :n] @ y0 + self._stack[:, :n, n]
        H = np.abs(self._F - Y)
        if H.max() > eps:
            return False
        for i in range(n):
            j = int(np.argmax(H[:, i]))
            lo = self.times[max(j - 1, 0)]
            hi = self.times[min(j + 1, len(self.times) - 1)]
            if hi <= lo:
                continue
            res = minimize_scalar(
                lambda t: -abs(self._h(y0, i, t)), bounds=(lo, hi), method="bounded",
                options={"xatol": REFINE_XTOL},
            )
            if -res.fun > eps:
                return False
        return True


def sync_check_point(A, B, x0, y0, epsilon, T) -> bool:
    """Whether the execution of ``A`` from ``y0`` stays within ``epsilon`` of the
    trajectory of ``B`` from ``x0`` over ``[0, T]`` (infinity norm)."""
    if T <= 0:
        raise ValueError("T must be positive")
    return SyncChecker(A, B, x0, epsilon, T)(y0)


# -- set computations --------------------------------------------------------------


def _reach_box_step(V, Phi, phi, c, epsilon):
    """Vertices of ``chull(V mapped) & box(c, epsilon)``; empty array if disjoint."""
    W = V @ Phi.T + phi
    n = W.shape[1]
    if n == 1:
        lo = max(W.min(), c[0] - epsilon)
        hi = min(W.max(), c[0] + epsilon)
        if lo > hi + TAU_FEAS * max(1.0, abs(hi)):
            return W[:0]
        return np.array([[lo], [hi]]) if hi > lo else np.array([[0.5 * (lo + hi)]])
    if np.all(np.abs(W - c) <= epsilon):
        # flow maps are invertible, so mapped vertices stay vertices
        return W
    if n == 2:
        poly = hull_2d(W)
        for k in range(2):
            e = np.zeros(2)
            e[k] = 1.0
            poly = clip_polygon(poly, e, c[k] + epsilon)
            poly = clip_polygon(poly, -e, -(c[k] - epsilon))
            if not len(poly):
                return poly
        return hull_2d(poly)
    P = intersect(chull(W), Polytope.box(c - epsilon, c + epsilon))
    return P.vertices


def overapprox_piece(A, B, x0, P0: Polytope, epsilon, T, m) -> Polytope:
    """Sampled reach-and-intersect over-approximation at time ``T``.

    ``A`` drives the location, ``B`` the trajectory starting at ``x0``.  Returns
    the empty set as soon as an intermediate set becomes empty.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    loc, traj = as_affine(A), as_affine(B)
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    V = P0.vertices
    if not len(V):
        return Polytope.empty(n)
    step = T / m
    Phi, phi = flow_map(loc, step)
    for j in range(1, m + 1):
        c = flow(traj, x0, j * step)
        V = _reach_box_step(V, Phi, phi, c, epsilon)
        if not len(V):
            return Polytope.empty(n)
    return chull(V)


def refine_polytope(
    P: Polytope, A, B, x0, epsilon, T, contraction_delta, *, landing: Polytope | None = None,
    checker: SyncChecker | None = None,
) -> Polytope:
    """Hull of the passing vertices over successive contractions of ``P``."""
    if contraction_delta <= 0:
        raise ValueError("contraction delta must be positive")
    check = checker or SyncChecker(A, B, x0, epsilon, T, landing=landing)
    passed = []
    rounds = math.ceil(P.diameter() / contraction_delta) + 1 if len(P.vertices) else 0
    for _ in range(rounds):
        V = P.vertices
        if not len(V):
            break
        failed = False
        for v in V:
            if check(v):
                passed.append(v)
            else:
                failed = True
        if not failed:
            break
        P = contract(P, contraction_delta)
    if not passed:
        return Polytope.empty(len(np.asarray(x0)))
    return chull(np.array(passed))


def _under(over, loc, traj, x0, epsilon, T, contraction_delta, landing) -> Polytope:
    x1 = flow(traj, x0, T)
    check = SyncChecker(invert(loc), invert(traj), x1, epsilon, T, landing=landing)
    under = refine_polytope(over, None, None, x1, epsilon, T, contraction_delta, checker=check)
    if under.is_empty() and over.contains_point(x1, tol=1e-7) and check(x1):
        # the trajectory's own end state is the natural witness when the
        # synchronized set is too thin for any contracted vertex to hit it
        under = Polytope.point(x1)
    return under


def sreach_piece(
    P0: Polytope, dyn_loc, dyn_traj, x0, epsilon, T, m=None, contraction_delta=None, *,
    landing: Polytope | None = None,
) -> SReachApprox:
    """Under- and over-approximation of the synchronized reachable set of one piece."""
    m = default_m(T) if m is None else m
    cd = default_contraction(epsilon) if contraction_delta is None else contraction_delta
    over = overapprox_piece(dyn_loc, dyn_traj, x0, P0, epsilon, T, m)
    if over.is_empty():
        return SReachApprox.empty(P0.dim)
    under = _under(over, as_affine(dyn_loc), as_affine(dyn_traj), x0, epsilon, T, cd,
                   P0 if landing is None else landing)
    return SReachApprox(under, over)


def extend_chain(
    prev: SReachApprox, dyn_loc, f: PwaTrajectory, i: int, epsilon, *, m=None,
    contraction_delta=None, simplify=True,
) -> SReachApprox:
    """Push the piece-``i-1`` sets through piece ``i`` under ``dyn_loc``."""
    T = f.piece_duration(i)
    traj = f.pieces[i]
    x0 = f.switch_states[i]
    loc = as_affine(dyn_loc)
    m = default_m(T) if m is None else m
    cd = default_contraction(epsilon) if contraction_delta is None else contraction_delta
    n = f.dim
    if prev.over.is_empty():
        return SReachApprox.empty(n)
    over = overapprox_piece(loc, traj, x0, prev.over, epsilon, T, m)
    if over.is_empty():
        return SReachApprox.empty(n)
    if prev.under.is_empty():
        under = Polytope.empty(n)
    else:
        over_u = over if prev.under is prev.over else overapprox_piece(
            loc, traj, x0, prev.under, epsilon, T, m)
        if over_u.is_empty():
            under = Polytope.empty(n)
        else:
            under = _under(over_u, loc, traj, x0, epsilon, T, cd, prev.under)
    if simplify:
        over = template_overapprox(over)
        if not under.is_empty():
            under = template_underapprox(under)
    return SReachApprox(under, over)


def initial_sets(f: PwaTrajectory, epsilon, start: Polytope | None = None) -> SReachApprox:
    P = tube_polytope(f, epsilon, 0.0)
    if start is not None:
        P = intersect(start, P)
        P = chull(P.vertices) if not P.is_empty() else Polytope.empty(f.dim)
    return SReachApprox(P, P)


def verdict_of(chain: Sequence[SReachApprox]) -> Outcome:
    if any(s.over.is_empty() for s in chain):
        return Outcome.NOT_CAPTURED
    if not chain[-1].under.is_empty():
        return Outcome.CAPTURED
    return Outcome.UNKNOWN


def sreach_path(
    flows: Sequence[AffineDynamics], f: PwaTrajectory, epsilon, *, start: Polytope | None = None,
    m_per_piece: int | None = None, contraction_delta=None, path: Sequence[str] | None = None,
    simplify=True,
) -> tuple[list[SReachApprox], MembershipVerdict]:
    """Chain single-piece approximations along ``flows`` (one per piece of ``f``).

    The returned chain starts with the initial set at time 0.
    """
    if len(flows) != f.num_pieces:
        raise PathLengthMismatch(f"{len(flows)} locations for {f.num_pieces} pieces")
    chain = [initial_sets(f, epsilon, start)]
    for i, loc in enumerate(flows):
        nxt = extend_chain(chain[-1], loc, f, i, epsilon, m=m_per_piece,
                           contraction_delta=contraction_delta, simplify=simplify)
        chain.append(nxt)
        if nxt.over.is_empty():
            break
    outcome = verdict_of(chain)
    verdict = MembershipVerdict(
        outcome,
        tuple(path) if (path is not None and outcome is Outcome.CAPTURED) else None,
        chain[-1],
        chain,
    )
    return chain, verdict


def witness_execution(flows: Sequence[AffineDynamics], f: PwaTrajectory, final_under: Polytope) -> PwaTrajectory:
    """Execution ending at the center of ``final_under``, traced backward."""
    z = final_under.chebyshev_center()
    for i in reversed(range(f.num_pieces)):
        z = flow(invert(as_affine(flows[i])), z, f.piece_duration(i))
    return PwaTrajectory(f.switch_times, tuple(as_affine(d) for d in flows), z)
