"""Online automaton synthesis by best-first search over location paths.

Each trajectory is processed against the current automaton.  Candidate paths
form an exploration tree whose nodes carry the automaton edits needed to follow
the path; nodes are explored in lexicographic order of
``(new locations, new transitions, widened constraints)`` and pruned by the
membership check.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .automaton import Adha, enlarges, q_update
from .dynamics import AffineDynamics, flow_map
from .geometry import Polytope, chull
from .membership import (
    Outcome,
    SReachApprox,
    default_m,
    extend_chain,
    initial_sets,
    sreach_path,
)
from .trajectory import PwaTrajectory, tube_polytope

log = logging.getLogger(__name__)


class NoActivatedNode(RuntimeError):
    pass


class ModTuple(NamedTuple):
    n_l: int = 0
    n_t: int = 0
    n_c: int = 0

    def plus(self, dl=0, dt=0, dc=0) -> "ModTuple":
        return ModTuple(self.n_l + dl, self.n_t + dt, self.n_c + dc)


class Status(enum.IntEnum):
    UNEXPLORED = 0
    ACTIVATED = 1
    EXPLORED = 2
    DEACTIVATED = 3


_ALLOWED = {
    Status.UNEXPLORED: {Status.ACTIVATED},
    Status.ACTIVATED: {Status.EXPLORED, Status.DEACTIVATED},
}


@dataclass(eq=False)
class ExplorationNode:
    path: tuple[str, ...]
    mod: ModTuple
    layer: int
    insertion_seq: int
    parent: "ExplorationNode | None" = None
    location: str | None = None
    flow: AffineDynamics | None = None
    status: Status = Status.UNEXPLORED
    cached_sets: SReachApprox | None = None
    # pending q-update, applied when the automaton is first needed
    _base: Adha | None = field(default=None, repr=False)
    _edit: tuple | None = field(default=None, repr=False)

    @cached_property
    def automaton(self) -> Adha:
        if self._edit is None:
            return self._base
        parent_path, q, R_I, R_G, dyn = self._edit
        H = q_update(self._base, parent_path, q, R_I, R_G, dyn)
        self._base = self._edit = None
        return H

    def set_status(self, new: Status):
        if new not in _ALLOWED.get(self.status, set()):
            raise RuntimeError(f"illegal status change {self.status.name} -> {new.name}")
        self.status = new

    def chain(self) -> list[SReachApprox]:
        out, node = [], self
        while node is not None:
            out.append(node.cached_sets)
            node = node.parent
        return out[::-1]


@dataclass
class SearchSettings:
    m_per_piece: int | None = None
    contraction_delta: float | None = None
    max_explored: int | None = None


class ExplorationTree:
    def __init__(self, H0: Adha, f: PwaTrajectory, epsilon: float, settings: SearchSettings | None = None):
        self.f = f
        self.epsilon = epsilon
        self.settings = settings or SearchSettings()
        self._seq = itertools.count()
        self.root = ExplorationNode((), ModTuple(), 0, next(self._seq), _base=H0)
        self.root.status = Status.ACTIVATED
        self._heap: list[tuple[ModTuple, int, ExplorationNode]] = []
        self.explored = 0
        self.created = 1

    @property
    def depth(self) -> int:
        return self.f.num_pieces

    def activate(self, node: ExplorationNode):
        node.set_status(Status.ACTIVATED)
        heapq.heappush(self._heap, (node.mod, node.insertion_seq, node))

    def activated(self) -> list[ExplorationNode]:
        return [n for _, _, n in self._heap]


def _invariant_hull(P: Polytope, dyn: AffineDynamics, T: float, m: int) -> Polytope:
    """Hull of the images of ``P`` at the ``m + 1`` sample times of a piece."""
    V = P.vertices
    Phi, phi = flow_map(dyn, T / m)
    pts = [V]
    for _ in range(m):
        V = V @ Phi.T + phi
        pts.append(V)
    return chull(np.vstack(pts))


def expand(tree: ExplorationTree, node: ExplorationNode) -> list[ExplorationNode]:
    """Children of an explored node: one per existing location plus a fresh one."""
    if node.layer >= tree.depth:
        return []
    f, eps = tree.f, tree.epsilon
    i = node.layer
    H = node.automaton
    T = f.piece_duration(i)
    m = tree.settings.m_per_piece or default_m(T)
    P_prev = node.cached_sets.over
    last = node.path[-1] if node.path else None
    R_G = tube_polytope(f, eps, f.switch_times[i]) if last is not None else None
    children = []
    for q in H.names:
        R_I = _invariant_hull(P_prev, H.flow(q), T, m)
        if last is None:
            a, b = 0, int(enlarges(H.invariant(q), R_I))
        elif (last, q) in H.transitions:
            a = 0
            b = int(enlarges(H.invariant(q), R_I)) + int(enlarges(H.guard(last, q), R_G))
        else:
            a, b = 1, int(enlarges(H.invariant(q), R_I))
        children.append(ExplorationNode(
            node.path + (q,), node.mod.plus(0, a, b), i + 1, next(tree._seq), node, q, H.flow(q),
            _base=H, _edit=(node.path, q, R_I, R_G, None),
        ))
    piece = f.pieces[i]
    clash = H.location_with_flow(piece)
    if clash is None:
        q = H.fresh_name()
        R_I = _invariant_hull(P_prev, piece, T, m)
        children.append(ExplorationNode(
            node.path + (q,), node.mod.plus(1, 1 if last is not None else 0, 0), i + 1,
            next(tree._seq), node, q, piece, _base=H, _edit=(node.path, q, R_I, R_G, piece),
        ))
    else:
        log.info("fresh child for piece %d omitted: dynamics equal those of %s", i, clash)
    tree.created += len(children)
    return children


def tree_update(tree: ExplorationTree, node: ExplorationNode) -> Status:
    """Explore ``node``: membership of the prefix decides its status."""
    if node.parent is None:
        node.cached_sets = initial_sets(tree.f, tree.epsilon)
        node.status = Status.EXPLORED
    else:
        sets = extend_chain(
            node.parent.cached_sets, node.flow, tree.f, node.layer - 1, tree.epsilon,
            m=tree.settings.m_per_piece, contraction_delta=tree.settings.contraction_delta,
        )
        node.cached_sets = sets
        captured = not sets.over.is_empty() and not sets.under.is_empty()
        node.set_status(Status.EXPLORED if captured else Status.DEACTIVATED)
    tree.explored += 1
    if node.status is Status.EXPLORED:
        for child in expand(tree, node):
            tree.activate(child)
    return node.status


def decide(tree: ExplorationTree) -> ExplorationNode:
    """Activated node with the smallest mod; ties go to the earliest inserted."""
    if not tree._heap:
        raise NoActivatedNode("exploration tree has no activated node")
    _, _, node = heapq.heappop(tree._heap)
    return node


@dataclass
class UpdateResult:
    automaton: Adha
    path: tuple[str, ...]
    mod: ModTuple
    explored: int
    created: int
    seconds: float
    chain: list[SReachApprox] = field(repr=False, default_factory=list)


def model_update(
    H: Adha, f: PwaTrajectory, epsilon: float, settings: SearchSettings | None = None,
) -> UpdateResult:
    """Smallest edit of ``H`` (in mod order) that epsilon-captures ``f``."""
    start = time.perf_counter()
    if H.dimension != f.dim:
        raise ValueError(f"automaton dimension {H.dimension} != trajectory dimension {f.dim}")
    tree = ExplorationTree(H, f, epsilon, settings)
    node = tree.root
    tree_update(tree, node)
    limit = tree.settings.max_explored
    while not (node.layer == tree.depth and node.status is Status.EXPLORED):
        if limit is not None and tree.explored >= limit:
            raise RuntimeError(f"exploration budget of {limit} nodes exhausted")
        node = decide(tree)
        tree_update(tree, node)
    return UpdateResult(
        node.automaton, node.path, node.mod, tree.explored, tree.created,
        time.perf_counter() - start, node.chain(),
    )


@dataclass
class SynthesisStats:
    index: int
    explored: int
    seconds: float
    n_locations: int
    n_transitions: int
    path: tuple[str, ...]
    mod: ModTuple


def synthesize(
    F: Sequence[PwaTrajectory], epsilon: float, H0: Adha | None = None,
    settings: SearchSettings | None = None,
    on_update: Callable[[int, UpdateResult], None] | None = None,
) -> tuple[Adha, list[SynthesisStats]]:
    """Fold ``model_update`` over ``F``; every prefix yields a valid model."""
    if not F and H0 is None:
        raise ValueError("nothing to synthesize from")
    H = H0 if H0 is not None else Adha.empty(F[0].dim)
    stats = []
    for k, f in enumerate(F):
        res = model_update(H, f, epsilon, settings)
        H = res.automaton
        stats.append(SynthesisStats(k, res.explored, res.seconds, len(H.locations),
                                    len(H.transitions), res.path, res.mod))
        log.info("trajectory %d: path %s mod %s explored %d (%.2fs) |Q|=%d |E|=%d",
                 k, "".join(res.path), tuple(res.mod), res.explored, res.seconds,
                 len(H.locations), len(H.transitions))
        if on_update is not None:
            on_update(k, res)
    return H, stats


def verify_capture(H: Adha, f: PwaTrajectory, path: Sequence[str], epsilon: float,
                   settings: SearchSettings | None = None) -> Outcome:
    """Re-run membership of ``f`` along ``path`` in ``H``."""
    settings = settings or SearchSettings()
    _, verdict = sreach_path(
        [H.flow(q) for q in path], f, epsilon, m_per_piece=settings.m_per_piece,
        contraction_delta=settings.contraction_delta, path=path,
    )
    return verdict.outcome


def search_membership(H: Adha, f: PwaTrajectory, epsilon: float,
                      settings: SearchSettings | None = None):
    """Depth-first search for a path of ``H`` along which ``f`` is captured.

    Returns ``(outcome, path, chain)``; Unknown if no path is captured but some
    path was not refuted either.
    """
    settings = settings or SearchSettings()
    unknown = None
    budget = [settings.max_explored or np.inf]

    def visit(path, chain):
        nonlocal unknown
        i = len(path)
        if i == f.num_pieces:
            return path, chain
        nxt = H.names if not path else H.successors(path[-1])
        for q in nxt:
            if budget[0] <= 0:
                return None
            budget[0] -= 1
            sets = extend_chain(chain[-1], H.flow(q), f, i, epsilon, m=settings.m_per_piece,
                                contraction_delta=settings.contraction_delta)
            if sets.over.is_empty():
                continue
            if sets.under.is_empty():
                if unknown is None:
                    unknown = (path + (q,), chain + [sets])
                continue
            hit = visit(path + (q,), chain + [sets])
            if hit is not None:
                return hit
        return None

    root = [initial_sets(f, epsilon)]
    hit = visit((), root)
    if hit is not None:
        return Outcome.CAPTURED, hit[0], hit[1]
    if unknown is not None:
        return Outcome.UNKNOWN, unknown[0], unknown[1]
    return Outcome.NOT_CAPTURED, None, root
