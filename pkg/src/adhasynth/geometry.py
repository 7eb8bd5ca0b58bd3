"""Convex polytopes in constraint form with on-demand vertices.

Polytopes are stored as ``A x <= b`` plus ``Aeq x = beq`` with every row
normalised to unit Euclidean length.  Vertices are enumerated from tight
constraint combinations, which is exact up to the feasibility tolerance and
cheap for the small dimensions used by the synthesis algorithms (n <= 4).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

# constraints violated by at most TAU_FEAS * max(1, |offset|) count as satisfied
TAU_FEAS = 1e-9


class GeometryError(ValueError):
    pass


class EmptyPolytope(GeometryError):
    pass


class UnboundedPolytope(GeometryError):
    pass


class DimensionMismatch(GeometryError):
    pass


class EmptyInput(GeometryError):
    pass


@dataclass(frozen=True)
class LinearConstraint:
    """``normal . x <= offset`` (relation ``"le"``) or ``normal . x == offset``."""

    normal: tuple[float, ...]
    offset: float
    relation: str = "le"

    def __post_init__(self):
        if self.relation not in ("le", "eq"):
            raise ValueError(f"unknown relation {self.relation!r}")
        if not any(self.normal):
            raise ValueError("constraint normal must be nonzero")


def _tol(b):
    return TAU_FEAS * np.maximum(1.0, np.abs(b))


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex polytope ``{x : A x <= b, Aeq x = beq}``.

    ``bounded`` is a construction hint: ``True`` when the set is known to be
    bounded (hulls, boxes, and anything intersected with them), ``None`` when
    unknown.
    """

    A: np.ndarray
    b: np.ndarray
    Aeq: np.ndarray
    beq: np.ndarray
    bounded: bool | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("A", "b", "Aeq", "beq"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    # -- construction -------------------------------------------------

    @classmethod
    def from_arrays(cls, A, b, Aeq=None, beq=None, dim=None, bounded=None):
        b = np.asarray(b, dtype=float).reshape(-1)
        A = np.asarray(A, dtype=float)
        if dim is None:
            if A.size:
                dim = A.shape[-1]
            elif Aeq is not None and np.asarray(Aeq).size:
                dim = np.asarray(Aeq).shape[-1]
            else:
                raise ValueError("cannot infer dimension")
        A = A.reshape(len(b), dim)
        if Aeq is None:
            Aeq, beq = np.zeros((0, dim)), np.zeros(0)
        beq = np.asarray(beq, dtype=float).reshape(-1)
        Aeq = np.asarray(Aeq, dtype=float).reshape(len(beq), dim)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(Aeq))):
            raise ValueError("non-finite constraint normal")

        infeasible = False
        norms = np.linalg.norm(A, axis=1)
        zero = norms <= 1e-14
        if np.any(b[zero] < -_tol(b[zero])):
            infeasible = True
        A, b, norms = A[~zero], b[~zero], norms[~zero]
        # rows already at unit length are kept bit-exact (serialization round trips)
        norms = np.where(np.abs(norms - 1.0) <= 1e-12, 1.0, norms)
        A = A / norms[:, None]
        b = b / norms

        enorms = np.linalg.norm(Aeq, axis=1)
        ezero = enorms <= 1e-14
        if np.any(np.abs(beq[ezero]) > _tol(beq[ezero])):
            infeasible = True
        Aeq, beq, enorms = Aeq[~ezero], beq[~ezero], enorms[~ezero]
        enorms = np.where(np.abs(enorms - 1.0) <= 1e-12, 1.0, enorms)
        Aeq = Aeq / enorms[:, None]
        beq = beq / enorms
        if infeasible:
            return cls.empty(dim)
        return cls(A.copy(), b.copy(), Aeq.copy(), beq.copy(), bounded)

    @classmethod
    def from_constraints(cls, constraints: Sequence[LinearConstraint], dim=None):
        if not constraints:
            if dim is None:
                raise ValueError("cannot infer dimension of an empty constraint list")
            return cls.universe(dim)
        dim = len(constraints[0].normal)
        le = [c for c in constraints if c.relation == "le"]
        eq = [c for c in constraints if c.relation == "eq"]
        return cls.from_arrays(
            [c.normal for c in le] or np.zeros((0, dim)),
            [c.offset for c in le],
            [c.normal for c in eq] or np.zeros((0, dim)),
            [c.offset for c in eq],
            dim=dim,
        )

    @classmethod
    def universe(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0), np.zeros((0, dim)), np.zeros(0), False)

    @classmethod
    def empty(cls, dim):
        e = np.zeros((2, dim))
        e[0, 0], e[1, 0] = 1.0, -1.0
        p = cls(e, np.array([-1.0, -1.0]), np.zeros((0, dim)), np.zeros(0), True)
        object.__setattr__(p, "_known_empty", True)
        return p

    @classmethod
    def box(cls, lo, hi):
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        n = len(lo)
        eye = np.eye(n)
        P = cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]), np.zeros((0, n)), np.zeros(0), True)
        if np.all(hi >= lo):
            corners = np.array(list(itertools.product(*zip(lo, hi))))
            P.__dict__["vertices"] = _dedupe(corners)
        return P

    @classmethod
    def point(cls, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        return cls.box(x, x)

    # -- basic queries --------------------------------------------------

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def constraints(self) -> list[LinearConstraint]:
        out = [LinearConstraint(tuple(map(float, a)), float(c), "le") for a, c in zip(self.A, self.b)]
        out += [LinearConstraint(tuple(map(float, a)), float(c), "eq") for a, c in zip(self.Aeq, self.beq)]
        return out

    def contains_point(self, x, tol=TAU_FEAS) -> bool:
        x = np.asarray(x, dtype=float)
        scale = tol / TAU_FEAS
        if np.any(self.A @ x - self.b > scale * _tol(self.b)):
            return False
        return not np.any(np.abs(self.Aeq @ x - self.beq) > scale * _tol(self.beq))

    def contains_points(self, X, tol=TAU_FEAS) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        scale = tol / TAU_FEAS
        ok = np.all(X @ self.A.T - self.b <= scale * _tol(self.b), axis=1)
        if len(self.beq):
            ok &= np.all(np.abs(X @ self.Aeq.T - self.beq) <= scale * _tol(self.beq), axis=1)
        return ok

    def is_bounded(self) -> bool:
        if self.bounded is not None:
            return self.bounded
        n = self.dim
        if len(self.b) + 2 * len(self.beq) < n + 1:
            return False
        # bounded iff the recession cone {d : A d <= 0, Aeq d = 0} is {0}
        bounds = [(-1.0, 1.0)] * n
        for i, s in itertools.product(range(n), (1.0, -1.0)):
            c = np.zeros(n)
            c[i] = -s
            res = linprog(
                c,
                A_ub=self.A if len(self.b) else None,
                b_ub=np.zeros(len(self.b)) if len(self.b) else None,
                A_eq=self.Aeq if len(self.beq) else None,
                b_eq=np.zeros(len(self.beq)) if len(self.beq) else None,
                bounds=bounds,
                method="highs",
            )
            if res.status == 0 and -res.fun > 1e-9:
                return False
        return True

    @cached_property
    def vertices(self) -> np.ndarray:
        """Vertices sorted lexicographically, shape ``(k, n)``; ``k = 0`` if empty."""
        if getattr(self, "_known_empty", False):
            return np.zeros((0, self.dim))
        if not self.is_bounded():
            raise UnboundedPolytope("vertex representation requested for an unbounded set")
        V = _enumerate_vertices(self.A, self.b, self.Aeq, self.beq)
        return V

    def is_empty(self) -> bool:
        if getattr(self, "_known_empty", False):
            return True
        if "vertices" in self.__dict__ or self.bounded:
            return len(self.vertices) == 0
        return not _lp_feasible(self.A, self.b, self.Aeq, self.beq)

    def support(self, d) -> float:
        """Support function ``max_{x in P} d . x``."""
        return float(np.max(self.vertices @ np.asarray(d, dtype=float))) if len(self.vertices) else -math.inf

    def support_vector(self, d) -> np.ndarray:
        V = self.vertices
        if not len(V):
            raise EmptyPolytope("support vector of an empty set")
        return V[int(np.argmax(V @ np.asarray(d, dtype=float)))]

    def chebyshev_center(self) -> np.ndarray:
        """Center of the largest inscribed ball (restricted to the equality subspace)."""
        n = self.dim
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([self.A, np.ones((len(self.b), 1))]) if len(self.b) else None
        A_eq = np.hstack([self.Aeq, np.zeros((len(self.beq), 1))]) if len(self.beq) else None
        V = self.vertices if self.bounded is not False else None
        bounds = [(None, None)] * n + [(0, None)]
        if V is not None and len(V):
            lo, hi = V.min(axis=0), V.max(axis=0)
            bounds = [(l - 1.0, h + 1.0) for l, h in zip(lo, hi)] + [(0, None)]
        res = linprog(
            c, A_ub=A_ub, b_ub=self.b if len(self.b) else None,
            A_eq=A_eq, b_eq=self.beq if len(self.beq) else None, bounds=bounds, method="highs",
        )
        if res.status != 0:
            if V is not None and len(V):
                return V.mean(axis=0)
            raise EmptyPolytope("no center for an empty set")
        return res.x[:n]

    def interval_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        V = self.vertices
        if not len(V):
            raise EmptyPolytope("bounds of an empty set")
        return V.min(axis=0), V.max(axis=0)

    def diameter(self) -> float:
        V = self.vertices
        if len(V) < 2:
            return 0.0
        diff = V[:, None, :] - V[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())

    def __repr__(self):
        return f"Polytope(dim={self.dim}, n_le={len(self.b)}, n_eq={len(self.beq)})"


@dataclass(frozen=True)
class Box:
    """Infinity-norm ball ``{y : ||center - y||_inf <= radius}``."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def to_polytope(self) -> Polytope:
        c = np.asarray(self.center, dtype=float)
        return Polytope.box(c - self.radius, c + self.radius)

    def contains(self, x, tol=0.0) -> bool:
        return bool(np.max(np.abs(np.asarray(x, dtype=float) - self.center)) <= self.radius + tol)


# -- vertex enumeration ------------------------------------------------------


def _dedupe(V, tol=1e-9):
    V = np.asarray(V, dtype=float)
    if len(V) <= 1:
        return V.reshape(len(V), -1) + 0.0
    scale = tol * max(1.0, float(np.abs(V).max()))
    V = V[np.lexsort(V.T[::-1])]
    keep = np.ones(len(V), dtype=bool)
    gap = np.max(np.abs(np.diff(V, axis=0)), axis=1) <= scale
    if np.any(gap):
        last = V[0]
        for i in range(1, len(V)):
            if np.max(np.abs(V[i] - last)) <= scale:
                keep[i] = False
            else:
                last = V[i]
    out = V[keep]
    if len(out) > 1:
        # near-duplicates that lexicographic order did not place side by side
        d = np.max(np.abs(out[:, None, :] - out[None, :, :]), axis=2) if len(out) <= 512 else None
        if d is not None:
            np.fill_diagonal(d, np.inf)
            close = np.triu(d <= scale)
            if close.any():
                drop = np.zeros(len(out), dtype=bool)
                for i, j in zip(*np.nonzero(close)):
                    if not drop[i]:
                        drop[j] = True
                out = out[~drop]
    return out + 0.0


def _enumerate_vertices(A, b, Aeq, beq):
    n = A.shape[1]
    if len(beq):
        # parametrise the affine subspace {x : Aeq x = beq}
        xp, *_ = np.linalg.lstsq(Aeq, beq, rcond=None)
        if np.any(np.abs(Aeq @ xp - beq) > 1e3 * _tol(beq)):
            return np.zeros((0, n))
        _, s, vt = np.linalg.svd(Aeq)
        rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
        N = vt[rank:].T
        if N.shape[1] == 0:
            ok = np.all(A @ xp - b <= 1e3 * _tol(b)) if len(b) else True
            return xp.reshape(1, n) if ok else np.zeros((0, n))
        Ar = A @ N
        br = b - A @ xp
        Y = _enumerate_ineq(Ar, br)
        return _dedupe(Y @ N.T + xp) if len(Y) else np.zeros((0, n))
    return _enumerate_ineq(A, b)


def _enumerate_ineq(A, b):
    m, d = A.shape
    if d == 0:
        return np.zeros((1, 0)) if np.all(b >= -_tol(b)) else np.zeros((0, 0))
    norms = np.linalg.norm(A, axis=1)
    flat = norms <= 1e-12
    if np.any(b[flat] < -_tol(b[flat])):
        return np.zeros((0, d))
    A, b = A[~flat], b[~flat]
    m = len(b)
    if m < d:
        return np.zeros((0, d))
    if d == 1:
        a = A[:, 0]
        pos, neg = a > 0, a < 0
        hi = np.min(b[pos] / a[pos]) if np.any(pos) else math.inf
        lo = np.max(b[neg] / a[neg]) if np.any(neg) else -math.inf
        if not (math.isfinite(hi) and math.isfinite(lo)):
            raise UnboundedPolytope("unbounded interval")
        slack = TAU_FEAS * max(1.0, abs(lo), abs(hi))
        if lo > hi + slack:
            return np.zeros((0, 1))
        if hi - lo <= slack:
            return np.array([[0.5 * (lo + hi)]])
        return np.array([[lo], [hi]])

    if d == 2:
        i, j = np.triu_indices(m, 1)
        a1, a2 = A[i], A[j]
        det = a1[:, 0] * a2[:, 1] - a1[:, 1] * a2[:, 0]
        good = np.abs(det) > 1e-12
        i, j, a1, a2, det = i[good], j[good], a1[good], a2[good], det[good]
        x = (b[i] * a2[:, 1] - b[j] * a1[:, 1]) / det
        y = (a1[:, 0] * b[j] - a2[:, 0] * b[i]) / det
        pts = np.column_stack([x, y])
    else:
        combos = np.array(list(itertools.combinations(range(m), d)))
        M = A[combos]
        dets = np.linalg.det(M)
        good = np.abs(dets) > 1e-12
        combos, M = combos[good], M[good]
        if not len(M):
            return np.zeros((0, d))
        pts = np.linalg.solve(M, b[combos][..., None])[..., 0]
    if not len(pts):
        return np.zeros((0, d))
    viol = pts @ A.T - b
    slack = 1e3 * TAU_FEAS * np.maximum(1.0, np.abs(b))
    scale = np.maximum(1.0, np.abs(pts).max(axis=1, keepdims=True))
    ok = np.all(viol <= np.maximum(slack, TAU_FEAS * 10 * scale), axis=1)
    pts = pts[ok]
    if not len(pts):
        return np.zeros((0, d))
    return _dedupe(pts)


def hull_2d(points) -> np.ndarray:
    """Counter-clockwise hull vertices (monotone chain), collinear points dropped."""
    P = _dedupe(np.asarray(points, dtype=float))
    if len(P) <= 2:
        return P
    scale = 1e-12 * max(1.0, float(np.abs(P).max())) ** 2

    def half(pts):
        out = []
        for p in pts:
            while len(out) >= 2:
                (ax, ay), (bx, by) = out[-2], out[-1]
                if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) <= scale:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(P)
    upper = half(P[::-1])
    H = np.array(lower[:-1] + upper[:-1])
    return H


def clip_polygon(poly: np.ndarray, normal, offset, tol=TAU_FEAS) -> np.ndarray:
    """Clip a CCW convex polygon (rows) by the half-plane ``normal . x <= offset``."""
    if not len(poly):
        return poly
    normal = np.asarray(normal, dtype=float)
    slack = tol * max(1.0, abs(offset))
    s = poly @ normal - offset
    inside = s <= slack
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    k = len(poly)
    for i in range(k):
        j = (i + 1) % k
        if inside[i]:
            out.append(poly[i])
        if inside[i] != inside[j] and k > 1:
            t = s[i] / (s[i] - s[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out)


def _lp_feasible(A, b, Aeq, beq) -> bool:
    n = A.shape[1]
    res = linprog(
        np.zeros(n),
        A_ub=A if len(b) else None,
        b_ub=(b + _tol(b)) if len(b) else None,
        A_eq=Aeq if len(beq) else None,
        b_eq=beq if len(beq) else None,
        bounds=[(None, None)] * n,
        method="highs",
    )
    return res.status == 0


# -- operations ----------------------------------------------------------------


def vertices(P: Polytope) -> np.ndarray:
    """Minimal vertex set in lexicographic order."""
    if not P.is_bounded():
        raise UnboundedPolytope("vertices of an unbounded polytope")
    V = P.vertices
    if not len(V):
        raise EmptyPolytope("vertices of an empty polytope")
    return V


def chull(points: Iterable) -> Polytope:
    """Smallest polytope containing ``points``; flat inputs yield equality rows."""
    X = np.atleast_2d(np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=float))
    if X.size == 0:
        raise EmptyInput("convex hull of no points")
    X = _dedupe(X)
    k, n = X.shape
    c = X.mean(axis=0)
    Y = X - c
    scale = max(1.0, float(np.abs(X).max()))
    _, s, vt = np.linalg.svd(Y, full_matrices=True)
    r = int(np.sum(s > 1e-10 * scale))
    basis, comp = vt[:r], vt[r:]
    Aeq, beq = comp, comp @ c
    if r == 0:
        P = Polytope.from_arrays(np.zeros((0, n)), [], Aeq, beq, dim=n, bounded=True)
        P.__dict__["vertices"] = c.reshape(1, n)
        return P
    Z = Y @ basis.T
    if r == 1:
        z = Z[:, 0]
        lo, hi = int(np.argmin(z)), int(np.argmax(z))
        u = basis[0]
        A = np.vstack([u, -u])
        b = np.array([u @ X[hi], -(u @ X[lo])])
        verts = X[[lo, hi]]
    else:
        try:
            hull = ConvexHull(Z)
        except QhullError:
            hull = ConvexHull(Z, qhull_options="QJ")
        eqs = hull.equations
        A = eqs[:, :-1] @ basis
        b = -eqs[:, -1] + A @ c
        verts = X[np.unique(hull.vertices)]
    P = Polytope.from_arrays(A, b, Aeq, beq, dim=n, bounded=True)
    P.__dict__["vertices"] = _dedupe(verts)
    return P


def intersect(P: Polytope, Q: Polytope) -> Polytope:
    if P.dim != Q.dim:
        raise DimensionMismatch(f"{P.dim} != {Q.dim}")
    if getattr(P, "_known_empty", False) or getattr(Q, "_known_empty", False):
        return Polytope.empty(P.dim)
    bounded = True if (P.bounded or Q.bounded) else None
    return Polytope(
        np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]),
        np.vstack([P.Aeq, Q.Aeq]), np.concatenate([P.beq, Q.beq]), bounded,
    )


def is_empty(P: Polytope) -> bool:
    return P.is_empty()


def contract(P: Polytope, delta: float) -> Polytope:
    """Shift every inequality inward by ``delta`` (rows are unit length)."""
    if delta < 0:
        raise ValueError("contraction amount must be nonnegative")
    if delta == 0:
        return P
    if getattr(P, "_known_empty", False):
        return P
    return Polytope(P.A, P.b - delta, P.Aeq, P.beq, P.bounded)


def octagonal_directions(n: int) -> np.ndarray:
    """``+-e_i`` and ``(+-e_i +- e_j)/sqrt(2)``."""
    dirs = [s * np.eye(n)[i] for i in range(n) for s in (1.0, -1.0)]
    r = 1.0 / math.sqrt(2.0)
    for i, j in itertools.combinations(range(n), 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            d = np.zeros(n)
            d[i], d[j] = si * r, sj * r
            dirs.append(d)
    return np.array(dirs)


def template_overapprox(P: Polytope, dirs=None) -> Polytope:
    dirs = octagonal_directions(P.dim) if dirs is None else np.asarray(dirs, dtype=float)
    if not P.is_bounded():
        raise UnboundedPolytope("template over-approximation of an unbounded set")
    V = P.vertices
    if not len(V):
        return Polytope.empty(P.dim)
    h = (V @ dirs.T).max(axis=0)
    return Polytope.from_arrays(dirs, h, dim=P.dim, bounded=True)


def template_underapprox(P: Polytope, dirs=None) -> Polytope:
    dirs = octagonal_directions(P.dim) if dirs is None else np.asarray(dirs, dtype=float)
    V = P.vertices
    if not len(V):
        raise EmptyPolytope("template under-approximation of an empty set")
    idx = np.unique(np.argmax(V @ dirs.T, axis=0))
    return chull(V[idx])


def subset(P: Polytope, Q: Polytope, tol=1e-9) -> bool:
    """``P <= Q`` for bounded ``P``: every vertex of ``P`` satisfies ``Q``."""
    V = P.vertices
    if not len(V):
        return True
    return bool(np.all(Q.contains_points(V, tol=tol)))


def hull_union(P: Polytope, Q: Polytope) -> Polytope:
    """Convex hull of ``P`` and ``Q`` (either may be empty)."""
    VP, VQ = P.vertices, Q.vertices
    if not len(VP) and not len(VQ):
        return Polytope.empty(P.dim)
    return chull(np.vstack([VP, VQ]))


def set_equal(P: Polytope, Q: Polytope, tol=1e-9) -> bool:
    return subset(P, Q, tol) and subset(Q, P, tol)


def hausdorff(P: Polytope, Q: Polytope) -> float:
    """Infinity-norm Hausdorff distance, exact for boxes and 1-D intervals.

    Uses support functions in the axis directions, which bounds the distance
    from below in general and is exact for axis-aligned boxes.
    """
    n = P.dim
    dirs = np.vstack([np.eye(n), -np.eye(n)])
    return float(max(abs(P.support(d) - Q.support(d)) for d in dirs))
