"""Affine and linear continuous dynamics."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .geometry import DimensionMismatch, Polytope, chull


class NonFiniteInput(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LinearDynamics:
    matrix: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ValueError("dynamics matrix must be square")
        if not np.all(np.isfinite(M)):
            raise NonFiniteInput("non-finite dynamics matrix")
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class AffineDynamics:
    """``x' = A x + b``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != A.shape[1] or A.shape[0] != len(b):
            raise ValueError(f"inconsistent shapes {A.shape} and {b.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise NonFiniteInput("non-finite dynamics")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return len(self.b)

    @classmethod
    def linear(cls, A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return cls(A, np.zeros(A.shape[0]))

    def homogeneous(self) -> np.ndarray:
        """Block matrix ``[[A, b], [0, 0]]``."""
        n = self.dim
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = self.A
        M[:n, n] = self.b
        return M

    def key(self):
        return (self.A.tobytes(), self.b.tobytes(), self.dim)

    def close_to(self, other: "AffineDynamics", tol=1e-9) -> bool:
        return (
            self.dim == other.dim
            and np.max(np.abs(self.A - other.A)) <= tol
            and np.max(np.abs(self.b - other.b)) <= tol
        )

    def __repr__(self):
        return f"AffineDynamics(A={self.A.tolist()}, b={self.b.tolist()})"


def as_affine(d) -> AffineDynamics:
    if isinstance(d, AffineDynamics):
        return d
    if isinstance(d, LinearDynamics):
        return AffineDynamics.linear(d.matrix)
    return AffineDynamics.linear(d)


def exp_matrix(A, t: float) -> np.ndarray:
    """``e^{A t}`` (scaling and squaring with Pade approximants)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not (np.isfinite(t) and np.all(np.isfinite(A))):
        raise NonFiniteInput("exp_matrix needs finite inputs")
    return expm(A * t)


@lru_cache(maxsize=65536)
def _flow_cached(key, t):
    Abytes, bbytes, n = key
    A = np.frombuffer(Abytes).reshape(n, n)
    b = np.frombuffer(bbytes)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = b
    E = expm(M * t)
    Phi, phi = E[:n, :n].copy(), E[:n, n].copy()
    Phi.setflags(write=False)
    phi.setflags(write=False)
    return Phi, phi


def flow_map(d, t: float) -> tuple[np.ndarray, np.ndarray]:
    """``(Phi, phi)`` with ``x(t) = Phi x(0) + phi`` under ``d``."""
    d = as_affine(d)
    if not np.isfinite(t):
        raise NonFiniteInput("non-finite time")
    return _flow_cached(d.key(), float(t))


def flow(d, x0, t: float) -> np.ndarray:
    Phi, phi = flow_map(d, t)
    return Phi @ np.asarray(x0, dtype=float) + phi


def flow_grid(d, x0, times) -> np.ndarray:
    """States at each of ``times`` (rows)."""
    d = as_affine(d)
    x0 = np.asarray(x0, dtype=float)
    return np.array([flow(d, x0, t) for t in times])


def map_points(d, X, t: float) -> np.ndarray:
    Phi, phi = flow_map(d, t)
    return np.asarray(X, dtype=float) @ Phi.T + phi


def reach(P: Polytope, A, t: float) -> Polytope:
    """Image of ``P`` after flowing for ``t``; vertices are mapped, then hulled."""
    V = P.vertices
    if not len(V):
        return Polytope.empty(P.dim)
    return chull(map_points(A, V, t))


def homogenize(d: AffineDynamics, x0) -> tuple[LinearDynamics, np.ndarray]:
    """Embed ``x' = A x + b`` as a linear system with a constant-one coordinate."""
    d = as_affine(d)
    return LinearDynamics(d.homogeneous()), np.append(np.asarray(x0, dtype=float), 1.0)


def joint_difference_system(A, B, x0, y0) -> tuple[np.ndarray, np.ndarray]:
    """3n-dimensional system whose last block tracks ``x(t) - y(t)``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{A.shape} vs {B.shape}")
    n = A.shape[0]
    x0 = np.asarray(x0, dtype=float).reshape(n)
    y0 = np.asarray(y0, dtype=float).reshape(n)
    Z = np.zeros((n, n))
    C = np.block([[A, Z, Z], [Z, B, Z], [A, -B, Z]])
    return C, np.concatenate([x0, y0, x0 - y0])


def invert(A, b=None) -> AffineDynamics:
    """Time-reversed dynamics ``(-A, -b)``."""
    if isinstance(A, AffineDynamics):
        return AffineDynamics(-A.A, -A.b)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    return AffineDynamics(-A, -b)
