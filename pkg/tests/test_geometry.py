import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from adhasynth.geometry import (
    Box, DimensionMismatch, EmptyInput, EmptyPolytope, LinearConstraint, Polytope,
    UnboundedPolytope, chull, contract, hausdorff, intersect, is_empty, octagonal_directions,
    set_equal, subset, template_overapprox, template_underapprox, vertices,
)

SQUARE = Polytope.box([0, 0], [1, 1])


def lp_support(P, d):
    """Independent support function by LP on the H-representation."""
    res = linprog(-np.asarray(d), A_ub=P.A, b_ub=P.b, A_eq=P.Aeq if len(P.Aeq) else None,
                  b_eq=P.beq if len(P.beq) else None, bounds=[(None, None)] * P.dim)
    assert res.status == 0
    return -res.fun


def as_set(V):
    return sorted(map(tuple, np.round(V, 12)))


class TestVertices:
    def test_unit_square(self):
        assert as_set(vertices(SQUARE)) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_segment_from_equality(self):
        P = Polytope.from_arrays([[0, 1], [0, -1]], [1, 0], Aeq=[[1, 0]], beq=[0])
        assert as_set(vertices(P)) == [(0, 0), (0, 1)]

    def test_simplex(self):
        P = Polytope.from_arrays([[1, 1], [-1, 0], [0, -1]], [1, 0, 0])
        assert as_set(vertices(P)) == [(0, 0), (0, 1), (1, 0)]

    def test_lexicographic_order(self):
        V = vertices(SQUARE)
        assert [tuple(v) for v in V] == sorted(tuple(v) for v in V)

    def test_unbounded_raises(self):
        with pytest.raises(UnboundedPolytope):
            vertices(Polytope.from_arrays([[1, 0]], [1]))

    def test_empty_raises(self):
        with pytest.raises(EmptyPolytope):
            vertices(Polytope.from_arrays([[1.0], [-1.0]], [0, -1]))


class TestHull:
    def test_square(self):
        assert set_equal(chull([(0, 0), (1, 0), (0, 1), (1, 1)]), SQUARE)

    def test_point_has_two_equalities(self):
        P = chull([(0.5, 0.5)])
        assert len(P.Aeq) == 2
        assert as_set(P.vertices) == [(0.5, 0.5)]

    def test_collinear_segment(self):
        P = chull([(0, 0), (1, 1), (2, 2)])
        assert P.contains_point([1, 1]) and not P.contains_point([1, 1.01])
        # endpoints are the extreme points in direction (1, 1)
        assert lp_support(P, [1, 1]) == pytest.approx(4)
        assert lp_support(P, [-1, -1]) == pytest.approx(0)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            chull([])

    @given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=25))
    def test_hull_contains_inputs(self, pts):
        P = chull(pts)
        assert np.all(P.contains_points(np.array(pts), tol=1e-7))

    @given(st.integers(0, 10_000))
    def test_vertices_of_hull_idempotent(self, seed):
        pts = np.random.default_rng(seed).normal(size=(12, 2))
        V = chull(pts).vertices
        assert as_set(chull(V).vertices) == as_set(V)


class TestIntersectEmpty:
    def test_halfplane(self):
        Q = Polytope.from_arrays([[-1, 0]], [-0.5])
        assert set_equal(intersect(SQUARE, Q), Polytope.box([0.5, 0], [1, 1]))

    def test_idempotent(self):
        assert set_equal(intersect(SQUARE, SQUARE), SQUARE)

    def test_disjoint(self):
        P = Polytope.from_arrays([[1.0]], [0.0])
        Q = Polytope.from_arrays([[-1.0]], [-1.0])
        assert is_empty(intersect(P, Q))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            intersect(SQUARE, Polytope.box([0], [1]))

    def test_square_not_empty(self):
        assert not is_empty(SQUARE)

    def test_contracted_square_empty(self):
        assert is_empty(contract(SQUARE, 0.6))

    @settings(max_examples=20)
    @given(st.integers(0, 10_000))
    def test_emptiness_vs_grid(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(4, 2))
        b = rng.uniform(-0.3, 0.6, 4)
        P = Polytope.from_arrays(np.vstack([A, np.eye(2), -np.eye(2)]), np.concatenate([b, [1, 1, 1, 1]]))
        pitch = 1e-3
        g = np.arange(-1, 1 + pitch / 2, pitch)
        X = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
        slack = (X @ P.A.T - P.b).max(axis=1)
        if P.is_empty():
            # a grid point well inside would contradict emptiness
            assert slack.min() > -1e-9
        else:
            c = P.chebyshev_center()
            r = -(P.A @ c - P.b).max()
            if r > pitch:
                assert slack.min() <= 0


class TestContract:
    def test_square(self):
        assert set_equal(contract(SQUARE, 0.1), Polytope.box([0.1, 0.1], [0.9, 0.9]))

    def test_zero(self):
        assert contract(SQUARE, 0.0) is SQUARE

    def test_equality_kept(self):
        P = Polytope.from_arrays([[-1, 0], [0, -1]], [0, 0], Aeq=[[1, 1]], beq=[1])
        Q = contract(P, 0.5)
        assert as_set(Q.vertices) == [(0.5, 0.5)]

    def test_negative_delta(self):
        with pytest.raises(ValueError):
            contract(SQUARE, -1)

    @given(st.integers(0, 10_000), st.floats(0, 0.3), st.floats(0, 0.3))
    def test_offsets_match_halfspace_distance(self, seed, a, b):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(6, 2)) * rng.uniform(0.2, 5, (6, 1))
        off = rng.uniform(0.5, 2, 6)
        P = Polytope.from_arrays(A, off)
        Q = contract(P, a)
        # independent formula: shift by a / ||a_j||_2 on the raw rows
        norms = np.linalg.norm(A, axis=1)
        expected = (off - a * norms) / norms
        assert np.allclose(np.sort(Q.b), np.sort(expected), atol=1e-12)
        # composition law
        assert np.allclose(contract(contract(P, a), b).b, contract(P, a + b).b, atol=1e-12)


class TestTemplates:
    def test_box_over_is_box(self):
        assert set_equal(template_overapprox(SQUARE), SQUARE)

    def test_rotated_square_axis_dirs(self):
        D = chull([(1, 0), (0, 1), (-1, 0), (0, -1)])
        O = template_overapprox(D, np.vstack([np.eye(2), -np.eye(2)]))
        assert set_equal(O, Polytope.box([-1, -1], [1, 1]))
        assert not subset(O, D)

    def test_point(self):
        P = Polytope.point([0.3, -0.2])
        assert as_set(template_overapprox(P).vertices) == [(0.3, -0.2)]
        assert as_set(template_underapprox(P).vertices) == [(0.3, -0.2)]

    def test_box_under_is_box(self):
        assert set_equal(template_underapprox(SQUARE), SQUARE)

    def test_triangle_under_axis(self):
        T = chull([(0, 0), (1, 0), (0, 1)])
        U = template_underapprox(T, np.vstack([np.eye(2), -np.eye(2)]))
        assert set_equal(U, T)

    def test_empty_under_raises(self):
        with pytest.raises(EmptyPolytope):
            template_underapprox(Polytope.empty(2))

    def test_octagonal_count(self):
        assert len(octagonal_directions(3)) == 6 + 12


class TestBox:
    def test_box_polytope(self):
        B = Box((1.0, 1.0), 0.1)
        P = B.to_polytope()
        assert as_set(P.vertices) == [(0.9, 0.9), (0.9, 1.1), (1.1, 0.9), (1.1, 1.1)]

    def test_degenerate(self):
        assert as_set(Box((2.0,), 0.0).to_polytope().vertices) == [(2.0,)]

    def test_constraint_validation(self):
        with pytest.raises(ValueError):
            LinearConstraint((0.0, 0.0), 1.0, "le")

    def test_hausdorff_intervals(self):
        assert hausdorff(Polytope.box([17.9], [22.1]), Polytope.box([18], [22])) == pytest.approx(0.1)
