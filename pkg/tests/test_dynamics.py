import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adhasynth.dynamics import (
    AffineDynamics, NonFiniteInput, exp_matrix, flow, homogenize, invert,
    joint_difference_system, reach,
)
from adhasynth.geometry import DimensionMismatch, Polytope, chull, hausdorff, set_equal
from conftest import rotation


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


class TestExpMatrix:
    def test_zero(self):
        assert np.array_equal(exp_matrix(np.zeros((3, 3)), 2.5), np.eye(3))

    def test_rotation_quarter(self):
        assert np.allclose(exp_matrix(rotation(), math.pi / 2), [[0, 1], [-1, 0]], atol=1e-12)

    def test_diagonal_ln2(self):
        assert np.allclose(exp_matrix(-np.eye(2), math.log(2)), 0.5 * np.eye(2), rtol=1e-12)

    @given(st.floats(-20, 20))
    def test_rotation_closed_form(self, t):
        E = exp_matrix(rotation(), t)
        R = rot(t)
        assert np.max(np.abs(E - R)) <= 1e-9 * max(1.0, np.max(np.abs(R)))

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=4), st.floats(-3, 3))
    def test_diagonal_closed_form(self, d, t):
        E = exp_matrix(np.diag(d), t)
        expected = np.diag(np.exp(np.array(d) * t))
        assert np.allclose(E, expected, rtol=1e-9, atol=0)

    @given(st.integers(0, 10_000), st.floats(0, 2), st.floats(0, 2))
    def test_semigroup(self, seed, s, t):
        A = np.random.default_rng(seed).normal(size=(3, 3))
        A *= 2 / max(1.0, np.linalg.norm(A, 2))
        assert np.allclose(exp_matrix(A, s) @ exp_matrix(A, t), exp_matrix(A, s + t), atol=1e-8)

    def test_non_finite(self):
        with pytest.raises(NonFiniteInput):
            exp_matrix(np.array([[np.nan]]), 1.0)
        with pytest.raises(NonFiniteInput):
            exp_matrix(np.eye(1), np.inf)


class TestReach:
    def test_point_zero_dynamics(self):
        P = Polytope.point([1.0, 2.0])
        assert set_equal(reach(P, np.zeros((2, 2)), 3.0), P)

    def test_box_contracts(self):
        P = Polytope.box([-1, -1], [1, 1])
        assert set_equal(reach(P, -np.eye(2), math.log(2)), Polytope.box([-0.5, -0.5], [0.5, 0.5]))

    def test_rotated_box(self):
        P = Polytope.box([-1, -1], [1, 1])
        R = reach(P, rotation(), math.pi / 4)
        corners = np.array([[-1, -1], [-1, 1], [1, -1], [1, 1]]) @ rot(math.pi / 4).T
        assert set_equal(R, chull(corners), tol=1e-9)

    @given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1))
    def test_reach_composes(self, seed, s, t):
        A = np.random.default_rng(seed).normal(size=(2, 2))
        P = chull(np.random.default_rng(seed + 1).normal(size=(6, 2)))
        lhs = reach(reach(P, A, s), A, t)
        rhs = reach(P, A, s + t)
        for d in np.random.default_rng(seed + 2).normal(size=(8, 2)):
            assert abs(lhs.support(d) - rhs.support(d)) <= 1e-7 * (1 + abs(rhs.support(d)))


class TestHomogenize:
    def test_heater_on(self):
        L, z0 = homogenize(AffineDynamics([[-0.1]], [3.0]), [20.0])
        assert np.array_equal(L.matrix, [[-0.1, 3.0], [0.0, 0.0]])
        assert np.array_equal(z0, [20.0, 1.0])

    def test_zero_offset_matches_linear(self):
        A = np.array([[0.2, -1.0], [0.5, -0.3]])
        L, z0 = homogenize(AffineDynamics(A, [0, 0]), [1.0, 2.0])
        z = exp_matrix(L.matrix, 1.3) @ z0
        assert np.allclose(z[:2], exp_matrix(A, 1.3) @ [1.0, 2.0], atol=1e-12)
        assert z[2] == pytest.approx(1.0)

    def test_constant_derivative(self):
        assert np.allclose(flow(AffineDynamics(np.zeros((2, 2)), [1, 0]), [0, 0], 1.0), [1, 0])


class TestJointSystem:
    def test_identical_executions(self):
        A = rotation()
        C, z0 = joint_difference_system(A, A, [1, 1], [1, 1])
        for t in np.linspace(0, 6, 13):
            assert np.allclose((exp_matrix(C, t) @ z0)[4:], 0, atol=1e-12)

    def test_zero_dynamics(self):
        C, z0 = joint_difference_system(np.zeros((2, 2)), np.zeros((2, 2)), [1, 2], [0.5, 0.0])
        assert np.allclose((exp_matrix(C, 5.0) @ z0)[4:], [0.5, 2.0])

    def test_systems_peak(self):
        C, z0 = joint_difference_system(rotation(), rotation(0.01), [1, 1], [1, 1])
        ts = np.linspace(0, 4 * math.pi, 20001)
        peak = max(np.abs((exp_matrix(C, t) @ z0)[4:]).max() for t in ts)
        assert peak == pytest.approx(0.08, abs=0.01)

    @given(st.integers(0, 10_000), st.floats(0, 3))
    def test_projections_reproduce_executions(self, seed, t):
        rng = np.random.default_rng(seed)
        A, B = rng.normal(size=(2, 2, 2))
        x0, y0 = rng.normal(size=(2, 2))
        z = exp_matrix(joint_difference_system(A, B, x0, y0)[0], t) @ np.concatenate([x0, y0, x0 - y0])
        x, y = exp_matrix(A, t) @ x0, exp_matrix(B, t) @ y0
        assert np.allclose(z[:2], x, atol=1e-8) and np.allclose(z[2:4], y, atol=1e-8)
        assert np.allclose(z[4:], x - y, atol=1e-8)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            joint_difference_system(np.eye(2), np.eye(3), [0, 0], [0, 0])


class TestInvert:
    def test_zero(self):
        d = invert(np.zeros((1, 1)), [0.0])
        assert np.array_equal(d.A, [[0.0]]) and np.array_equal(d.b, [0.0])

    def test_heater(self):
        d = invert(np.array([[-0.1]]), [3.0])
        assert np.array_equal(d.A, [[0.1]]) and np.array_equal(d.b, [-3.0])

    def test_round_trip(self):
        d = AffineDynamics([[1.0]], [0.0])
        x = flow(d, [0.7], 1.0)
        assert flow(invert(d), x, 1.0) == pytest.approx([0.7], abs=1e-8)
