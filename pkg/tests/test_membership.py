import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adhasynth.dynamics import AffineDynamics, exp_matrix, flow
from adhasynth.geometry import Box, Polytope, subset, octagonal_directions
from adhasynth.membership import (
    Outcome, PathLengthMismatch, SyncChecker, default_contraction, default_m, overapprox_piece,
    refine_polytope, sreach_path, sreach_piece, sync_check_point, witness_execution,
)
from adhasynth.trajectory import PwaTrajectory, concatenate, evaluate
from conftest import rotation

X0 = np.array([1.0, 1.0])
T4PI = 4 * math.pi


def dense_peak(A, B, x0, y0, T, n=100_001):
    ts = np.linspace(0, T, n)
    # eigen-free closed form via matrix exponentials on a coarse step, refined by powers
    EA, EB = exp_matrix(A, T / (n - 1)), exp_matrix(B, T / (n - 1))
    x, y = np.array(x0, float), np.array(y0, float)
    best = np.max(np.abs(x - y))
    for _ in range(n - 1):
        x, y = EB @ x, EA @ y
        best = max(best, np.max(np.abs(x - y)))
    return best


def single(B, x0, T):
    return PwaTrajectory((0.0, T), (AffineDynamics.linear(B),), x0)


def under_in_over(s, tol=1e-9):
    if s.under.is_empty():
        return True
    dirs = octagonal_directions(s.under.dim)
    return all(s.under.support(d) <= s.over.support(d) + tol for d in dirs)


class TestSyncCheck:
    def test_identical(self):
        assert sync_check_point(rotation(), rotation(), X0, X0, 0.0, 3.0)

    def test_systems_eps_01(self):
        assert sync_check_point(rotation(0.01), rotation(), X0, X0, 0.1, T4PI)

    def test_systems_eps_005(self):
        assert not sync_check_point(rotation(0.01), rotation(), X0, X0, 0.05, T4PI)

    def test_peak_value(self):
        peak = SyncChecker(rotation(0.01), rotation(), X0, 0.1, T4PI).peak(X0)
        assert peak == pytest.approx(0.08, abs=0.01)
        assert peak == pytest.approx(dense_peak(rotation(0.01), rotation(), X0, X0, T4PI, 20_001), abs=1e-6)

    def test_start_outside(self):
        assert not sync_check_point(np.zeros((2, 2)), np.zeros((2, 2)), X0, X0 + 0.2, 0.1, 1.0)

    def test_nonpositive_horizon(self):
        with pytest.raises(ValueError):
            sync_check_point(rotation(), rotation(), X0, X0, 0.1, 0.0)

    @settings(max_examples=25)
    @given(st.integers(0, 100_000))
    def test_against_grid(self, seed):
        rng = np.random.default_rng(seed)
        A, B = rng.normal(size=(2, 2, 2)) * 0.5
        y0 = X0 + rng.uniform(-0.05, 0.05, 2)
        T = rng.uniform(0.5, 2 * math.pi)
        peak = dense_peak(A, B, X0, y0, T, 20_001)
        eps = peak * rng.choice([0.9, 1.1])
        assert sync_check_point(A, B, X0, y0, eps, T) == (peak <= eps)


class TestOverapprox:
    def test_same_dynamics_point(self):
        P = overapprox_piece(rotation(), rotation(), X0, Polytope.point(X0), 0.1, 2.0, 1)
        assert np.allclose(P.vertices, [exp_matrix(rotation(), 2.0) @ X0], atol=1e-12)

    def test_divergent_empty(self):
        P0 = Box(tuple(X0), 0.1).to_polytope()
        assert overapprox_piece(np.eye(2), -np.eye(2), X0, P0, 0.1, 4.0, 40).is_empty()
        # all four corners indeed leave the tube
        for v in P0.vertices:
            assert not sync_check_point(np.eye(2), -np.eye(2), X0, v, 0.1, 4.0)

    def test_systems_nonempty(self):
        P0 = Box(tuple(X0), 0.1).to_polytope()
        assert not overapprox_piece(rotation(0.01), rotation(), X0, P0, 0.1, T4PI, 100).is_empty()

    def test_bad_m(self):
        with pytest.raises(ValueError):
            overapprox_piece(rotation(), rotation(), X0, Polytope.point(X0), 0.1, 1.0, 0)


class TestRefine:
    def test_all_pass(self):
        P = Box(tuple(X0), 0.01).to_polytope()
        R = refine_polytope(P, np.zeros((2, 2)), np.zeros((2, 2)), X0, 0.1, 1.0, 0.01)
        assert subset(P, R) and subset(R, P)

    def test_ball_like(self):
        P = Box(tuple(X0), 0.1).to_polytope()
        R = refine_polytope(P, rotation(), rotation(), X0, 0.1, T4PI, 0.01)
        assert not R.is_empty() and subset(R, P)
        # every vertex of the result is synchronized
        for v in R.vertices:
            assert sync_check_point(rotation(), rotation(), X0, v, 0.1 + 1e-9, T4PI)
        # rotation invariance: corners of the box are excluded, the center is kept
        assert R.contains_point(X0)
        assert not R.contains_point(X0 + 0.099)

    def test_displaced(self):
        P = Box(tuple(X0 + 0.3), 0.1).to_polytope()
        for v in P.vertices:
            assert not sync_check_point(rotation(), rotation(), X0, v, 0.1, 1.0)
        assert refine_polytope(P, rotation(), rotation(), X0, 0.1, 1.0, 0.01).is_empty()

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            refine_polytope(Polytope.point(X0), rotation(), rotation(), X0, 0.1, 1.0, 0.0)


class TestPiece:
    def test_point_identity(self):
        s = sreach_piece(Polytope.point(X0), rotation(), rotation(), X0, 0.1, 1.0)
        end = exp_matrix(rotation(), 1.0) @ X0
        assert np.allclose(s.under.vertices, [end]) and np.allclose(s.over.vertices, [end])

    def test_divergent(self):
        s = sreach_piece(Box(tuple(X0), 0.1).to_polytope(), np.eye(2), -np.eye(2), X0, 0.1, 4.0, 40)
        assert s.over.is_empty() and s.under.is_empty()

    def test_systems_single_piece(self):
        s = sreach_piece(Box(tuple(X0), 0.1).to_polytope(), rotation(), rotation(), X0, 0.1, T4PI)
        assert not s.under.is_empty() and not s.over.is_empty()
        assert under_in_over(s)


class TestPath:
    def test_23_pieces(self):
        d = AffineDynamics.linear(rotation())
        f = concatenate([d] * 23, [T4PI / 23] * 23, X0)
        chain, verdict = sreach_path([d] * 23, f, 0.1)
        assert verdict.outcome is Outcome.CAPTURED
        assert all(under_in_over(s) for s in chain)

    def test_alpha_single(self):
        f = single(rotation(), X0, T4PI)
        _, v = sreach_path([AffineDynamics.linear(rotation(0.01))], f, 0.1)
        assert v.outcome is Outcome.CAPTURED

    def test_decay_vs_growth_not_captured(self):
        f = PwaTrajectory((0.0, 0.5), (AffineDynamics([[-1.0]], [0.0]),), [1.5])
        _, v = sreach_path([AffineDynamics([[2.0]], [0.0])], f, 0.1)
        assert v.outcome is Outcome.NOT_CAPTURED

    def test_empty_path(self):
        f = PwaTrajectory((0.0,), (), [1.5])
        chain, v = sreach_path([], f, 0.1)
        assert v.outcome is Outcome.CAPTURED and len(chain) == 1

    def test_length_mismatch(self):
        with pytest.raises(PathLengthMismatch):
            sreach_path([], single(rotation(), X0, 1.0), 0.1)

    def test_witness_stays_in_tube(self):
        d = AffineDynamics.linear(rotation())
        f = concatenate([d] * 5, [0.8] * 5, X0)
        chain, v = sreach_path([AffineDynamics.linear(rotation(0.02))] * 5, f, 0.1)
        assert v.outcome is Outcome.CAPTURED
        w = witness_execution([AffineDynamics.linear(rotation(0.02))] * 5, f, chain[-1].under)
        ts = np.linspace(0, f.duration, 2001)
        dev = max(np.max(np.abs(evaluate(w, t) - evaluate(f, t))) for t in ts)
        assert dev <= 0.1 + 1e-6

    def test_finer_m_never_flips_to_captured(self):
        f = single(-np.eye(2), X0, 3.0)
        outcomes = [sreach_path([AffineDynamics.linear(-1.3 * np.eye(2))], f, 0.1, m_per_piece=m)[1].outcome
                    for m in (10, 40, 160)]
        for coarse, fine in zip(outcomes, outcomes[1:]):
            assert not (coarse is Outcome.NOT_CAPTURED and fine is Outcome.CAPTURED)


def test_defaults():
    assert default_m(0.1) == 10 and default_m(2.0) == 40
    assert default_contraction(0.1) == pytest.approx(0.01)
