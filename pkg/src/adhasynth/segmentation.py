"""Segmentation of a time series into a PWA trajectory with max-norm error at most delta."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares, minimize

from .dynamics import AffineDynamics, flow
from .trajectory import PwaTrajectory, TimeSeries, delta_captures

log = logging.getLogger(__name__)


class TooFewSamples(ValueError):
    pass


class Infeasible(RuntimeError):
    """No fit within delta was found inside the optimizer budget."""


class NoFeasiblePiece(RuntimeError):
    pass


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 200
    max_iter: int = 500
    seed: int = 0
    # give up early after this many restarts without a 1% improvement
    patience: int = 10


@dataclass(frozen=True)
class FitResult:
    dynamics: AffineDynamics
    initial_state: np.ndarray
    residual: float


def _predict(A, b, x0, dts):
    """States at offsets ``dts`` (from the window start) via the homogenized exponential."""
    d = AffineDynamics(A, b)
    return np.array([flow(d, x0, t) for t in dts])


def residual_of(d: AffineDynamics, x0, s: TimeSeries) -> float:
    """Exact max-norm deviation of the solution from ``x0`` against ``s``."""
    G = _predict(d.A, d.b, np.asarray(x0, float), s.times - s.times[0])
    return float(np.max(np.abs(G - s.states)))


def _seed(s: TimeSeries):
    """Least squares fit of finite-difference derivatives against (x, 1)."""
    X = s.states
    dX = np.diff(X, axis=0) / np.diff(s.times)[:, None]
    Z = np.hstack([X[:-1], np.ones((len(X) - 1, 1))])
    W, *_ = np.linalg.lstsq(Z, dX, rcond=None)
    n = s.dim
    return W[:n].T, W[n]


class _Problem:
    def __init__(self, s: TimeSeries, x0):
        self.s = s
        self.n = s.dim
        self.fixed_x0 = None if x0 is None else np.asarray(x0, float).reshape(-1)
        dts = s.times - s.times[0]
        steps = np.diff(dts)
        self.uniform = len(steps) > 0 and np.allclose(steps, steps[0], rtol=1e-9, atol=0)
        self.dts = dts

    def unpack(self, theta):
        n = self.n
        A = theta[: n * n].reshape(n, n)
        b = theta[n * n : n * n + n]
        x0 = self.fixed_x0 if self.fixed_x0 is not None else theta[n * n + n :]
        return A, b, x0

    def pack(self, A, b, x0):
        parts = [np.ravel(A), np.ravel(b)]
        if self.fixed_x0 is None:
            parts.append(np.ravel(x0))
        return np.concatenate(parts)

    def states(self, theta):
        A, b, x0 = self.unpack(theta)
        if not self.uniform:
            return _predict(A, b, x0, self.dts)
        # one exponential, then repeated multiplication on the uniform grid
        n = self.n
        M = np.zeros((n + 1, n + 1))
        M[:n, :n], M[:n, n] = A, b
        E = expm(M * (self.dts[1] - self.dts[0]))
        y = np.append(x0, 1.0)
        out = np.empty((len(self.dts), n))
        out[0] = x0
        for j in range(1, len(self.dts)):
            y = E @ y
            out[j] = y[:n]
        return out

    def residuals(self, theta):
        r = (self.states(theta) - self.s.states).ravel()
        return np.where(np.isfinite(r), r, 1e6)

    def minimax(self, theta, max_iter):
        """Polish ``theta`` on the epigraph form min t s.t. |r_i| <= t."""
        r0 = self.residuals(theta)
        z0 = np.append(theta, np.max(np.abs(r0)))
        cons = {
            "type": "ineq",
            "fun": lambda z: np.concatenate([z[-1] - self.residuals(z[:-1]), z[-1] + self.residuals(z[:-1])]),
        }
        res = minimize(lambda z: z[-1], z0, method="SLSQP", constraints=[cons],
                       options={"maxiter": max_iter, "ftol": 1e-14})
        return res.x[:-1] if np.all(np.isfinite(res.x)) else theta


def fit_affine(s: TimeSeries, x0=None, delta: float = 0.0, config: FitConfig = FitConfig()) -> FitResult:
    if len(s) < 2:
        raise TooFewSamples("a window needs at least two samples")
    prob = _Problem(s, x0)
    A0, b0 = _seed(s)
    start = prob.pack(A0, b0, s.states[0])
    rng = np.random.default_rng(config.seed)
    best, stall = None, 0
    for k in range(max(1, config.restarts)):
        theta = start if k == 0 else start + rng.normal(0, 0.1 * k / config.restarts, start.shape) * (np.abs(start) + 1)
        try:
            ls = least_squares(prob.residuals, theta, max_nfev=config.max_iter, method="lm" if len(s) * s.dim >= len(theta) else "trf")
            theta = ls.x
        except ValueError:
            pass
        for cand in (theta, prob.minimax(theta, config.max_iter)):
            A, b, xs = prob.unpack(cand)
            d = AffineDynamics(A, b)
            try:
                r = residual_of(d, xs, s)
            except Exception:  # non-finite parameters from a wild restart
                continue
            if not np.isfinite(r):
                continue
            if best is None or r < best.residual:
                improved = best is None or r < 0.99 * best.residual
                best = FitResult(d, np.array(xs, float), r)
                stall = 0 if improved else stall
        if best is not None and best.residual <= delta:
            return best
        stall += 1
        if stall > config.patience:
            break
    raise Infeasible(f"best residual {best.residual if best else np.inf:.3g} exceeds delta={delta}")


def max_prefix(s: TimeSeries, start: int, x0=None, delta: float = 0.0,
               config: FitConfig = FitConfig()) -> tuple[int, FitResult]:
    """Largest ``end`` such that samples ``start..end`` admit a fit (binary search)."""
    last = len(s) - 1
    if last - start < 1:
        raise TooFewSamples("need at least two samples after the start index")

    def attempt(end):
        try:
            return fit_affine(s.window(start, end), x0, delta, config)
        except Infeasible:
            return None

    fit = attempt(last)
    if fit is not None:
        return last, fit
    lo, hi, best = start + 1, last - 1, None
    best = attempt(lo)
    if best is None:
        raise NoFeasiblePiece(f"no affine piece fits samples {start}..{start + 1}")
    while lo < hi:
        mid = (lo + hi + 1) // 2
        f = attempt(mid)
        if f is not None:
            lo, best = mid, f
        else:
            hi = mid - 1
    return lo, best


def segment(s: TimeSeries, delta: float, config: FitConfig = FitConfig()) -> PwaTrajectory:
    if len(s) < 2:
        raise TooFewSamples("a series needs at least two samples")
    start, x0 = 0, None
    ends, pieces, first = [], [], None
    while start < len(s) - 1:
        end, fit = max_prefix(s, start, x0, delta, config)
        if first is None:
            first = fit.initial_state
        pieces.append(fit.dynamics)
        ends.append(end)
        x0 = flow(fit.dynamics, fit.initial_state, s.times[end] - s.times[start])
        log.info("piece %d: samples %d..%d residual %.3g", len(pieces), start, end, fit.residual)
        start = end
    t0 = s.times[0]
    f = PwaTrajectory((0.0,) + tuple(s.times[e] - t0 for e in ends), tuple(pieces), first)
    shifted = TimeSeries(s.times - t0, s.states)
    if not delta_captures(f, shifted, delta):
        raise NoFeasiblePiece("assembled trajectory violates the delta bound")
    return f
