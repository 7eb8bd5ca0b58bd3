#!/usr/bin/env python3
"""Two rotations that drift apart: point check and chained reachability."""
import math

import numpy as np

from adhasynth.dynamics import AffineDynamics
from adhasynth.membership import SyncChecker, sreach_path, sync_check_point
from adhasynth.trajectory import concatenate


def rotation(alpha=0.0):
    return np.array([[0.0, 1.0 - alpha], [-1.0, 0.0]])


def main():
    x0 = np.array([1.0, 1.0])
    T = 4 * math.pi
    peak = SyncChecker(rotation(0.01), rotation(), x0, 0.1, T).peak(x0)
    print(f"peak deviation over [0, 4pi]: {peak:.5f}")
    for eps in (0.1, 0.05):
        print(f"eps={eps}: {sync_check_point(rotation(0.01), rotation(), x0, x0, eps, T)}")
    d = AffineDynamics.linear(rotation())
    f = concatenate([d] * 23, [T / 23] * 23, x0)
    chain, verdict = sreach_path([d] * 23, f, 0.1)
    print(f"23-piece chain: {verdict.outcome.name}")
    for i in (1, 12, 23):
        print(f"  piece {i}: over diameter {chain[i].over.diameter():.4f}, "
              f"under diameter {chain[i].under.diameter():.4f}")


if __name__ == "__main__":
    main()
