#!/usr/bin/env python3
"""Synthesize a thermostat model from simulated executions and print it."""
import argparse
import logging

from adhasynth import io
from adhasynth.cli import bench_corpus
from adhasynth.synthesis import synthesize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--output", default="heater_learned.json")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    F = bench_corpus("heater", args.count, args.seed)
    H, stats = synthesize(F, args.epsilon)
    for q in H.names:
        lo, hi = H.invariant(q).interval_bounds()
        print(f"{q}: dx = {H.flow(q).A[0, 0]:+.4f} x {H.flow(q).b[0]:+.4f}  inv [{lo[0]:.3f}, {hi[0]:.3f}]")
    for (s, t), g in sorted(H.transitions.items()):
        lo, hi = g.interval_bounds()
        print(f"{s} -> {t}: guard [{lo[0]:.3f}, {hi[0]:.3f}]")
    print(f"explored {sum(s.explored for s in stats)} nodes in {sum(s.seconds for s in stats):.1f}s")
    io.save_adha(H, args.output)


if __name__ == "__main__":
    main()
