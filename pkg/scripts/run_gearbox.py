#!/usr/bin/env python3
"""Synthesize a gearbox model from simulated executions."""
import argparse

from adhasynth import io
from adhasynth.cli import bench_corpus
from adhasynth.synthesis import synthesize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--output", default="gearbox_learned.json")
    args = ap.parse_args()
    F = bench_corpus("gearbox", args.count, args.seed)
    H, stats = synthesize(F, args.epsilon)
    for st in stats:
        print(f"trajectory {st.index}: path {'-'.join(st.path)} mod {tuple(st.mod)} explored {st.explored}")
    print(f"|Q|={len(H.locations)} |E|={len(H.transitions)}: {sorted(H.transitions)}")
    io.save_adha(H, args.output)


if __name__ == "__main__":
    main()
