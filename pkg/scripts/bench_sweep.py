#!/usr/bin/env python3
"""Model size and runtime across tube radii (heater and gearbox)."""
import sys

from adhasynth.cli import run

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "bench"
    codes = [
        run(["bench", "--model", "heater", "--epsilons", "0.1,0.07,0.04,0.01", "--output", f"{out}_heater.csv"]),
        run(["bench", "--model", "gearbox", "--epsilons", "0.1", "--output", f"{out}_gearbox.csv"]),
    ]
    sys.exit(max(codes))
