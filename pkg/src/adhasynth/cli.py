"""Command line: segment, member, synthesize, simulate, bench."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io, models, segmentation, simulation, synthesis
from .membership import Outcome
from .synthesis import SearchSettings

EX_USAGE, EX_DATAERR, EX_SOFTWARE = 64, 65, 70
MEMBER_CODES = {Outcome.CAPTURED: 0, Outcome.NOT_CAPTURED: 1, Outcome.UNKNOWN: 2}

log = logging.getLogger("adhasynth")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _settings(args) -> SearchSettings:
    return SearchSettings(m_per_piece=args.m, contraction_delta=args.contraction)


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("ADHA_SYNTH_THREADS")
    return int(env) if env else 1


def _manifest(args, argv, inputs, **params) -> io.RunManifest:
    params.setdefault("threads", _threads(args))
    return io.RunManifest(args.command, list(argv), [str(p) for p in inputs], params)


def _finish(man: io.RunManifest, t0: float, target: Path, **result):
    man.wall_time = time.perf_counter() - t0
    man.result = result
    man.save(target)


def cmd_segment(args, argv):
    t0 = time.perf_counter()
    s = io.load_series(args.input)
    cfg = segmentation.FitConfig(restarts=args.restarts, max_iter=args.max_iter, seed=args.seed)
    f = segmentation.segment(s, args.delta, cfg)
    io.save_trajectory(f, args.output)
    man = _manifest(args, argv, [args.input], delta=args.delta, seed=args.seed,
                    restarts=args.restarts, max_iter=args.max_iter)
    _finish(man, t0, Path(str(args.output) + ".manifest.json"), pieces=f.num_pieces)
    print(f"{f.num_pieces} pieces -> {args.output}")
    return 0


def cmd_member(args, argv):
    t0 = time.perf_counter()
    H = io.load_adha(args.automaton)
    f = io.load_trajectory(args.trajectory)
    settings = _settings(args)
    if args.path:
        path = tuple(args.path.split(","))
        unknown = [q for q in path if q not in H.locations]
        if unknown:
            raise io.FormatError(f"unknown locations in path: {unknown}")
        if len(path) != f.num_pieces:
            raise io.FormatError(f"path has {len(path)} locations, trajectory has {f.num_pieces} pieces")
        from .membership import sreach_path

        chain, verdict = sreach_path([H.flow(q) for q in path], f, args.epsilon, m_per_piece=args.m,
                                     contraction_delta=args.contraction, path=path)
        outcome = verdict.outcome
    else:
        outcome, path, chain = synthesis.search_membership(H, f, args.epsilon, settings)
    if args.emit_sets:
        io.write_sets_csv(chain, args.emit_sets)
    print(f"{outcome.name} {','.join(path) if path else '-'}")
    if args.manifest:
        man = _manifest(args, argv, [args.automaton, args.trajectory], epsilon=args.epsilon,
                        m=args.m, contraction=args.contraction, path=args.path)
        _finish(man, t0, Path(args.manifest), outcome=outcome.name, path=list(path or ()))
    return MEMBER_CODES[outcome]


def cmd_synthesize(args, argv):
    t0 = time.perf_counter()
    F = [io.load_trajectory(p) for p in args.input]
    H0 = io.load_adha(args.resume) if args.resume else None
    H, stats = synthesis.synthesize(F, args.epsilon, H0, _settings(args))
    io.save_adha(H, args.output)
    if args.stats:
        with open(args.stats, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trajectory", "explored", "wall_time", "locations", "transitions", "path", "mod"])
            for s in stats:
                w.writerow([s.index, s.explored, f"{s.seconds:.6f}", s.n_locations, s.n_transitions,
                            " ".join(s.path), "/".join(map(str, s.mod))])
    man = _manifest(args, argv, list(args.input) + ([args.resume] if args.resume else []),
                    epsilon=args.epsilon, m=args.m, contraction=args.contraction)
    _finish(man, t0, Path(str(args.output) + ".manifest.json"), locations=len(H.locations),
            transitions=len(H.transitions), explored=sum(s.explored for s in stats),
            paths=[list(s.path) for s in stats])
    print(f"|Q|={len(H.locations)} |E|={len(H.transitions)} -> {args.output}")
    return 0


def _sim_config(args, H) -> simulation.SimConfig:
    init_loc, init_set = None, None
    if args.initial_location:
        init_loc = args.initial_location
        if init_loc not in H.locations:
            raise io.FormatError(f"unknown initial location {init_loc}")
    if args.initial_box:
        lo_hi = _floats(args.initial_box)
        n = H.dimension
        if len(lo_hi) != 2 * n:
            raise UsageError(f"--initial-box needs {2 * n} numbers: lo1..lon,hi1..hin")
        from .geometry import Polytope

        init_set = Polytope.box(lo_hi[:n], lo_hi[n:])
    return simulation.SimConfig(args.path_length, args.max_dwell, args.time_step, args.perturbation,
                                args.seed, init_loc, init_set)


def cmd_simulate(args, argv):
    t0 = time.perf_counter()
    H = models.MODELS[args.automaton]() if args.automaton in models.MODELS else io.load_adha(args.automaton)
    cfg = _sim_config(args, H)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = simulation.sample_corpus(H, args.count, cfg, unperturbed_first=not args.perturb_first)
    with open(out / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "file", "path", "switch_times"])
        for k, e in enumerate(runs):
            name = f"traj_{k:04d}.json"
            io.save_trajectory(e.trajectory, out / name)
            w.writerow([k, name, " ".join(e.path), " ".join(repr(t) for t in e.trajectory.switch_times)])
    man = _manifest(args, argv, [args.automaton], seed=args.seed, count=args.count,
                    path_length=args.path_length, max_dwell=args.max_dwell,
                    time_step=args.time_step, perturbation=args.perturbation)
    _finish(man, t0, out / "run.manifest.json", executions=len(runs))
    print(f"{len(runs)} executions -> {out}")
    return 0


def bench_corpus(model: str, count: int, seed: int):
    H = models.MODELS[model]()
    if model == "gearbox":
        q0, P0 = models.GEARBOX_START
        cfg = simulation.SimConfig(seed=seed, max_perturbation=1e-4, initial_location=q0, initial_set=P0)
    else:
        cfg = simulation.SimConfig(seed=seed)
    return [e.trajectory for e in simulation.sample_corpus(H, count, cfg)]


def cmd_bench(args, argv):
    t0 = time.perf_counter()
    count = args.count or (100 if args.model == "heater" else 10)
    F = bench_corpus(args.model, count, args.seed)
    rows = []
    for eps in _floats(args.epsilons):
        t = time.perf_counter()
        H, stats = synthesis.synthesize(F, eps, settings=_settings(args))
        rows.append([args.model, eps, f"{time.perf_counter() - t:.3f}", len(H.locations),
                     len(H.transitions), sum(s.explored for s in stats)])
        print(f"{args.model} eps={eps}: |Q|={rows[-1][3]} |E|={rows[-1][4]} "
              f"explored={rows[-1][5]} {rows[-1][2]}s", flush=True)
    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "epsilon", "seconds", "locations", "transitions", "explored"])
        w.writerows(rows)
    man = _manifest(args, argv, [], model=args.model, count=count, seed=args.seed,
                    epsilons=args.epsilons, m=args.m, contraction=args.contraction)
    _finish(man, t0, Path(str(args.output) + ".manifest.json"), rows=len(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adhasynth", description=__doc__)
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap (falls back to ADHA_SYNTH_THREADS); runs are sequential")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def search_flags(sp):
        sp.add_argument("--m", type=int, default=None, help="reach samples per piece")
        sp.add_argument("--contraction", type=float, default=None, help="contraction step (default eps/10)")

    s = sub.add_parser("segment")
    s.add_argument("--input", required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=int, default=200)
    s.add_argument("--max-iter", type=int, default=500)
    s.set_defaults(run=cmd_segment)

    s = sub.add_parser("member")
    s.add_argument("--automaton", required=True)
    s.add_argument("--trajectory", required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--path", default=None, help="comma separated locations")
    s.add_argument("--emit-sets", default=None)
    s.add_argument("--manifest", default=None)
    search_flags(s)
    s.set_defaults(run=cmd_member)

    s = sub.add_parser("synthesize")
    s.add_argument("--input", nargs="+", required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--resume", default=None)
    s.add_argument("--stats", default=None)
    search_flags(s)
    s.set_defaults(run=cmd_synthesize)

    s = sub.add_parser("simulate")
    s.add_argument("--automaton", required=True, help="automaton JSON or a built-in model name")
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--path-length", type=int, default=6)
    s.add_argument("--max-dwell", type=float, default=7.0)
    s.add_argument("--time-step", type=float, default=0.05)
    s.add_argument("--perturbation", type=float, default=1e-3)
    s.add_argument("--perturb-first", action="store_true", help="also perturb execution 0")
    s.add_argument("--initial-location", default=None)
    s.add_argument("--initial-box", default=None, help="lo1,..,lon,hi1,..,hin")
    s.set_defaults(run=cmd_simulate)

    s = sub.add_parser("bench")
    s.add_argument("--model", choices=sorted(models.MODELS), required=True)
    s.add_argument("--epsilons", default="0.1,0.07,0.04,0.01")
    s.add_argument("--count", type=int, default=None)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--output", default="bench.csv")
    search_flags(s)
    s.set_defaults(run=cmd_bench)
    return p


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EX_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if _threads(args) < 1:
            raise UsageError("--threads must be positive")
        return args.run(args, argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EX_USAGE
    except (io.FormatError, OSError, segmentation.NoFeasiblePiece, segmentation.TooFewSamples,
            simulation.EmptyInvariant, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EX_DATAERR
    except Exception as e:  # invariant failures inside the library
        log.exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return EX_SOFTWARE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
