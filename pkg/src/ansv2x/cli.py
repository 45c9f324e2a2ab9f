"""Command-line entry point. Exit codes: 0 ok, 1 validation error, 2 solver failure."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .channel import freeze
from .harness import SOLVER_NAMES, SweepSpec, compare, export, report_to_dict, run_solver, sweep
from .model import HandoverMode, load_scenario, save_scenario, validate_scenario
from .scenario import Density, TraceError, generate, ingest_trace
from .solvers import LearnConfig

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2


class _Invalid(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


def _names(text: str) -> tuple[str, ...]:
    names = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = [x for x in names if x not in SOLVER_NAMES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown solver(s): {','.join(bad)}")
    return names


def _load(path: str, handover: str | None = None):
    try:
        s = load_scenario(path)
    except (OSError, ValueError) as exc:
        raise _Invalid(f"{path}: {exc}") from exc
    if handover:
        s = s.with_handover(mode=HandoverMode(handover))
    errors = validate_scenario(s)
    if errors:
        raise _Invalid("\n".join(errors))
    return s


def _learn(args) -> LearnConfig:
    return LearnConfig(episodes=args.episodes)


def cmd_solve(args) -> int:
    s = _load(args.scenario, args.handover)
    ch = freeze(s, args.epoch)
    try:
        r = run_solver(args.solver, ch, learn=replace(_learn(args), rng_seed=s.rng_seed))
    except Exception as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    json.dump(report_to_dict(r), sys.stdout, indent=2)
    print()
    return EXIT_OK


def cmd_compare(args) -> int:
    s = _load(args.scenario, args.handover)
    try:
        c = compare(s, args.solvers, args.epoch, learn=replace(_learn(args), rng_seed=s.rng_seed))
    except Exception as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    text = json.dumps(c.to_dict(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = SweepSpec(
        n_values=args.n,
        v_values=args.v,
        repetitions=args.reps,
        solvers=args.solvers,
        seed_base=args.seed,
        density=Density[args.density.capitalize()],
        learn=_learn(args),
    )
    rows = sweep(spec)
    export(rows, args.out)
    failed = sum(1 for r in rows if not r.feasible)
    print(f"wrote {len(rows)} rows to {args.out} ({failed} infeasible or failed)", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_SOLVER


def cmd_trace_run(args) -> int:
    base = _load(args.scenario, args.handover)
    try:
        snaps = ingest_trace(args.trace, base)
    except (OSError, TraceError) as exc:
        print(f"{args.trace}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    current = {v.id: v.current_network for v in base.vehicles}
    try:
        out.write("time_ms,epoch,solver,total_delay_s,mean_latency_s,utility,handovers,runtime_s,assignment\n")
        for t, snap in snaps:
            snap = replace(snap, vehicles=tuple(replace(v, current_network=current[v.id]) for v in snap.vehicles))
            errors = validate_scenario(snap)
            if errors:
                print("\n".join(errors), file=sys.stderr)
                return EXIT_INVALID
            try:
                r = run_solver(args.solver, freeze(snap), learn=replace(_learn(args), rng_seed=snap.rng_seed))
            except Exception as exc:
                print(f"solver failure at t={t}: {exc}", file=sys.stderr)
                return EXIT_SOLVER
            choices = r.assignment.choices()
            switches = sum(1 for v, c in zip(snap.vehicles, choices) if c != current[v.id])
            for v, c in zip(snap.vehicles, choices):
                current[v.id] = c
            out.write(
                f"{t},{snap.epoch},{r.solver},{r.total_delay:.9g},{r.mean_latency:.9g},"
                f"{r.total_utility:.9g},{switches},{r.solver_runtime:.9g},{' '.join(map(str, choices))}\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        s = generate(Density[args.density.capitalize()], args.area_km2, args.n, seed=args.seed)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    if args.handover:
        s = s.with_handover(mode=HandoverMode(args.handover))
    save_scenario(s, args.out)
    print(f"wrote {args.out}: {s.n_networks - 1} candidate networks, {s.n_vehicles} vehicles", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ansv2x", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--handover", choices=["sampled", "expected"])
        sp.add_argument("--episodes", type=int, default=LearnConfig.episodes, help="Q-learning episodes")

    sp = sub.add_parser("solve", help="solve one scenario file")
    sp.add_argument("scenario")
    sp.add_argument("--solver", choices=SOLVER_NAMES, default="ans")
    sp.add_argument("--epoch", type=int)
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("compare", help="run every solver on one frozen channel")
    sp.add_argument("scenario")
    sp.add_argument("--solvers", type=_names, default=SOLVER_NAMES)
    sp.add_argument("--epoch", type=int)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sweep", help="Monte Carlo sweep over (N, V)")
    sp.add_argument("--n", type=_ints, default=(2, 3, 4, 5))
    sp.add_argument("--v", type=_ints, default=(5, 7, 9, 12))
    sp.add_argument("--reps", type=int, default=30)
    sp.add_argument("--solvers", type=_names, default=SOLVER_NAMES)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--density", choices=["low", "medium", "high"], default="medium")
    sp.add_argument("--out", default="results.csv")
    sp.add_argument("--episodes", type=int, default=LearnConfig.episodes, help="Q-learning episodes")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("trace-run", help="replay a mobility trace epoch by epoch")
    sp.add_argument("trace")
    sp.add_argument("scenario")
    sp.add_argument("--solver", choices=SOLVER_NAMES, default="ans")
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_trace_run)

    sp = sub.add_parser("gen", help="generate a random scenario file")
    sp.add_argument("--density", choices=["low", "medium", "high"], default="medium")
    sp.add_argument("--area-km2", type=float, default=0.05)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--handover", choices=["sampled", "expected"])
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except _Invalid as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
