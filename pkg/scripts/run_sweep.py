"""Run the Monte Carlo sweep and write rows plus a per-cell summary.

    python3 scripts/run_sweep.py --reps 30 --out results/sweep.csv
"""
import argparse
import json
import logging
from pathlib import Path

from ansv2x.harness import SweepSpec, aggregate, export, sweep, utility_gaps


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="2,3,4,5")
    ap.add_argument("--v", default="5,7,9,12")
    ap.add_argument("--reps", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/sweep.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = SweepSpec(
        n_values=tuple(int(x) for x in args.n.split(",")),
        v_values=tuple(int(x) for x in args.v.split(",")),
        repetitions=args.reps,
        seed_base=args.seed,
    )
    rows = sweep(spec, progress=lambda n, v, rep: rep == spec.repetitions - 1 and logging.info("cell n=%d v=%d done", n, v))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    export(rows, out)

    gaps = utility_gaps(rows)
    summary = {
        f"{n},{v},{solver}": stats for (n, v, solver), stats in aggregate(rows).items()
    }
    for (n, v), g in gaps.items():
        summary[f"{n},{v},ans"]["utility_gap_mean"] = sum(g) / len(g)
    out.with_suffix(".summary.json").write_text(json.dumps(summary, indent=2))
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
