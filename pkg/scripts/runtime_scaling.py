"""Runtime and search-size scaling of the solvers against V*N.

Prints one line per (n, v) cell plus log-log slopes, for both B&B bounds.
"""
import argparse
from statistics import mean

import numpy as np

from ansv2x.channel import freeze
from ansv2x.harness import SweepSpec
from ansv2x.solvers import solve_ans, solve_bnb
from ansv2x.solvers.bnb import lp_bound


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--lp", action="store_true", help="also time the LP-relaxation bound (needs scipy)")
    args = ap.parse_args()

    spec = SweepSpec(v_values=(5, 7, 9, 12, 15), repetitions=args.reps)
    print("n  v   ans_ms  milp_ms  nodes    ratio" + ("  lp_ms" if args.lp else ""))
    xs, ans_t, node_counts = [], [], []
    for n in spec.n_values:
        for v in spec.v_values:
            a, b, nodes, lp = [], [], [], []
            for rep in range(spec.repetitions):
                ch = freeze(spec.scenario(n, v, rep))
                a.append(solve_ans(ch.scenario, channel=ch).solver_runtime)
                r = solve_bnb(ch.scenario, channel=ch)
                b.append(r.solver_runtime)
                nodes.append(r.nodes_explored)
                if args.lp:
                    lp.append(solve_bnb(ch.scenario, channel=ch, bound=lp_bound).solver_runtime)
            line = f"{n}  {v:<3} {mean(a) * 1e3:7.3f}  {mean(b) * 1e3:7.3f}  {mean(nodes):7.0f}  {mean(b) / mean(a):6.2f}"
            if args.lp:
                line += f"  {mean(lp) * 1e3:7.2f}"
            print(line)
            xs.append(n * v)
            ans_t.append(mean(a))
            node_counts.append(mean(nodes))
    lx = np.log(xs)
    print(f"ANS runtime slope vs V*N: {np.polyfit(lx, np.log(ans_t), 1)[0]:.3f}")
    print(f"B&B nodes slope vs V*N:   {np.polyfit(lx, np.log(node_counts), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
