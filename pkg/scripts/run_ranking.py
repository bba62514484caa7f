"""Head-to-head dead-node ratios of every solver over a desk-scale instance set.

    python3 scripts/run_ranking.py --sizes 25 50 --orders 1 2 3 4 5 --out ranking.csv
"""
import argparse
from statistics import median

from wrsn.bench import run_bench
from wrsn.instances import DISTRIBUTIONS, GeneratorSpec, generate_instance
from wrsn.model import write_results
from wrsn.solvers import ALGORITHMS, SolverConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[25, 50])
    ap.add_argument("--orders", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--evals", type=int, default=5000, help="path and time evaluation budget")
    ap.add_argument("--seeds", type=int, nargs="+", default=[1])
    ap.add_argument("--out", default="ranking.csv")
    args = ap.parse_args()

    insts = [generate_instance(GeneratorSpec(d, n, o)) for n in args.sizes for d in DISTRIBUTIONS for o in args.orders]
    cfg = SolverConfig(path_evals=args.evals, time_evals=args.evals)
    rows = run_bench(insts, list(ALGORITHMS), args.seeds, cfg)
    write_results(rows, args.out)

    by_algo = {a: [r.dead_ratio for r in rows if r.algorithm == a] for a in ALGORITHMS}
    # average rank per instance/seed, ties share the mean rank
    ranks = {a: [] for a in ALGORITHMS}
    for key in {(r.instance, r.seed) for r in rows}:
        vals = {r.algorithm: r.dead_ratio for r in rows if (r.instance, r.seed) == key}
        for a, v in vals.items():
            below = sum(x < v for x in vals.values())
            ties = sum(x == v for x in vals.values())
            ranks[a].append(below + (ties + 1) / 2)
    for a in ALGORITHMS:
        print(f"{a:7s} median dead {median(by_algo[a]):6.2f}%  mean rank {sum(ranks[a]) / len(ranks[a]):.2f}")
    print(f"{len(rows)} rows -> {args.out}")


if __name__ == "__main__":
    main()
