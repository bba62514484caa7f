"""Parameter sweeps on uniform instances: dead-node ratio against p, U, E_MC and n.

    python3 scripts/run_trends.py --sweep p=0.8,1.1,1.4,1.7,2.0 --sweep U=2,5,10,15,25 --out trends.csv
"""
import argparse

from wrsn import bench
from wrsn.instances import GeneratorSpec, generate_instance
from wrsn.model import write_results
from wrsn.solvers import SolverConfig

DEFAULT_SWEEPS = ["p=0.8,1.1,1.4,1.7,2.0", "U=2,5,10,15,25", "E_MC=13500,27000,54000,81000,108000"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--orders", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--algo", nargs="+", default=["mtbcs", "mlsga", "greedy"])
    ap.add_argument("--evals", type=int, default=2000)
    ap.add_argument("--sweep", action="append", help="KEY=v1,v2,... (repeatable); n sweeps start from n=100")
    ap.add_argument("--out", default="trends.csv")
    args = ap.parse_args()

    cfg = SolverConfig(path_evals=args.evals, time_evals=args.evals)
    rows = []
    for text in args.sweep or DEFAULT_SWEEPS:
        key, values = bench.parse_sweep(text)
        size = 100 if key == "n" else args.n
        insts = [generate_instance(GeneratorSpec("uniform", size, o)) for o in args.orders]
        rows += bench.run_bench(insts, args.algo, [1], cfg, sweeps=[(key, values)])
    write_results(rows, args.out)
    print(bench.write_report(bench.aggregate(rows)), end="")


if __name__ == "__main__":
    main()
