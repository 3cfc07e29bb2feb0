"""Time mean-field iterations over a sweep of (M, K, B) at a fixed event budget.

    python scripts/run_scaling.py --events 2000 --nodes 20

Per-iteration cost is compared with the M * Q * D^2 work model
(Q quadrature nodes, D = M*B + 1 features).
"""
import argparse
import itertools
import time

from fshawkes.design import Design
from fshawkes.meanfield import run_meanfield
from fshawkes.simulator import random_problem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, nargs="+", default=[5, 10, 20])
    ap.add_argument("--K", type=int, nargs="+", default=[2, 5, 10])
    ap.add_argument("--B", type=int, nargs="+", default=[2, 4, 6])
    ap.add_argument("--events", type=int, default=2000)
    ap.add_argument("--nodes", type=int, default=20)
    ap.add_argument("--iterations", type=int, default=3)
    ap.add_argument("--full", action="store_true", help="also time a fit to convergence")
    args = ap.parse_args()

    print("M,K,B,n_events,features,nodes,setup_s,per_iteration_s,work,full_fit_s")
    for M, K, B in itertools.product(args.M, args.K, args.B):
        data, cfg = random_problem(M, K, B, n_events=args.events)
        t0 = time.perf_counter()
        design = Design.build(data, cfg.basis, args.nodes)
        setup = time.perf_counter() - t0
        t0 = time.perf_counter()
        run_meanfield(data, cfg.basis, design=design, max_iterations=args.iterations, tol=0.0)
        per_it = (time.perf_counter() - t0) / args.iterations
        Q, D = design.node_features.shape
        full = ""
        if args.full:
            t0 = time.perf_counter()
            run_meanfield(data, cfg.basis, design=design)
            full = f"{time.perf_counter() - t0:.1f}"
        print(f"{M},{K},{B},{data.n_events},{D},{Q},{setup:.2f},{per_it:.3f},{M * Q * D * D},{full}",
              flush=True)


if __name__ == "__main__":
    main()
