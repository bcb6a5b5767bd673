"""Solver quality and speed on planted and square instances, checked against the grid oracle.

    python3 scripts/solver_benchmark.py --instances 10 --oracle-steps 20
"""

import argparse
import itertools
import time

import numpy as np

from extreme_effect.oracle import GridSpec, brute_force_min_det
from extreme_effect.solver import SolverConfig, solve_extreme
from extreme_effect.core import SourceDistributions
from extreme_effect.synth import PlantSpec, plant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--starts", type=int, default=SolverConfig().starts)
    ap.add_argument("--oracle-steps", type=int, default=20, help="0 disables the K=3 oracle check")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = SolverConfig(starts=args.starts, seed=args.seed, use_shortcuts=False)

    for K in (2, 3, 4):
        t0, worst = time.perf_counter(), 0.0
        for s in range(args.instances):
            rng = np.random.default_rng([args.seed, K, s])
            D = rng.dirichlet(np.ones(K), size=K)
            res = solve_extreme(SourceDistributions.from_rows(D), cfg)
            dist = min(np.max(np.abs(res.decomposition.P - D[:, list(p)]))
                       for p in itertools.permutations(range(K)))
            worst = max(worst, dist)
        print(f"square K={K}: max distance to D (up to column order) {worst:.2e}, "
              f"{(time.perf_counter() - t0) / args.instances:.2f}s/solve")

    for K in (3, 4):
        t0, worst = time.perf_counter(), -np.inf
        for s in range(args.instances):
            N = int(np.random.default_rng([args.seed, 9, s]).integers(K + 1, 33))
            inst = plant(PlantSpec(K, N, seed=1000 * K + s))
            worst = max(worst, solve_extreme(inst.src, cfg).objective - abs(inst.P_star.det))
        print(f"planted K={K}: max(objective - |det P*|) {worst:.2e}, "
              f"{(time.perf_counter() - t0) / args.instances:.2f}s/solve")

    if args.oracle_steps:
        t0, worst = time.perf_counter(), -np.inf
        for s in range(min(args.instances, 5)):
            inst = plant(PlantSpec(3, 4 + s % 3, seed=2000 + s))
            o = brute_force_min_det(inst.src, GridSpec(args.oracle_steps)).objective
            worst = max(worst, solve_extreme(inst.src, cfg).objective - o)
        print(f"K=3 vs grid oracle (steps={args.oracle_steps}): max(solver - oracle) {worst:.2e}, "
              f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
