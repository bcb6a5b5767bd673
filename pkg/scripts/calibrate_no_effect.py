"""Measure the A/A noise ratio that the no-effect threshold is set against.

Both arms are drawn from one distribution; the ratio of their total-variation
distance to its expected sampling value is recorded for every seed. The CLI
threshold (extreme_effect.cli.NO_EFFECT_THRESHOLD) must sit well above the
maximum printed here.

    python3 scripts/calibrate_no_effect.py --seeds 20 --sizes 1000 10000 100000
"""

import argparse
import time

import numpy as np

from extreme_effect.binary import solve_binary
from extreme_effect.cli import NO_EFFECT_THRESHOLD, noise_ratio
from extreme_effect.ingest import BinningConfig, ObservationRecord, empirical_distributions

METRICS = {
    "lognormal": lambda rng, n: rng.lognormal(1.0, 1.0, size=n),
    "counts": lambda rng, n: rng.poisson(3.0, size=n).astype(float),
    "binary": lambda rng, n: rng.integers(0, 2, size=n).astype(float),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 10000, 100000])
    ap.add_argument("--n-bins", type=int, default=64)
    args = ap.parse_args()
    cfg = BinningConfig(n_bins=args.n_bins)
    overall = 0.0
    print(f"{'metric':10} {'n/arm':>8} {'max ratio':>10} {'mean ratio':>10} {'max alpha':>10}")
    for kind, draw in METRICS.items():
        for n in args.sizes:
            t0 = time.perf_counter()
            ratios, alphas = [], []
            for seed in range(args.seeds):
                x = draw(np.random.default_rng(seed), 2 * n)
                recs = [ObservationRecord(f"u{i}", "A" if i < n else "B", v) for i, v in enumerate(x)]
                er = empirical_distributions(recs, cfg)
                ratios.append(noise_ratio(er))
                alphas.append(solve_binary(er.src.probs[0], er.src.probs[1]).alpha)
            overall = max(overall, max(ratios))
            print(f"{kind:10} {n:8d} {max(ratios):10.3f} {np.mean(ratios):10.3f} {max(alphas):10.4f}"
                  f"   ({time.perf_counter() - t0:.1f}s)")
    print(f"max A/A ratio {overall:.3f}; configured threshold {NO_EFFECT_THRESHOLD}")


if __name__ == "__main__":
    main()
