"""Recover (m, M) from published extreme coefficients and recompute alpha, beta.

An extreme point (p_A, p_B) lies on both boundary lines p_B = M p_A and
1 - p_B = m (1 - p_A), which gives M = p_B / p_A and m = (1 - p_B) / (1 - p_A).

    python3 scripts/published_rows.py
"""

import argparse

from extreme_effect.binary import BinaryBounds, extreme_coefficients

ROWS = {
    "exp1": {"p_A": 0.5617, "p_B": 0.5805, "alpha": 0.0188, "beta": 0.0336},
    "exp2": {"p_A": 0.3862, "p_B": 0.4131, "alpha": 0.0269, "beta": 0.0696},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.parse_args()
    print(f"{'row':5} {'m':>8} {'M':>8} {'p_A':>8} {'p_B':>8} {'alpha':>8} {'beta':>8}  |d_alpha| |d_beta|")
    for name, r in ROWS.items():
        M, m = r["p_B"] / r["p_A"], (1 - r["p_B"]) / (1 - r["p_A"])
        e = extreme_coefficients(BinaryBounds(m, M))
        print(f"{name:5} {m:8.5f} {M:8.5f} {e.p_A:8.4f} {e.p_B:8.4f} {e.alpha:8.4f} {e.beta:8.4f}"
              f"  {abs(e.alpha - r['alpha']):.1e}  {abs(e.beta - r['beta']):.1e}")


if __name__ == "__main__":
    main()
