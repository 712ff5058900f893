"""Partial-norm trends of the window indicator across exponent regimes.

Writes one CSV per exponent set to ``--out`` and prints the last increment
ratio next to its predicted value.

    python3 scripts/triviality_experiment.py --J-max 12 --out results/triviality
"""

import argparse
import math
from pathlib import Path

from bmkit.cli import write_atomic
from bmkit.experiments import TRIVIALITY_COLUMNS, to_csv, triviality_table
from bmkit.grid import ExponentSet

CASES = [
    (1.5, 2.0, 3.0, 1),
    (1.5, 2.0, 8.0, 1),
    (1.5, 2.0, math.inf, 1),
    (1.5, 2.0, 2.0, 1),   # r = t: per-scale mass does not decay
    (1.5, 2.0, 1.5, 1),   # r < t
    (1.5, 2.0, 3.0, 2),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--J-max", type=int, default=12)
    ap.add_argument("--out", type=Path, default=Path("results/triviality"))
    args = ap.parse_args()
    for p, t, r, n in CASES:
        e = ExponentSet(p, t, r, n=n)
        rows = triviality_table(e, args.J_max if n == 1 else min(args.J_max, 6))
        name = f"n{n}_p{p}_t{t}_r{r}.csv"
        write_atomic(args.out / name, to_csv(rows, TRIVIALITY_COLUMNS))
        last = rows[-1]
        print(f"{name:28s} nontrivial={e.nontrivial!s:5s} partial={last['partial_norm']:.6f} "
              f"ratio={last['increment_ratio']:.6f} target={last['target_ratio']:.6f}")


if __name__ == "__main__":
    main()
