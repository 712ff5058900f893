"""Maximal-operator norm ratios under lattice refinement on the exponent grid.

For each exponent set the same seeded corpus is embedded into finer and finer
lattices; a ratio that settles (small drift) is consistent with boundedness,
one that keeps growing is not.

    python3 scripts/refinement_stability.py --refinements 4 --out results/refinement
"""

import argparse
from pathlib import Path

from bmkit.cli import write_atomic
from bmkit.experiments import REFINEMENT_COLUMNS, refinement_table, to_csv
from bmkit.grid import ExponentSet
from bmkit.lattice import LatticeConfig
from bmkit.verify import GRID


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--refinements", type=int, default=4)
    ap.add_argument("--base-J", type=int, default=4)
    ap.add_argument("--corpus", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--literal-eta", action="store_true",
                    help="use eta = (1 + min(p', q'))/2 instead of (1 + min(r', q'))/2")
    ap.add_argument("--out", type=Path, default=Path("results/refinement"))
    args = ap.parse_args()
    base = LatticeConfig(1, args.base_J, 0, True)
    for p, t, r, q in GRID:
        e = ExponentSet(p, t, r, q)
        cap = min(e.p_conj, e.q_conj) if args.literal_eta else min(e.r_conj, e.q_conj)
        rows = refinement_table(e, base, args.refinements, args.corpus, 3, args.seed, etas=(1.0, (1.0 + cap) / 2))
        name = f"p{p}_t{t}_r{r}_q{q}.csv"
        write_atomic(args.out / name, to_csv(rows, REFINEMENT_COLUMNS))
        final = [row for row in rows if row["extra"] == args.refinements]
        worst = max(final, key=lambda row: abs(row["drift"]))
        print(f"{name:28s} worst final drift {worst['drift']:+.4f} ({worst['quantity']})")


if __name__ == "__main__":
    main()
