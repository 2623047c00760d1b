"""Solution spaces of the translation constraints for every standard momentum.

For each orbit case the script prints the solution dimension, the
singular-value gap between kept and rejected directions and the smallest
singular values, on a one-dimensional and a three-dimensional grid.  It
also reports the Hermitian-part solution under boosts.

    python3 scripts/classification_table.py
"""

import argparse

import numpy as np

from relqme import fockspace as fs
from relqme import poincare as pc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    grids = [("d=1", fs.ModeGrid(1, 64.0, 65, 1.0), 8), ("d=3", fs.ModeGrid(3, 12.0, 7, 1.0), 12)]
    for label, grid, count in grids:
        samples = pc.default_translation_samples(grid.dim, count, args.seed)
        print(f"{label}: {grid.n_modes} momenta, {count} translation samples")
        for case in pc.CASES:
            for value in (0.5, 1.0, 2.0) if case != "ZERO" else (0.0,):
                sol = pc.translation_constraint_solve(grid, pc.StandardMomentum(case, value), samples)
                smallest = ", ".join(f"{x:.1e}" for x in sol.singular_values[-3:])
                print(f"  {case:<12} {value:4g}  dim {sol.dimension}  gap {sol.gap:9.2e}  smallest sv {smallest}")
    grid = grids[0][1]
    boosts = [pc.BoostAction(e) for e in (0.3, -0.3, 0.6, -0.6)]
    ms = pc.m_constraint_solve(grid, boosts, pc.default_translation_samples(1, 8, args.seed))
    print(f"Hermitian part: dim {ms.dimension}, gap {ms.gap:.2e}, "
          f"spread of the basis vector {np.ptp(np.abs(ms.basis[:, 0])):.1e}, dropped rows {ms.dropped_rows}")


if __name__ == "__main__":
    main()
