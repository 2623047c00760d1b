"""Commutator scans outside the lightcone for both models.

Writes one CSV per (model, kernel, dimension) into the output directory
and prints the violation length of each scan.  The invariant model is run
at several loss rates; the covariant model at several rate coefficients.

    python3 scripts/causality_scans.py --out results/scans
"""

import argparse
from pathlib import Path

import numpy as np

from relqme import propagators as pr


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/scans")
    ap.add_argument("--eps", type=float, default=1e-5)
    ap.add_argument("--count", type=int, default=60)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    models = [pr.ModelSpec("INVARIANT", 1.0, gamma=g) for g in (0.0, 0.5, 2.0)]
    models += [pr.ModelSpec("COVARIANT", 1.0, kappa=k) for k in (0.1, 0.5, 1.0)]
    distances = np.linspace(0.1, 6.0, args.count)
    print(f"{'model':>10} {'rate':>5} {'kernel':>7} {'d':>2} {'violation':>10} {'max|C|':>10}")
    for model in models:
        rate = model.gamma if model.model == "INVARIANT" else model.kappa
        for dim in (1, 3):
            seps = pr.spacelike_separations(1.0, distances, dim)
            for kind in pr.KINDS:
                scan = pr.causality_scan(model, kind, 1.0, 0.0, seps, args.eps, workers=args.workers)
                name = f"{model.model.lower()}_{rate:g}_{kind.lower()}_d{dim}.csv"
                (out / name).write_text(pr.scan_rows_csv(scan.rows))
                print(f"{model.model:>10} {rate:5g} {kind:>7} {dim:2d} {scan.violation_length:10.3f} "
                      f"{scan.max_abs():10.2e}")


if __name__ == "__main__":
    main()
