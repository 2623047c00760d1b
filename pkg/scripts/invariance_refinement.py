"""Grid refinement of the boost checks in 1+1 dimensions.

Prints, for each grid size at fixed momentum cutoff, the residual of the
boosted dissipator for both models and the residual of the invariant-measure
check, followed by the fitted log-log slopes.  Rapidities can be swept.

    python3 scripts/invariance_refinement.py --eta 0.2 0.4 0.8
"""

import argparse

import numpy as np

from relqme import poincare as pc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eta", type=float, nargs="+", default=[0.4])
    ap.add_argument("--cutoff", type=float, default=16.0)
    ap.add_argument("--kappa", type=float, default=0.5)
    ap.add_argument("--ns", type=int, nargs="+", default=[32, 64, 128, 256, 512, 1024])
    args = ap.parse_args()
    gauss = lambda p: np.exp(-0.5 * p * p)
    for eta in args.eta:
        boost = pc.BoostAction(eta)
        check = lambda model: (lambda grid: pc.dissipator_invariance_check(
            grid, pc.wave_packet_state(grid), boost, 1.0, model, args.kappa))
        inv = pc.refinement_study(args.ns, args.cutoff, 1.0, boost, check("INVARIANT"))
        cov = pc.refinement_study(args.ns, args.cutoff, 1.0, boost, check("COVARIANT"))
        print(f"eta = {eta:g}")
        print(f"  {'n':>5} {'dp':>9} {'invariant':>10} {'covariant':>10} {'measure':>10}")
        for n, dp, ri, rc in zip(inv["n"], inv["dp"], inv["residual"], cov["residual"]):
            rm = pc.invariant_measure_check(pc.grid_with_cutoff(n, args.cutoff, 1.0), gauss, boost)
            print(f"  {n:5d} {dp:9.5f} {ri:10.3e} {rc:10.3e} {rm:10.3e}")
        print(f"  slopes: invariant {inv['slope']:.2f}, covariant {cov['slope']:.2f}")


if __name__ == "__main__":
    main()
