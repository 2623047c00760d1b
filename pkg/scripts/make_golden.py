"""Regenerate the packaged golden fixtures.

``pauli_jordan_3d.csv`` holds timelike values of the undamped commutator
function from an oracle independent of the package quadrature: mpmath's
``quadosc`` (tanh-sinh on panels between zeros, with series acceleration)
at 25 digits.

``covariant_scan_d3.csv`` is the CLI scan of the covariant model with its
default settings.  It is written only after the covariant integrand has
been checked against a per-mode dense operator evolution on a fine
one-dimensional grid.

Run from the repository root:  python3 scripts/make_golden.py
"""

import argparse
import csv
import io
import json
from pathlib import Path

import mpmath as mp
import numpy as np

from relqme import cli, fockspace as fs, propagators as pr

DATA = Path(__file__).resolve().parents[1] / "src" / "relqme" / "data"
TIMELIKE = [(2.0, 0.5), (1.5, 0.3), (3.0, 1.0), (1.2, 0.7), (-2.0, 0.5), (4.0, 2.5)]


def oracle_delta3(dt, r, m=1.0):
    mp.mp.dps = 25

    def piece(sign):
        f = lambda p: p / mp.sqrt(p * p + m * m) * mp.cos(p * r + sign * dt * mp.sqrt(p * p + m * m))
        return mp.quadosc(f, [0, mp.inf], omega=abs(r + sign * dt))

    return float(-(piece(-1) - piece(1)) / (4 * mp.pi ** 2 * r))


def check_covariant_integrand():
    model = pr.ModelSpec("COVARIANT", 1.0, kappa=0.5)
    grid = fs.ModeGrid(1, 100.0, 2048, 1.0)
    factors = lambda e, t: pr.dense_mode_factors(e, 0.5 * e, t, dim_f=2)
    for r in (1.5, 2.0, 3.0):
        g = pr.grid_commutator(grid, model, "PHIPHI", 1.0, 0.0, [r], mode_factor=factors)
        c = pr.commutator(model, "PHIPHI", 1.0, 0.0, pr.Separation(1.0, r, 1)).value
        assert abs(g - c) < 1e-8, (r, g, c)


def main():
    with open(DATA / "pauli_jordan_3d.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dt", "r", "delta"])
        for dt, r in TIMELIKE:
            w.writerow([f"{dt:.17g}", f"{r:.17g}", f"{oracle_delta3(dt, r):.17g}"])

    check_covariant_integrand()
    out = io.StringIO()
    code = cli.run(["causality-scan", "--model", "covariant", "--out", str(DATA / "covariant_scan_d3.csv")],
                   stdout=out)
    assert code == 0, code

    manifest = {
        "pauli_jordan_3d.csv": {"abs": 1e-10, "rel": 0.0},
        "covariant_scan_d3.csv": {"abs": 1e-11, "rel": 1e-8},
    }
    (DATA / "tolerances.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    argparse.ArgumentParser(description=__doc__.splitlines()[0]).parse_args()
    main()
