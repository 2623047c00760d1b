import io

import numpy as np
import pytest
from scipy import special

from relqme import cli, fockspace as fs
from relqme import propagators as pr
from relqme.errors import ClassificationError, ValidationError

INV = lambda gamma: pr.ModelSpec("INVARIANT", 1.0, gamma=gamma)
COV = pr.ModelSpec("COVARIANT", 1.0, kappa=0.5)


def test_separation_classification():
    assert pr.Separation(0.5, 2.0).classification == "spacelike"
    assert pr.Separation(2.0, 0.5).classification == "timelike"
    assert pr.Separation(-1.0, 1.0).classification == "lightlike"
    with pytest.raises(ValidationError):
        pr.Separation(0.0, -1.0)


def test_pauli_jordan_equal_time_vanishes():
    for r in (0.3, 1.0, 4.0):
        assert abs(pr.pauli_jordan(1.0, pr.Separation(0.0, r))) < 1e-8


def test_pauli_jordan_spacelike_vanishes():
    assert abs(pr.pauli_jordan(1.0, pr.Separation(0.5, 2.0))) < 1e-6


def test_pauli_jordan_golden_timelike():
    rows, tol = cli.load_golden("pauli_jordan_3d.csv")
    for row in rows:
        sep = pr.Separation(float(row["dt"]), float(row["r"]), 3)
        assert abs(pr.pauli_jordan(1.0, sep) - float(row["delta"])) < tol["abs"]


def test_pauli_jordan_bessel_closed_forms():
    for dt, r in ((2.0, 0.5), (3.0, 1.0), (1.1, 0.2)):
        s = np.sqrt(dt * dt - r * r)
        assert abs(pr.pauli_jordan(1.0, pr.Separation(dt, r, 3)) - special.j1(s) / (4 * np.pi * s)) < 1e-12
        assert abs(pr.pauli_jordan(1.0, pr.Separation(dt, r, 1)) + 0.5 * special.j0(s)) < 1e-12


def test_pi_kernels_frozen_values():
    # -∂²Δ/∂dt² and -∂Δ/∂dt of the Bessel forms, 30-digit mpmath differentiation
    inv = INV(0.0)
    cases = [((2.0, 0.5, 3), {"PIPI": 0.0019654860835291588646, "PHIPI": 0.014362128807291597899}),
             ((2.0, 0.5, 1), {"PHIPHI": -0.13031523848618753097, "PIPI": 0.030722292252563683914,
                              "PHIPI": -0.29951508230205361815})]
    for (dt, r, d), values in cases:
        for kind, v in values.items():
            res = pr.commutator(inv, kind, dt, 0.0, pr.Separation(dt, r, d))
            assert abs(res.value - 1j * v) < 1e-10, kind


def test_mass_scaling():
    # Δ_m(dt, r) = m² Δ_1(m dt, m r) in three dimensions
    m = 2.0
    got = pr.commutator_kernel("PHIPHI", pr.Separation(1.0, 0.25), m)[0]
    ref = m * m * pr.pauli_jordan(1.0, pr.Separation(2.0, 0.5))
    assert abs(got - ref) < 1e-12


@pytest.mark.parametrize("kind", pr.KINDS)
@pytest.mark.parametrize("gamma", [0.0, 0.5, 2.0])
def test_invariant_spacelike_vanishing(kind, gamma):
    for dt, r in ((0.5, 2.0), (1.0, 1.3), (-2.0, 2.1), (0.0, 0.7)):
        res = pr.commutator(INV(gamma), kind, max(dt, 0) + 1.0, max(-dt, 0) + 1.0, pr.Separation(dt, r))
        assert res.classification == "spacelike"
        assert abs(res.value) < 1e-6


def test_invariant_damping_factorisation():
    gamma, x0, y0 = 0.8, 2.5, 0.3
    for r in (0.0, 0.5, 1.7):
        sep = pr.Separation(x0 - y0, r)
        ratio = pr.commutator(INV(gamma), "PHIPHI", x0, y0, sep).value / pr.pauli_jordan(1.0, sep)
        assert abs(ratio - 1j * np.exp(-gamma * (x0 + y0) / 2)) < 1e-8 * abs(ratio)


def test_antisymmetry_under_exchange():
    sep = pr.Separation(1.2, 0.4)
    a = pr.commutator(COV, "PHIPHI", 1.5, 0.3, sep).value
    b = pr.commutator(COV, "PHIPHI", 0.3, 1.5, pr.Separation(-1.2, 0.4)).value
    assert abs(a + b) < 1e-12


def test_boost_orbit_in_one_dimension():
    s = 1.3
    for eta in np.linspace(-1.2, 1.2, 7):
        dt, x = s * np.sinh(eta), s * np.cosh(eta)
        sep = pr.Separation(dt, abs(x), 1)
        x0, y0 = max(dt, 0.0), max(-dt, 0.0)
        assert abs(pr.commutator(INV(0.5), "PHIPHI", x0, y0, sep).value) < 1e-8


def test_lightlike_separation_reported():
    res = pr.commutator(INV(0.0), "PHIPHI", 1.0, 0.0, pr.Separation(1.0, 1.0))
    assert res.classification == "lightlike" and np.isnan(res.value)


def test_time_consistency_enforced():
    with pytest.raises(ValidationError):
        pr.commutator(INV(0.0), "PHIPHI", 1.0, 0.0, pr.Separation(0.5, 2.0))
    with pytest.raises(ValidationError):
        pr.commutator(INV(0.0), "PSI", 1.0, 0.0, pr.Separation(1.0, 2.0))


def test_equal_time_grid_commutator():
    grid = fs.ModeGrid(1, 32.0, 64, 1.0)
    for t in (0.0, 1.0, 3.0):
        v = pr.grid_commutator(grid, INV(0.5), "PHIPI", t, t, [0.0])
        expected = 1j * np.exp(-0.5 * t) / grid.cell_volume
        assert abs(v - expected) < 1e-8 * abs(expected)


# covariant model ------------------------------------------------------------

FINE = fs.ModeGrid(1, 200.0, 8192, 1.0)


def dense_factors(e, t):
    return pr.dense_mode_factors(e, 0.5 * e, t, dim_f=2)


def test_dense_mode_factors_match_closed_form():
    e = np.array([1.0, 1.5, 3.0])
    got = pr.dense_mode_factors(e, 0.5 * e, 0.7, dim_f=4)
    assert np.abs(got - COV.mode_factor(e, 0.7)).max() < 1e-13


@pytest.mark.parametrize("kind", pr.KINDS)
def test_covariant_integrand_against_mode_evolution_1d(kind):
    scale = {"PHIPHI": 1e-8, "PHIPI": 1e-8, "PIPI": 1e-7}[kind]
    for r in (1.5, 2.0, 3.0):
        g = pr.grid_commutator(FINE, COV, kind, 1.0, 0.0, [r], mode_factor=dense_factors)
        c = pr.commutator(COV, kind, 1.0, 0.0, pr.Separation(1.0, r, 1)).value
        assert abs(g - c) < scale


def test_covariant_integrand_against_mode_evolution_3d():
    # Angular integration leaves (1/2π²r) ∫ p sin(pr) Im(F(x0) F(y0)*) / E dp;
    # evaluate it as a trapezoid sum over the fine grid with dense-evolved factors.
    p, e = FINE.momenta[:, 0], FINE.energies
    f = dense_factors(e, 1.0) * np.conj(dense_factors(e, 0.0))
    for r in (1.5, 2.0, 3.0):
        oracle = 0.5 * np.sum(FINE.dp * p * np.sin(p * r) * f.imag / e) / (2 * np.pi ** 2 * r)
        c = pr.commutator(COV, "PHIPHI", 1.0, 0.0, pr.Separation(1.0, r, 3)).value
        assert abs(c - 1j * oracle) < 1e-9


def test_covariant_frozen_values():
    # frozen from the dense mode-evolution sum (L=200, n=8192), which the
    # quadrature reproduces to 4e-17
    res1 = pr.commutator(COV, "PHIPHI", 1.0, 0.0, pr.Separation(1.0, 1.5, 1))
    assert abs(res1.value - (-0.03059715363242823j)) < 1e-11


def test_covariant_violation_just_outside_lightcone():
    ref = pr.commutator(COV, "PHIPHI", 1.0, 0.0, pr.Separation(1.0, 0.5)).value
    out = pr.commutator(COV, "PHIPHI", 1.0, 0.0, pr.Separation(1.0, 1.5)).value
    assert abs(out) > 1e-3 * abs(ref)


def test_covariant_kappa_zero_is_free():
    free = pr.ModelSpec("COVARIANT", 1.0, kappa=0.0)
    seps = pr.spacelike_separations(1.0, np.linspace(0.1, 3.0, 12))
    assert pr.causality_scan(free, "PHIPHI", 1.0, 0.0, seps).violation_length == 0.0


def test_scan_rejects_timelike_points():
    with pytest.raises(ClassificationError):
        pr.causality_scan(INV(0.0), "PHIPHI", 1.0, 0.0, [pr.Separation(1.0, 0.5)])


def test_scan_csv_format():
    seps = pr.spacelike_separations(1.0, [0.5, 1.0])
    scan = pr.causality_scan(COV, "PHIPHI", 1.0, 0.0, seps)
    text = pr.scan_rows_csv(scan.rows)
    lines = text.strip().splitlines()
    assert lines[0] == "dt,r,classification,re,im,err"
    fields = lines[1].split(",")
    assert fields[2] == "spacelike" and len(fields) == 6
    assert float(fields[4]) == scan.rows[0].result.value.imag
