import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from relqme import kgsolver as kg
from relqme.errors import CFLViolationError, FitError, ValidationError


def base(**kw):
    opts = dict(mass=1.0, length=32.0, n_points=128, t_final=2.0)
    opts.update(kw)
    return kg.SolverConfig(**opts)


def test_config_validation():
    for bad in (dict(model="X"), dict(scheme="EULER"), dict(mass=0.0), dict(gamma=-1.0),
                dict(dt_step=0.0), dict(n_points=1)):
        with pytest.raises(ValidationError):
            base(**bad)


def test_state_validation():
    with pytest.raises(ValidationError):
        kg.FieldState(np.zeros(4), np.zeros(5))
    with pytest.raises(ValidationError):
        kg.FieldState(np.array([np.nan, 0.0]), np.zeros(2))


def test_periodicity_of_translated_data():
    cfg = base(gamma=0.3)
    s0 = kg.gaussian_pulse(cfg, velocity=0.4)
    shift = 17
    rolled = kg.FieldState(np.roll(s0.phi, shift), np.roll(s0.dphi, shift))
    a, b = kg.evolve(s0, cfg), kg.evolve(rolled, cfg)
    assert np.abs(np.roll(a.phi, shift) - b.phi).max() < 1e-12


def test_free_energy_conservation():
    cfg = base()
    s0 = kg.gaussian_pulse(cfg, velocity=0.2)
    k = cfg.wavenumbers

    def energy(s):
        dx = cfg.length / cfg.n_points
        grad = np.fft.ifft(1j * k * np.fft.fft(s.phi)).real
        return 0.5 * dx * np.sum(s.dphi ** 2 + grad ** 2 + s.phi ** 2)

    assert abs(energy(kg.evolve(s0, cfg, 7.3)) - energy(s0)) < 1e-11 * energy(s0)


@given(gamma=st.floats(0.0, 2.0), t=st.floats(0.0, 6.0))
@settings(deadline=None)
def test_envelope_identity_spectral(gamma, t):
    cfg = base(gamma=gamma)
    s0 = kg.gaussian_pulse(cfg, velocity=0.3)
    damped = kg.evolve(s0, cfg, t)
    free = kg.evolve(kg.free_companion(s0, cfg), cfg.free(), t)
    assert kg.envelope_check(damped, free, gamma, t) < 1e-12


def test_envelope_identity_leapfrog():
    cfg = base(gamma=0.7, scheme="LEAPFROG", dt_step=1e-3)
    s0 = kg.gaussian_pulse(cfg)
    damped = kg.evolve(s0, cfg, 2.0)
    free = kg.evolve(kg.free_companion(s0, cfg), cfg.free(), 2.0)
    assert kg.envelope_check(damped, free, 0.7, 2.0) < 1e-6


def test_free_companion_rejects_covariant():
    cfg = base(model="COVARIANT", kappa=0.2)
    with pytest.raises(ValidationError):
        kg.free_companion(kg.gaussian_pulse(cfg), cfg)


def test_invariant_norm_decays_like_envelope():
    cfg = base(gamma=1.0)
    s0 = kg.gaussian_pulse(cfg)
    norms = [kg.l2_norm(kg.evolve(s0, cfg, t), cfg) for t in (0.0, 4.0, 8.0)]
    free = [kg.l2_norm(kg.evolve(kg.free_companion(s0, cfg), cfg.free(), t), cfg) for t in (0.0, 4.0, 8.0)]
    for t, nd, nf in zip((0.0, 4.0, 8.0), norms, free):
        assert abs(nd - np.exp(-0.5 * t) * nf) < 1e-12


@pytest.mark.parametrize("model", ["INVARIANT", "COVARIANT"])
def test_leapfrog_second_order(model):
    ref_cfg = base(model=model, gamma=0.4, kappa=0.3)
    s0 = kg.gaussian_pulse(ref_cfg, velocity=0.1)
    exact = kg.evolve(s0, ref_cfg).phi
    errs = []
    for h in (0.04, 0.02, 0.01):
        lf = kg.evolve(s0, base(model=model, gamma=0.4, kappa=0.3, scheme="LEAPFROG", dt_step=h))
        errs.append(np.abs(lf.phi - exact).max())
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.6 < r < 4.4 for r in ratios), ratios


def test_cfl_refusal_suggests_stable_step():
    cfg = base(scheme="LEAPFROG", dt_step=0.5)
    s0 = kg.gaussian_pulse(cfg)
    with pytest.raises(CFLViolationError) as info:
        kg.evolve(s0, cfg)
    suggested = info.value.suggested_dt
    assert suggested < kg.cfl_limit(cfg)
    t = 50 * suggested
    out = kg.evolve(s0, base(scheme="LEAPFROG", dt_step=suggested), t)
    assert np.all(np.isfinite(out.phi)) and np.abs(out.phi).max() < 10


def test_leapfrog_rejects_fractional_step_count():
    cfg = base(scheme="LEAPFROG", dt_step=0.03)
    with pytest.raises(ValidationError):
        kg.evolve(kg.gaussian_pulse(cfg), cfg, 0.1)


def test_spectral_time_reversal():
    cfg = base(gamma=0.5)
    s0 = kg.gaussian_pulse(cfg, velocity=0.2)
    fwd = kg.evolve(s0, cfg, 3.0)
    back = kg.evolve(fwd, cfg, -3.0)
    assert np.abs(back.phi - s0.phi).max() < 1e-10
    assert np.abs(back.dphi - s0.dphi).max() < 1e-10


def test_covariant_single_mode_against_ode_solver():
    cfg = base(model="COVARIANT", kappa=0.6, t_final=3.0)
    j, k = kg.nearest_grid_wavenumber(cfg, 0.8)
    damping, w2, _ = cfg.coefficients([k])
    s0 = kg.FieldState(np.cos(k * cfg.x), np.zeros(cfg.n_points))
    sol = solve_ivp(lambda t, y: [y[1], -damping[0] * y[1] - w2[0] * y[0]], (0, 3.0), [1.0, 0.0],
                    rtol=1e-12, atol=1e-13)
    got = kg.evolve(s0, cfg).phi
    assert np.abs(got - sol.y[0, -1] * np.cos(k * cfg.x)).max() < 1e-9


def test_covariant_zero_mode_against_ode_solver():
    cfg = base(model="COVARIANT", kappa=0.6, t_final=5.0)
    s0 = kg.FieldState(np.ones(cfg.n_points), 0.3 * np.ones(cfg.n_points))
    sol = solve_ivp(lambda t, y: [y[1], -0.6 * y[1] - 1.09 * y[0]], (0, 5.0), [1.0, 0.3],
                    rtol=1e-12, atol=1e-13)
    assert np.abs(kg.evolve(s0, cfg).phi - sol.y[0, -1]).max() < 1e-9


@pytest.mark.parametrize("scheme,tol", [("SPECTRAL_EXACT", 1e-10), ("LEAPFROG", 2e-3)])
def test_dispersion_probe(scheme, tol):
    for model in ("INVARIANT", "COVARIANT"):
        cfg = base(model=model, gamma=0.4, kappa=0.4, scheme=scheme, dt_step=0.02, t_final=4.0)
        for k in (0.0, 0.8, 2.0):
            _, kk = kg.nearest_grid_wavenumber(cfg, k)
            rate, freq = kg.dispersion_probe(cfg, kk)
            damping, _, omega = cfg.coefficients([kk])
            assert abs(rate - 0.5 * damping[0]) < tol
            assert abs(freq - omega[0]) < tol * max(1.0, omega[0])
            # both models oscillate at the free energy
            assert abs(omega[0] - np.hypot(kk, 1.0)) < 1e-12


def test_covariant_decay_doubles_with_energy():
    cfg = base(model="COVARIANT", kappa=0.5, dt_step=0.02, t_final=4.0)
    k2 = np.sqrt(3.0)  # E=2
    j = round(k2 / (2 * np.pi / cfg.length))
    cfg_fine = base(model="COVARIANT", kappa=0.5, dt_step=0.02, t_final=4.0, length=2 * np.pi * j / k2)
    r1, _ = kg.dispersion_probe(cfg_fine, 0.0)
    r2, _ = kg.dispersion_probe(cfg_fine, k2)
    assert abs(r2 / r1 - 2.0) < 1e-8


def test_dispersion_probe_errors():
    with pytest.raises(FitError):
        kg.dispersion_probe(base(dt_step=1.0, t_final=2.0), 0.5)
    with pytest.raises(ValidationError):
        kg.dispersion_probe(base(), 1e3)


def test_output_writers(tmp_path):
    cfg = base(gamma=0.2)
    state = kg.evolve(kg.gaussian_pulse(cfg), cfg)
    kg.write_snapshot_csv(tmp_path / "snap.csv", state, cfg)
    lines = (tmp_path / "snap.csv").read_text().splitlines()
    assert lines[0] == "t,x,phi,dphi" and len(lines) == cfg.n_points + 1
    assert float(lines[5].split(",")[2]) == state.phi[4]
    summary = kg.dispersion_summary(base(gamma=0.2, t_final=1.0, dt_step=0.05), [0.0, 1.0])
    kg.write_dispersion_json(tmp_path / "d.json", summary)
    back = json.loads((tmp_path / "d.json").read_text())
    assert len(back["modes"]) == 2 and back["config"]["gamma"] == 0.2
