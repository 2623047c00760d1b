"""Command-line front end.

Every command prints one JSON summary line on stdout.  Diagnostics go to
stderr as a single ``relqme: error kind=<kind> reason=<text>`` line.  Exit
codes: 0 success, 1 validation error, 2 numeric tolerance failure,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from . import fockspace as fs
from . import gksl, kgsolver, poincare, propagators, wickalgebra
from .config import ExperimentConfig, format_value, load_config, schema, SCHEMAS
from .errors import NumericalError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE, EXIT_INTERNAL = 0, 1, 2, 3


class ToleranceFailure(Exception):
    """A check ran to completion but missed its tolerance."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        # non-finite values (lightlike points) become null to keep the JSON strict
        return float(f"{float(obj):.17g}") if np.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [float(obj.real), float(obj.imag)]
    return obj


def _emit(summary: dict, cfg: ExperimentConfig, out=sys.stdout):
    text = json.dumps(_jsonable(summary), sort_keys=True, allow_nan=False)
    if cfg["json"]:
        Path(cfg["json"]).write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True,
                                                allow_nan=False) + "\n")
    out.write(text + "\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


# ---------------------------------------------------------------------------


def cmd_evolve(cfg):
    grid = fs.ModeGrid(1, cfg["length"], cfg["points"], cfg["m"])
    trunc = fs.FockTruncation(cfg["dim_f"], cfg["modes"])
    trunc.check_grid(grid)
    if cfg["model"] == "invariant":
        gen = fs.build_model_generator(grid, trunc, cfg["gamma"], cfg["g"])
        rates = np.full(trunc.n_modes, cfg["gamma"])
    else:
        gen = fs.build_covariant_generator(grid, trunc, cfg["kappa"])
        rates = cfg["kappa"] * grid.energies[list(trunc.modes)]
    rho0 = fs.coherent_like_state(trunc, [cfg["alpha"]] * trunc.n_modes)
    n0 = np.array([fs.expect_number(rho0, trunc, j) for j in trunc.modes])
    guard = fs.leakage_guard(trunc)
    times = np.linspace(0.0, cfg["t_final"], cfg["samples"] + 1)
    rows, worst_n, worst_trace, worst_eig = [], 0.0, 0.0, np.inf
    rho, t_prev = rho0, 0.0
    for t in times:
        rho = gksl.integrate(gen, rho, t - t_prev, cfg["tol"], guard=guard)
        t_prev = t
        report = gksl.check_density_matrix(rho)
        n = np.array([fs.expect_number(rho, trunc, j) for j in trunc.modes])
        expected = n0 * np.exp(-rates * t)
        worst_n = max(worst_n, float(np.abs(n - expected).max()))
        worst_trace = max(worst_trace, report["trace_error"])
        worst_eig = min(worst_eig, report["min_eigenvalue"])
        rows.append([t, report["trace_error"], report["min_eigenvalue"], *n, *expected])
    if cfg["out"]:
        header = ["t", "trace_error", "min_eigenvalue"] + [f"n_{j}" for j in trunc.modes] \
            + [f"n_{j}_expected" for j in trunc.modes]
        _write_csv(cfg["out"], header, rows)
    number_tol = max(1e-8, 100 * cfg["tol"])
    ok = worst_trace < 1e-10 and worst_eig >= -1e-10 and worst_n < number_tol
    summary = {"command": "evolve", "max_number_error": worst_n, "max_trace_error": worst_trace,
               "min_eigenvalue": worst_eig, "number_tolerance": number_tol, "ok": ok}
    return summary, ok


def _random_product(rng, n, grid, gamma, modes):
    labels = tuple(wickalgebra.FieldLabel(str(rng.choice(wickalgebra.FIELD_KINDS)),
                                          float(rng.uniform(0, 1)), (float(rng.uniform(0, grid.length)),))
                   for _ in range(n))
    return wickalgebra.OperatorProduct(labels, gamma, grid, modes)


def wick_residuals(n, placements, dim_f, gamma, t, length, points, modes, seed):
    grid = fs.ModeGrid(1, length, points, 1.0)
    trunc = fs.FockTruncation(dim_f, modes)
    trunc.check_grid(grid)
    gen = fs.build_model_generator(grid, trunc, gamma)
    prop = expm(gksl.superoperator(gen, adjoint=True) * t)
    mask = fs.reliable_mask(trunc, n)
    rng = np.random.default_rng(seed)
    residuals, first = [], None
    for _ in range(placements):
        prod = _random_product(rng, n, grid, gamma, trunc.modes)
        nf = wickalgebra.heisenberg_evolve(prod, t)
        lhs = wickalgebra.evaluate_on_fock(nf, trunc)
        rhs = (prop @ wickalgebra.product_matrix(prod, trunc).reshape(-1)).reshape(lhs.shape)
        residuals.append(float(np.abs(lhs - rhs)[mask].max()))
        if first is None:
            first = nf
    return residuals, first, int(mask.sum())


def cmd_wick(cfg):
    residuals, nf, block = wick_residuals(cfg["n"], cfg["placements"], cfg["dim_f"], cfg["gamma"],
                                          cfg["t"], cfg["length"], cfg["points"], cfg["modes"], cfg["seed"])
    counts_ok = len(nf.terms) == wickalgebra.pairing_count(cfg["n"])
    if cfg["out"]:
        _write_csv(cfg["out"], ["placement", "terms", "residual"],
                   [[i, len(nf.terms), r] for i, r in enumerate(residuals)])
    terms = [{"pairs": [list(p) for p in term.pairs], "weight": term.weight,
              "coefficient": [term.coefficient.real, term.coefficient.imag],
              "residual": list(term.residual)} for term in nf.terms]
    ok = counts_ok and max(residuals) < cfg["tol"]
    summary = {"command": "wick", "max_residual": max(residuals), "residuals": residuals,
               "terms": len(nf.terms), "expected_terms": wickalgebra.pairing_count(cfg["n"]),
               "reliable_entries": block, "normal_form": terms, "ok": ok}
    return summary, ok


def _model(cfg):
    return propagators.ModelSpec(cfg["model"], cfg["m"], gamma=cfg["gamma"], kappa=cfg["kappa"])


def cmd_commutator(cfg):
    sep = propagators.Separation(cfg["x0"] - cfg["y0"], cfg["r"], cfg["dim"])
    res = propagators.commutator(_model(cfg), cfg["kind"], cfg["x0"], cfg["y0"], sep, cfg["tol"])
    row = propagators.ScanRow(sep, res)
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            propagators.scan_rows_csv([row], fh)
    ok = res.classification == "lightlike" or res.abs_error_estimate <= cfg["tol"]
    summary = {"command": "commutator", "dt": sep.dt, "r": sep.r, "classification": res.classification,
               "re": res.value.real, "im": res.value.imag, "err": res.abs_error_estimate, "ok": ok}
    return summary, ok


def cmd_scan(cfg):
    if cfg["dmax"] < cfg["dmin"]:
        raise ValidationError("dmax must not be smaller than dmin")
    model = _model(cfg)
    distances = np.linspace(cfg["dmin"], cfg["dmax"], cfg["count"])
    seps = propagators.spacelike_separations(cfg["x0"] - cfg["y0"], distances, cfg["dim"])
    scan = propagators.causality_scan(model, cfg["kind"], cfg["x0"], cfg["y0"], seps,
                                      cfg["eps"], cfg["tol"], cfg["workers"])
    text = propagators.scan_rows_csv(scan.rows)
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    comparison = compare_fixture(text, cfg["compare"]) if cfg["compare"] else None
    ok = True
    if model.model == "INVARIANT":
        ok = scan.violation_length == 0.0
    if comparison is not None:
        ok = ok and comparison["ok"]
    summary = {"command": "causality-scan", "model": model.model, "kind": cfg["kind"],
               "violation_length": scan.violation_length, "eps": cfg["eps"],
               "max_abs": scan.max_abs(),
               "monotone_tail": scan.tail_is_monotone() if scan.violation_length > 0 else None,
               "points": len(scan.rows), "comparison": comparison, "ok": ok}
    return summary, ok


def cmd_kg(cfg):
    solver = kgsolver.SolverConfig(cfg["m"], cfg["gamma"], cfg["kappa"], cfg["model"], cfg["dt_step"],
                                   cfg["t_final"], cfg["length"], cfg["points"], cfg["scheme"])
    state0 = kgsolver.gaussian_pulse(solver)
    state = kgsolver.evolve(state0, solver)
    if cfg["out"]:
        kgsolver.write_snapshot_csv(cfg["out"], state, solver)
    probe = kgsolver.SolverConfig(cfg["m"], cfg["gamma"], cfg["kappa"], cfg["model"], cfg["probe_dt"],
                                  cfg["probe_t"], cfg["length"], cfg["points"], "SPECTRAL_EXACT")
    disp = kgsolver.dispersion_summary(probe, cfg["ks"])
    tol = 1e-6 if solver.model == "INVARIANT" else 1e-5
    worst = max(max(abs(r["decay_rate"] - r["expected_decay_rate"]),
                    abs(r["frequency"] - r["expected_frequency"])) for r in disp["modes"])
    summary = {"command": "kg", "final_l2_norm": kgsolver.l2_norm(state, solver),
               "dispersion": disp["modes"], "max_fit_error": worst, "fit_tolerance": tol,
               "ok": worst < tol}
    if solver.model == "INVARIANT":
        free = kgsolver.evolve(kgsolver.free_companion(state0, solver), solver.free())
        summary["envelope_residual"] = kgsolver.envelope_check(state, free, solver.gamma, solver.t_final)
    return summary, summary["ok"]


EXPECTED_DIMENSIONS = {"MASSIVE_POS": 1, "MASSIVE_NEG": 0, "NULL_POS": 0, "NULL_NEG": 0,
                       "SPACELIKE": 0, "ZERO": 0}


def classification_report(m, dim, length, points, samples, threshold, parameter, etas, seed):
    grid = fs.ModeGrid(dim, length, points, m)
    trans = poincare.default_translation_samples(dim, samples, seed)
    cases = []
    for case in poincare.CASES:
        value = m if case.startswith("MASSIVE") else parameter
        sol = poincare.translation_constraint_solve(grid, poincare.StandardMomentum(case, value),
                                                    trans, threshold)
        cases.append({"case": case, "parameter": value, "dimension": sol.dimension,
                      "expected_dimension": EXPECTED_DIMENSIONS[case], "gap": sol.gap,
                      "smallest_singular_value": float(sol.singular_values[-1]),
                      "support_at_zero": bool(sol.dimension == 1 and
                                              np.argmax(np.abs(sol.basis[:, 0])) == grid.zero_mode)})
    report = {"cases": cases}
    if dim == 1:
        ms = poincare.m_constraint_solve(grid, [poincare.BoostAction(e) for e in etas], trans, threshold)
        const = ms.dimension == 1 and np.ptp(np.abs(ms.basis[:, 0])) < 1e-8
        report["hermitian_part"] = {"dimension": ms.dimension, "gap": ms.gap, "constant": bool(const),
                                    "dropped_rows": ms.dropped_rows}
    ok = all(c["dimension"] == c["expected_dimension"] and c["gap"] >= 1e6 for c in cases)
    if "hermitian_part" in report:
        ok = ok and report["hermitian_part"]["constant"]
    return report, ok


def cmd_classify(cfg):
    report, ok = classification_report(cfg["m"], cfg["dim"], cfg["length"], cfg["points"], cfg["samples"],
                                       cfg["threshold"], cfg["parameter"], cfg["etas"], cfg["seed"])
    return {"command": "classify", **report, "ok": ok}, ok


def invariance_report(m, cutoff, ns, eta, measure_eta, gamma, kappa):
    boost = poincare.BoostAction(eta)
    cutoff = cutoff * m

    def study(model):
        return poincare.refinement_study(
            ns, cutoff, m, boost,
            lambda grid: poincare.dissipator_invariance_check(
                grid, poincare.wave_packet_state(grid), boost, gamma, model, kappa))

    inv, cov = study("INVARIANT"), study("COVARIANT")
    mboost = poincare.BoostAction(measure_eta)
    gauss = lambda p: np.exp(-0.5 * (p / m) ** 2)
    measure = [poincare.invariant_measure_check(poincare.grid_with_cutoff(n, cutoff, m), gauss, mboost)
               for n in ns]
    ratio = cov["residual"][-1] / inv["residual"][-1]
    ok = abs(inv["slope"] - 2.0) <= 0.3 and ratio >= 100 and measure[-1] < 1e-6
    return {"invariant": inv, "covariant": cov, "ratio_at_finest": ratio,
            "measure_residuals": measure}, ok


def cmd_invariance(cfg):
    report, ok = invariance_report(cfg["m"], cfg["cutoff"], cfg["ns"], cfg["eta"], cfg["measure_eta"],
                                   cfg["gamma"], cfg["kappa"])
    return {"command": "invariance", **report, "ok": ok}, ok


def load_golden(name: str):
    """Rows and tolerances of a packaged golden fixture."""
    base = Path(__file__).with_name("data")
    with open(base / name) as fh:
        rows = list(csv.DictReader(fh))
    manifest = json.loads((base / "tolerances.json").read_text())
    return rows, manifest[name]


def compare_fixture(text: str, fixture_path: str) -> dict:
    """Compare CSV text to a fixture; tolerances come from ``tolerances.json`` beside it."""
    path = Path(fixture_path)
    manifest_path = path.with_name("tolerances.json")
    if not path.exists() or not manifest_path.exists():
        raise ValidationError(f"fixture {path} or its tolerance manifest is missing")
    tol = json.loads(manifest_path.read_text()).get(path.name)
    if tol is None:
        raise ValidationError(f"tolerance manifest has no entry for {path.name}")
    ref = list(csv.DictReader(path.read_text().splitlines()))
    got = list(csv.DictReader(text.splitlines()))
    if len(ref) != len(got):
        return {"ok": False, "reason": f"row count {len(got)} != {len(ref)}"}
    worst = 0.0
    for a, b in zip(got, ref):
        if a["classification"] != b["classification"]:
            return {"ok": False, "reason": f"classification differs at dt={b['dt']} r={b['r']}"}
        for key in ("dt", "r"):
            if abs(float(a[key]) - float(b[key])) > 1e-12 * max(1.0, abs(float(b[key]))):
                return {"ok": False, "reason": f"{key} differs"}
        for key in ("re", "im"):
            diff = abs(float(a[key]) - float(b[key]))
            excess = diff - (tol["abs"] + tol["rel"] * abs(float(b[key])))
            worst = max(worst, diff)
            if excess > 0:
                return {"ok": False, "reason": f"{key} differs by {diff:.3g} at dt={b['dt']} r={b['r']}",
                        "max_difference": worst}
    return {"ok": True, "max_difference": worst}


def cmd_selftest(cfg):
    rng = np.random.default_rng(cfg["seed"])
    checks = {}
    grid = fs.ModeGrid(1, 8.0, 5, 1.0)
    trunc = fs.FockTruncation(4, (grid.zero_mode,))
    gen = fs.build_model_generator(grid, trunc, 0.3)
    rho0 = gksl.random_density_matrix(trunc.dimension, rng)
    diff = np.abs(gksl.integrate(gen, rho0, 2.0, 1e-10) - gksl.propagate_dense(gen, rho0, 2.0)).max()
    checks["integrator_vs_expm"] = {"residual": float(diff), "tolerance": 1e-8, "ok": bool(diff < 1e-8)}

    residuals, _, _ = wick_residuals(4, 5, 4, 0.4, 1.0, 8.0, 5, (2, 3), cfg["seed"])
    checks["wick_vs_expm"] = {"residual": max(residuals), "tolerance": 1e-8, "ok": max(residuals) < 1e-8}

    model = propagators.ModelSpec("COVARIANT", 1.0, kappa=0.5)
    fine = fs.ModeGrid(1, 100.0, 2048, 1.0)
    factors = lambda e, t: propagators.dense_mode_factors(e, 0.5 * e, t, dim_f=2)
    worst = 0.0
    for r in (1.5, 2.5):
        g_val = propagators.grid_commutator(fine, model, "PHIPHI", 1.0, 0.0, [r], mode_factor=factors)
        c_val = propagators.commutator(model, "PHIPHI", 1.0, 0.0, propagators.Separation(1.0, r, 1)).value
        worst = max(worst, abs(g_val - c_val))
    checks["covariant_integrand_vs_mode_evolution"] = {"residual": worst, "tolerance": 1e-8,
                                                       "ok": worst < 1e-8}

    rows, tol = load_golden("pauli_jordan_3d.csv")
    worst = 0.0
    for row in rows:
        sep = propagators.Separation(float(row["dt"]), float(row["r"]), 3)
        worst = max(worst, abs(propagators.pauli_jordan(1.0, sep) - float(row["delta"])))
    checks["pauli_jordan_golden"] = {"residual": worst, "tolerance": tol["abs"], "ok": worst < tol["abs"]}
    ok = all(c["ok"] for c in checks.values())
    return {"command": "selftest", "checks": checks, "ok": ok}, ok


COMMANDS = {
    "evolve": cmd_evolve, "wick": cmd_wick, "commutator": cmd_commutator,
    "causality-scan": cmd_scan, "kg": cmd_kg, "classify": cmd_classify,
    "invariance": cmd_invariance, "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relqme", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value file; command-line flags override it")
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved configuration and exit")
        for key, param in schema(name).items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                           help=f"{param.help} (default {format_value(param.default) or 'unset'})")
    return parser


def resolve_config(args) -> ExperimentConfig:
    overrides = {k: v for k, v in vars(args).items()
                 if k in schema(args.command) and v is not None}
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    return load_config(args.command, text, overrides)


def _diagnose(kind: str, exc, stream):
    reason = " ".join(str(exc).split()) or type(exc).__name__
    stream.write(f"relqme: error kind={kind} reason={reason}\n")


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        if args.dump_config:
            stdout.write(cfg.dump())
            return EXIT_OK
        with np.errstate(all="ignore"):
            summary, ok = COMMANDS[args.command](cfg)
        _emit(summary, cfg, stdout)
        if not ok:
            _diagnose("tolerance", f"{args.command} checks failed; see summary", stderr)
            return EXIT_TOLERANCE
        return EXIT_OK
    except (ValidationError, OSError) as exc:
        _diagnose("validation", exc, stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        _diagnose("numeric", exc, stderr)
        return EXIT_TOLERANCE
    except Exception as exc:  # noqa: BLE001 - exit-code contract
        _diagnose("internal", f"{type(exc).__name__}: {exc}", stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run())
