"""Field commutator functions of both models and microcausality scans.

All commutators here are ``i`` times a real kernel.  With the radial
reduction the kernels become half-line integrals, for example in three
dimensions

    Δ(dt, r) = -(1/(2π² r)) ∫_0^∞ (p/E) sin(p r) sin(E dt) dp,

and in one dimension

    Δ(dt, r) = -(1/π) ∫_0^∞ cos(p r) sin(E dt)/E dp.

``[Π, Π]`` carries an extra ``E²`` and ``[Φ, Π]`` an extra ``E`` with the
time dependence switched from sine to cosine (``ΠΠ = -∂²Δ/∂dt²`` and
``ΦΠ = -∂Δ/∂dt``).  The invariant model multiplies every mode by the same
``e^{-γ(x0+y0)/2}``; the covariant model multiplies mode ``p`` by
``e^{-κE_p(x0+y0)/2}``, keeping the oscillation frequency ``E_p``.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ClassificationError, QuadratureError, ValidationError
from .fockspace import FockTruncation, ModeGrid, mode_ops
from .gksl import GkslGenerator, propagate_dense
from .quadrature import oscillatory_integral

KINDS = ("PHIPHI", "PIPI", "PHIPI")
MODELS = ("INVARIANT", "COVARIANT")
DEFAULT_TOL = 1e-8
LIGHTCONE_TOL = 1e-12


@dataclass(frozen=True)
class Separation:
    """Temporal difference ``dt = x0 - y0`` and radial distance ``r``."""

    dt: float
    r: float
    dim: int = 3

    def __post_init__(self):
        if not (np.isfinite(self.dt) and np.isfinite(self.r)):
            raise ValidationError("separation components must be finite")
        if self.r < 0:
            raise ValidationError(f"radial distance must be non-negative, got {self.r}")
        if self.dim not in (1, 3):
            raise ValidationError(f"dimension must be 1 or 3, got {self.dim}")

    @property
    def interval(self) -> float:
        """``dt² - r²`` (positive for timelike separations)."""
        return self.dt * self.dt - self.r * self.r

    @property
    def classification(self) -> str:
        if abs(abs(self.dt) - self.r) <= LIGHTCONE_TOL * max(1.0, self.r):
            return "lightlike"
        return "timelike" if abs(self.dt) > self.r else "spacelike"

    @property
    def distance_outside(self) -> float:
        """``r - |dt|``: how far a spacelike point lies outside the lightcone."""
        return self.r - abs(self.dt)


@dataclass(frozen=True)
class CommutatorResult:
    value: complex
    abs_error_estimate: float
    classification: str


@dataclass(frozen=True)
class ModelSpec:
    model: str
    mass: float
    gamma: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        model = str(self.model).upper()
        if model not in MODELS:
            raise ValidationError(f"model must be one of {MODELS}, got {self.model!r}")
        object.__setattr__(self, "model", model)
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise ValidationError(f"mass must be positive, got {self.mass}")
        for name in ("gamma", "kappa"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be non-negative, got {v}")

    def mode_factor(self, energies, t):
        """Coefficient ``c(t)`` in ``a_p(t) = c(t) a_p`` for each energy."""
        energies = np.asarray(energies, dtype=float)
        rate = self.gamma if self.model == "INVARIANT" else self.kappa * energies
        return np.exp(-(1j * energies + 0.5 * rate) * t)


def _check_kind(kind):
    k = str(kind).upper()
    if k not in KINDS:
        raise ValidationError(f"commutator kind must be one of {KINDS}, got {kind!r}")
    return k


def _kernel_terms(kind: str, dim: int, r: float, dt: float):
    """Decompose a kernel into ``(coefficient, amplitude power, a, b, phase, radial)`` pieces.

    The amplitude of a piece is ``p^radial · E^power``; each piece is the
    integral of amplitude times ``cos(a p + b E + phase)``.
    """
    h = -0.5 * np.pi
    if dim == 3 and r > 0:
        c = 1.0 / (4 * np.pi ** 2 * r)
        if kind == "PHIPHI":
            return [(-c, -1, r, -dt, 0.0, 1), (c, -1, r, dt, 0.0, 1)]
        if kind == "PIPI":
            return [(-c, 1, r, -dt, 0.0, 1), (c, 1, r, dt, 0.0, 1)]
        return [(c, 0, r, dt, h, 1), (c, 0, r, -dt, h, 1)]
    if dim == 3:
        c = 1.0 / (2 * np.pi ** 2)
        if kind == "PHIPHI":
            return [(-c, -1, 0.0, dt, h, 2)]
        if kind == "PIPI":
            return [(-c, 1, 0.0, dt, h, 2)]
        return [(c, 0, 0.0, dt, 0.0, 2)]
    c = 1.0 / (2 * np.pi)
    if kind == "PHIPHI":
        return [(-c, -1, r, dt, h, 0), (c, -1, r, -dt, h, 0)]
    if kind == "PIPI":
        return [(-c, 1, r, dt, h, 0), (c, 1, r, -dt, h, 0)]
    return [(c, 0, r, dt, 0.0, 0), (c, 0, r, -dt, 0.0, 0)]


def commutator_kernel(kind: str, sep: Separation, mass: float, damping: float = 0.0,
                      tol: float = DEFAULT_TOL) -> tuple:
    """Real kernel ``K`` with ``[ξ_a(x), ξ_b(y)] = i K`` and its error estimate.

    ``damping`` multiplies the integrand by ``e^{-damping · E_p}``.
    """
    kind = _check_kind(kind)
    if sep.classification == "lightlike":
        raise ClassificationError("kernel is singular on the lightcone")
    total, err = 0.0, 0.0
    pieces = _kernel_terms(kind, sep.dim, sep.r, sep.dt)
    for coef, power, a, b, phase, radial in pieces:
        def amp(p, power=power, radial=radial):
            e = np.sqrt(p * p + mass * mass)
            out = p ** radial * e ** power
            return out * np.exp(-damping * e) if damping else out

        res = oscillatory_integral(amp, a, b, mass, phase, tol=tol / (len(pieces) * abs(coef)))
        total += coef * res.value
        err += abs(coef) * res.error
    return total, err


def pauli_jordan(m: float, sep: Separation, tol: float = DEFAULT_TOL) -> float:
    """Undamped ``Δ`` with ``[Φ(x), Φ(y)] = iΔ(x - y)``.

    Raises :class:`QuadratureError` (carrying the partial value) when the
    tolerance cannot be met.
    """
    if not (np.isfinite(m) and m > 0):
        raise ValidationError(f"mass must be positive, got {m}")
    value, err = commutator_kernel("PHIPHI", sep, m, 0.0, tol)
    if err > tol:
        raise QuadratureError(f"error estimate {err:.3g} above {tol:.3g}", value, err)
    return value


def _check_times(x0, y0, sep):
    if x0 < 0 or y0 < 0:
        raise ValidationError("field times must be non-negative")
    if abs(sep.dt - (x0 - y0)) > 1e-12 * max(1.0, abs(x0), abs(y0)):
        raise ValidationError(f"separation dt={sep.dt} does not equal x0 - y0 = {x0 - y0}")


def commutator(model: ModelSpec, kind: str, x0: float, y0: float, sep: Separation,
               tol: float = DEFAULT_TOL) -> CommutatorResult:
    """Continuum commutator of Heisenberg fields at times ``x0`` and ``y0``.

    Lightlike separations are returned with a NaN value.
    """
    kind = _check_kind(kind)
    _check_times(x0, y0, sep)
    cls = sep.classification
    if cls == "lightlike":
        return CommutatorResult(complex(np.nan, np.nan), float("inf"), cls)
    if model.model == "INVARIANT":
        k, err = commutator_kernel(kind, sep, model.mass, 0.0, tol)
        scale = np.exp(-0.5 * model.gamma * (x0 + y0))
        k, err = k * scale, err * scale
    else:
        k, err = commutator_kernel(kind, sep, model.mass, 0.5 * model.kappa * (x0 + y0), tol)
    return CommutatorResult(complex(0.0, k), err, cls)


# ---------------------------------------------------------------------------
# grid versions


def grid_commutator(grid: ModeGrid, model: ModelSpec, kind: str, x0: float, y0: float,
                    displacement, mode_factor: Optional[Callable] = None) -> complex:
    """Commutator on a finite grid: ``Σ_j (U^a_j V^b_j - U^b_j V^a_j)``.

    Field ``a`` sits at ``(x0, displacement)`` and field ``b`` at ``(y0, 0)``.
    ``mode_factor(energies, t)`` overrides the model's per-mode Heisenberg
    coefficient; this is how independently computed mode evolutions are
    assembled into a commutator.
    """
    kind = _check_kind(kind)
    if grid.mass != model.mass:
        raise ValidationError("grid mass and model mass differ")
    factor = mode_factor if mode_factor is not None else model.mode_factor
    kinds = {"PHIPHI": ("PHI", "PHI"), "PIPI": ("PI", "PI"), "PHIPI": ("PHI", "PI")}[kind]
    e = grid.energies
    ua, va = grid.field_coefficients(kinds[0], displacement)
    ub, vb = grid.field_coefficients(kinds[1], np.zeros(grid.dim))
    fa, fb = factor(e, x0), factor(e, y0)
    ua, va = ua * fa, va * np.conj(fa)
    ub, vb = ub * fb, vb * np.conj(fb)
    return complex(np.sum(ua * vb - ub * va))


def dense_mode_factors(energies, rates, t: float, dim_f: int = 3) -> np.ndarray:
    """Per-mode ``c(t)`` from the dense adjoint exponential of a single-mode generator.

    For each energy ``E`` and loss rate ``r`` the generator ``M = E a†a``,
    ``L = sqrt(r) a`` is built on ``dim_f`` levels and ``a`` is evolved with
    the matrix exponential; ``c(t)`` is read off as ``<0|a(t)|1>``.  Equal
    energies are evolved once.
    """
    energies = np.asarray(energies, dtype=float)
    rates = np.broadcast_to(np.asarray(rates, dtype=float), energies.shape)
    a, ad = mode_ops(dim_f)
    out = np.empty(energies.shape, dtype=complex)
    cache = {}
    for idx, (e, r) in enumerate(zip(energies, rates)):
        key = (e, r)
        if key not in cache:
            gen = GkslGenerator(e * (ad @ a), (np.sqrt(r) * a,) if r > 0 else ())
            cache[key] = propagate_dense(gen, a, t, adjoint=True)[0, 1]
        out[idx] = cache[key]
    return out


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanRow:
    separation: Separation
    result: CommutatorResult


@dataclass(frozen=True)
class ScanResult:
    rows: tuple
    eps: float
    violation_length: float

    def tail_is_monotone(self) -> bool:
        """Whether ``|value|`` decreases with distance beyond the violation length.

        Neighbouring values may tie within their combined error estimates.
        """
        tail = sorted((row for row in self.rows
                       if row.separation.distance_outside >= self.violation_length),
                      key=lambda row: row.separation.distance_outside)
        for prev, nxt in zip(tail, tail[1:]):
            slack = prev.result.abs_error_estimate + nxt.result.abs_error_estimate
            if abs(nxt.result.value) > abs(prev.result.value) + slack:
                return False
        return True

    def max_abs(self) -> float:
        return max(abs(row.result.value) for row in self.rows)


def spacelike_separations(dt: float, distances: Iterable[float], dim: int = 3) -> list:
    """Separations at ``r = |dt| + distance`` for each positive ``distance``."""
    out = []
    for d in distances:
        if d <= 0:
            raise ClassificationError(f"distance outside the lightcone must be positive, got {d}")
        out.append(Separation(dt, abs(dt) + d, dim))
    return out


def _scan_point(args) -> CommutatorResult:
    return commutator(*args)


def causality_scan(model: ModelSpec, kind: str, x0: float, y0: float,
                   separations: Sequence[Separation], eps: float = 1e-5,
                   tol: float = DEFAULT_TOL, workers: int = 1) -> ScanResult:
    """Evaluate the commutator at spacelike points and report the violation length.

    The violation length is the largest ``r - |dt|`` at which ``|value|``
    exceeds ``eps``, or 0 when no point does.  With ``workers > 1`` the
    points are spread over a process pool; rows always come back in input
    order, so the result does not depend on the worker count.
    """
    separations = list(separations)
    for sep in separations:
        if sep.classification != "spacelike":
            raise ClassificationError(
                f"causality scan needs spacelike separations, got {sep.classification} (dt={sep.dt}, r={sep.r})")
    if workers < 1:
        raise ValidationError(f"workers must be at least 1, got {workers}")
    args = [(model, kind, x0, y0, sep, tol) for sep in separations]
    if workers == 1 or len(args) < 2:
        results = [_scan_point(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_point, args, chunksize=max(1, len(args) // (4 * workers))))
    rows = [ScanRow(sep, res) for sep, res in zip(separations, results)]
    violating = [row.separation.distance_outside for row in rows if abs(row.result.value) > eps]
    return ScanResult(tuple(rows), eps, max(violating, default=0.0))


CSV_COLUMNS = ("dt", "r", "classification", "re", "im", "err")


def format_float(x: float) -> str:
    return f"{x:.17g}"


def scan_rows_csv(rows: Iterable[ScanRow], stream=None) -> str:
    """Write rows as CSV with 17 significant digits; returns the text."""
    buf = io.StringIO() if stream is None else stream
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        v = row.result.value
        writer.writerow([format_float(row.separation.dt), format_float(row.separation.r),
                         row.result.classification, format_float(v.real), format_float(v.imag),
                         format_float(row.result.abs_error_estimate)])
    return buf.getvalue() if stream is None else ""
