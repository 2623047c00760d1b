"""Symmetry checks on a discretised momentum space.

* Translation constraints on candidate Lindblad amplitudes, one case per
  class of standard momentum.
* Translation plus boost constraints on the Hermitian part, which leave
  only ``g(p) = const``.
* Lorentz invariance of the measure ``dp / 2E_p`` and of the uniform-rate
  dissipator on the single-particle sector, in 1+1 dimensions.

Four-vectors are ``(a0, a_1, ..., a_d)`` and the metric is mostly plus:
``p·a = -E a0 + p⃗·a⃗``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (InterpolationWarning, RankDeficiencyWarning, SupportLeakageWarning,
                     ValidationError)
from .fockspace import FockTruncation, ModeGrid, hamiltonian, mode_operators
from .gksl import GkslGenerator

NULL_THRESHOLD = 1e-10
CASES = ("MASSIVE_POS", "MASSIVE_NEG", "NULL_POS", "NULL_NEG", "SPACELIKE", "ZERO")


@dataclass(frozen=True)
class StandardMomentum:
    """Representative momentum of an orbit.

    ``value`` is the mass ``M`` for the massive cases, the energy ``κ`` for
    the null cases and ``N`` for the spacelike case; it is ignored for
    ``ZERO``.
    """

    case: str
    value: float = 1.0

    def __post_init__(self):
        case = str(self.case).upper()
        if case not in CASES:
            raise ValidationError(f"unknown standard-momentum case {self.case!r}")
        object.__setattr__(self, "case", case)
        if case != "ZERO" and not (np.isfinite(self.value) and self.value > 0):
            raise ValidationError(f"{case} needs a positive parameter, got {self.value}")

    def four_vector(self, dim: int) -> np.ndarray:
        v = np.zeros(dim + 1)
        x = self.value
        if self.case == "MASSIVE_POS":
            v[0] = x
        elif self.case == "MASSIVE_NEG":
            v[0] = -x
        elif self.case == "NULL_POS":
            v[0], v[-1] = x, x
        elif self.case == "NULL_NEG":
            v[0], v[-1] = -x, x
        elif self.case == "SPACELIKE":
            v[-1] = x
        return v


@dataclass(frozen=True)
class BoostAction:
    """Boost of rapidity ``eta`` along the single spatial axis of a 1+1 grid."""

    eta: float

    def __post_init__(self):
        if not np.isfinite(self.eta):
            raise ValidationError("rapidity must be finite")

    def momentum(self, p, mass):
        p = np.asarray(p, dtype=float)
        e = np.sqrt(p * p + mass * mass)
        return p * np.cosh(self.eta) + e * np.sinh(self.eta)

    def energy(self, p, mass):
        p = np.asarray(p, dtype=float)
        e = np.sqrt(p * p + mass * mass)
        return e * np.cosh(self.eta) + p * np.sinh(self.eta)


@dataclass(frozen=True)
class ConstraintSolution:
    """Numerical nullspace of a stacked constraint system."""

    basis: np.ndarray
    singular_values: np.ndarray
    threshold: float
    gap: float

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


def _gap(sv, kept_mask, rows):
    sv = np.asarray(sv)
    rejected = sv[~kept_mask]
    kept = sv[kept_mask]
    floor = np.finfo(float).eps * max(sv.max(initial=0.0), 1.0) * np.sqrt(max(rows, 1))
    if rejected.size == 0:
        return 0.0
    return float(rejected.min() / max(kept.max(initial=0.0), floor))


def default_translation_samples(dim: int, count: Optional[int] = None, seed: int = 0,
                                scale: float = 1.0) -> np.ndarray:
    """Generic translation four-vectors, uniform in ``[-scale, scale]``."""
    rng = np.random.default_rng(seed)
    count = 2 * dim + 4 if count is None else count
    return rng.uniform(-scale, scale, size=(count, dim + 1))


def _check_samples(samples, dim):
    a = np.atleast_2d(np.asarray(samples, dtype=float))
    if a.shape[1] != dim + 1:
        raise ValidationError(f"translations need {dim + 1} components, got {a.shape[1]}")
    if a.shape[0] < 2 * dim + 2 or np.linalg.matrix_rank(a) < dim + 1:
        warnings.warn(f"{a.shape[0]} translation samples of rank {np.linalg.matrix_rank(a)} "
                      "may not separate all grid momenta", RankDeficiencyWarning, stacklevel=3)
    return a


def _dot(p, e, a):
    """``p·a`` for on-shell momenta; ``p`` is ``(n, d)``, ``a`` is ``(S, d+1)``."""
    return -np.outer(a[:, 0], e) + a[:, 1:] @ p.T


def translation_constraint_solve(grid: ModeGrid, ell: StandardMomentum, translation_samples,
                                 threshold: float = NULL_THRESHOLD) -> ConstraintSolution:
    """Amplitudes ``f(p_j)`` with ``f(p_j) (e^{-i p_j·a} - e^{-iℓ·a}) = 0`` for all samples.

    The stacked system is block diagonal in ``j`` (one column per grid
    momentum with rows over samples), so its Gram matrix is diagonal and
    the singular values are the column norms.  Columns whose norm falls
    below ``threshold`` span the solution space.
    """
    a = _check_samples(translation_samples, grid.dim)
    lv = ell.four_vector(grid.dim)
    phase_p = _dot(grid.momenta, grid.energies, a)
    phase_l = -a[:, 0] * lv[0] + a[:, 1:] @ lv[1:]
    rows = np.exp(-1j * phase_p) - np.exp(-1j * phase_l)[:, None]
    sv = np.sqrt(np.sum(np.abs(rows) ** 2, axis=0))
    kept = sv < threshold
    basis = np.eye(grid.n_modes, dtype=complex)[:, kept]
    order = np.argsort(sv)[::-1]
    return ConstraintSolution(basis, sv[order], threshold, _gap(sv, kept, rows.shape[0]))


def constraint_matrix(grid: ModeGrid, ell: StandardMomentum, translation_samples) -> np.ndarray:
    """Explicit stacked diagonal rows (for cross-checking the column-norm shortcut)."""
    a = np.atleast_2d(np.asarray(translation_samples, dtype=float))
    lv = ell.four_vector(grid.dim)
    phase_p = _dot(grid.momenta, grid.energies, a)
    phase_l = -a[:, 0] * lv[0] + a[:, 1:] @ lv[1:]
    blocks = [np.diag(np.exp(-1j * phase_p[s]) - np.exp(-1j * phase_l[s])) for s in range(a.shape[0])]
    return np.vstack(blocks)


def reconstruct_dissipator(grid: ModeGrid, trunc: FockTruncation, solution: ConstraintSolution,
                           scale: complex = 1.0) -> GkslGenerator:
    """Lindblad operators generated from a one-dimensional massive solution.

    The solution is supported on ``p = 0`` with amplitude ``f0``.  Boosting
    the standard momentum to every other grid momentum with the
    ``sqrt(E'/E)`` factors of the creation-operator transformation, and the
    matching change of measure, gives ``L_q = f0 a_q`` for every mode on the
    grid, so the dissipator has uniform rate ``γ = |f0|²``.
    """
    if solution.dimension != 1:
        raise ValidationError(f"need a one-dimensional solution space, got {solution.dimension}")
    vec = scale * solution.basis[:, 0]
    support = np.flatnonzero(np.abs(vec) > 1e-12 * np.abs(vec).max())
    if support.tolist() != [grid.zero_mode]:
        raise ValidationError("solution is not supported at zero momentum")
    f0 = vec[grid.zero_mode]
    ops = tuple(f0 * a for a in mode_operators(trunc))
    return GkslGenerator(hamiltonian(grid, trunc), ops)


@dataclass(frozen=True)
class MConstraintSolution:
    allowed_pairs: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray
    gap: float
    dropped_rows: int

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


def _cubic_weights(nodes, x):
    """Four-point Lagrange stencil and weights at ``x``, or ``None`` off-grid."""
    i0 = int(np.searchsorted(nodes, x, side="right")) - 1
    lo = i0 - 1
    if lo < 0 or lo + 3 >= nodes.size:
        return None
    idx = np.arange(lo, lo + 4)
    xs = nodes[idx]
    w = np.ones(4)
    for a in range(4):
        for b in range(4):
            if a != b:
                w[a] *= (x - xs[b]) / (xs[a] - xs[b])
    return idx, w


def boost_rows(grid: ModeGrid, boosts: Sequence[BoostAction]) -> tuple:
    """Rows ``g(p_Λ) - g(p)`` with ``g(p_Λ)`` by cubic interpolation.

    Rows whose boosted momentum leaves the interpolation range are dropped;
    returns ``(rows, dropped)``.
    """
    if grid.dim != 1:
        raise ValidationError("boosts are implemented in 1+1 dimensions only")
    p = grid.momenta[:, 0]
    rows, dropped = [], 0
    for boost in boosts:
        images = boost.momentum(p, grid.mass)
        kept_here = 0
        for j, q in enumerate(images):
            st = _cubic_weights(p, q)
            if st is None:
                dropped += 1
                continue
            row = np.zeros(p.size)
            row[st[0]] += st[1]
            row[j] -= 1.0
            rows.append(row)
            kept_here += 1
        if kept_here < p.size // 2:
            warnings.warn(f"boost eta={boost.eta} maps {p.size - kept_here} of {p.size} "
                          "momenta off the grid; interpolation constraints are sparse",
                          InterpolationWarning, stacklevel=2)
    return (np.array(rows) if rows else np.zeros((0, p.size))), dropped


def m_constraint_solve(grid: ModeGrid, boost_samples: Sequence[BoostAction], translation_samples,
                       threshold: float = NULL_THRESHOLD) -> MConstraintSolution:
    """Solution space of the Hermitian-part kernel ``g(p, p')``.

    Translations require ``g(p, p') (e^{i(p - p')·a} - 1) = 0``, which keeps
    only pairs with equal four-momentum, i.e. the diagonal.  Boosts then
    demand ``g(p_Λ) = g(p)`` on the diagonal values.
    """
    a = _check_samples(translation_samples, grid.dim)
    ph = _dot(grid.momenta, grid.energies, a)           # (S, n)
    diff = ph[:, :, None] - ph[:, None, :]
    sv_pairs = np.sqrt(np.sum(np.abs(np.exp(1j * diff) - 1.0) ** 2, axis=0))
    allowed = sv_pairs < threshold
    diag_ok = np.array_equal(allowed, np.eye(grid.n_modes, dtype=bool))
    if not diag_ok:
        raise ValidationError("translation samples leave off-diagonal kernel entries unconstrained")
    n = grid.n_modes
    if not boost_samples:
        return MConstraintSolution(allowed, np.eye(n), np.zeros(0), float("inf"), 0)
    rows, dropped = boost_rows(grid, boost_samples)
    _, sv, vh = np.linalg.svd(rows, full_matrices=True)
    full = np.zeros(n)
    full[:sv.size] = sv
    kept = full < threshold
    basis = vh.conj().T[:, kept]
    return MConstraintSolution(allowed, basis, full, _gap(full, kept, rows.shape[0]), dropped)


def boost_residual(grid: ModeGrid, boosts: Sequence[BoostAction], g) -> float:
    """``max |g(p_Λ) - g(p)| / max |g|`` over the interpolation rows."""
    rows, _ = boost_rows(grid, boosts)
    g = np.asarray(g, dtype=float)
    return float(np.abs(rows @ g).max() / np.abs(g).max())


# ---------------------------------------------------------------------------
# measure and dissipator invariance in 1+1 dimensions


def grid_with_cutoff(n: int, cutoff: float, mass: float) -> ModeGrid:
    """One-dimensional grid of ``n`` momenta with ``max |p| = cutoff``."""
    return ModeGrid(1, np.pi * n / cutoff, n, mass)


def invariant_measure_check(grid: ModeGrid, f: Callable, boost: BoostAction,
                            leak_tol: float = 1e-12) -> float:
    """``|Σ_j Δp/(2E_j) f(p_j) - Σ_j Δp/(2E_j) f(Λp_j)|``.

    The second sum is the measure evaluated in boosted coordinates; no
    Jacobian appears because ``dp/2E`` is invariant.  Warns when ``f`` (or
    its boosted version) is not negligible at the grid edge.
    """
    if grid.dim != 1:
        raise ValidationError("measure check is implemented on 1+1 grids")
    p = grid.momenta[:, 0]
    e = grid.energies
    fp = np.asarray(f(p))
    fb = np.asarray(f(boost.momentum(p, grid.mass)))
    peak = max(np.abs(fp).max(), np.abs(fb).max())
    edge = max(abs(fp[0]), abs(fp[-1]), abs(fb[0]), abs(fb[-1]))
    if edge > leak_tol * peak:
        warnings.warn(f"test function is {edge / peak:.2g} of its peak at the momentum cutoff",
                      SupportLeakageWarning, stacklevel=2)
    w = grid.dp / (2 * e)
    return float(abs(np.sum(w * fp) - np.sum(w * fb)))


def single_particle_dissipator(rho, rates) -> np.ndarray:
    """Loss dissipator on the ``N ≤ 1`` sector; index 0 is the vacuum.

    Equivalent to Lindblad operators ``sqrt(r_j) |0><j|`` (the restriction of
    ``sqrt(r_j) a_j``) but evaluated in ``O(n²)``.
    """
    rho = np.asarray(rho, dtype=complex)
    r = np.r_[0.0, np.asarray(rates, dtype=float)]
    out = -0.5 * (r[:, None] + r[None, :]) * rho
    out[0, 0] += np.sum(r[1:] * np.real(np.diag(rho)[1:]))
    return out


def boost_weights(grid: ModeGrid, boost: BoostAction) -> tuple:
    """Boosted nodes, their energies and the state normalisation factors ``c_j``.

    A single-particle amplitude on nodes ``p_j`` becomes an amplitude on the
    transported nodes ``q_j = Λp_j``.  With spacing ``w_j`` of the ``q_j``
    (central differences) the factor ``c_j² = Δp E'_j / (E_j w_j)`` combines
    the ``sqrt(E'/E)`` creation-operator factor with the change of cell
    size; it equals 1 up to ``O(Δp²)``.
    """
    p = grid.momenta[:, 0]
    e = grid.energies
    q = boost.momentum(p, grid.mass)
    e_b = boost.energy(p, grid.mass)
    w = np.gradient(q)
    c = np.sqrt(grid.dp * e_b / (e * w))
    return q, e_b, c


def wave_packet_state(grid: ModeGrid, center: Optional[float] = None,
                      width: Optional[float] = None, leak_tol: float = 1e-12) -> np.ndarray:
    """Pure single-particle Gaussian packet on the ``N ≤ 1`` sector (vacuum weight 0)."""
    if grid.dim != 1:
        raise ValidationError("wave packets are built on 1+1 grids")
    center = 0.5 * grid.mass if center is None else center
    width = 0.5 * grid.mass if width is None else width
    p = grid.momenta[:, 0]
    psi = np.exp(-0.25 * ((p - center) / width) ** 2) * np.exp(0.3j * p)
    if max(abs(psi[0]), abs(psi[-1])) > leak_tol * np.abs(psi).max():
        warnings.warn("wave packet reaches the momentum cutoff", SupportLeakageWarning, stacklevel=2)
    psi = np.r_[0.0, psi / np.linalg.norm(psi)]
    return np.outer(psi, psi.conj())


def dissipator_invariance_check(grid: ModeGrid, rho, boost: BoostAction, gamma: float = 1.0,
                                model: str = "INVARIANT", kappa: float = 0.0) -> float:
    """``max |B 𝒟[ρ] B - 𝒟'[B ρ B]|`` on the single-particle sector.

    ``B = diag(1, c_j)`` maps a state on the grid nodes to the boosted
    nodes (see :func:`boost_weights`).  ``𝒟`` uses the rates on the
    original nodes and ``𝒟'`` those on the boosted nodes: ``γ`` in both
    frames for the invariant model, ``κE_j`` and ``κE'_j`` for the
    covariant one.
    """
    if grid.dim != 1:
        raise ValidationError("boost checks are implemented on 1+1 grids")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (grid.n_modes + 1,) * 2:
        raise ValidationError(f"single-particle state must be {(grid.n_modes + 1,) * 2}, got {rho.shape}")
    _, e_b, c = boost_weights(grid, boost)
    b = np.r_[1.0, c]
    model = model.upper()
    if model == "INVARIANT":
        rates, rates_b = np.full(grid.n_modes, gamma), np.full(grid.n_modes, gamma)
    elif model == "COVARIANT":
        rates, rates_b = kappa * grid.energies, kappa * e_b
    else:
        raise ValidationError(f"unknown model {model!r}")
    lhs = b[:, None] * single_particle_dissipator(rho, rates) * b[None, :]
    rhs = single_particle_dissipator(b[:, None] * rho * b[None, :], rates_b)
    return float(np.abs(lhs - rhs).max())


def refinement_study(ns: Sequence[int], cutoff: float, mass: float, boost: BoostAction,
                     residual: Callable[[ModeGrid], float]) -> dict:
    """Residuals on grids of fixed cutoff and the log-log slope against ``Δp``."""
    dps, res = [], []
    for n in ns:
        grid = grid_with_cutoff(n, cutoff, mass)
        dps.append(grid.dp)
        res.append(residual(grid))
    slope = float(np.polyfit(np.log(dps), np.log(res), 1)[0]) if len(ns) > 1 and min(res) > 0 else float("nan")
    return {"n": list(ns), "dp": dps, "residual": res, "slope": slope}
