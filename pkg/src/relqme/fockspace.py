"""Momentum grids, truncated multimode Fock spaces and the two model dissipators.

Discrete modes are related to the continuum operators by
``a(p_j) = a_j / sqrt(Δ^d p)``, so ``[a_j, a_k†] = δ_jk`` and the uniform
loss rate of the invariant model survives discretisation unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidRateError, InvalidTruncationError, TruncationLeakageError, ValidationError
from .gksl import GkslGenerator

DEFAULT_MAX_DIM = 4096
LEAKAGE_THRESHOLD = 1e-6


@dataclass(frozen=True)
class ModeGrid:
    """Periodic box of side ``length`` with ``points_per_axis`` momenta per axis.

    Momenta are ``2π k / L`` with integer ``k`` symmetric about zero, so
    ``p = 0`` is always a grid point.  Modes are ordered by increasing ``k``
    (row-major over axes for ``dim = 3``).
    """

    dim: int
    length: float
    points_per_axis: int
    mass: float

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ValidationError(f"spatial dimension must be 1 or 3, got {self.dim}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise ValidationError(f"box length must be positive, got {self.length}")
        if int(self.points_per_axis) != self.points_per_axis or self.points_per_axis < 1:
            raise ValidationError(f"points_per_axis must be a positive integer, got {self.points_per_axis}")
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise ValidationError(f"mass must be positive, got {self.mass}")

    @property
    def dp(self) -> float:
        return 2 * np.pi / self.length

    @property
    def momentum_cell(self) -> float:
        """``Δ^d p``."""
        return self.dp ** self.dim

    @property
    def cell_volume(self) -> float:
        """Spatial cell ``ΔV = (L/n)^d``; the grid value of ``δ^d(0)`` is ``1/ΔV``."""
        return (self.length / self.points_per_axis) ** self.dim

    @cached_property
    def axis_indices(self) -> np.ndarray:
        n = self.points_per_axis
        return np.arange(n) - n // 2

    @cached_property
    def momenta(self) -> np.ndarray:
        """Array of shape ``(n_modes, dim)``."""
        k = self.axis_indices * self.dp
        if self.dim == 1:
            return k[:, None]
        kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
        return np.stack([kx.ravel(), ky.ravel(), kz.ravel()], axis=1)

    @cached_property
    def energies(self) -> np.ndarray:
        return np.sqrt((self.momenta ** 2).sum(axis=1) + self.mass ** 2)

    @property
    def n_modes(self) -> int:
        return self.points_per_axis ** self.dim

    @cached_property
    def zero_mode(self) -> int:
        return int(np.flatnonzero(np.all(self.momenta == 0.0, axis=1))[0])

    @property
    def momentum_cutoff(self) -> float:
        return float(np.abs(self.momenta).max())

    def positions(self) -> np.ndarray:
        """Spatial sample points ``x = j L/n`` of one axis."""
        return np.arange(self.points_per_axis) * self.length / self.points_per_axis

    def field_coefficients(self, kind: str, x, modes: Optional[Sequence[int]] = None):
        """Coefficients ``(u_j, v_j)`` of ``Φ(x)`` or ``Π(x)`` in ``Σ_j (u_j a_j + v_j a_j†)``.

        ``kind`` is ``"PHI"`` or ``"PI"``.  Schrödinger picture, time zero.
        """
        idx = np.arange(self.n_modes) if modes is None else np.asarray(modes, dtype=int)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValidationError(f"position must have {self.dim} components, got {x.shape}")
        p = self.momenta[idx]
        e = self.energies[idx]
        c = np.sqrt(self.momentum_cell / ((2 * np.pi) ** self.dim * 2 * e))
        phase = np.exp(1j * (p @ x))
        if kind == "PHI":
            return c * phase, c * np.conj(phase)
        if kind == "PI":
            return -1j * e * c * phase, 1j * e * c * np.conj(phase)
        raise ValidationError(f"unknown field kind {kind!r}")


@dataclass(frozen=True)
class FockTruncation:
    """Per-mode cutoff ``dim_f`` on the listed grid modes."""

    dim_f: int
    modes: tuple = (0,)
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if int(self.dim_f) != self.dim_f or self.dim_f < 2:
            raise InvalidTruncationError(f"dim_f must be an integer >= 2, got {self.dim_f}")
        modes = tuple(int(j) for j in self.modes)
        if not modes:
            raise InvalidTruncationError("truncation needs at least one mode")
        if len(set(modes)) != len(modes):
            raise InvalidTruncationError("truncation modes must be distinct")
        object.__setattr__(self, "modes", modes)
        if self.dimension > self.max_dim:
            raise InvalidTruncationError(
                f"Hilbert dimension {self.dim_f}^{len(modes)} = {self.dimension} exceeds cap {self.max_dim}")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dimension(self) -> int:
        return self.dim_f ** len(self.modes)

    def check_grid(self, grid: ModeGrid):
        bad = [j for j in self.modes if not 0 <= j < grid.n_modes]
        if bad:
            raise InvalidTruncationError(f"modes {bad} are not on a grid with {grid.n_modes} modes")

    def occupations(self) -> np.ndarray:
        """Occupation numbers of every basis state, shape ``(dimension, n_modes)``."""
        grids = np.indices((self.dim_f,) * self.n_modes).reshape(self.n_modes, -1)
        return grids.T

    def basis_index(self, occupation: Sequence[int]) -> int:
        occ = tuple(int(o) for o in occupation)
        if len(occ) != self.n_modes or any(not 0 <= o < self.dim_f for o in occ):
            raise InvalidTruncationError(f"occupation {occ} not representable")
        return int(np.ravel_multi_index(occ, (self.dim_f,) * self.n_modes))

    def local_index(self, mode: int) -> int:
        """Position of grid mode ``mode`` inside the truncation."""
        try:
            return self.modes.index(int(mode))
        except ValueError:
            raise InvalidTruncationError(f"mode {mode} is not in the truncation {self.modes}") from None


def mode_ops(dim_f: int):
    """Single-mode ladder matrices ``(a, a†)`` with ``a[n, n+1] = sqrt(n+1)``."""
    if int(dim_f) != dim_f or dim_f < 2:
        raise InvalidTruncationError(f"dim_f must be an integer >= 2, got {dim_f}")
    a = np.diag(np.sqrt(np.arange(1, dim_f, dtype=float)), k=1).astype(complex)
    return a, a.conj().T


def mode_operators(trunc: FockTruncation) -> list:
    """Annihilation operator of each truncated mode on the full tensor space."""
    a, _ = mode_ops(trunc.dim_f)
    eye = np.eye(trunc.dim_f, dtype=complex)
    ops = []
    for k in range(trunc.n_modes):
        factors = [a if i == k else eye for i in range(trunc.n_modes)]
        ops.append(reduce(np.kron, factors))
    return ops


def number_operator(trunc: FockTruncation, mode: Optional[int] = None) -> np.ndarray:
    """``a_j† a_j`` for grid mode ``mode`` or the total number operator if ``None``."""
    occ = trunc.occupations()
    if mode is None:
        return np.diag(occ.sum(axis=1).astype(complex))
    return np.diag(occ[:, trunc.local_index(mode)].astype(complex))


def hamiltonian(grid: ModeGrid, trunc: FockTruncation) -> np.ndarray:
    """Free Hamiltonian ``Σ_j E_j N_j`` restricted to the truncated modes."""
    trunc.check_grid(grid)
    occ = trunc.occupations()
    return np.diag((occ @ grid.energies[list(trunc.modes)]).astype(complex))


def field_operator(grid: ModeGrid, trunc: FockTruncation, kind: str, x, t: float = 0.0) -> np.ndarray:
    """Matrix of ``Φ_I(t, x)`` or ``Π_I(t, x)`` built from the truncated modes only."""
    trunc.check_grid(grid)
    u, v = grid.field_coefficients(kind, x, trunc.modes)
    phase = np.exp(-1j * grid.energies[list(trunc.modes)] * t)
    u, v = u * phase, v * np.conj(phase)
    out = np.zeros((trunc.dimension,) * 2, dtype=complex)
    for uj, vj, a in zip(u, v, mode_operators(trunc)):
        out += uj * a + vj * a.conj().T
    return out


def _check_rate(value, name):
    if not np.isfinite(value) or value < 0:
        raise InvalidRateError(f"{name} must be a finite non-negative number, got {value}")


def build_model_generator(grid: ModeGrid, trunc: FockTruncation, gamma: float, g: float = 0.0) -> GkslGenerator:
    """Invariant model: ``M = H + g N`` and ``L_j = sqrt(γ) a_j`` on every truncated mode."""
    _check_rate(gamma, "gamma")
    if not np.isfinite(g):
        raise ValidationError(f"coupling g must be finite, got {g}")
    h = hamiltonian(grid, trunc) + g * number_operator(trunc)
    ops = tuple(np.sqrt(gamma) * a for a in mode_operators(trunc)) if gamma > 0 else ()
    return GkslGenerator(h, ops)


def build_covariant_generator(grid: ModeGrid, trunc: FockTruncation, kappa: float) -> GkslGenerator:
    """Energy-proportional loss: ``L_j = sqrt(κ E_j) a_j``."""
    _check_rate(kappa, "kappa")
    h = hamiltonian(grid, trunc)
    if kappa == 0:
        return GkslGenerator(h, ())
    energies = grid.energies[list(trunc.modes)]
    ops = tuple(np.sqrt(kappa * e) * a for e, a in zip(energies, mode_operators(trunc)))
    return GkslGenerator(h, ops)


def expect_number(rho, trunc: FockTruncation, mode: int) -> float:
    """``tr(ρ a_j† a_j)``.  Raises if the imaginary part exceeds 1e-12."""
    rho = np.asarray(rho)
    if rho.shape != (trunc.dimension,) * 2:
        raise InvalidTruncationError(f"rho shape {rho.shape} does not match truncation dimension {trunc.dimension}")
    occ = trunc.occupations()[:, trunc.local_index(mode)]
    value = np.dot(np.diag(rho), occ)
    if abs(value.imag) > 1e-12:
        raise ValidationError(f"number expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


def fock_state(trunc: FockTruncation, occupation: Sequence[int]) -> np.ndarray:
    """Density matrix of the basis state with the given occupations."""
    rho = np.zeros((trunc.dimension,) * 2, dtype=complex)
    k = trunc.basis_index(occupation)
    rho[k, k] = 1.0
    return rho


def vacuum(trunc: FockTruncation) -> np.ndarray:
    return fock_state(trunc, (0,) * trunc.n_modes)


def coherent_like_state(trunc: FockTruncation, amplitudes: Sequence[complex]) -> np.ndarray:
    """Pure state from a coherent-state expansion cut at ``dim_f - 1`` and renormalised."""
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.shape != (trunc.n_modes,):
        raise InvalidTruncationError("need one amplitude per truncated mode")
    n = np.arange(trunc.dim_f)
    fact = np.cumprod(np.r_[1.0, np.arange(1, trunc.dim_f)])
    kets = [alpha ** n / np.sqrt(fact) for alpha in amps]
    psi = reduce(np.kron, kets)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def top_level_population(rho, trunc: FockTruncation) -> float:
    """Largest population of the highest Fock level over the truncated modes."""
    occ = trunc.occupations()
    diag = np.real(np.diag(np.asarray(rho)))
    top = occ == trunc.dim_f - 1
    return float(max(diag[top[:, k]].sum() for k in range(trunc.n_modes)))


def leakage_guard(trunc: FockTruncation, threshold: float = LEAKAGE_THRESHOLD):
    """Callable for :func:`relqme.gksl.integrate` that aborts on top-level population."""

    def guard(rho):
        pop = top_level_population(rho, trunc)
        if pop > threshold:
            raise TruncationLeakageError(
                f"top Fock level population {pop:.3g} exceeds {threshold:.1g}; raise dim_f")

    return guard


def reliable_mask(trunc: FockTruncation, n_ladder: int) -> np.ndarray:
    """Boolean mask of matrix entries unaffected by the Fock cutoff.

    A product of ``n_ladder`` linear combinations of ladder operators has the
    same matrix element ``<m|X|m'>`` in the truncated and the infinite space
    whenever ``m_j + m'_j <= 2(dim_f - 1) - n_ladder`` for every mode.  The
    block is also mapped into itself by the truncated adjoint semigroup of
    both dissipators, so comparisons after evolution stay exact there.
    """
    occ = trunc.occupations()
    s = occ[:, None, :] + occ[None, :, :]
    return np.all(s <= 2 * (trunc.dim_f - 1) - n_ladder, axis=2)
