"""GKSL generators, their adjoint, gauge freedom and time integration.

Operators are plain complex ``numpy`` arrays.  Superoperators act on the
row-major flattening of a matrix, for which ``vec(A X B) = (A ⊗ Bᵀ) vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import InvalidGaugeError, ShapeMismatchError, StepSizeUnderflowError

HERMITICITY_TOL = 1e-12


def _as_square(op, name) -> np.ndarray:
    arr = np.asarray(op, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeMismatchError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class GkslGenerator:
    """Hermitian part ``M`` and Lindblad operators ``L_λ`` of a generator.

    The generator acts as ``ℒ[ρ] = -i[M, ρ] + Σ_λ (L ρ L† - ½{L†L, ρ})``.
    """

    hermitian_part: np.ndarray
    lindblad_ops: tuple = ()

    def __post_init__(self):
        m = _as_square(self.hermitian_part, "hermitian_part")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.conj().T).max(initial=0.0) > HERMITICITY_TOL * scale:
            raise ShapeMismatchError("hermitian_part is not Hermitian within 1e-12")
        ops = tuple(_as_square(L, "lindblad operator") for L in self.lindblad_ops)
        for L in ops:
            if L.shape != m.shape:
                raise ShapeMismatchError(
                    f"Lindblad operator shape {L.shape} does not match {m.shape}")
        object.__setattr__(self, "hermitian_part", m)
        object.__setattr__(self, "lindblad_ops", ops)

    @property
    def dim(self) -> int:
        return self.hermitian_part.shape[0]

    def _check(self, x, name):
        x = _as_square(x, name)
        if x.shape[0] != self.dim:
            raise ShapeMismatchError(
                f"{name} has shape {x.shape}, generator acts on dimension {self.dim}")
        return x


@dataclass(frozen=True)
class GaugeData:
    """Gauge freedom ``L' = U L + α``, ``M' = M + (1/2i) Σ (α* U L - h.c.) + β``."""

    unitary_matrix: np.ndarray
    shifts: np.ndarray
    beta: float = 0.0

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.unitary_matrix, dtype=complex))
        alpha = np.atleast_1d(np.asarray(self.shifts, dtype=complex))
        if u.shape[0] != u.shape[1]:
            raise InvalidGaugeError(f"gauge matrix must be square, got {u.shape}")
        if np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() > 1e-12:
            raise InvalidGaugeError("gauge matrix is not unitary within 1e-12")
        if alpha.shape != (u.shape[0],):
            raise InvalidGaugeError(
                f"need one shift per Lindblad operator, got {alpha.shape} for {u.shape}")
        if not np.isfinite(self.beta) or np.iscomplexobj(self.beta) and np.imag(self.beta) != 0:
            raise InvalidGaugeError("beta must be a finite real number")
        object.__setattr__(self, "unitary_matrix", u)
        object.__setattr__(self, "shifts", alpha)
        object.__setattr__(self, "beta", float(np.real(self.beta)))


def apply(gen: GkslGenerator, rho) -> np.ndarray:
    """Schrödinger-picture action ``ℒ[ρ]``."""
    rho = gen._check(rho, "rho")
    m = gen.hermitian_part
    out = -1j * (m @ rho - rho @ m)
    for L in gen.lindblad_ops:
        Ld = L.conj().T
        LdL = Ld @ L
        out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def apply_adjoint(gen: GkslGenerator, x) -> np.ndarray:
    """Heisenberg-picture action ``ℒ†[X]``, dual to :func:`apply` under the trace."""
    x = gen._check(x, "X")
    m = gen.hermitian_part
    out = 1j * (m @ x - x @ m)
    for L in gen.lindblad_ops:
        Ld = L.conj().T
        LdL = Ld @ L
        out += Ld @ x @ L - 0.5 * (LdL @ x + x @ LdL)
    return out


def superoperator(gen: GkslGenerator, adjoint: bool = False) -> np.ndarray:
    """Dense matrix of ``ℒ`` (or ``ℒ†``) on row-major vectorised operators."""
    n = gen.dim
    eye = np.eye(n)
    m = gen.hermitian_part
    sign = 1.0 if adjoint else -1.0
    s = sign * 1j * (np.kron(m, eye) - np.kron(eye, m.T))
    for L in gen.lindblad_ops:
        LdL = L.conj().T @ L
        if adjoint:
            s += np.kron(L.conj().T, L.T)
        else:
            s += np.kron(L, L.conj())
        s -= 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    return s


def propagate_dense(gen: GkslGenerator, x, t: float, adjoint: bool = False) -> np.ndarray:
    """Reference propagator ``e^{ℒt}`` (or ``e^{ℒ†t}``) by dense matrix exponential.

    Intended for small dimensions; the superoperator has ``dim**4`` entries.
    """
    x = gen._check(x, "operator")
    prop = expm(superoperator(gen, adjoint=adjoint) * t)
    return (prop @ x.reshape(-1)).reshape(x.shape)


def gauge_transform(gen: GkslGenerator, gauge: GaugeData) -> GkslGenerator:
    """Return the gauge-equivalent pair ``(M', {L'})``; the action of ℒ is unchanged."""
    ops = gen.lindblad_ops
    u, alpha = gauge.unitary_matrix, gauge.shifts
    if u.shape[0] != len(ops):
        raise InvalidGaugeError(
            f"gauge acts on {u.shape[0]} operators, generator has {len(ops)}")
    eye = np.eye(gen.dim)
    new_ops = []
    for lam in range(len(ops)):
        new_ops.append(sum(u[lam, mu] * ops[mu] for mu in range(len(ops))) + alpha[lam] * eye)
    correction = np.zeros_like(gen.hermitian_part)
    for lam in range(len(ops)):
        for mu in range(len(ops)):
            correction += (np.conj(alpha[lam]) * u[lam, mu] * ops[mu]
                           - alpha[lam] * np.conj(u[lam, mu]) * ops[mu].conj().T)
    m_new = gen.hermitian_part + correction / 2j + gauge.beta * eye
    # Remove round-off anti-Hermitian residue so the new generator validates.
    m_new = 0.5 * (m_new + m_new.conj().T)
    return GkslGenerator(m_new, tuple(new_ops))


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(gen: GkslGenerator, rho0, t: float, tol: float = 1e-9,
              guard: Optional[Callable[[np.ndarray], None]] = None,
              adjoint: bool = False, h0: Optional[float] = None) -> np.ndarray:
    """Evolve ``rho0`` for time ``t`` with adaptive RK4.

    The local error is estimated by step doubling and the accepted value is
    the Richardson-extrapolated combination of the full and two half steps.
    Steps are controlled so that the accumulated error estimate stays below
    ``tol``.  ``guard`` is called on every accepted state and may raise (the
    Fock-space leakage guard is the typical use).  With ``adjoint=True`` the
    Heisenberg-picture generator is integrated instead.
    """
    if t < 0:
        raise ValueError("integration time must be non-negative")
    y = gen._check(rho0, "rho0").copy()
    if t == 0:
        return y
    f = (lambda x: apply_adjoint(gen, x)) if adjoint else (lambda x: apply(gen, x))
    # Spectral scale of the generator bounds the stable step.
    scale = np.abs(gen.hermitian_part).sum(axis=1).max()
    for L in gen.lindblad_ops:
        scale += np.abs(L.conj().T @ L).sum(axis=1).max()
    h = h0 if h0 is not None else min(t, 1.0 / max(scale, 1e-300))
    per_time = tol / t
    t_now = 0.0
    h_min = 1e-14 * t
    while t_now < t:
        h = min(h, t - t_now)
        full = _rk4_step(f, y, h)
        half = _rk4_step(f, _rk4_step(f, y, 0.5 * h), 0.5 * h)
        err = np.abs(half - full).max() / 15.0
        allowed = per_time * h
        if err <= allowed or h <= h_min:
            if err > allowed:
                raise StepSizeUnderflowError(
                    f"step size underflow at t={t_now:.6g}: error {err:.3g} exceeds {allowed:.3g}")
            y = half + (half - full) / 15.0
            t_now = t if h >= t - t_now else t_now + h
            if guard is not None:
                guard(y)
        factor = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (allowed / err) ** 0.2))
        h *= factor
    return y


def check_density_matrix(rho, trace_tol: float = 1e-10, herm_tol: float = 1e-12,
                         eig_tol: float = 1e-10) -> dict:
    """Report trace, Hermiticity and minimum eigenvalue of ``rho``.

    The eigenvalue check uses the Hermitian part of ``rho`` so round-off
    asymmetry does not leak imaginary eigenvalues.  Returns a dict with an
    ``ok`` flag instead of raising.
    """
    rho = _as_square(rho, "rho")
    herm = float(np.abs(rho - rho.conj().T).max())
    trace_err = float(abs(np.trace(rho) - 1.0))
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    return {
        "trace_error": trace_err,
        "hermiticity_error": herm,
        "min_eigenvalue": min_eig,
        "ok": trace_err <= trace_tol and herm <= herm_tol and min_eig >= -eig_tol,
    }


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None):
    """Random full-rank (or given-rank) density matrix for property tests."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_generator(dim: int, n_ops: int, rng: np.random.Generator) -> GkslGenerator:
    """Generator with random Hermitian part and random Lindblad operators."""
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    ops = tuple(0.5 * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
                for _ in range(n_ops))
    return GkslGenerator(0.5 * (h + h.conj().T), ops)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
