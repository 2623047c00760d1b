"""Pseudo-spectral solver for the damped Klein-Gordon field equations.

On a periodic lattice every Fourier mode obeys ``u'' + Γ u' + W² u = 0``:

* invariant model: ``Γ = γ`` and ``W² = k² + m² + γ²/4``;
* covariant model: ``Γ = κE_k`` and ``W² = (1 + κ²/4) E_k²``.

In both cases the oscillation frequency ``sqrt(W² - Γ²/4)`` equals ``E_k``.
The operator equations are linear, so classical samples evolve exactly like
the mode coefficients of the Heisenberg field.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import CFLViolationError, FitError, ValidationError

SCHEMES = ("SPECTRAL_EXACT", "LEAPFROG")


@dataclass(frozen=True)
class SolverConfig:
    mass: float = 1.0
    gamma: float = 0.0
    kappa: float = 0.0
    model: str = "INVARIANT"
    dt_step: float = 0.01
    t_final: float = 1.0
    length: float = 64.0
    n_points: int = 256
    scheme: str = "SPECTRAL_EXACT"

    def __post_init__(self):
        object.__setattr__(self, "model", str(self.model).upper())
        object.__setattr__(self, "scheme", str(self.scheme).upper())
        if self.model not in ("INVARIANT", "COVARIANT"):
            raise ValidationError(f"unknown model {self.model!r}")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValidationError(f"mass must be positive, got {self.mass}")
        if self.gamma < 0 or self.kappa < 0:
            raise ValidationError("rates must be non-negative")
        if not self.dt_step > 0:
            raise ValidationError(f"dt_step must be positive, got {self.dt_step}")
        if not self.t_final >= 0:
            raise ValidationError(f"t_final must be non-negative, got {self.t_final}")
        if not (self.length > 0 and int(self.n_points) == self.n_points and self.n_points >= 2):
            raise ValidationError("lattice needs positive length and at least two points")

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.length / self.n_points

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.length / self.n_points)

    def coefficients(self, k=None):
        """``(Γ, W², ω)`` per Fourier mode (all modes when ``k`` is ``None``)."""
        k = self.wavenumbers if k is None else np.asarray(k, dtype=float)
        e = np.sqrt(k * k + self.mass ** 2)
        if self.model == "INVARIANT":
            damping = np.full_like(e, self.gamma)
            w2 = e * e + 0.25 * self.gamma ** 2
        else:
            damping = self.kappa * e
            w2 = (1 + 0.25 * self.kappa ** 2) * e * e
        return damping, w2, np.sqrt(w2 - 0.25 * damping ** 2)

    def free(self) -> "SolverConfig":
        return replace(self, gamma=0.0, kappa=0.0)


@dataclass(frozen=True)
class FieldState:
    phi: np.ndarray
    dphi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        dphi = np.asarray(self.dphi, dtype=float)
        if phi.shape != dphi.shape or phi.ndim != 1:
            raise ValidationError("phi and dphi must be one-dimensional arrays of equal size")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(dphi))):
            raise ValidationError("field samples must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "dphi", dphi)


def cfl_limit(cfg: SolverConfig) -> float:
    """Largest stable leapfrog step ``2 / ω_max`` with ``ω_max = max_k W_k``."""
    _, w2, _ = cfg.coefficients()
    return 2.0 / np.sqrt(w2.max())


def _exact_modes(u0, v0, damping, w2, omega, t):
    decay = np.exp(-0.5 * damping * t)
    c, s = np.cos(omega * t), np.sin(omega * t)
    u = decay * (u0 * c + (v0 + 0.5 * damping * u0) / omega * s)
    v = decay * (v0 * c - (w2 * u0 + 0.5 * damping * v0) / omega * s)
    return u, v


def _leapfrog_modes(u0, v0, damping, w2, h, steps):
    """Centred scheme ``(u⁺ - 2u + u⁻)/h² + Γ(u⁺ - u⁻)/2h + W² u = 0``."""
    if steps == 0:
        return u0.copy(), v0.copy()
    # Taylor start using the exact second derivative.
    acc0 = -damping * v0 - w2 * u0
    prev, cur = u0, u0 + h * v0 + 0.5 * h * h * acc0
    lo, hi = 1 - 0.5 * damping * h, 1 + 0.5 * damping * h
    for _ in range(steps - 1):
        prev, cur = cur, (2 * cur - lo * prev - h * h * w2 * cur) / hi
    nxt = (2 * cur - lo * prev - h * h * w2 * cur) / hi
    return cur, (nxt - prev) / (2 * h)


def evolve(state0: FieldState, cfg: SolverConfig, t: Optional[float] = None) -> FieldState:
    """Advance ``state0`` by ``t`` (default ``cfg.t_final``).

    ``LEAPFROG`` requires ``t`` to be a whole number of ``cfg.dt_step`` and
    refuses steps beyond the stability bound, suggesting ``0.9`` of it.
    """
    t = cfg.t_final if t is None else float(t)
    if state0.phi.size != cfg.n_points:
        raise ValidationError(f"state has {state0.phi.size} samples, config expects {cfg.n_points}")
    damping, w2, omega = cfg.coefficients()
    u0, v0 = np.fft.fft(state0.phi), np.fft.fft(state0.dphi)
    if cfg.scheme == "SPECTRAL_EXACT":
        u, v = _exact_modes(u0, v0, damping, w2, omega, t)
    else:
        limit = cfl_limit(cfg)
        if cfg.dt_step >= limit:
            raise CFLViolationError(
                f"dt_step={cfg.dt_step:.6g} violates the leapfrog bound {limit:.6g}; "
                f"suggested dt_step={0.9 * limit:.6g}", 0.9 * limit)
        steps = int(round(t / cfg.dt_step))
        if abs(steps * cfg.dt_step - t) > 1e-9 * max(1.0, t):
            raise ValidationError(f"t={t} is not a multiple of dt_step={cfg.dt_step}")
        u, v = _leapfrog_modes(u0, v0, damping, w2, cfg.dt_step, steps)
    return FieldState(np.fft.ifft(u).real, np.fft.ifft(v).real, state0.t + t)


def envelope_check(state_t: FieldState, free_state_t: FieldState, gamma: float, t: float) -> float:
    """``max |φ(t) - e^{-γt/2} φ_free(t)|``."""
    if state_t.phi.shape != free_state_t.phi.shape:
        raise ValidationError("states live on different grids")
    return float(np.abs(state_t.phi - np.exp(-0.5 * gamma * t) * free_state_t.phi).max())


def free_companion(state0: FieldState, cfg: SolverConfig) -> FieldState:
    """Free-field initial data whose evolution is the undamped envelope partner.

    With ``ψ = e^{γt/2} φ`` the invariant equation reduces to the free one,
    so ``ψ`` starts from ``(φ, ∂tφ + γφ/2)``.  Only meaningful for the
    invariant model.
    """
    if cfg.model != "INVARIANT":
        raise ValidationError("the envelope relation holds for the invariant model only")
    return FieldState(state0.phi, state0.dphi + 0.5 * cfg.gamma * state0.phi, state0.t)


def l2_norm(state: FieldState, cfg: SolverConfig) -> float:
    return float(np.sqrt(np.sum(state.phi ** 2) * cfg.length / cfg.n_points))


def gaussian_pulse(cfg: SolverConfig, width: float = 2.0, center: Optional[float] = None,
                   velocity: float = 0.0) -> FieldState:
    """Smooth localised initial data (well resolved on default lattices)."""
    c = 0.5 * cfg.length if center is None else center
    x = cfg.x
    phi = np.exp(-0.5 * ((x - c) / width) ** 2)
    return FieldState(phi, velocity * phi)


def nearest_grid_wavenumber(cfg: SolverConfig, k: float) -> tuple:
    """Index and value of the non-negative lattice wavenumber closest to ``k``."""
    dk = 2 * np.pi / cfg.length
    j = int(round(abs(k) / dk))
    if j > cfg.n_points // 2:
        raise ValidationError(f"wavenumber {k} exceeds the lattice Nyquist limit")
    return j, j * dk


def _prony(samples, h):
    s = np.asarray(samples)
    a = np.stack([s[1:-1], s[:-2]], axis=1)
    coef, *_ = np.linalg.lstsq(a, s[2:], rcond=None)
    roots = np.roots([1.0, -coef[0], -coef[1]])
    if np.any(np.abs(roots) == 0):
        raise FitError("degenerate recurrence fit")
    z = roots[np.argmax(np.abs(np.angle(roots)))]
    return float(-np.log(np.abs(z)) / h), float(abs(np.angle(z)) / h)


def dispersion_probe(cfg: SolverConfig, k: float) -> tuple:
    """Fit decay rate and frequency of a single Fourier mode.

    The mode ``cos(k x)`` (snapped to the lattice) is sampled every
    ``cfg.dt_step`` up to ``cfg.t_final`` and its amplitude is fitted by a
    two-term linear recurrence whose characteristic roots are
    ``e^{(-rate ± i freq) dt_step}``.
    """
    j, kk = nearest_grid_wavenumber(cfg, k)
    steps = int(np.floor(cfg.t_final / cfg.dt_step + 1e-9))
    if steps < 4:
        raise FitError(f"need at least 4 samples, t_final/dt_step gives {steps}")
    _, _, omega = cfg.coefficients([kk])
    if omega[0] * cfg.dt_step >= np.pi:
        raise FitError("sampling step aliases the mode frequency")
    state = FieldState(np.cos(kk * cfg.x), np.zeros(cfg.n_points))
    amps = [np.fft.fft(state.phi)[j]]
    if cfg.scheme == "SPECTRAL_EXACT":
        for n in range(1, steps + 1):
            amps.append(np.fft.fft(evolve(state, cfg, n * cfg.dt_step).phi)[j])
    else:
        for _ in range(steps):
            state = evolve(state, cfg, cfg.dt_step)
            amps.append(np.fft.fft(state.phi)[j])
    amps = np.real(np.asarray(amps)) / (cfg.n_points if j == 0 or 2 * j == cfg.n_points else cfg.n_points / 2)
    return _prony(amps, cfg.dt_step)


def write_snapshot_csv(path, state: FieldState, cfg: SolverConfig):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "phi", "dphi"])
        for xi, p, dp in zip(cfg.x, state.phi, state.dphi):
            writer.writerow([f"{state.t:.17g}", f"{xi:.17g}", f"{p:.17g}", f"{dp:.17g}"])


def dispersion_summary(cfg: SolverConfig, ks: Sequence[float]) -> dict:
    rows = []
    for k in ks:
        _, kk = nearest_grid_wavenumber(cfg, k)
        rate, freq = dispersion_probe(cfg, kk)
        damping, _, omega = cfg.coefficients([kk])
        rows.append({"k": kk, "decay_rate": rate, "frequency": freq,
                     "expected_decay_rate": 0.5 * float(damping[0]),
                     "expected_frequency": float(omega[0])})
    return {"config": asdict(cfg), "modes": rows}


def write_dispersion_json(path, summary: dict):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
