"""Half-line oscillatory integrals ``∫_0^∞ A(p) cos(a p + b E_p + φ) dp``.

``E_p = sqrt(p² + m²)``.  Amplitudes that grow polynomially are summed in
the Abel sense, which is the meaning of the distributional commutator
integrals.  Two methods are available.

``contour`` (default) integrates along the real axis up to a point ``P``
beyond any stationary point of the phase and then up the vertical ray
``P + is``, where ``e^{iψ}`` decays exponentially.  ``A`` must then accept
complex arrays and be analytic for ``Re p > 0``, which holds for every
product of powers of ``p`` and ``E_p`` and of ``e^{-cE_p}``.

``panels`` cuts the real axis at consecutive zeros of the cosine,
integrates each panel with Gauss-Legendre and accelerates the alternating
partial sums by repeated averaging.  It needs only real evaluations but
loses accuracy when the amplitude grows and the asymptotic frequency
``a + b`` is small (just outside the lightcone), because the panel sums
become large compared with the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import QuadratureError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int


def euler_average(partial_sums) -> tuple:
    """Repeatedly average neighbouring partial sums.

    Returns the last level and its distance to the previous one, which is
    used as the error estimate.
    """
    level = np.asarray(partial_sums, dtype=float)
    previous = level
    while level.size > 1:
        previous, level = level, 0.5 * (level[:-1] + level[1:])
    return float(level[0]), float(abs(level[0] - previous[0]) if previous.size > 1 else np.inf)


def oscillatory_integral(amplitude: Callable, a: float, b: float, mass: float,
                         phase: float = 0.0, tol: float = 1e-8,
                         n_panels: int = 60, method: str = "contour") -> QuadResult:
    """Evaluate ``∫_0^∞ amplitude(p) cos(a p + b E_p + phase) dp``.

    When ``a + b < 0`` the phase is negated (cosine is even) so the total
    phase always increases at large ``p``.  A stationary point of the
    phase, present when ``a < 0 < b``, is kept inside the leading interval
    handled by adaptive quadrature.  ``n_panels`` is used by the panel
    method only; it doubles the count twice before giving up.

    Raises :class:`QuadratureError` when ``a + b = 0`` with a non-zero
    frequency (the phase has no asymptotic growth) or when the error
    estimate stays above ``tol``.
    """
    if method not in ("contour", "panels"):
        raise ValueError(f"unknown quadrature method {method!r}")
    if a + b < 0:
        a, b, phase = -a, -b, -phase
    energy = lambda p: np.sqrt(p * p + mass * mass)
    f = lambda p: amplitude(p) * np.cos(a * p + b * energy(p) + phase)

    if a == 0 and b == 0:
        value, err = integrate.quad(lambda p: amplitude(p), 0.0, np.inf, limit=500,
                                    epsabs=0.1 * tol, epsrel=1e-13)
        if not np.isfinite(value) or err > tol:
            raise QuadratureError("non-oscillatory integral did not converge",
                                  value * np.cos(phase), err)
        return QuadResult(float(value * np.cos(phase)), float(err), 0)
    if a + b == 0:
        raise QuadratureError("phase has no asymptotic growth (lightlike kernel)")

    psi = lambda p: a * p + b * energy(p)
    start = 0.0
    if a < 0 < b:
        ratio = -a / b
        start = mass * ratio / np.sqrt(1.0 - ratio * ratio)
    if method == "contour":
        return _contour(amplitude, f, psi, a, b, mass, phase, start, tol)

    def zero_at(k):
        target = (k + 0.5) * np.pi - phase
        hi = max(2.0 * start, 1.0)
        while psi(hi) < target:
            hi *= 2.0
        return optimize.brentq(lambda p: psi(p) - target, start, hi, xtol=1e-15, rtol=1e-15)

    k0 = np.floor((psi(start) + phase) / np.pi - 0.5) + 1
    for attempt in range(3):
        panels = n_panels * 2 ** attempt
        zeros = np.array([zero_at(k0 + i) for i in range(panels + 1)])
        head, head_err = integrate.quad(f, 0.0, zeros[0], points=[start] if 0 < start < zeros[0] else None,
                                        limit=500, epsabs=1e-14, epsrel=1e-13)
        lo, hi = zeros[:-1], zeros[1:]
        half = 0.5 * (hi - lo)
        nodes = half[:, None] * _GL_NODES[None, :] + (0.5 * (hi + lo))[:, None]
        contributions = half * (f(nodes) @ _GL_WEIGHTS)
        value, err = euler_average(head + np.cumsum(contributions))
        err += head_err
        if err <= tol:
            return QuadResult(value, err, panels)
    raise QuadratureError(
        f"oscillatory quadrature reached error {err:.3g} > {tol:.3g}", value, err)


def _contour(amplitude, f, psi, a, b, mass, phase, start, tol):
    # Turning point P: past the stationary point, where ψ'(P) is at least
    # half its asymptotic value a + b, so Im ψ grows along the ray.
    turn = mass
    if a < 0 < b:
        rho = 0.5 * (b - a) / b
        turn = max(mass * rho / np.sqrt(1.0 - rho * rho), 1.5 * start)
    slope = a + b * turn / np.sqrt(turn * turn + mass * mass)
    head, head_err = integrate.quad(f, 0.0, turn, points=[start] if 0 < start < turn else None,
                                    limit=1000, epsabs=0.1 * tol, epsrel=1e-13)

    def ray(s):
        z = turn + 1j * s
        return float(np.imag(amplitude(z) * np.exp(1j * (psi(z) + phase))))

    split = 40.0 / slope
    near, near_err = integrate.quad(ray, 0.0, split, limit=1000, epsabs=0.1 * tol, epsrel=1e-13)
    far, far_err = integrate.quad(ray, split, np.inf, limit=200, epsabs=0.1 * tol, epsrel=1e-13)
    value = head - near - far
    err = head_err + near_err + far_err
    if not np.isfinite(value) or err > tol:
        raise QuadratureError(f"contour quadrature reached error {err:.3g} > {tol:.3g}", value, err)
    return QuadResult(float(value), float(err), 0)
