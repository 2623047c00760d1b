"""Wick expansion of field-operator products and their Heisenberg evolution.

Fields are linear forms ``ξ = Σ_j (u_j a_j + v_j a_j†)`` in the grid modes.
For the invariant model the adjoint semigroup acts on a normal-ordered
product of ``r`` such forms as multiplication by ``e^{-rγt/2}`` combined
with free propagation, so a product of ``n`` fields evolves into

    Σ_pairings e^{kγt} (∏ contractions of evolved labels) N[evolved residual]

where ``k`` is the number of contracted pairs and each evolved label carries
the factor ``e^{-γt/2}``.  A small exact algebra of normal-ordered
polynomials (:class:`NormalPolynomial`) provides an independent check that
needs no Fock cutoff.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidTruncationError, SizeError, ValidationError
from .fockspace import FockTruncation, ModeGrid, mode_operators

MAX_PRODUCT = 8
FIELD_KINDS = ("PHI", "PI")


@dataclass(frozen=True)
class FieldLabel:
    """``Φ`` or ``Π`` at time ``t`` and position ``x``, times a scalar ``damping``.

    ``t`` is the interaction-picture time; ``damping`` is 1 for bare fields
    and ``e^{-γt/2}`` after Heisenberg evolution.
    """

    kind: str
    t: float
    x: tuple
    damping: complex = 1.0

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValidationError(f"field kind must be one of {FIELD_KINDS}, got {self.kind!r}")
        x = tuple(float(c) for c in np.atleast_1d(self.x))
        if not (np.isfinite(self.t) and all(np.isfinite(x)) and np.isfinite(self.damping)):
            raise ValidationError("field label coordinates must be finite")
        object.__setattr__(self, "x", x)

    def coefficients(self, grid: ModeGrid, modes=None):
        if len(self.x) != grid.dim:
            raise ValidationError(f"label has {len(self.x)} spatial components, grid has {grid.dim}")
        u, v = grid.field_coefficients(self.kind, self.x, modes)
        e = grid.energies if modes is None else grid.energies[list(modes)]
        phase = np.exp(-1j * e * self.t)
        return self.damping * u * phase, self.damping * v * np.conj(phase)

    def evolved(self, t: float, gamma: float) -> "FieldLabel":
        return FieldLabel(self.kind, self.t + t, self.x, self.damping * np.exp(-0.5 * gamma * t))


def contraction(a: FieldLabel, b: FieldLabel, grid: ModeGrid, modes=None) -> complex:
    """Vacuum two-point value ``<0| ξ_a ξ_b |0>`` as a grid mode sum."""
    ua, _ = a.coefficients(grid, modes)
    _, vb = b.coefficients(grid, modes)
    return complex(np.sum(ua * vb))


@dataclass(frozen=True)
class OperatorProduct:
    """Ordered product of field labels on a grid.

    ``modes`` restricts the mode sums to a subset of grid modes (needed when
    the result is materialised on a truncated Fock space); ``None`` uses the
    whole grid.
    """

    labels: tuple
    gamma: float
    grid: ModeGrid
    modes: Optional[tuple] = None
    max_size: int = MAX_PRODUCT

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise ValidationError("operator product needs at least one label")
        if len(labels) > self.max_size:
            raise SizeError(f"product of {len(labels)} labels exceeds maximum {self.max_size}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValidationError(f"gamma must be non-negative, got {self.gamma}")
        for lab in labels:
            if len(lab.x) != self.grid.dim:
                raise ValidationError("label dimension does not match the grid")
        object.__setattr__(self, "labels", labels)
        if self.modes is not None:
            object.__setattr__(self, "modes", tuple(int(j) for j in self.modes))


@dataclass(frozen=True)
class WickTerm:
    """One term: ``weight · contraction · N[labels[residual]]``."""

    pairs: tuple
    weight: float
    contraction: complex
    residual: tuple

    @property
    def coefficient(self) -> complex:
        return self.weight * self.contraction

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class NormalForm:
    labels: tuple
    terms: tuple
    grid: ModeGrid
    modes: Optional[tuple] = None
    t: float = 0.0

    def vacuum_expectation(self) -> complex:
        return sum((term.coefficient for term in self.terms if not term.residual), 0j)

    def structure(self):
        """Hashable description of the term layout, for structural comparison."""
        return tuple((term.pairs, term.residual) for term in self.terms)


def pairing_count(n: int) -> int:
    """Number of partial matchings of ``n`` points, ``Σ_k n!/(2^k k! (n-2k)!)``."""
    return sum(math.factorial(n) // (2 ** k * math.factorial(k) * math.factorial(n - 2 * k))
               for k in range(n // 2 + 1))


def _matchings(free: tuple) -> Iterator[tuple]:
    if not free:
        yield ()
        return
    first, rest = free[0], free[1:]
    for tail in _matchings(rest):
        yield tail
    for pos, partner in enumerate(rest):
        remaining = rest[:pos] + rest[pos + 1:]
        for tail in _matchings(remaining):
            yield ((first, partner),) + tail


def pairings(n: int) -> list:
    """All partial matchings of ``range(n)`` in canonical order.

    Enumeration takes the smallest free index first; the list is then sorted
    by pair count and lexicographically by pairs.
    """
    found = [tuple(sorted(m)) for m in _matchings(tuple(range(n)))]
    return sorted(found, key=lambda m: (len(m), m))


def _expand(labels, grid, modes, weight_per_pair: float):
    n = len(labels)
    table = {}
    for i in range(n):
        for j in range(i + 1, n):
            table[i, j] = contraction(labels[i], labels[j], grid, modes)
    terms = []
    for match in pairings(n):
        used = {i for pair in match for i in pair}
        value = complex(np.prod([table[p] for p in match])) if match else 1.0 + 0j
        terms.append(WickTerm(match, weight_per_pair ** len(match), value,
                              tuple(i for i in range(n) if i not in used)))
    return tuple(terms)


def normal_order(prod: OperatorProduct) -> NormalForm:
    """Wick expansion of the product at its label times."""
    terms = _expand(prod.labels, prod.grid, prod.modes, 1.0)
    return NormalForm(prod.labels, terms, prod.grid, prod.modes, 0.0)


def heisenberg_evolve(prod: OperatorProduct, t: float) -> NormalForm:
    """``e^{ℒ†t}`` applied to the product, for the invariant model generator.

    Contractions are taken between the evolved labels, which already carry
    ``e^{-γt/2}`` each; the ``e^{kγt}`` factor is kept separately as the term
    weight.
    """
    if t < 0:
        raise ValidationError("evolution time must be non-negative")
    evolved = tuple(lab.evolved(t, prod.gamma) for lab in prod.labels)
    terms = _expand(evolved, prod.grid, prod.modes, float(np.exp(prod.gamma * t)))
    return NormalForm(evolved, terms, prod.grid, prod.modes, t)


def _cross_matchings(left: tuple, right: tuple) -> Iterator[tuple]:
    """Partial matchings pairing elements of ``left`` only with elements of ``right``."""
    if not left:
        yield ()
        return
    head, rest = left[0], left[1:]
    for tail in _cross_matchings(rest, right):
        yield tail
    for pos, partner in enumerate(right):
        remaining = right[:pos] + right[pos + 1:]
        for tail in _cross_matchings(rest, remaining):
            yield ((head, partner),) + tail


def _same_space(a: NormalForm, b: NormalForm):
    if a.grid != b.grid or a.modes != b.modes:
        raise ValidationError("normal forms live on different grids or mode sets")


def multiply(a: NormalForm, b: NormalForm) -> NormalForm:
    """Normal-ordered expansion of the product ``a · b``.

    Labels of ``b`` follow those of ``a`` in the result; only contractions
    between a residual label of ``a`` and one of ``b`` are new.
    """
    _same_space(a, b)
    shift = len(a.labels)
    labels = a.labels + b.labels
    cache = {}

    def c(i, j):
        if (i, j) not in cache:
            cache[i, j] = contraction(labels[i], labels[j], a.grid, a.modes)
        return cache[i, j]

    terms = []
    for ta in a.terms:
        for tb in b.terms:
            rb = tuple(i + shift for i in tb.residual)
            pb = tuple((i + shift, j + shift) for i, j in tb.pairs)
            for cross in _cross_matchings(ta.residual, rb):
                used = {i for pair in cross for i in pair}
                value = ta.contraction * tb.contraction * complex(np.prod([c(i, j) for i, j in cross]))
                terms.append(WickTerm(
                    tuple(sorted(ta.pairs + pb + cross)), ta.weight * tb.weight, value,
                    tuple(i for i in ta.residual + rb if i not in used)))
    terms.sort(key=lambda term: (len(term.pairs), term.pairs))
    return NormalForm(labels, tuple(terms), a.grid, a.modes, max(a.t, b.t))


def commutator_form(a: NormalForm, b: NormalForm) -> NormalForm:
    """Expansion of ``[a, b]`` obtained by subtracting both orderings term by term.

    Both products are expressed in the label order ``a.labels + b.labels``.
    Terms without a contraction between ``a`` and ``b`` cancel because
    normal-ordered products are symmetric; they are dropped.
    """
    ab = multiply(a, b)
    ba = multiply(b, a)
    na, nb = len(a.labels), len(b.labels)

    def remap(i):  # index in ba -> index in ab ordering
        return i + na if i < nb else i - nb

    ba_terms = {}
    for term in ba.terms:
        pairs = tuple(sorted(tuple(sorted((remap(i), remap(j)))) for i, j in term.pairs))
        residual = tuple(sorted(remap(i) for i in term.residual))
        ba_terms[pairs, residual] = term
    out = []
    for term in ab.terms:
        residual = tuple(sorted(term.residual))
        if not any(i < na <= j for i, j in term.pairs):
            continue
        other = ba_terms[term.pairs, residual]
        out.append(WickTerm(term.pairs, term.weight, term.contraction - other.contraction, residual))
    return NormalForm(ab.labels, tuple(out), a.grid, a.modes, ab.t)


def _check_modes(nf_modes, grid: ModeGrid, trunc: FockTruncation):
    trunc.check_grid(grid)
    wanted = tuple(range(grid.n_modes)) if nf_modes is None else tuple(nf_modes)
    if wanted != trunc.modes:
        raise InvalidTruncationError(
            f"normal form uses modes {wanted}, truncation holds {trunc.modes}")


def _linear_parts(labels, grid, trunc):
    ops = mode_operators(trunc)
    ann, cre = [], []
    for lab in labels:
        u, v = lab.coefficients(grid, trunc.modes)
        ann.append(sum(uj * a for uj, a in zip(u, ops)))
        cre.append(sum(vj * a.conj().T for vj, a in zip(v, ops)))
    return ann, cre


def normal_product_matrix(labels, grid: ModeGrid, trunc: FockTruncation) -> np.ndarray:
    """Truncated matrix of ``N[ξ_1 ... ξ_r]``: creation parts left of annihilation parts."""
    dim = trunc.dimension
    if not labels:
        return np.eye(dim, dtype=complex)
    ann, cre = _linear_parts(labels, grid, trunc)
    eye = np.eye(dim, dtype=complex)
    total = np.zeros((dim, dim), dtype=complex)
    r = len(labels)
    for mask in itertools.product((0, 1), repeat=r):
        left = reduce(np.matmul, [cre[i] for i in range(r) if mask[i]], eye)
        right = reduce(np.matmul, [ann[i] for i in range(r) if not mask[i]], eye)
        total += left @ right
    return total


def evaluate_on_fock(nf: NormalForm, trunc: FockTruncation) -> np.ndarray:
    """Materialise a normal form with the truncated mode operators."""
    _check_modes(nf.modes, nf.grid, trunc)
    out = np.zeros((trunc.dimension,) * 2, dtype=complex)
    cache = {}
    for term in nf.terms:
        if term.residual not in cache:
            cache[term.residual] = normal_product_matrix(
                [nf.labels[i] for i in term.residual], nf.grid, trunc)
        out += term.coefficient * cache[term.residual]
    return out


def product_matrix(prod: OperatorProduct, trunc: FockTruncation) -> np.ndarray:
    """Plain matrix product of the labels' truncated field operators."""
    _check_modes(prod.modes, prod.grid, trunc)
    ann, cre = _linear_parts(prod.labels, prod.grid, trunc)
    return reduce(np.matmul, [a + c for a, c in zip(ann, cre)])


# ---------------------------------------------------------------------------
# exact normal-ordered polynomial algebra


class NormalPolynomial:
    """Finite sum ``Σ c_{αβ} (∏_j a_j†^{α_j}) (∏_j a_j^{β_j})`` with exact reordering.

    Products use ``a^β a†^γ = Σ_k C(β,k) C(γ,k) k! a†^{γ-k} a^{β-k}`` mode by
    mode, so no Fock cutoff is involved.
    """

    def __init__(self, n_modes: int, terms: Optional[dict] = None):
        self.n_modes = n_modes
        self.terms = {k: complex(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def identity(cls, n_modes):
        zero = (0,) * n_modes
        return cls(n_modes, {(zero, zero): 1.0})

    @classmethod
    def linear(cls, u, v):
        """``Σ_j (u_j a_j + v_j a_j†)``."""
        n = len(u)
        terms = {}
        for j in range(n):
            e = tuple(int(i == j) for i in range(n))
            z = (0,) * n
            terms[(z, e)] = terms.get((z, e), 0) + u[j]
            terms[(e, z)] = terms.get((e, z), 0) + v[j]
        return cls(n, terms)

    @classmethod
    def from_label(cls, label: FieldLabel, grid: ModeGrid, modes=None):
        u, v = label.coefficients(grid, modes)
        return cls.linear(u, v)

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return NormalPolynomial(self.n_modes, out)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c):
        return NormalPolynomial(self.n_modes, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        out = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                ranges = [range(min(b1[j], a2[j]) + 1) for j in range(self.n_modes)]
                for ks in itertools.product(*ranges):
                    w = c1 * c2
                    for j, k in enumerate(ks):
                        w *= math.comb(b1[j], k) * math.comb(a2[j], k) * math.factorial(k)
                    alpha = tuple(a1[j] + a2[j] - ks[j] for j in range(self.n_modes))
                    beta = tuple(b1[j] + b2[j] - ks[j] for j in range(self.n_modes))
                    out[alpha, beta] = out.get((alpha, beta), 0) + w
        return NormalPolynomial(self.n_modes, out)

    __rmul__ = scale

    def max_abs_difference(self, other) -> float:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0) - other.terms.get(k, 0)) for k in keys), default=0.0)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def _mode(self, j, creation: bool):
        e = tuple(int(i == j) for i in range(self.n_modes))
        z = (0,) * self.n_modes
        return NormalPolynomial(self.n_modes, {(e, z) if creation else (z, e): 1.0})

    def adjoint_dissipator(self, rates) -> "NormalPolynomial":
        """``Σ_j r_j (a_j† X a_j - ½{a_j† a_j, X})``."""
        out = NormalPolynomial(self.n_modes)
        for j, r in enumerate(rates):
            ad, a = self._mode(j, True), self._mode(j, False)
            n = ad * a
            out = out + (ad * self * a - (n * self + self * n).scale(0.5)).scale(r)
        return out

    def adjoint_hamiltonian(self, energies) -> "NormalPolynomial":
        """``i[H, X]`` for ``H = Σ_j E_j a_j† a_j``."""
        h = NormalPolynomial(self.n_modes)
        for j, e in enumerate(energies):
            h = h + (self._mode(j, True) * self._mode(j, False)).scale(e)
        return (h * self - self * h).scale(1j)

    def to_matrix(self, trunc: FockTruncation) -> np.ndarray:
        if trunc.n_modes != self.n_modes:
            raise InvalidTruncationError("polynomial and truncation have different mode counts")
        ops = mode_operators(trunc)
        eye = np.eye(trunc.dimension, dtype=complex)
        out = np.zeros_like(eye)
        for (alpha, beta), c in self.terms.items():
            mat = eye
            for j, k in enumerate(alpha):
                mat = mat @ np.linalg.matrix_power(ops[j].conj().T, k)
            for j, k in enumerate(beta):
                mat = mat @ np.linalg.matrix_power(ops[j], k)
            out += c * mat
        return out


def normal_form_polynomial(nf: NormalForm) -> NormalPolynomial:
    """Exact polynomial represented by a normal form (no truncation)."""
    modes = nf.modes
    n = nf.grid.n_modes if modes is None else len(modes)
    out = NormalPolynomial(n)
    for term in nf.terms:
        cre = NormalPolynomial.identity(n)
        ann = NormalPolynomial.identity(n)
        res = [nf.labels[i] for i in term.residual]
        parts = []
        for lab in res:
            u, v = lab.coefficients(nf.grid, modes)
            parts.append((NormalPolynomial.linear(u, np.zeros_like(v)),
                          NormalPolynomial.linear(np.zeros_like(u), v)))
        acc = NormalPolynomial(n)
        for mask in itertools.product((0, 1), repeat=len(parts)):
            left, right = cre, ann
            for (a_part, c_part), m in zip(parts, mask):
                if m:
                    left = left * c_part
                else:
                    right = right * a_part
            acc = acc + left * right
        out = out + acc.scale(term.coefficient)
    return out


def product_polynomial(prod: OperatorProduct) -> NormalPolynomial:
    """Exact normal-ordered polynomial of the plain product of the labels."""
    polys = [NormalPolynomial.from_label(lab, prod.grid, prod.modes) for lab in prod.labels]
    return reduce(lambda x, y: x * y, polys)
