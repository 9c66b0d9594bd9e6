"""Apolar product, the affine dual functional of a form, and Hankel matrices."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .polycore import (
    DimensionError,
    MultiIndex,
    Poly,
    format_index,
    monomials,
    multi_factorial,
    parse_index,
)

DEFAULT_SVD_TOL = 1e-8


class ContractError(ValueError):
    """Inputs violate an operation's preconditions."""


def _homogeneous_degree(f: Poly) -> int:
    if not f.is_homogeneous:
        raise ContractError("form is not homogeneous")
    return max(f.degree, 0)


def apolar_product(f: Poly, g: Poly) -> complex:
    """Bilinear apolar pairing ``sum_a (d choose a)^-1 f_a g_a``."""
    if f.nvars != g.nvars:
        raise ContractError("forms have different numbers of variables")
    df, dg = _homogeneous_degree(f), _homogeneous_degree(g)
    if f.is_zero() or g.is_zero():
        return 0j
    if df != dg:
        raise ContractError(f"degree mismatch: {df} vs {dg}")
    d_fact = math.factorial(df)
    small, big = (f, g) if len(f.terms) <= len(g.terms) else (g, f)
    total = 0j
    for alpha, c in small.terms.items():
        other = big.terms.get(alpha)
        if other is not None:
            total += c * other * multi_factorial(alpha) / d_fact
    return total


def apolar_norm(f: Poly) -> float:
    _homogeneous_degree(f)
    if f.is_zero():
        return 0.0
    d_fact = math.factorial(f.degree)
    return math.sqrt(sum(abs(c) ** 2 * multi_factorial(a) / d_fact for a, c in f.terms.items()))


@dataclass(frozen=True, eq=False)
class DualSeries:
    """Truncated linear functional on affine polynomials of degree ``<= degree_bound``.

    ``coeffs[beta]`` is the value of the functional on the monomial ``x^beta``.
    Missing keys are zero.
    """

    nvars_affine: int
    degree_bound: int
    coeffs: Mapping[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for beta, c in self.coeffs.items():
            beta = tuple(beta)
            if len(beta) != self.nvars_affine:
                raise DimensionError(f"multi-index {beta} has wrong length")
            if sum(beta) > self.degree_bound:
                raise ContractError(f"multi-index {beta} exceeds degree bound {self.degree_bound}")
            if c != 0:
                clean[beta] = complex(c)
        object.__setattr__(self, "coeffs", clean)

    def value(self, beta: MultiIndex) -> complex:
        return self.coeffs.get(tuple(beta), 0j)

    def __call__(self, p: Poly) -> complex:
        """Apply the functional to an affine polynomial."""
        if p.nvars != self.nvars_affine:
            raise DimensionError("nvars mismatch")
        if p.degree > self.degree_bound:
            raise ContractError("polynomial degree exceeds the truncation")
        return sum((c * self.value(b) for b, c in p.terms.items()), 0j)

    def __add__(self, other: DualSeries) -> DualSeries:
        if (self.nvars_affine, self.degree_bound) != (other.nvars_affine, other.degree_bound):
            raise DimensionError("dual series shapes differ")
        out = dict(self.coeffs)
        for b, c in other.coeffs.items():
            out[b] = out.get(b, 0j) + c
        return DualSeries(self.nvars_affine, self.degree_bound, out)

    def __mul__(self, c: complex) -> DualSeries:
        return DualSeries(self.nvars_affine, self.degree_bound, {b: v * c for b, v in self.coeffs.items()})

    __rmul__ = __mul__

    def vector(self) -> np.ndarray:
        basis = monomials(self.nvars_affine, self.degree_bound)
        return np.array([self.value(b) for b in basis])

    def max_abs_diff(self, other: DualSeries) -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.value(k) - other.value(k)) for k in keys), default=0.0)

    def to_json(self) -> str:
        body = {format_index(b): [c.real, c.imag] for b, c in sorted(self.coeffs.items())}
        return json.dumps(
            {"nvars": self.nvars_affine, "degree_bound": self.degree_bound, "coeffs": body},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> DualSeries:
        obj = json.loads(text)
        coeffs = {parse_index(k): complex(v[0], v[1]) for k, v in obj["coeffs"].items()}
        return cls(obj["nvars"], obj["degree_bound"], coeffs)


def check_f(f: Poly) -> DualSeries:
    """Dual functional of ``f`` pulled back through degree-d homogenization in ``x0``.

    Its value on ``x^beta`` is ``(d-|beta|)! beta! / d! * f_(d-|beta|, beta)``.
    """
    d = _homogeneous_degree(f)
    d_fact = math.factorial(d)
    coeffs = {}
    for alpha, c in f.terms.items():
        beta = alpha[1:]
        coeffs[beta] = c * math.factorial(alpha[0]) * multi_factorial(beta) / d_fact
    return DualSeries(f.nvars - 1, d, coeffs)


def hankel_matrix(
    fs: DualSeries,
    rows: Sequence[MultiIndex],
    cols: Sequence[MultiIndex],
    shift: MultiIndex | None = None,
) -> np.ndarray:
    """``H[i, j] = fs(x^rows[i] * x^shift * x^cols[j])``."""
    shift = shift or (0,) * fs.nvars_affine
    H = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, b in enumerate(rows):
        for j, a in enumerate(cols):
            H[i, j] = fs.value(tuple(x + y + z for x, y, z in zip(b, a, shift)))
    return H


def default_split(d: int) -> int:
    return d - (d - 1) // 2


@dataclass(frozen=True, eq=False)
class HankelFamily:
    """Matrices ``H_0..H_n`` on row monomials ``A'`` and column monomials ``A``.

    ``matrices[0]`` pairs ``A'`` with ``A``; ``matrices[j]`` pairs ``A'`` with
    ``x_j * A``.
    """

    rows: list[MultiIndex]  # A'
    cols: list[MultiIndex]  # A
    split: int
    matrices: list[np.ndarray]

    @property
    def n(self) -> int:
        return len(self.matrices) - 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrices[0].shape


def hankel_family(fs: DualSeries, d: int | None = None, c: int | None = None) -> HankelFamily:
    d = fs.degree_bound if d is None else d
    c = default_split(d) if c is None else c
    if not 1 <= c <= d:
        raise ContractError(f"split degree c={c} outside [1, {d}]")
    if d > fs.degree_bound:
        raise ContractError("requested degree exceeds the dual series truncation")
    n = fs.nvars_affine
    cols = monomials(n, c - 1) if n else [()]
    rows = monomials(n, d - c) if n else [()]
    mats = [hankel_matrix(fs, rows, cols)]
    for j in range(n):
        e = tuple(int(i == j) for i in range(n))
        mats.append(hankel_matrix(fs, rows, cols, e))
    return HankelFamily(rows, cols, c, mats)


def numerical_rank(singular_values: np.ndarray, tol: float) -> int:
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s >= tol * s[0]))


@dataclass(frozen=True, eq=False)
class QuotientBasis:
    rank: int
    left: np.ndarray  # |A'| x r, orthonormal columns
    right: np.ndarray  # |A| x r, orthonormal columns
    singular_values: np.ndarray
    weights: np.ndarray  # the random combination used


def probe_and_rank(
    fam: HankelFamily,
    rng: np.random.Generator,
    svd_tol: float = DEFAULT_SVD_TOL,
    forced_rank: int | None = None,
) -> QuotientBasis:
    """SVD of a random combination of the family; keep the leading singular spaces."""
    lam = rng.standard_normal(len(fam.matrices))
    H = sum(l * M for l, M in zip(lam, fam.matrices))
    U, s, Vh = np.linalg.svd(H)
    if s.size == 0 or s[0] == 0:
        raise ContractError("Hankel combination is identically zero")
    if forced_rank is not None:
        if not 1 <= forced_rank <= min(H.shape):
            raise ContractError(f"forced rank {forced_rank} exceeds the matrix dimensions {H.shape}")
        r = forced_rank
    else:
        r = numerical_rank(s, svd_tol)
    return QuotientBasis(r, U[:, :r], Vh[:r].conj().T, s, lam)


def hankel_kernel(fam: HankelFamily, svd_tol: float = DEFAULT_SVD_TOL) -> list[Poly]:
    """Orthonormal basis of the numerical null space of ``H_0`` as affine polynomials."""
    return matrix_kernel(fam.matrices[0], fam.cols, svd_tol)


def matrix_kernel(H: np.ndarray, cols: Sequence[MultiIndex], svd_tol: float = DEFAULT_SVD_TOL) -> list[Poly]:
    nvars = len(cols[0])
    _, s, Vh = np.linalg.svd(H)
    r = numerical_rank(s, svd_tol)
    null = Vh[r:].conj()
    return [Poly.from_vector(nvars, cols, v) for v in null]


def catalecticant(fs: DualSeries, row_degree: int, col_degree: int) -> HankelFamily:
    """Single Hankel matrix on all monomials of degree ``<= row_degree`` by ``<= col_degree``."""
    if row_degree + col_degree > fs.degree_bound:
        raise ContractError("catalecticant degrees exceed the truncation")
    n = fs.nvars_affine
    rows, cols = monomials(n, row_degree), monomials(n, col_degree)
    return HankelFamily(rows, cols, col_degree, [hankel_matrix(fs, rows, cols)])


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.17g}{'+' if z.imag >= 0 else '-'}{abs(z.imag):.17g}i"


def matrix_to_csv(M: np.ndarray) -> str:
    """Dense row-major CSV with complex entries written as ``a+bi``."""
    return "".join(",".join(_fmt_complex(complex(z)) for z in row) + "\n" for row in np.asarray(M))


def matrix_from_csv(text: str) -> np.ndarray:
    rows = []
    for line in text.strip().splitlines():
        rows.append([complex(tok.strip().replace("i", "j")) for tok in line.split(",")])
    return np.array(rows, dtype=complex)
