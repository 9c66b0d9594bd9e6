"""Inverse systems, l-rank and GAD-rank, plus the polynomial-exponential dual of a GAD term."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .apolarity import ContractError, DualSeries
from .polycore import (
    LinearForm,
    Poly,
    diff,
    monomials,
    multi_factorial,
    poly_from_json,
    poly_to_json,
    substitute_linear,
)

INVSYS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GADTerm:
    omega: Poly
    ell: LinearForm

    def __post_init__(self):
        if self.omega.nvars != self.ell.nvars:
            raise ContractError("omega and ell live in different rings")
        if not self.omega.is_homogeneous:
            raise ContractError("omega must be homogeneous")

    @property
    def k(self) -> int:
        return max(self.omega.degree, 0)


@dataclass(frozen=True, eq=False)
class GAD:
    """``f = sum_i omega_i * ell_i^(d - k_i)`` in ``n + 1`` variables."""

    n: int
    d: int
    terms: list[GADTerm] = field(default_factory=list)

    def __post_init__(self):
        for t in self.terms:
            if t.ell.nvars != self.n + 1:
                raise ContractError("term lives in the wrong number of variables")
            if t.k > self.d:
                raise ContractError(f"term degree {t.k} exceeds d={self.d}")
        units = [t.ell.array() / np.linalg.norm(t.ell.array()) for t in self.terms]
        for i in range(len(units)):
            for j in range(i + 1, len(units)):
                # sine of the angle: residual of u_j after projecting onto u_i
                resid = units[j] - np.vdot(units[i], units[j]) * units[i]
                if np.linalg.norm(resid) < 1e-10:
                    raise ContractError(f"supports {i} and {j} are proportional")
        for i, t in enumerate(self.terms):
            if divides(t.ell, t.omega):
                warnings.warn(f"support {i} divides its weight polynomial", stacklevel=2)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "terms": [
                {
                    "k": t.k,
                    "ell": [[c.real, c.imag] for c in t.ell.coeffs],
                    "omega": poly_to_json(t.omega),
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> GAD:
        if isinstance(obj, str):
            obj = json.loads(obj)
        n, d = int(obj["n"]), int(obj["d"])
        terms = []
        for t in obj["terms"]:
            ell = LinearForm(tuple(complex(*c) if isinstance(c, list) else complex(c) for c in t["ell"]))
            omega = poly_from_json(t["omega"], n + 1)
            term = GADTerm(omega, ell)
            if "k" in t and not omega.is_zero() and int(t["k"]) != term.k:
                raise ContractError(f"declared k={t['k']} does not match deg(omega)={term.k}")
            terms.append(term)
        return cls(n, d, terms)


def divides(ell: LinearForm, omega: Poly, tol: float = INVSYS_TOL) -> bool:
    """Numerical test of ``ell | omega``: the remainder ``omega(x0 = -(...)/xi0)`` vanishes."""
    if omega.is_zero():
        return True
    xi = ell.array()
    p = int(np.argmax(np.abs(xi)))
    # substitute x_p -> -(sum_{j != p} xi_j x_j) / xi_p, i.e. reduce modulo ell
    images = []
    for j in range(len(xi)):
        if j == p:
            images.append([-xi[i] / xi[p] if i != p else 0 for i in range(len(xi))])
        else:
            images.append([1.0 if i == j else 0.0 for i in range(len(xi))])
    rem = substitute_linear(omega, images)
    return rem.norm() < tol * omega.norm()


def _ell_coordinates(ell: LinearForm) -> list[list[complex]]:
    """Images of ``x0..xn`` in the coordinates ``(t, x1..xn)`` where ``t = ell``."""
    xi = ell.array()
    if xi[0] == 0:
        raise ContractError("leading coefficient of ell is zero")
    n1 = len(xi)
    images = [[1 / xi[0]] + [-xi[j] / xi[0] for j in range(1, n1)]]
    for j in range(1, n1):
        images.append([1.0 if i == j else 0.0 for i in range(n1)])
    return images


def ell_split(omega: Poly, ell: LinearForm) -> list[Poly]:
    """Parts ``omega_j`` (affine, degree ``j``, in ``x1..xn``) with ``omega = sum_j omega_j ell^(k-j)``."""
    k = max(omega.degree, 0)
    in_t = substitute_linear(omega, _ell_coordinates(ell))
    parts = [dict() for _ in range(k + 1)]
    for alpha, c in in_t.terms.items():
        j = sum(alpha[1:])
        parts[j][alpha[1:]] = c
    return [Poly(omega.nvars - 1, p) for p in parts]


def omega_dlv(omega: Poly, ell: LinearForm, d: int) -> Poly:
    """The affine polynomial ``(1/d!) sum_j (d-j)! omega_j`` in ``x1..xn``."""
    k = max(omega.degree, 0)
    if d < k:
        raise ContractError(f"d={d} is smaller than deg(omega)={k}")
    out = Poly.zero(omega.nvars - 1)
    for j, part in enumerate(ell_split(omega, ell)):
        out = out + part * (math.factorial(d - j) / math.factorial(d))
    return out


def derivative_matrix(q: Poly) -> np.ndarray:
    """Rows are coefficient vectors of every nonzero ``d^a q`` with ``|a| <= deg q``."""
    basis = monomials(q.nvars, q.degree) if q.nvars else [()]
    alphas = monomials(q.nvars, q.degree) if q.nvars else [()]
    rows = []
    for a in alphas:
        der = diff(q, a)
        if not der.is_zero():
            rows.append(der.to_vector(basis))
    return np.array(rows)


def inverse_system_dim(q: Poly, tol: float = INVSYS_TOL) -> int:
    """Dimension of the span of all partial derivatives of ``q``."""
    if q.is_zero():
        raise ContractError("inverse system of the zero polynomial")
    s = np.linalg.svd(derivative_matrix(q), compute_uv=False)
    return int(np.sum(s >= tol * s[0]))


def _swap(p: Poly, i: int) -> Poly:
    if i == 0:
        return p
    return Poly(p.nvars, {_swap_index(a, i): c for a, c in p.terms.items()})


def _swap_index(a, i):
    a = list(a)
    a[0], a[i] = a[i], a[0]
    return tuple(a)


def ell_rank(omega: Poly, ell: LinearForm, tol: float = INVSYS_TOL) -> int:
    """``dim`` of the inverse system of ``omega^(k, ell, x)`` with ``k = deg(omega)``.

    When ``ell`` has a zero ``x0`` coefficient, variables are renamed first so
    that the pivot is its largest coefficient.
    """
    if omega.is_zero():
        raise ContractError("omega is zero")
    xi = ell.array()
    if xi[0] == 0:
        i = int(np.argmax(np.abs(xi)))
        omega = _swap(omega, i)
        xi = xi.copy()
        xi[0], xi[i] = xi[i], xi[0]
        ell = LinearForm(tuple(xi))
    k = max(omega.degree, 0)
    return inverse_system_dim(omega_dlv(omega, ell, k), tol)


def gad_rank(g: GAD) -> int:
    return sum(ell_rank(t.omega, t.ell) for t in g.terms)


def polyexp_truncated(omega: Poly, xi, d: int) -> DualSeries:
    """Truncation to degree ``<= d`` of ``omega^(d, ell, x)(z) * e_xi(z)`` with ``ell = x0 + (xi, x)``.

    The value on ``x^beta`` is ``omega^(d,ell,x)(d/dx)(x^beta)`` evaluated at ``xi``.
    """
    xi = np.asarray(xi, dtype=complex)
    n = len(xi)
    if omega.nvars != n + 1:
        raise ContractError("point dimension does not match omega")
    if d < max(omega.degree, 0):
        raise ContractError("d is smaller than deg(omega)")
    w = omega_dlv(omega, LinearForm((1.0, *xi)), d)
    coeffs = {}
    for beta in monomials(n, d):
        bfact = multi_factorial(beta)
        total = 0j
        for gamma, c in w.terms.items():
            if any(g > b for g, b in zip(gamma, beta)):
                continue
            rest = tuple(b - g for b, g in zip(beta, gamma))
            total += c * bfact / multi_factorial(rest) * np.prod(xi**np.array(rest)) if n else c
        coeffs[beta] = total
    return DualSeries(n, d, coeffs)


def reconstruct(g: GAD) -> Poly:
    out = Poly.zero(g.n + 1)
    for t in g.terms:
        out = out + t.omega * t.ell.as_poly() ** (g.d - t.k)
    return out
