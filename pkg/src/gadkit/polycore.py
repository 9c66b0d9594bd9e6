"""Sparse multivariate polynomials with complex coefficients.

A :class:`Poly` is an immutable map from exponent tuples to complex
coefficients.  Homogeneous forms live in ``n + 1`` variables ``x0..xn``;
affine polynomials (after localization at ``x0 = 1``) in ``n`` variables.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np

MultiIndex = tuple[int, ...]


class DimensionError(ValueError):
    """Operands live in polynomial rings with different numbers of variables."""


class PolyParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.column = col


def monomials(nvars: int, max_degree: int, homogeneous_only: bool = False) -> list[MultiIndex]:
    """Exponent tuples in graded lexicographic order.

    Within one degree, ``x0`` is the largest variable, so for two variables
    and degree 2 the order is ``(2,0), (1,1), (0,2)``.
    """
    if nvars < 1:
        raise ValueError("nvars must be >= 1")
    degrees = [max_degree] if homogeneous_only else range(max_degree + 1)
    out: list[MultiIndex] = []
    for deg in degrees:
        block = []
        for combo in combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for v in combo:
                alpha[v] += 1
            block.append(tuple(alpha))
        # combinations_with_replacement already yields descending lex order
        out.extend(block)
    return out


def multi_factorial(alpha: Iterable[int]) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


@dataclass(frozen=True, eq=False)
class Poly:
    nvars: int
    terms: Mapping[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for alpha, c in self.terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.nvars:
                raise DimensionError(f"exponent {alpha} does not have {self.nvars} entries")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            c = complex(c)
            if c != 0:
                clean[alpha] = c
        object.__setattr__(self, "terms", clean)

    # construction helpers
    @classmethod
    def _trusted(cls, nvars: int, terms: dict[MultiIndex, complex]) -> Poly:
        """Skip validation for terms built internally from valid exponents."""
        p = object.__new__(cls)
        object.__setattr__(p, "nvars", nvars)
        object.__setattr__(p, "terms", {a: complex(c) for a, c in terms.items() if c != 0})
        return p

    @classmethod
    def zero(cls, nvars: int) -> Poly:
        return cls(nvars, {})

    @classmethod
    def const(cls, nvars: int, c: complex) -> Poly:
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> Poly:
        alpha = [0] * nvars
        alpha[i] = 1
        return cls(nvars, {tuple(alpha): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[complex]) -> Poly:
        nvars = len(coeffs)
        return cls(nvars, {tuple(int(i == j) for j in range(nvars)): c for i, c in enumerate(coeffs)})

    @classmethod
    def from_vector(cls, nvars: int, basis: Sequence[MultiIndex], vec: Sequence[complex]) -> Poly:
        basis = [tuple(int(a) for a in m) for m in basis]
        if any(len(m) != nvars or min(m, default=0) < 0 for m in basis):
            raise DimensionError(f"basis monomials must be {nvars} nonnegative exponents")
        return cls._trusted(nvars, dict(zip(basis, vec)))

    # inspection
    def is_zero(self) -> bool:
        return not self.terms

    @cached_property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(a) for a in self.terms), default=-1)

    @cached_property
    def is_homogeneous(self) -> bool:
        return len({sum(a) for a in self.terms}) <= 1

    def coeff(self, alpha: MultiIndex) -> complex:
        return self.terms.get(tuple(alpha), 0j)

    def to_vector(self, basis: Sequence[MultiIndex]) -> np.ndarray:
        return np.array([self.terms.get(a, 0j) for a in basis], dtype=complex)

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        return math.sqrt(sum(abs(c) ** 2 for c in self.terms.values()))

    def homogeneous_part(self, deg: int) -> Poly:
        return Poly(self.nvars, {a: c for a, c in self.terms.items() if sum(a) == deg})

    # arithmetic
    def _check(self, other: Poly):
        if self.nvars != other.nvars:
            raise DimensionError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def __add__(self, other):
        if not isinstance(other, Poly):
            return self + Poly.const(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0j) + c
        return Poly._trusted(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._trusted(self.nvars, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return scale(self, other)
        self._check(other)
        out: dict[MultiIndex, complex] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                g = tuple(x + y for x, y in zip(a, b))
                out[g] = out.get(g, 0j) + ca * cb
        return Poly._trusted(self.nvars, out)

    def __rmul__(self, other):
        return scale(self, other)

    def __truediv__(self, c):
        return scale(self, 1 / c)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        if k > 1 and self.degree == 1 and self.is_homogeneous:
            coeffs = [self.coeff(tuple(int(j == i) for j in range(self.nvars))) for i in range(self.nvars)]
            return substitute_linear(Poly._trusted(1, {(k,): 1.0}), [coeffs])
        out = Poly.const(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __call__(self, *point):
        return evaluate(self, point)

    def __repr__(self):
        return f"Poly({format_poly(self)!r})"

    def conj(self) -> Poly:
        return Poly(self.nvars, {a: c.conjugate() for a, c in self.terms.items()})

    def cleanup(self, tol: float) -> Poly:
        """Drop terms with ``|c| <= tol * max|c|``."""
        if not self.terms:
            return self
        cap = tol * max(abs(c) for c in self.terms.values())
        return Poly(self.nvars, {a: c for a, c in self.terms.items() if abs(c) > cap})


def add(p: Poly, q: Poly) -> Poly:
    return p + q


def scale(p: Poly, c: complex) -> Poly:
    c = complex(c)
    return Poly._trusted(p.nvars, {a: v * c for a, v in p.terms.items()})


def mul(p: Poly, q: Poly) -> Poly:
    return p * q


@dataclass(frozen=True)
class LinearForm:
    """The linear form ``sum_i coeffs[i] * x_i``."""

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        if all(c == 0 for c in coeffs):
            raise ValueError("linear form is identically zero")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def nvars(self) -> int:
        return len(self.coeffs)

    def as_poly(self) -> Poly:
        return Poly.linear(self.coeffs)

    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)


@dataclass(frozen=True, eq=False)
class CoordChange:
    """An invertible matrix acting on forms by ``x_j -> sum_i M[i, j] x_i``."""

    matrix: np.ndarray
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("coordinate change must be a square matrix")
        inv = np.linalg.inv(m)
        err = np.linalg.norm(m @ inv - np.eye(len(m)))
        if not np.isfinite(err) or err > 1e-12 * max(1.0, np.linalg.cond(m)):
            raise ValueError("coordinate change is numerically singular")
        m.setflags(write=False)
        inv.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "inverse", inv)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def inv(self) -> CoordChange:
        return CoordChange(self.inverse)

    def transposed(self) -> CoordChange:
        return CoordChange(self.matrix.T)

    def inverse_transposed(self) -> CoordChange:
        return CoordChange(self.inverse.T)

    def apply_linear(self, ell: LinearForm) -> LinearForm:
        return LinearForm(tuple(self.matrix @ ell.array()))

    @classmethod
    def identity(cls, size: int) -> CoordChange:
        return cls(np.eye(size))


def diff(p: Poly, alpha: MultiIndex) -> Poly:
    if len(alpha) != p.nvars:
        raise DimensionError("multi-index length does not match nvars")
    out = {}
    for beta, c in p.terms.items():
        if any(b < a for a, b in zip(alpha, beta)):
            continue
        factor = 1
        for a, b in zip(alpha, beta):
            factor *= math.perm(b, a)
        out[tuple(b - a for a, b in zip(alpha, beta))] = c * factor
    return Poly(p.nvars, out)


def apply_diff_op(g: Poly, f: Poly) -> Poly:
    """``g(d/dx)(f) = sum_a g_a d^a f``."""
    if g.nvars != f.nvars:
        raise DimensionError("nvars mismatch")
    out: dict[MultiIndex, complex] = {}
    for alpha, ga in g.terms.items():
        for beta, c in diff(f, alpha).terms.items():
            out[beta] = out.get(beta, 0j) + ga * c
    return Poly(f.nvars, out)


@lru_cache(maxsize=64)
def _shift_tables(nvars: int, max_degree: int) -> tuple[tuple[MultiIndex, ...], tuple[np.ndarray, ...]]:
    """Monomials of degree ``<= max_degree`` and, per variable, the index of ``x_i * m`` (or -1)."""
    basis = tuple(monomials(nvars, max_degree))
    index = {m: i for i, m in enumerate(basis)}
    shifts = []
    for i in range(nvars):
        e = tuple(int(j == i) for j in range(nvars))
        shifts.append(np.array([index.get(tuple(a + b for a, b in zip(m, e)), -1) for m in basis]))
    return basis, tuple(shifts)


def substitute_linear(p: Poly, images: Sequence[Sequence[complex]]) -> Poly:
    """Replace variable ``j`` of ``p`` by the linear form ``images[j]``.

    The image forms may live in a different number of variables.  Images of
    monomials are built as dense vectors, one linear factor at a time.
    """
    if len(images) != p.nvars:
        raise DimensionError("one image per variable is required")
    target = len(images[0])
    if p.is_zero():
        return Poly.zero(target)
    forms = np.array(images, dtype=complex)
    basis, shifts = _shift_tables(target, p.degree)
    size = len(basis)
    unit = np.zeros(size, dtype=complex)
    unit[0] = 1.0
    cache: dict[MultiIndex, np.ndarray] = {(0,) * p.nvars: unit}

    def image(alpha: MultiIndex) -> np.ndarray:
        if alpha not in cache:
            j = next(i for i, a in enumerate(alpha) if a)
            prev = image(alpha[:j] + (alpha[j] - 1,) + alpha[j + 1 :])
            out = np.zeros(size, dtype=complex)
            live = np.flatnonzero(prev)
            for i, c in enumerate(forms[j]):
                if c != 0:
                    out[shifts[i][live]] += c * prev[live]
            cache[alpha] = out
        return cache[alpha]

    total = np.zeros(size, dtype=complex)
    for alpha, c in sorted(p.terms.items(), key=lambda t: sum(t[0])):
        total += c * image(alpha)
    return Poly.from_vector(target, basis, total)


def change_coords(p: Poly, phi: CoordChange, transpose: bool = False) -> Poly:
    """Apply ``phi`` to ``p``: ``x_j`` becomes ``sum_i phi[i, j] x_i``.

    With ``transpose`` the matrix is transposed first.
    """
    if p.nvars != phi.size:
        raise DimensionError("coordinate change size does not match nvars")
    m = phi.matrix.T if transpose else phi.matrix
    return substitute_linear(p, [m[:, j] for j in range(p.nvars)])


def evaluate(p: Poly, point: Sequence[complex]) -> complex:
    if len(point) != p.nvars:
        raise DimensionError("point length does not match nvars")
    total = 0j
    for alpha, c in p.terms.items():
        v = c
        for x, a in zip(point, alpha):
            if a:
                v *= x**a
        total += v
    return total


def dehomogenize(f: Poly) -> Poly:
    """Set ``x0 = 1``; the result lives in ``nvars - 1`` variables."""
    out: dict[MultiIndex, complex] = {}
    for alpha, c in f.terms.items():
        out[alpha[1:]] = out.get(alpha[1:], 0j) + c
    return Poly(f.nvars - 1, out)


def homogenize(p: Poly, d: int) -> Poly:
    if p.degree > d:
        raise ValueError(f"degree {p.degree} exceeds homogenization degree {d}")
    return Poly(p.nvars + 1, {(d - sum(a),) + a: c for a, c in p.terms.items()})


def random_homogeneous(nvars: int, d: int, rng: np.random.Generator) -> Poly:
    """Every degree-``d`` monomial gets an independent standard normal coefficient."""
    if d < 0:
        raise ValueError("degree must be >= 0")
    basis = monomials(nvars, d, homogeneous_only=True)
    return Poly(nvars, dict(zip(basis, rng.standard_normal(len(basis)))))


# ---------------------------------------------------------------------------
# text format

def _format_float(x: float) -> str:
    return repr(float(x))


def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        return _format_float(c.real)
    return f"({_format_float(c.real)}{'+' if math.copysign(1, c.imag) > 0 else '-'}{_format_float(abs(c.imag))}j)"


def format_poly(p: Poly, imag_tol: float | None = None, first_var: int = 0) -> str:
    """Render ``p`` as ``coef*x0^a*x1^b + ...``, highest degree first.

    With ``imag_tol`` set, imaginary parts below ``imag_tol * max|c|`` are
    dropped before printing.  ``first_var`` renumbers the variables, e.g. 1
    for affine polynomials in ``x1..xn``.
    """
    if p.is_zero():
        return "0"
    terms = p.terms
    if imag_tol is not None:
        cap = imag_tol * max(abs(c) for c in terms.values())
        terms = {a: (complex(c.real, 0) if abs(c.imag) <= cap else c) for a, c in terms.items()}
    order = sorted(terms, key=lambda a: (-sum(a), tuple(-x for x in a)))
    parts = []
    for i, alpha in enumerate(order):
        c = terms[alpha]
        mono = "*".join(f"x{j}" if e == 1 else f"x{j}^{e}" for j, e in enumerate(alpha, first_var) if e)
        sign = ""
        if c.imag == 0 and math.copysign(1, c.real) < 0:
            sign, c = "-", complex(-c.real, 0)
        if mono and c == 1:
            body = mono
        else:
            body = _format_coeff(c) + (f"*{mono}" if mono else "")
        if i == 0:
            parts.append(f"{sign}{body}")
        else:
            parts.append(f" {sign or '+'} {body}")
    return "".join(parts)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)|(?P<var>x\d+)|(?P<op>[-+*^()]))"
)


def parse_poly(text: str, nvars: int | None = None) -> Poly:
    """Parse the ``coef*x0^a*x1^b`` text format.

    Each term is a product of factors; a factor is a number, a parenthesised
    complex literal such as ``(1.5-2j)``, or a variable with an optional
    integer power.  ``nvars`` defaults to one more than the largest variable
    index seen.
    """
    tokens = []
    pos = 0
    stripped_end = len(text.rstrip())
    while pos < stripped_end:
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise PolyParseError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    i = 0

    def peek():
        return tokens[i]

    def take(kind=None, value=None):
        nonlocal i
        tok = tokens[i]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            raise PolyParseError(f"expected {want!r}, found {tok[1] or 'end of input'!r}", text, tok[2])
        i += 1
        return tok

    def complex_literal():
        # after '(': [sign] num [(+|-) num]
        sign = 1
        if peek()[0] == "op" and peek()[1] in "+-":
            sign = -1 if take()[1] == "-" else 1
        val = sign * complex(take("num")[1])
        if peek()[0] == "op" and peek()[1] in "+-":
            s = -1 if take()[1] == "-" else 1
            val += s * complex(take("num")[1])
        take("op", ")")
        return val

    raw: list[tuple[complex, dict[int, int]]] = []
    first = True
    maxvar = -1
    while True:
        sign = 1
        if peek()[0] == "op" and peek()[1] in "+-":
            sign = -1 if take()[1] == "-" else 1
        elif not first:
            if peek()[0] == "end":
                break
            raise PolyParseError(f"expected '+' or '-', found {peek()[1]!r}", text, peek()[2])
        if peek()[0] == "end":
            if first and not raw:
                raise PolyParseError("empty polynomial", text, peek()[2])
            raise PolyParseError("dangling operator", text, peek()[2])
        first = False
        coef: complex = complex(sign)
        exps: dict[int, int] = {}
        while True:
            kind, val, where = peek()
            if kind == "num":
                take()
                coef *= complex(val)
            elif kind == "op" and val == "(":
                take()
                coef *= complex_literal()
            elif kind == "var":
                take()
                idx = int(val[1:])
                e = 1
                if peek()[0] == "op" and peek()[1] == "^":
                    take()
                    num = take("num")
                    if not re.fullmatch(r"\d+", num[1]):
                        raise PolyParseError("exponent must be a nonnegative integer", text, num[2])
                    e = int(num[1])
                exps[idx] = exps.get(idx, 0) + e
                maxvar = max(maxvar, idx)
            else:
                raise PolyParseError(f"expected a factor, found {val or 'end of input'!r}", text, where)
            if peek()[0] == "op" and peek()[1] == "*":
                take()
                continue
            break
        raw.append((coef, exps))
        if peek()[0] == "end":
            break
    if nvars is None:
        nvars = maxvar + 1 if maxvar >= 0 else 1
    elif maxvar >= nvars:
        raise DimensionError(f"variable x{maxvar} exceeds nvars={nvars}")
    out: dict[MultiIndex, complex] = {}
    for coef, exps in raw:
        alpha = tuple(exps.get(j, 0) for j in range(nvars))
        out[alpha] = out.get(alpha, 0j) + coef
    return Poly(nvars, out)


def poly_from_json(obj: Mapping[str, Sequence[float]], nvars: int) -> Poly:
    return Poly(nvars, {parse_index(k): complex(v[0], v[1]) for k, v in obj.items()})


def poly_to_json(p: Poly) -> dict[str, list[float]]:
    return {format_index(a): [c.real, c.imag] for a, c in sorted(p.terms.items())}


def format_index(alpha: MultiIndex) -> str:
    return "(" + ",".join(str(a) for a in alpha) + ")"


def parse_index(s: str) -> MultiIndex:
    s = s.strip()
    if not (s.startswith("(") and s.endswith(")")):
        raise ValueError(f"bad multi-index {s!r}")
    body = s[1:-1].strip()
    return tuple(int(x) for x in body.split(",")) if body else ()
