"""Exact scalars, dense matrices and truncated Laurent polynomials.

Two coefficient domains are supported: the rationals (backed by
:class:`fractions.Fraction`) and prime fields GF(p) (residues stored as
plain ``int`` in ``[0, p)``).  Nothing in here touches floating point.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Field",
    "QQ",
    "GF",
    "Matrix",
    "LaurentPoly",
    "LaurentOverflowError",
    "row_basis",
    "span_contains",
    "intersect_spans",
    "complete_basis",
    "solve_combination",
    "is_prime",
]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


_FIELD_RE = re.compile(r"^\s*(?:Q|QQ|GF\(\s*(\d+)\s*\))\s*$")


@dataclass(frozen=True)
class Field:
    """Coefficient field: ``Field()`` is Q, ``Field(p)`` is GF(p)."""

    p: int | None = None

    def __post_init__(self):
        if self.p is not None and not is_prime(self.p):
            raise ValueError(f"GF({self.p}): modulus is not prime")

    @classmethod
    def parse(cls, text: str) -> Field:
        m = _FIELD_RE.match(text)
        if not m:
            raise ValueError(f"unknown field descriptor {text!r}")
        return cls(int(m.group(1))) if m.group(1) else cls()

    @property
    def name(self) -> str:
        return "Q" if self.p is None else f"GF({self.p})"

    @property
    def is_finite(self) -> bool:
        return self.p is not None

    @property
    def characteristic(self) -> int:
        return 0 if self.p is None else self.p

    def __repr__(self) -> str:
        return self.name

    # -- scalars -----------------------------------------------------------

    def __call__(self, x) -> int | Fraction:
        if isinstance(x, str):
            return self.parse_scalar(x)
        if self.p is None:
            return Fraction(x)
        if isinstance(x, Fraction):
            if x.denominator % self.p == 0:
                raise ZeroDivisionError(f"{x} has no image in {self.name}")
            return x.numerator * pow(x.denominator, -1, self.p) % self.p
        return int(x) % self.p

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def add(self, x, y):
        return self.reduce(x + y)

    def sub(self, x, y):
        return self.reduce(x - y)

    def mul(self, x, y):
        return self.reduce(x * y)

    def neg(self, x):
        return self.reduce(-x)

    def inv(self, x):
        if x == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.p is None:
            return 1 / Fraction(x)
        return pow(int(x), -1, self.p)

    def div(self, x, y):
        return self.mul(x, self.inv(y))

    def reduce(self, x):
        return Fraction(x) if self.p is None else x % self.p

    def reduce_array(self, arr: np.ndarray) -> np.ndarray:
        if self.p is None:
            return arr
        return np.mod(arr, self.p)

    def parse_scalar(self, text: str):
        text = text.strip()
        try:
            value = Fraction(text)
        except ValueError as exc:
            raise ValueError(f"malformed scalar {text!r}") from exc
        if self.p is not None and value.denominator != 1:
            raise ValueError(f"GF(p) residues are written as integers, got {text!r}")
        return self(value)

    def format(self, x) -> str:
        if self.p is None:
            x = Fraction(x)
            return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
        return str(int(x) % self.p)

    def elements(self) -> Iterator[int]:
        if self.p is None:
            raise ValueError("Q is infinite")
        return iter(range(self.p))

    def random(self, rng: random.Random, bound: int = 5):
        if self.p is None:
            return Fraction(rng.randint(-bound, bound))
        return rng.randrange(self.p)

    def random_nonzero(self, rng: random.Random, bound: int = 5):
        while True:
            x = self.random(rng, bound)
            if x != 0:
                return x

    def array(self, data) -> np.ndarray:
        arr = np.array(data, dtype=object)
        flat = arr.reshape(-1)
        for i, x in enumerate(flat):
            flat[i] = self(x)
        return arr


QQ = Field()


def GF(p: int) -> Field:
    return Field(p)


# ---------------------------------------------------------------------------
# elimination kernels
# ---------------------------------------------------------------------------


def _integer_rows(rows: list[list[Fraction]]) -> tuple[list[list[int]], Fraction]:
    """Scale each row to integers; returns rows and the product of scales."""
    out = []
    scale = Fraction(1)
    for row in rows:
        den = 1
        for x in row:
            den = math.lcm(den, Fraction(x).denominator)
        out.append([int(Fraction(x) * den) for x in row])
        scale *= den
    return out, scale


def _bareiss(M: list[list[int]]) -> tuple[int, int]:
    """Fraction-free elimination in place; returns (rank, signed last pivot).

    For a square nonsingular input the second value is the determinant.
    """
    m = len(M)
    n = len(M[0]) if m else 0
    prev, r, sign = 1, 0, 1
    for col in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if M[i][col] != 0), None)
        if piv is None:
            continue
        if piv != r:
            M[r], M[piv] = M[piv], M[r]
            sign = -sign
        pr = M[r]
        pc = pr[col]
        for i in range(r + 1, m):
            row = M[i]
            f = row[col]
            for j in range(col + 1, n):
                row[j] = (row[j] * pc - f * pr[j]) // prev
            row[col] = 0
        prev = pc
        r += 1
    return r, sign * prev


def _rref(rows: list[list], field: Field) -> tuple[list[list], list[int]]:
    """Reduced row echelon form (nonzero rows only) and pivot columns."""
    M = [list(r) for r in rows]
    m = len(M)
    n = len(M[0]) if m else 0
    pivots: list[int] = []
    r = 0
    p = field.p
    for col in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = field.inv(M[r][col])
        if p is None:
            M[r] = [x * inv for x in M[r]]
        else:
            M[r] = [x * inv % p for x in M[r]]
        pr = M[r]
        for i in range(m):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                if p is None:
                    M[i] = [a - f * b for a, b in zip(M[i], pr)]
                else:
                    M[i] = [(a - f * b) % p for a, b in zip(M[i], pr)]
        pivots.append(col)
        r += 1
    return M[:r], pivots


def _rank_rows(rows: list[list], field: Field) -> int:
    if not rows or not rows[0]:
        return 0
    if field.p is None:
        ints, _ = _integer_rows(rows)
        return _bareiss(ints)[0]
    p = field.p
    M = [[x % p for x in r] for r in rows]
    m, n = len(M), len(M[0])
    r = 0
    for col in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if M[i][col]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = pow(M[r][col], -1, p)
        pr = M[r]
        for i in range(r + 1, m):
            f = M[i][col]
            if f:
                f = f * inv % p
                M[i] = [(a - f * b) % p for a, b in zip(M[i], pr)]
        r += 1
    return r


# ---------------------------------------------------------------------------
# Matrix
# ---------------------------------------------------------------------------


class Matrix:
    """Immutable dense matrix over a :class:`Field`."""

    __slots__ = ("field", "data")

    def __init__(self, field: Field, data, *, _trusted: bool = False):
        if _trusted:
            arr = data
        else:
            arr = field.array(data)
            if arr.ndim == 1 and arr.size == 0:
                arr = arr.reshape(0, 0)
            if arr.ndim != 2:
                raise ValueError("matrix data must be two-dimensional")
        arr.flags.writeable = False
        self.field = field
        self.data = arr

    @classmethod
    def zeros(cls, field: Field, rows: int, cols: int) -> Matrix:
        arr = np.empty((rows, cols), dtype=object)
        arr[...] = field.zero
        return cls(field, arr, _trusted=True)

    @classmethod
    def identity(cls, field: Field, n: int) -> Matrix:
        return cls.diag(field, [1] * n)

    @classmethod
    def diag(cls, field: Field, values: Sequence) -> Matrix:
        n = len(values)
        arr = np.empty((n, n), dtype=object)
        arr[...] = field.zero
        for i, v in enumerate(values):
            arr[i, i] = field(v)
        return cls(field, arr, _trusted=True)

    @classmethod
    def unit(cls, field: Field, rows: int, cols: int, i: int, j: int) -> Matrix:
        arr = np.empty((rows, cols), dtype=object)
        arr[...] = field.zero
        arr[i, j] = field.one
        return cls(field, arr, _trusted=True)

    @classmethod
    def from_flat(cls, field: Field, rows: int, cols: int, flat: Sequence) -> Matrix:
        if len(flat) != rows * cols:
            raise ValueError("entries length must equal rows*cols")
        return cls(field, np.array(list(flat), dtype=object).reshape(rows, cols))

    @classmethod
    def outer(cls, field: Field, u: Sequence, v: Sequence) -> Matrix:
        u = field.array(list(u))
        v = field.array(list(v))
        return cls(field, field.reduce_array(np.multiply.outer(u, v)), _trusted=True)

    @classmethod
    def block(cls, field: Field, blocks: list[list[Matrix]]) -> Matrix:
        arr = np.block([[b.data for b in row] for row in blocks])
        return cls(field, arr.astype(object), _trusted=True)

    @classmethod
    def random(cls, field: Field, rows: int, cols: int, rng: random.Random, bound: int = 5) -> Matrix:
        return cls(field, [[field.random(rng, bound) for _ in range(cols)] for _ in range(rows)])

    # -- basic protocol ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __getitem__(self, idx):
        out = self.data[idx]
        if isinstance(out, np.ndarray):
            out = out.copy()
            if out.ndim == 2:
                return Matrix(self.field, out, _trusted=True)
            return out
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and bool(
            np.all(self.data == other.data)
        )

    def __hash__(self) -> int:
        return hash((self.field, self.shape, tuple(self.data.reshape(-1))))

    def __repr__(self) -> str:
        rows = [[self.field.format(x) for x in r] for r in self.data]
        return f"Matrix({self.field.name}, {rows})"

    def tolist(self) -> list[list]:
        return self.data.tolist()

    def flat(self) -> list:
        return list(self.data.reshape(-1))

    @property
    def T(self) -> Matrix:
        return Matrix(self.field, self.data.T.copy(), _trusted=True)

    def _check(self, other: Matrix):
        if self.field != other.field:
            raise ValueError("field mismatch")

    def __add__(self, other: Matrix) -> Matrix:
        self._check(other)
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Matrix(self.field, self.field.reduce_array(self.data + other.data), _trusted=True)

    def __sub__(self, other: Matrix) -> Matrix:
        self._check(other)
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Matrix(self.field, self.field.reduce_array(self.data - other.data), _trusted=True)

    def __neg__(self) -> Matrix:
        return Matrix(self.field, self.field.reduce_array(-self.data), _trusted=True)

    def __matmul__(self, other: Matrix) -> Matrix:
        self._check(other)
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        if self.rows == 0 or other.cols == 0 or self.cols == 0:
            return Matrix.zeros(self.field, self.rows, other.cols)
        return Matrix(self.field, self.field.reduce_array(self.data.dot(other.data)), _trusted=True)

    def scale(self, s) -> Matrix:
        s = self.field(s)
        return Matrix(self.field, self.field.reduce_array(self.data * s), _trusted=True)

    def is_zero(self) -> bool:
        return not any(x != 0 for x in self.data.reshape(-1))

    # -- elimination -------------------------------------------------------

    def rank(self) -> int:
        if self.rows == 0 or self.cols == 0:
            return 0
        return _rank_rows(self.data.tolist(), self.field)

    def det(self):
        n = self.rows
        if n != self.cols:
            raise ValueError("determinant of a non-square matrix")
        if n == 0:
            return self.field.one
        if self.field.p is None:
            ints, scale = _integer_rows(self.data.tolist())
            r, d = _bareiss(ints)
            return Fraction(0) if r < n else Fraction(d) / scale
        p = self.field.p
        M = [[x % p for x in r] for r in self.data.tolist()]
        det = 1
        for col in range(n):
            piv = next((i for i in range(col, n) if M[i][col]), None)
            if piv is None:
                return 0
            if piv != col:
                M[col], M[piv] = M[piv], M[col]
                det = -det
            pc = M[col][col]
            det = det * pc % p
            inv = pow(pc, -1, p)
            for i in range(col + 1, n):
                f = M[i][col] * inv % p
                if f:
                    M[i] = [(a - f * b) % p for a, b in zip(M[i], M[col])]
        return det % p

    def rref(self) -> tuple[Matrix, list[int]]:
        R, piv = _rref(self.data.tolist(), self.field)
        if not R:
            return Matrix.zeros(self.field, 0, self.cols), piv
        return Matrix(self.field, R), piv

    def nullspace(self) -> list[list]:
        """Basis of the right kernel as coordinate lists."""
        R, piv = _rref(self.data.tolist(), self.field)
        n = self.cols
        free = [j for j in range(n) if j not in piv]
        basis = []
        for f in free:
            v = [self.field.zero] * n
            v[f] = self.field.one
            for row, pc in zip(R, piv):
                v[pc] = self.field.neg(row[f])
            basis.append(v)
        return basis

    def left_nullspace(self) -> list[list]:
        return self.T.nullspace()

    def inverse(self) -> Matrix:
        n = self.rows
        if n != self.cols:
            raise ValueError("inverse of a non-square matrix")
        aug = [list(r) + [self.field.one if i == j else self.field.zero for j in range(n)]
               for i, r in enumerate(self.data.tolist())]
        R, piv = _rref(aug, self.field)
        if piv[:n] != list(range(n)) or len(R) < n:
            raise ZeroDivisionError("matrix is singular")
        return Matrix(self.field, [row[n:] for row in R])

    def adjugate(self) -> Matrix:
        """Transposed cofactor matrix; ``M @ adj(M) == det(M) * I``."""
        n = self.rows
        if n != self.cols:
            raise ValueError("adjugate of a non-square matrix")
        if n == 0:
            return Matrix.zeros(self.field, 0, 0)
        if n == 1:
            return Matrix.identity(self.field, 1)
        d = self.det()
        if d != 0:
            return self.inverse().scale(d)
        r = self.rank()
        if r <= n - 2:
            return Matrix.zeros(self.field, n, n)
        # rank n-1: adj = lam * x y^T with M x = 0 and y^T M = 0
        x = self.nullspace()[0]
        y = self.left_nullspace()[0]
        i = next(k for k in range(n) if x[k] != 0)
        j = next(k for k in range(n) if y[k] != 0)
        minor = np.delete(np.delete(self.data, j, axis=0), i, axis=1)
        cof = Matrix(self.field, minor.copy(), _trusted=True).det()
        if (i + j) % 2:
            cof = self.field.neg(cof)
        lam = self.field.div(cof, self.field.mul(x[i], y[j]))
        return Matrix.outer(self.field, x, y).scale(lam)

    def to_strings(self) -> list[list[str]]:
        return [[self.field.format(x) for x in r] for r in self.data]


# ---------------------------------------------------------------------------
# vector space helpers (vectors are plain sequences of field elements)
# ---------------------------------------------------------------------------


def row_basis(vectors: Iterable[Sequence], field: Field, dim: int | None = None) -> list[list]:
    """Canonical (reduced echelon) basis of the span of ``vectors``."""
    rows = [list(v) for v in vectors]
    if not rows:
        return []
    R, _ = _rref(rows, field)
    return R


def span_contains(basis: Sequence[Sequence], vector: Sequence, field: Field) -> bool:
    if not any(x != 0 for x in vector):
        return True
    if not basis:
        return False
    return _rank_rows([list(b) for b in basis] + [list(vector)], field) == _rank_rows(
        [list(b) for b in basis], field
    )


def solve_combination(basis: Sequence[Sequence], vector: Sequence, field: Field) -> list | None:
    """Coefficients ``c`` with ``sum c_i basis_i == vector`` or None."""
    k = len(basis)
    n = len(vector)
    if k == 0:
        return [] if not any(x != 0 for x in vector) else None
    aug = [[basis[i][j] for i in range(k)] + [vector[j]] for j in range(n)]
    R, piv = _rref(aug, field)
    if k in piv:
        return None
    coeffs = [field.zero] * k
    for row, pc in zip(R, piv):
        coeffs[pc] = row[k]
    return coeffs


def intersect_spans(U: Sequence[Sequence], V: Sequence[Sequence], field: Field) -> list[list]:
    """Basis of span(U) ∩ span(V)."""
    U = row_basis(U, field)
    V = row_basis(V, field)
    if not U or not V:
        return []
    n = len(U[0])
    # kernel of [U^T | -V^T]
    cols = [list(u) for u in U] + [[field.neg(x) for x in v] for v in V]
    M = Matrix(field, [[c[j] for c in cols] for j in range(n)])
    out = []
    for kv in M.nullspace():
        vec = [field.zero] * n
        for coef, u in zip(kv[: len(U)], U):
            if coef != 0:
                vec = [field.add(a, field.mul(coef, b)) for a, b in zip(vec, u)]
        out.append(vec)
    return row_basis(out, field)


def complete_basis(basis: Sequence[Sequence], n: int, field: Field) -> list[list]:
    """Extend an independent list to a basis of field^n by unit vectors."""
    out = [list(b) for b in basis]
    rank = _rank_rows(out, field) if out else 0
    for j in range(n):
        if rank == n:
            break
        e = [field.zero] * n
        e[j] = field.one
        if _rank_rows(out + [e], field) > rank:
            out.append(e)
            rank += 1
    return out


# ---------------------------------------------------------------------------
# Laurent polynomials in eps
# ---------------------------------------------------------------------------


class LaurentOverflowError(ValueError):
    """An exponent left the configured support window."""


DEFAULT_WINDOW = (-8, 8)


class LaurentPoly:
    """Finite Laurent polynomial in ``eps`` with exact coefficients."""

    __slots__ = ("field", "coeffs", "window")

    def __init__(self, field: Field, coeffs: dict | None = None, window: tuple[int, int] = DEFAULT_WINDOW):
        lo, hi = window
        clean = {}
        for e, c in (coeffs or {}).items():
            c = field(c)
            if c != 0:
                e = int(e)
                if not lo <= e <= hi:
                    raise LaurentOverflowError(f"exponent {e} outside window [{lo}, {hi}]")
                clean[e] = c
        self.field = field
        self.coeffs = clean
        self.window = window

    @classmethod
    def const(cls, field: Field, c, window=DEFAULT_WINDOW) -> LaurentPoly:
        return cls(field, {0: c}, window)

    @classmethod
    def monomial(cls, field: Field, exp: int, c=1, window=DEFAULT_WINDOW) -> LaurentPoly:
        return cls(field, {exp: c}, window)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def coefficient(self, e: int):
        return self.coeffs.get(e, self.field.zero)

    def lowest_term(self) -> tuple[int, int | Fraction]:
        if not self.coeffs:
            raise ValueError("zero Laurent polynomial has no lowest term")
        e = min(self.coeffs)
        return e, self.coeffs[e]

    def _combine(self, other, sign):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.const(self.field, other, self.window)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = self.field.add(out.get(e, 0), c if sign > 0 else self.field.neg(c))
        return LaurentPoly(self.field, out, self.window)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return LaurentPoly(self.field, {e: self.field.neg(c) for e, c in self.coeffs.items()}, self.window)

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return LaurentPoly(self.field, {e: self.field.mul(c, other) for e, c in self.coeffs.items()}, self.window)
        out: dict[int, object] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                out[e1 + e2] = self.field.add(out.get(e1 + e2, 0), self.field.mul(c1, c2))
        return LaurentPoly(self.field, out, self.window)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, LaurentPoly):
            return self.field == other.field and self.coeffs == other.coeffs
        return self.coeffs == ({0: self.field(other)} if other != 0 else {})

    def __hash__(self):
        return hash((self.field, tuple(sorted(self.coeffs.items()))))

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for e in sorted(self.coeffs):
            c = self.field.format(self.coeffs[e])
            terms.append(c if e == 0 else f"{c}*eps^{e}")
        return " + ".join(terms)

    def to_json(self) -> dict[str, str]:
        return {str(e): self.field.format(c) for e, c in sorted(self.coeffs.items())}

    @classmethod
    def from_json(cls, field: Field, data, window=DEFAULT_WINDOW) -> LaurentPoly:
        if isinstance(data, (int, str)) and not isinstance(data, bool):
            return cls.const(field, field(data), window)
        if not isinstance(data, dict):
            raise ValueError(f"malformed Laurent entry {data!r}")
        return cls(field, {int(e): field.parse_scalar(str(c)) for e, c in data.items()}, window)
