"""Order-3 tensors, their slice spaces, direct sums and the JSON file format."""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exactalg import Field, Matrix, row_basis, span_contains

__all__ = [
    "Splitting",
    "SimpleTensor",
    "Tensor3",
    "MatrixSubspace",
    "TensorFormatError",
    "FACTORS",
    "slice_space",
    "conciseness",
    "concise_reduce",
    "direct_sum",
    "mm_tensor",
    "diag_tensor",
    "w_state",
    "hook_profile",
    "min_hook_f",
    "rref_matrices",
    "projective_points",
    "read_tensor",
    "write_tensor",
    "tensor_from_json",
    "tensor_to_json",
]

FACTORS = ("A", "B", "C")


class TensorFormatError(ValueError):
    """Malformed tensor file or inconsistent tensor data."""


def _axis(factor: str | int) -> int:
    if isinstance(factor, int):
        if factor not in (0, 1, 2):
            raise ValueError(f"factor index {factor} not in 0..2")
        return factor
    try:
        return FACTORS.index(factor.upper())
    except ValueError:
        raise ValueError(f"unknown factor {factor!r}") from None


@dataclass(frozen=True)
class Splitting:
    """Block sizes ``(x', x'')`` per factor; the primed block comes first."""

    a_parts: tuple[int, int]
    b_parts: tuple[int, int]
    c_parts: tuple[int, int]

    def __post_init__(self):
        for part in self.parts:
            if len(part) != 2 or min(part) < 0:
                raise ValueError(f"bad splitting part {part}")

    @property
    def parts(self) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
        return (tuple(self.a_parts), tuple(self.b_parts), tuple(self.c_parts))

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(sum(p) for p in self.parts)

    def primed(self) -> tuple[int, int, int]:
        return tuple(p[0] for p in self.parts)

    def second(self) -> tuple[int, int, int]:
        return tuple(p[1] for p in self.parts)

    def permute(self, perm: Sequence[int]) -> Splitting:
        parts = self.parts
        return Splitting(*(parts[i] for i in perm))

    @classmethod
    def from_lists(cls, lists) -> Splitting:
        if len(lists) != 3:
            raise ValueError("splitting needs three factor parts")
        return cls(*(tuple(int(x) for x in part) for part in lists))

    def tolist(self) -> list[list[int]]:
        return [list(p) for p in self.parts]


@dataclass(frozen=True)
class SimpleTensor:
    """``u ⊗ v ⊗ w`` with every factor nonzero."""

    u: tuple
    v: tuple
    w: tuple

    def __post_init__(self):
        for vec in (self.u, self.v, self.w):
            if not any(x != 0 for x in vec):
                raise ValueError("simple tensor factors must be nonzero")

    def dense(self, field: Field) -> np.ndarray:
        arr = np.multiply.outer(np.multiply.outer(np.array(self.u, dtype=object), np.array(self.v, dtype=object)),
                                np.array(self.w, dtype=object))
        return field.reduce_array(arr)

    def to_json(self, field: Field) -> dict:
        return {k: [field.format(x) for x in getattr(self, k)] for k in ("u", "v", "w")}


def _mode_product(data: np.ndarray, M: Matrix, axis: int) -> np.ndarray:
    out = np.tensordot(M.data, data, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


class Tensor3:
    """Dense tensor in ``A ⊗ B ⊗ C`` with optional direct-sum splitting."""

    __slots__ = ("field", "data", "split")

    def __init__(self, field: Field, data, split: Splitting | None = None, *, _trusted: bool = False):
        arr = data if _trusted else field.array(data)
        if arr.ndim != 3:
            raise TensorFormatError("tensor data must be three-dimensional")
        if split is not None and split.dims != arr.shape:
            raise TensorFormatError(f"splitting {split.tolist()} does not match dims {arr.shape}")
        arr.flags.writeable = False
        self.field = field
        self.data = arr
        self.split = split

    # -- construction --------------------------------------------------------

    @classmethod
    def zeros(cls, field: Field, dims: Sequence[int], split: Splitting | None = None) -> Tensor3:
        arr = np.empty(tuple(dims), dtype=object)
        arr[...] = field.zero
        return cls(field, arr, split, _trusted=True)

    @classmethod
    def from_entries(cls, field: Field, dims: Sequence[int], entries: Iterable, split=None) -> Tensor3:
        arr = np.empty(tuple(dims), dtype=object)
        arr[...] = field.zero
        for i, j, k, val in entries:
            arr[i, j, k] = field.add(arr[i, j, k], field(val))
        return cls(field, arr, split, _trusted=True)

    @classmethod
    def from_simple(cls, field: Field, dims: Sequence[int], terms: Iterable) -> Tensor3:
        arr = np.empty(tuple(dims), dtype=object)
        arr[...] = field.zero
        for t in terms:
            if not isinstance(t, SimpleTensor):
                t = SimpleTensor(*(tuple(field(x) for x in vec) for vec in t))
            arr = field.reduce_array(arr + t.dense(field))
        return cls(field, arr, _trusted=True)

    @classmethod
    def from_slices(cls, field: Field, slices: Sequence[Matrix], shape: tuple[int, int] | None = None) -> Tensor3:
        """Stack matrices as the A-slices of a tensor."""
        if not slices:
            b, c = shape if shape else (0, 0)
            return cls.zeros(field, (0, b, c))
        return cls(field, np.stack([s.data for s in slices]).astype(object), _trusted=True)

    @classmethod
    def random(cls, field: Field, dims: Sequence[int], rng: random.Random, bound: int = 5) -> Tensor3:
        a, b, c = dims
        return cls(field, [[[field.random(rng, bound) for _ in range(c)] for _ in range(b)] for _ in range(a)])

    @classmethod
    def random_rank(cls, field: Field, dims: Sequence[int], r: int, rng: random.Random, bound: int = 3) -> Tensor3:
        """Sum of ``r`` random simple tensors (rank at most ``r``)."""
        terms = []
        for _ in range(r):
            terms.append(tuple(tuple(_random_nonzero_vector(field, n, rng, bound)) for n in dims))
        return cls.from_simple(field, dims, terms)

    # -- protocol ---------------------------------------------------------

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor3):
            return NotImplemented
        return self.field == other.field and self.dims == other.dims and bool(np.all(self.data == other.data))

    def same_entries(self, other: Tensor3) -> bool:
        return self == other

    def __hash__(self):
        return hash((self.field, self.dims, tuple(self.data.reshape(-1))))

    def __repr__(self) -> str:
        nz = sum(1 for x in self.data.reshape(-1) if x != 0)
        return f"Tensor3({self.field.name}, dims={self.dims}, nonzeros={nz})"

    def __add__(self, other: Tensor3) -> Tensor3:
        return Tensor3(self.field, self.field.reduce_array(self.data + other.data), _trusted=True)

    def __sub__(self, other: Tensor3) -> Tensor3:
        return Tensor3(self.field, self.field.reduce_array(self.data - other.data), _trusted=True)

    def scale(self, s) -> Tensor3:
        return Tensor3(self.field, self.field.reduce_array(self.data * self.field(s)), self.split, _trusted=True)

    def is_zero(self) -> bool:
        return not any(x != 0 for x in self.data.reshape(-1))

    def entries(self) -> Iterator[tuple[int, int, int, object]]:
        for idx in zip(*np.nonzero(self.data != 0)):
            i, j, k = (int(t) for t in idx)
            yield i, j, k, self.data[i, j, k]

    def with_split(self, split: Splitting | None) -> Tensor3:
        return Tensor3(self.field, self.data.copy(), split, _trusted=True)

    # -- slices and flattenings --------------------------------------------

    def slices(self, factor: str | int = "A") -> list[Matrix]:
        ax = _axis(factor)
        return [Matrix(self.field, np.take(self.data, i, axis=ax).copy(), _trusted=True)
                for i in range(self.dims[ax])]

    def flattening(self, factor: str | int = "A") -> Matrix:
        """Matrix of the map ``X* -> (other two factors)``; rows are slices."""
        ax = _axis(factor)
        arr = np.moveaxis(self.data, ax, 0)
        n = arr.shape[0]
        return Matrix(self.field, arr.reshape(n, arr.shape[1] * arr.shape[2]).copy(), _trusted=True)

    def flattening_ranks(self) -> tuple[int, int, int]:
        return tuple(self.flattening(ax).rank() for ax in range(3))

    def contract(self, alpha: Sequence, factor: str | int = "A") -> Matrix:
        """``p(alpha)`` for a functional on the chosen factor."""
        ax = _axis(factor)
        if len(alpha) != self.dims[ax]:
            raise ValueError("functional length does not match factor dimension")
        alpha = self.field.array(list(alpha))
        out = np.tensordot(alpha, self.data, axes=([0], [ax]))
        return Matrix(self.field, self.field.reduce_array(out).astype(object), _trusted=True)

    # -- basis changes ------------------------------------------------------

    def permute(self, perm: Sequence[int]) -> Tensor3:
        """Reorder factors: factor ``i`` of the result is factor ``perm[i]`` here."""
        perm = tuple(perm)
        split = self.split.permute(perm) if self.split else None
        return Tensor3(self.field, np.transpose(self.data, perm).copy(), split, _trusted=True)

    def transform(self, Ma: Matrix | None = None, Mb: Matrix | None = None, Mc: Matrix | None = None) -> Tensor3:
        """Apply linear maps to the three factors (``None`` means identity)."""
        arr = self.data
        for ax, M in enumerate((Ma, Mb, Mc)):
            if M is not None:
                if M.cols != arr.shape[ax]:
                    raise ValueError("map does not match factor dimension")
                arr = _mode_product(arr, M, ax)
        return Tensor3(self.field, self.field.reduce_array(arr).astype(object), _trusted=True)

    def part(self, which: int) -> Tensor3:
        """The diagonal block ``p'`` (which=0) or ``p''`` (which=1) of a split tensor."""
        if self.split is None:
            raise ValueError("tensor carries no splitting")
        sl = []
        for lo, hi in self.split.parts:
            sl.append(slice(0, lo) if which == 0 else slice(lo, lo + hi))
        return Tensor3(self.field, self.data[tuple(sl)].copy(), _trusted=True)

    def is_block_diagonal(self) -> bool:
        if self.split is None:
            return False
        rebuilt = direct_sum(self.part(0), self.part(1))
        return bool(np.all(rebuilt.data == self.data))


def _random_nonzero_vector(field: Field, n: int, rng: random.Random, bound: int) -> list:
    while True:
        v = [field.random(rng, bound) for _ in range(n)]
        if any(x != 0 for x in v):
            return v


# ---------------------------------------------------------------------------
# matrix subspaces
# ---------------------------------------------------------------------------


class MatrixSubspace:
    """Subspace of ``b x c`` matrices given by an independent basis."""

    __slots__ = ("field", "shape", "basis")

    def __init__(self, field: Field, shape: tuple[int, int], basis: Sequence[Matrix], *, check: bool = True):
        basis = tuple(basis)
        for m in basis:
            if m.shape != tuple(shape):
                raise ValueError("basis matrix has wrong shape")
        if check and basis:
            rows = [m.flat() for m in basis]
            if Matrix(field, rows).rank() != len(basis):
                raise ValueError("basis matrices are linearly dependent")
        self.field = field
        self.shape = tuple(shape)
        self.basis = basis

    @classmethod
    def span(cls, field: Field, shape: tuple[int, int], mats: Iterable[Matrix]) -> MatrixSubspace:
        b, c = shape
        vecs = row_basis([m.flat() for m in mats], field)
        return cls(field, shape, [Matrix.from_flat(field, b, c, v) for v in vecs], check=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def vectors(self) -> list[list]:
        return [m.flat() for m in self.basis]

    def contains(self, m: Matrix) -> bool:
        return span_contains(self.vectors(), m.flat(), self.field)

    def contains_space(self, other: MatrixSubspace) -> bool:
        return all(self.contains(m) for m in other.basis)

    def __add__(self, other: MatrixSubspace) -> MatrixSubspace:
        return MatrixSubspace.span(self.field, self.shape, self.basis + other.basis)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixSubspace):
            return NotImplemented
        return self.shape == other.shape and self.dim == other.dim and self.contains_space(other)

    def __repr__(self) -> str:
        return f"MatrixSubspace({self.field.name}, shape={self.shape}, dim={self.dim})"

    def tensor(self) -> Tensor3:
        """A tensor whose A-slices are the basis, so its A-slice space is this space."""
        return Tensor3.from_slices(self.field, list(self.basis), self.shape)

    def transpose(self) -> MatrixSubspace:
        return MatrixSubspace(self.field, self.shape[::-1], [m.T for m in self.basis], check=False)

    def transform(self, L: Matrix, R: Matrix) -> MatrixSubspace:
        """Image under ``m -> L m R^T``."""
        return MatrixSubspace.span(self.field, (L.rows, R.rows), [L @ m @ R.T for m in self.basis])

    def elements(self) -> Iterator[Matrix]:
        """Projective representatives (first nonzero coefficient 1); finite fields only."""
        b, c = self.shape
        for coeffs in projective_points(self.field, self.dim):
            flat = [self.field.zero] * (b * c)
            for co, m in zip(coeffs, self.basis):
                if co:
                    flat = [self.field.add(x, self.field.mul(co, y)) for x, y in zip(flat, m.flat())]
            yield Matrix.from_flat(self.field, b, c, flat)


def projective_points(field: Field, n: int) -> Iterator[tuple[int, ...]]:
    """Vectors of GF(q)^n whose first nonzero coordinate is 1, in lexicographic order."""
    if not field.is_finite:
        raise ValueError("projective enumeration needs a finite field")
    q = field.p
    for lead in range(n):
        for tail in itertools.product(range(q), repeat=n - lead - 1):
            yield (0,) * lead + (1,) + tail


def rref_matrices(field: Field, k: int, n: int) -> Iterator[list[list[int]]]:
    """All reduced row echelon ``k x n`` matrices of rank ``k`` over GF(q).

    These are in bijection with the ``k``-dimensional subspaces of GF(q)^n.
    """
    if not field.is_finite:
        raise ValueError("subspace enumeration needs a finite field")
    q = field.p
    for piv in itertools.combinations(range(n), k):
        free = [(r, j) for r in range(k) for j in range(piv[r] + 1, n) if j not in piv]
        for vals in itertools.product(range(q), repeat=len(free)):
            M = [[0] * n for _ in range(k)]
            for r, pc in enumerate(piv):
                M[r][pc] = 1
            for (r, j), v in zip(free, vals):
                M[r][j] = v
            yield M


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def slice_space(p: Tensor3, factor: str | int = "A") -> MatrixSubspace:
    ax = _axis(factor)
    others = [p.dims[i] for i in range(3) if i != ax]
    return MatrixSubspace.span(p.field, tuple(others), p.slices(ax))


def conciseness(p: Tensor3) -> tuple[tuple[bool, bool, bool], tuple[int, int, int]]:
    ranks = p.flattening_ranks()
    return tuple(r == n for r, n in zip(ranks, p.dims)), ranks


def _support_basis(p: Tensor3, ax: int) -> tuple[Matrix, Matrix]:
    """Embedding ``E`` (n x m) of the minimal subspace and a left inverse ``L``."""
    field = p.field
    n = p.dims[ax]
    flat = p.flattening(ax)
    cols = [list(col) for col in flat.data.T]
    basis = row_basis(cols, field) if cols else []
    m = len(basis)
    if m == n:
        I = Matrix.identity(field, n)
        return I, I
    E = Matrix(field, [[basis[j][i] for j in range(m)] for i in range(n)]) if m else Matrix.zeros(field, n, 0)
    pivots = [next(i for i, x in enumerate(v) if x != 0) for v in basis]
    L = Matrix(field, [[1 if i == pc else 0 for i in range(n)] for pc in pivots]) if m else Matrix.zeros(field, 0, n)
    return E, L


def concise_reduce(p: Tensor3) -> tuple[Tensor3, tuple[Matrix, Matrix, Matrix]]:
    """Concise tensor ``q`` and embeddings with ``p = (Ea ⊗ Eb ⊗ Ec) q``."""
    pairs = [_support_basis(p, ax) for ax in range(3)]
    q = p.transform(*(L for _, L in pairs))
    return q, tuple(E for E, _ in pairs)


def direct_sum(p1: Tensor3, p2: Tensor3) -> Tensor3:
    if p1.field != p2.field:
        raise ValueError("direct sum of tensors over different fields")
    dims = tuple(x + y for x, y in zip(p1.dims, p2.dims))
    arr = np.empty(dims, dtype=object)
    arr[...] = p1.field.zero
    a, b, c = p1.dims
    arr[:a, :b, :c] = p1.data
    arr[a:, b:, c:] = p2.data
    split = Splitting(*((x, y) for x, y in zip(p1.dims, p2.dims)))
    return Tensor3(p1.field, arr, split, _trusted=True)


def mm_tensor(i: int, j: int, k: int, field: Field | None = None) -> Tensor3:
    """Structure tensor of ``(M, N) -> MN`` for ``i x j`` times ``j x k`` matrices."""
    if min(i, j, k) < 1:
        raise ValueError("matrix multiplication sizes must be positive")
    field = field or Field()
    entries = []
    for x in range(i):
        for y in range(j):
            for z in range(k):
                entries.append((x * j + y, y * k + z, x * k + z, 1))
    return Tensor3.from_entries(field, (i * j, j * k, i * k), entries)


def diag_tensor(n: int, field: Field | None = None) -> Tensor3:
    field = field or Field()
    return Tensor3.from_entries(field, (n, n, n), [(i, i, i, 1) for i in range(n)])


def w_state(field: Field | None = None) -> Tensor3:
    """``x⊗x⊗y + x⊗y⊗x + y⊗x⊗x``, rank 3 and border rank 2."""
    field = field or Field()
    return Tensor3.from_entries(field, (2, 2, 2), [(0, 0, 1, 1), (0, 1, 0, 1), (1, 0, 0, 1)])


# -- hook shape -------------------------------------------------------------


def _quotient_maps(field: Field, b: int, e: int, candidates) -> Iterator[Matrix]:
    """Maps ``P: B -> B/E`` over e-dimensional ``E``; coordinate subspaces off finite fields."""
    k = b - e
    if candidates is not None:
        for E in candidates:
            E = [list(v) for v in E]
            ker = Matrix(field, E).nullspace() if E else [[1 if i == j else 0 for i in range(b)] for j in range(b)]
            # rows of P span the annihilator of E
            yield Matrix(field, ker) if ker else Matrix.zeros(field, 0, b)
        return
    if field.is_finite:
        for M in rref_matrices(field, k, b):
            yield Matrix(field, M)
    else:
        for keep in itertools.combinations(range(b), k):
            yield Matrix(field, [[1 if i == j else 0 for i in range(b)] for j in keep])


def min_hook_f(W: MatrixSubspace, e: int, candidates=None) -> int:
    """Least ``f`` with ``W ⊆ k^e ⊗ C + B ⊗ k^f`` for some subspaces.

    Over Q only coordinate subspaces of B are tried unless ``candidates``
    (bases of e-dimensional subspaces of B) are supplied.
    """
    b, c = W.shape
    if W.dim == 0 or e >= b:
        return 0
    if e < 0:
        raise ValueError("e must be nonnegative")
    best = c
    for P in _quotient_maps(W.field, b, e, candidates):
        rows = []
        for m in W.basis:
            rows.extend((P @ m).tolist())
        f = Matrix(W.field, rows).rank() if rows else 0
        if f < best:
            best = f
            if best == 0:
                break
    return best


def hook_profile(W: MatrixSubspace, e: int, f: int, candidates=None) -> bool:
    return min_hook_f(W, e, candidates) <= f


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


def tensor_to_json(p: Tensor3) -> dict:
    out = {"field": p.field.name, "dims": list(p.dims)}
    if p.split is not None:
        out["split"] = p.split.tolist()
    out["entries"] = [[i, j, k, p.field.format(v)] for i, j, k, v in p.entries()]
    return out


def tensor_from_json(obj: dict, field_override: Field | None = None) -> Tensor3:
    if not isinstance(obj, dict):
        raise TensorFormatError("tensor file must hold a JSON object")
    try:
        field = Field.parse(str(obj["field"]))
        dims = obj["dims"]
        entries = obj["entries"]
    except KeyError as exc:
        raise TensorFormatError(f"missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise TensorFormatError(str(exc)) from None
    if field_override is not None:
        field = field_override
    if not (isinstance(dims, list) and len(dims) == 3 and all(isinstance(d, int) and d >= 0 for d in dims)):
        raise TensorFormatError("dims must be three nonnegative integers")
    split = None
    if obj.get("split") is not None:
        try:
            split = Splitting.from_lists(obj["split"])
        except (TypeError, ValueError) as exc:
            raise TensorFormatError(f"bad split: {exc}") from None
        if split.dims != tuple(dims):
            raise TensorFormatError("split parts do not sum to dims")
    seen = set()
    rows = []
    for ent in entries:
        if not (isinstance(ent, list) and len(ent) == 4):
            raise TensorFormatError(f"malformed entry {ent!r}")
        i, j, k, val = ent
        idx = (i, j, k)
        if not all(isinstance(t, int) for t in idx):
            raise TensorFormatError(f"non-integer index in {ent!r}")
        if not all(0 <= t < d for t, d in zip(idx, dims)):
            raise TensorFormatError(f"index {idx} out of range for dims {dims}")
        if idx in seen:
            raise TensorFormatError(f"duplicate entry {idx}")
        seen.add(idx)
        try:
            rows.append((i, j, k, field.parse_scalar(str(val))))
        except (ValueError, ZeroDivisionError) as exc:
            raise TensorFormatError(str(exc)) from None
    return Tensor3.from_entries(field, dims, rows, split)


def read_tensor(path: str | Path, field_override: Field | None = None) -> Tensor3:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TensorFormatError(f"{path}: invalid JSON ({exc})") from None
    return tensor_from_json(obj, field_override)


def write_tensor(p: Tensor3, path: str | Path) -> None:
    Path(path).write_text(json.dumps(tensor_to_json(p)) + "\n", encoding="utf-8")
