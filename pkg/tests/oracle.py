"""Independent brute-force rank oracle for tiny tensors over GF(q).

Breadth-first search over the whole tensor space: level r holds every
tensor that is a sum of r simple tensors.  Tensors are encoded as
base-q integers so the search is a plain set computation.  It shares no
code with the library search.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def _encode(arr: np.ndarray, q: int) -> int:
    out = 0
    for x in reversed([int(v) % q for v in arr.reshape(-1)]):
        out = out * q + x
    return out


@lru_cache(maxsize=None)
def _simple_codes(q: int, dims: tuple[int, int, int]) -> np.ndarray:
    vecs = [[v for v in itertools.product(range(q), repeat=n) if any(v)] for n in dims]
    codes = set()
    for u in vecs[0]:
        for v in vecs[1]:
            for w in vecs[2]:
                t = np.einsum("i,j,k->ijk", np.array(u), np.array(v), np.array(w)) % q
                codes.add(_encode(t, q))
    return np.array(sorted(codes), dtype=np.int64)


def _digits(code: np.ndarray, q: int, size: int) -> np.ndarray:
    out = np.empty(code.shape + (size,), dtype=np.int64)
    c = code.copy()
    for i in range(size):
        out[..., i] = c % q
        c //= q
    return out


def _pack(d: np.ndarray, q: int) -> np.ndarray:
    pw = q ** np.arange(d.shape[-1], dtype=np.int64)
    return (d * pw).sum(axis=-1)


@lru_cache(maxsize=None)
def _levels(q: int, dims: tuple[int, int, int], max_r: int) -> tuple[np.ndarray, ...]:
    size = dims[0] * dims[1] * dims[2]
    if q ** size > 5_000_000:
        raise ValueError("oracle state space too large")
    simple = _digits(_simple_codes(q, dims), q, size)
    rank = np.full(q ** size, -1, dtype=np.int8)
    rank[0] = 0
    frontier = np.array([0], dtype=np.int64)
    for r in range(1, max_r + 1):
        fd = _digits(frontier, q, size)
        new = set()
        for s in simple:
            codes = _pack((fd + s) % q, q)
            new.update(codes[rank[codes] < 0].tolist())
        if not new:
            break
        frontier = np.array(sorted(new), dtype=np.int64)
        rank[frontier] = r
    return (rank,)


def brute_rank(data, q: int) -> int:
    arr = np.array(data, dtype=object)
    dims = tuple(arr.shape)
    arr = np.array([int(x) % q for x in arr.reshape(-1)], dtype=np.int64).reshape(dims)
    (rank,) = _levels(q, dims, dims[0] * dims[1] * dims[2])
    r = int(rank[_encode(arr, q)])
    assert r >= 0
    return r


# ---------------------------------------------------------------------------
# minimal decompositions of a matrix space, by plain enumeration
# ---------------------------------------------------------------------------


def rank_mod(rows, q: int) -> int:
    """Rank of an integer matrix modulo a prime by Gaussian elimination."""
    A = [[int(x) % q for x in r] for r in rows]
    rank, col = 0, 0
    ncols = len(A[0]) if A else 0
    while rank < len(A) and col < ncols:
        piv = next((i for i in range(rank, len(A)) if A[i][col]), None)
        if piv is None:
            col += 1
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][col], q - 2, q)
        A[rank] = [x * inv % q for x in A[rank]]
        for i in range(len(A)):
            if i != rank and A[i][col]:
                c = A[i][col]
                A[i] = [(x - c * y) % q for x, y in zip(A[i], A[rank])]
        rank += 1
        col += 1
    return rank


def rank_one_flats(b: int, c: int, q: int) -> list[tuple[int, ...]]:
    """One representative per projective class of rank-one b x c matrices."""
    def proj(n):
        for v in itertools.product(range(q), repeat=n):
            nz = [x for x in v if x]
            if nz and nz[0] == 1:
                yield v
    return [tuple(x * y % q for x in u for y in w) for u in proj(b) for w in proj(c)]


def minimal_spaces(W_flat: list, shape: tuple[int, int], q: int, r: int) -> list[list]:
    """All spaces of dimension r containing W and spanned by rank-one matrices.

    Returned as row-reduced canonical bases (tuples), deduplicated.
    """
    b, c = shape
    ones = rank_one_flats(b, c, q)
    d = rank_mod(W_flat, q) if W_flat else 0
    k = r - d
    seen = {}
    for combo in itertools.combinations(range(len(ones)), k):
        rows = list(W_flat) + [ones[i] for i in combo]
        if rank_mod(rows, q) != r:
            continue
        key = _canonical(rows, q)
        if key in seen:
            continue
        inside = [o for o in ones if rank_mod(list(key) + [o], q) == r]
        if rank_mod(inside, q) == r:
            seen[key] = True
    return [list(k) for k in seen]


def _canonical(rows, q: int) -> tuple:
    A = [[int(x) % q for x in r] for r in rows]
    out, col, ncols = [], 0, len(A[0])
    while A and col < ncols:
        piv = next((i for i in range(len(A)) if A[i][col]), None)
        if piv is None:
            col += 1
            continue
        row = A.pop(piv)
        inv = pow(row[col], q - 2, q)
        row = [x * inv % q for x in row]
        A = [[(x - r[col] * y) % q for x, y in zip(r, row)] for r in A]
        out = [[(x - o[col] * y) % q for x, y in zip(o, row)] for o in out]
        out.append(row)
        A = [r for r in A if any(r)]
        col += 1
    return tuple(tuple(r) for r in out)
