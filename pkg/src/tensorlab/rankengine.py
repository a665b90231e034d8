"""Tensor rank: exact search over finite fields, bounds over Q, substitution.

The finite-field oracle rests on a completion criterion.  For a slice
space ``W`` of dimension ``n``, ``R(W) <= n + k`` holds exactly when there
are ``k`` rank-one matrices ``U`` such that ``W + <U>`` is linearly spanned
by the rank-one matrices it contains.  (Take a minimal decomposition and
extend a basis of ``W`` by some of its terms; conversely pick a rank-one
basis of the completed space.)  Checking that criterion needs only the
points of ``W + <U>`` that are rank one, and those are found by projecting
every rank-one candidate to the quotient by ``W + <U>``.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .exactalg import Field, Matrix, solve_combination
from .tensor3 import (
    MatrixSubspace,
    SimpleTensor,
    Splitting,
    Tensor3,
    concise_reduce,
    direct_sum,
    projective_points,
    rref_matrices,
    slice_space,
)

__all__ = [
    "RankCertificate",
    "RankResult",
    "SubstitutionStep",
    "SubstitutionCheck",
    "HookChain",
    "AdditivityReport",
    "rank_one_candidates",
    "rank_exact_ff",
    "rank_of_space",
    "tensor_rank",
    "rank_bounds",
    "rank_lower_bound",
    "rank_upper_witness",
    "verify_witness",
    "substitution_step",
    "verify_substitution",
    "find_rank_one_in_space",
    "find_hook",
    "hook_additivity_prover",
    "additivity_check",
    "clear_cache",
]


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class RankCertificate:
    """``kind`` is exact, lower or upper; ``value`` the certified number.

    For a lower certificate produced by an exhausted search with a budget,
    ``value`` is ``budget + 1`` (the rank is strictly above the budget).
    """

    kind: str
    value: int
    method: str
    witness: list[SimpleTensor] | None = None
    matrices: list[Matrix] | None = None
    lower_method: str | None = None
    field: Field | None = None
    searched_depth: int | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "value": self.value, "method": self.method}
        if self.lower_method:
            out["lower_method"] = self.lower_method
        if self.searched_depth is not None:
            out["exhausted_up_to"] = self.searched_depth
        if self.witness is not None and self.field is not None:
            out["witness"] = [t.to_json(self.field) for t in self.witness]
        elif self.matrices is not None and self.field is not None:
            out["witness"] = [
                {"u": [], "v": [self.field.format(x) for x in v], "w": [self.field.format(x) for x in w]}
                for v, w in (rank_one_factors(m) for m in self.matrices)
            ]
        return out


@dataclass
class RankResult:
    """Lower and upper certificates for one tensor (equal values mean exact)."""

    lower: RankCertificate
    upper: RankCertificate | None

    @property
    def exact(self) -> bool:
        return self.upper is not None and self.lower.value == self.upper.value

    @property
    def value(self) -> int | None:
        return self.lower.value if self.exact else None

    @property
    def interval(self) -> tuple[int, int | None]:
        return self.lower.value, (self.upper.value if self.upper else None)

    def to_json(self) -> dict:
        out = {"exact": self.exact, "interval": list(self.interval), "lower": self.lower.to_json()}
        if self.upper is not None:
            out["upper"] = self.upper.to_json()
        return out


def rank_one_factors(m: Matrix) -> tuple[list, list]:
    """``(v, w)`` with ``m = v w^T``; raises unless ``m`` has rank one."""
    if m.rank() != 1:
        raise ValueError("matrix is not rank one")
    f = m.field
    i = next(i for i in range(m.rows) if any(x != 0 for x in m.data[i]))
    w = list(m.data[i])
    j = next(j for j, x in enumerate(w) if x != 0)
    v = [f.div(m.data[r, j], w[j]) for r in range(m.rows)]
    return v, w


# ---------------------------------------------------------------------------
# modular linear algebra on int64 arrays
# ---------------------------------------------------------------------------


def _inv_table(q: int) -> np.ndarray:
    tab = np.zeros(q, dtype=np.int64)
    for x in range(1, q):
        tab[x] = pow(x, -1, q)
    return tab


def _rref_mod(A: np.ndarray, q: int, inv: np.ndarray) -> tuple[np.ndarray, list[int]]:
    A = np.array(A, dtype=np.int64) % q
    rows, cols = A.shape
    r = 0
    piv = []
    for col in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, col])
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            A[[r, k]] = A[[k, r]]
        A[r] = A[r] * inv[A[r, col]] % q
        f = A[:, col].copy()
        f[r] = 0
        if f.any():
            A = (A - np.outer(f, A[r])) % q
        piv.append(col)
        r += 1
    return A[:r], piv


def _rank_mod(A: np.ndarray, q: int, inv: np.ndarray) -> int:
    if A.size == 0:
        return 0
    return len(_rref_mod(A, q, inv)[1])


def _annihilator(V: np.ndarray, m: int, q: int, inv: np.ndarray) -> np.ndarray:
    """Columns spanning ``{y : V y = 0}``; ``x`` lies in rowspan(V) iff ``x Y = 0``."""
    if V.shape[0] == 0:
        return np.eye(m, dtype=np.int64)
    R, piv = _rref_mod(V, q, inv)
    free = [j for j in range(m) if j not in piv]
    Y = np.zeros((m, len(free)), dtype=np.int64)
    for t, fcol in enumerate(free):
        Y[fcol, t] = 1
        for row, pc in enumerate(piv):
            Y[pc, t] = (-R[row, fcol]) % q
    return Y


def _normalize_rows(X: np.ndarray, q: int, inv: np.ndarray) -> np.ndarray:
    """Scale nonzero rows so their first nonzero entry is 1."""
    nz = X != 0
    lead = np.argmax(nz, axis=1)
    lv = X[np.arange(X.shape[0]), lead]
    return X * inv[lv][:, None] % q


# ---------------------------------------------------------------------------
# candidates
# ---------------------------------------------------------------------------

_CAND_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def rank_one_candidates(field: Field, b: int, c: int) -> np.ndarray:
    """Projective rank-one ``b x c`` matrices, flattened, lexicographically sorted.

    There are ``(q^b-1)(q^c-1)/(q-1)^2`` of them; each is ``v w^T`` with both
    ``v`` and ``w`` normalized to a leading 1.
    """
    if not field.is_finite:
        raise ValueError("rank-one enumeration needs a finite field")
    key = (field.p, b, c)
    if key not in _CAND_CACHE:
        vs = np.array(list(projective_points(field, b)), dtype=np.int64).reshape(-1, b)
        ws = np.array(list(projective_points(field, c)), dtype=np.int64).reshape(-1, c)
        mats = (vs[:, None, :, None] * ws[None, :, None, :]) % field.p
        flat = mats.reshape(-1, b * c)
        order = np.lexsort(flat.T[::-1])
        arr = flat[order]
        arr.flags.writeable = False
        _CAND_CACHE[key] = arr
    return _CAND_CACHE[key]


# ---------------------------------------------------------------------------
# completion search on a slice space
# ---------------------------------------------------------------------------


class _SpaceSearch:
    """Search state for one slice space over GF(q)."""

    def __init__(self, field: Field, shape: tuple[int, int], basis: np.ndarray):
        self.field = field
        self.q = field.p
        self.inv = _inv_table(self.q)
        self.b, self.c = shape
        self.m = self.b * self.c
        self.cand = rank_one_candidates(field, self.b, self.c)
        self.W = np.array(basis, dtype=np.int64).reshape(-1, self.m) % self.q
        self.n = self.W.shape[0]

    # rank-one elements of V + <t> for every t, grouped by the space they generate
    def _complete_once(self, V: np.ndarray) -> np.ndarray | None:
        q = self.q
        d = V.shape[0]
        Y = _annihilator(V, self.m, q, self.inv)
        if Y.shape[1] == 0:
            # V is the whole ambient space; spanned by unit matrices
            return self._rank_one_basis(np.arange(len(self.cand)), d)
        img = self.cand @ Y % q
        zero = ~img.any(axis=1)
        inside = np.flatnonzero(zero)
        base_rank = _rank_mod(self.cand[inside], q, self.inv) if inside.size else 0
        if base_rank == d:
            return self._rank_one_basis(inside, d)
        need = d + 1 - base_rank
        outside = np.flatnonzero(~zero)
        if outside.size == 0:
            return None
        norm = _normalize_rows(img[outside], q, self.inv)
        _, inverse, counts = np.unique(norm, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        good = np.flatnonzero(counts >= need)
        if good.size == 0:
            return None
        # classes in order of their smallest member for determinism
        first = {}
        for pos, cls in enumerate(inverse):
            if counts[cls] >= need and cls not in first:
                first[cls] = pos
        base = self.cand[inside]
        for cls in sorted(first, key=first.get):
            members = outside[inverse == cls]
            rows = np.vstack([base, self.cand[members]]) if base.size else self.cand[members]
            if _rank_mod(rows, q, self.inv) == d + 1:
                return self._rank_one_basis(np.concatenate([inside, members]), d + 1)
        return None

    def _rank_one_basis(self, idx: np.ndarray, target: int) -> np.ndarray:
        chosen: list[int] = []
        rows = np.zeros((0, self.m), dtype=np.int64)
        for i in sorted(int(t) for t in idx):
            trial = np.vstack([rows, self.cand[i:i + 1]])
            if _rank_mod(trial, self.q, self.inv) > rows.shape[0]:
                rows = trial
                chosen.append(i)
                if len(chosen) == target:
                    break
        return np.array(chosen, dtype=np.int64)

    def spanned_by_rank_ones(self) -> np.ndarray | None:
        """Rank-one basis of W if W is spanned by its rank-one elements."""
        if self.n == 0:
            return np.zeros(0, dtype=np.int64)
        Y = _annihilator(self.W, self.m, self.q, self.inv)
        img = self.cand @ Y % self.q if Y.shape[1] else np.zeros((len(self.cand), 0), dtype=np.int64)
        inside = np.flatnonzero(~img.any(axis=1))
        if inside.size and _rank_mod(self.cand[inside], self.q, self.inv) == self.n:
            return self._rank_one_basis(inside, self.n)
        return None

    def _branches(self, k: int) -> Iterator[tuple[int, ...]]:
        """Ascending (k-1)-subsets of candidates, each pick independent of W and earlier picks."""
        if k - 1 == 0:
            yield ()
            return
        q = self.q
        N = len(self.cand)

        def rec(start: int, picks: tuple[int, ...], V: np.ndarray):
            if len(picks) == k - 1:
                yield picks
                return
            Y = _annihilator(V, self.m, q, self.inv)
            if Y.shape[1] == 0:
                return
            out = (self.cand @ Y % q).any(axis=1)
            remaining = k - 1 - len(picks)
            for i in range(start, N - remaining + 1):
                if out[i]:
                    yield from rec(i + 1, picks + (i,), np.vstack([V, self.cand[i:i + 1]]))

        yield from rec(0, (), self.W)

    def _try_branch(self, picks: tuple[int, ...]) -> np.ndarray | None:
        V = np.vstack([self.W] + [self.cand[i:i + 1] for i in picks]) if picks else self.W
        return self._complete_once(V)

    def search_depth(self, k: int, threads: int = 1) -> np.ndarray | None:
        """Rank-one basis of a completed space of dim ``n + k``, or None if none exists."""
        if k == 0:
            return self.spanned_by_rank_ones()
        if threads <= 1 or k == 1:
            for picks in self._branches(k):
                res = self._try_branch(picks)
                if res is not None:
                    return res
            return None
        # split by branch blocks; keep the first success in branch order
        branches = self._branches(k)
        chunk = 64 * threads
        with ThreadPoolExecutor(max_workers=threads) as pool:
            while True:
                block = list(itertools.islice(branches, chunk))
                if not block:
                    return None
                for res in pool.map(self._try_branch, block):
                    if res is not None:
                        return res

    def search_dfs(self, r: int) -> np.ndarray | None:
        """Plain pruned DFS: ascending rank-one picks whose span must contain W.

        Prunes a branch when the image of W modulo the current span has
        dimension larger than the number of picks still available, and
        once there is no slack left restricts picks to the span of U and W.
        """
        q = self.q
        N = len(self.cand)
        W = self.W

        def rec(start: int, picks: list[int], U: np.ndarray) -> list[int] | None:
            Y = _annihilator(U, self.m, q, self.inv)
            if Y.shape[1] == 0 or W.shape[0] == 0:
                return picks
            Wimg = W @ Y % q
            Wred, _ = _rref_mod(Wimg, q, self.inv)
            dim_left = Wred.shape[0]
            if dim_left == 0:
                return picks
            left = r - len(picks)
            if dim_left > left:
                return None
            img = self.cand[start:] @ Y % q
            ok = img.any(axis=1)
            if left == dim_left:
                # no slack: every remaining pick must lie in U + W
                Z = _annihilator(Wred, Y.shape[1], q, self.inv)
                if Z.shape[1]:
                    ok &= ~(img @ Z % q).any(axis=1)
                if left == 1:
                    hit = np.flatnonzero(ok)
                    return picks + [start + int(hit[0])] if hit.size else None
            for t in np.flatnonzero(ok):
                i = start + int(t)
                if N - i < left:
                    break
                got = rec(i + 1, picks + [i], np.vstack([U, self.cand[i:i + 1]]))
                if got is not None:
                    return got
            return None

        got = rec(0, [], np.zeros((0, self.m), dtype=np.int64))
        return None if got is None else np.array(got, dtype=np.int64)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TENSORLAB_THREADS", "1")))
    except ValueError:
        return 1


def rank_of_space(W: MatrixSubspace, budget: int | None = None, *, start: int | None = None,
                  known_upper: int | None = None, strategy: str = "completion",
                  threads: int | None = None) -> RankCertificate:
    """Exact ``R(W)`` over GF(q) or a lower certificate ``> budget``.

    ``known_upper`` lets callers skip the last level when a witness of
    that length already exists elsewhere (the certificate then carries no
    matrices and ``method`` is ``search+known-upper``).
    """
    field = W.field
    if not field.is_finite:
        raise ValueError("exact rank search needs a finite field")
    b, c = W.shape
    n = W.dim
    if budget is None:
        budget = b * c
    if budget < n:
        raise ValueError("budget must be at least dim W")
    threads = threads or _threads()
    S = _SpaceSearch(field, W.shape, W.vectors())
    r = max(n, start or n)
    lower_method = "slice-dim" if r == n else "flattening"
    exhausted = r - 1
    while r <= budget:
        if known_upper is not None and r >= known_upper:
            return RankCertificate("exact", known_upper, "search+known-upper", field=field,
                                   lower_method=lower_method, searched_depth=exhausted)
        if strategy == "dfs":
            idx = S.search_dfs(r)
        else:
            idx = S.search_depth(r - n, threads)
        if idx is not None:
            mats = [Matrix.from_flat(field, b, c, S.cand[i].tolist()) for i in idx]
            return RankCertificate("exact", len(mats), "search", matrices=mats, field=field,
                                   lower_method=lower_method, searched_depth=exhausted)
        exhausted = r
        lower_method = "search-exhausted"
        r += 1
    return RankCertificate("lower", budget + 1, "search", field=field,
                           lower_method="search-exhausted", searched_depth=exhausted)


def _choose_factor(q: Tensor3) -> int:
    """Slicing factor: smallest candidate pool, then largest slice space."""
    best = None
    for ax in range(3):
        others = [q.dims[i] for i in range(3) if i != ax]
        if q.field.is_finite:
            p = q.field.p
            N = ((p ** others[0] - 1) // (p - 1)) * ((p ** others[1] - 1) // (p - 1))
        else:
            N = others[0] * others[1]
        key = (N, -q.dims[ax], ax)
        if best is None or key < best:
            best = key
    return best[2]


def _space_witness_to_tensor(q: Tensor3, ax: int, mats: Sequence[Matrix]) -> list[SimpleTensor]:
    """Turn rank-one matrices spanning the ax-slices into simple tensors of ``q``."""
    f = q.field
    vecs = [m.flat() for m in mats]
    coeffs = []
    for s in q.slices(ax):
        lam = solve_combination(vecs, s.flat(), f)
        if lam is None:
            raise AssertionError("witness does not span the slice space")
        coeffs.append(lam)
    terms = []
    for l, m in enumerate(mats):
        a = [coeffs[i][l] for i in range(q.dims[ax])]
        if not any(x != 0 for x in a):
            continue
        v, w = rank_one_factors(m)
        parts = [v, w]
        parts.insert(ax, a)
        terms.append(SimpleTensor(*(tuple(x) for x in parts)))
    return terms


def _embed(terms: list[SimpleTensor], maps: tuple[Matrix, Matrix, Matrix]) -> list[SimpleTensor]:
    out = []
    for t in terms:
        vecs = []
        for vec, E in zip((t.u, t.v, t.w), maps):
            col = Matrix(E.field, [[x] for x in vec]) if len(vec) else Matrix.zeros(E.field, 0, 1)
            vecs.append(tuple((E @ col).data[:, 0]))
        out.append(SimpleTensor(*vecs))
    return out


def verify_witness(p: Tensor3, terms: Sequence[SimpleTensor]) -> bool:
    return Tensor3.from_simple(p.field, p.dims, terms) == Tensor3(p.field, p.data.copy(), _trusted=True)


_RANK_CACHE: dict = {}


def clear_cache() -> None:
    _RANK_CACHE.clear()


def _key(p: Tensor3) -> tuple:
    return (p.field, p.dims, tuple(p.data.reshape(-1)))


def tensor_rank(p: Tensor3, budget: int | None = None, *, known_upper: tuple[int, list[SimpleTensor]] | None = None,
                strategy: str = "completion", threads: int | None = None) -> RankCertificate:
    """Exact rank of a tensor over GF(q) with a verified witness."""
    if not p.field.is_finite:
        raise ValueError("exact rank search needs a finite field")
    ck = (_key(p), budget, strategy)
    if known_upper is None and ck in _RANK_CACHE:
        return _RANK_CACHE[ck]
    q, maps = concise_reduce(p)
    if q.is_zero() or 0 in q.dims:
        cert = RankCertificate("exact", 0, "search", witness=[], field=p.field, lower_method="slice-dim",
                               searched_depth=-1)
        _RANK_CACHE[ck] = cert
        return cert
    ax = _choose_factor(q)
    W = slice_space(q, ax)
    lower = max(q.dims)
    if budget is None:
        budget = min(q.dims[0] * q.dims[1], q.dims[0] * q.dims[2], q.dims[1] * q.dims[2])
    ku = known_upper[0] if known_upper else None
    cert = rank_of_space(W, max(budget, W.dim), start=lower, known_upper=ku, strategy=strategy, threads=threads)
    if cert.kind == "lower" or cert.value > budget:
        cert = RankCertificate("lower", budget + 1, "search", field=p.field, lower_method="search-exhausted",
                               searched_depth=budget)
    elif cert.matrices is None:
        # the known upper witness is the answer
        cert.witness = list(known_upper[1])
        cert.method = "search"
        cert.lower_method = "search-exhausted" if cert.searched_depth >= lower else cert.lower_method
    else:
        terms = _embed(_space_witness_to_tensor(q, ax, cert.matrices), maps)
        cert = RankCertificate("exact", len(terms), "search", witness=terms, field=p.field,
                               lower_method=cert.lower_method, searched_depth=cert.searched_depth)
    if cert.witness is not None and not verify_witness(p, cert.witness):
        raise AssertionError("internal error: rank witness does not reproduce the tensor")
    if known_upper is None:
        if len(_RANK_CACHE) > 200000:
            _RANK_CACHE.clear()
        _RANK_CACHE[ck] = cert
    return cert


def rank_exact_ff(obj: Tensor3 | MatrixSubspace, budget: int | None = None, **kw) -> RankCertificate:
    """Exact rank of a tensor or matrix subspace over a finite field."""
    if isinstance(obj, MatrixSubspace):
        return rank_of_space(obj, budget, **kw)
    return tensor_rank(obj, budget, **kw)


# ---------------------------------------------------------------------------
# bounds valid over any field
# ---------------------------------------------------------------------------


def rank_lower_bound(p: Tensor3) -> RankCertificate:
    """Largest flattening rank."""
    ranks = p.flattening_ranks()
    return RankCertificate("lower", max(ranks) if ranks else 0, "flattening", field=p.field)


def _slice_factorization(p: Tensor3) -> list[SimpleTensor]:
    """Witness from a rank factorization of each basis slice, best factor."""
    q, maps = concise_reduce(p)
    best = None
    for ax in range(3):
        W = slice_space(q, ax)
        mats = []
        for m in W.basis:
            R, piv = m.rref()
            # m = C R with C the pivot columns of m
            for t, pc in enumerate(piv):
                col = [m.data[i, pc] for i in range(m.rows)]
                mats.append(Matrix.outer(q.field, col, R.data[t]))
        terms = _space_witness_to_tensor(q, ax, mats) if mats else []
        if best is None or len(terms) < len(best):
            best = terms
    return _embed(best or [], maps)


def _small_candidates(field: Field, b: int, c: int, limit: int) -> list[Matrix] | None:
    vals = (0, 1, -1)
    vs = [v for v in itertools.product(vals, repeat=b) if any(v) and next(x for x in v if x) == 1]
    ws = [w for w in itertools.product(vals, repeat=c) if any(w) and next(x for x in w if x) == 1]
    if len(vs) * len(ws) > limit:
        return None
    return [Matrix.outer(field, v, w) for v in vs for w in ws]


def rank_upper_witness(p: Tensor3, improve: bool = True, limit: int = 400, max_extra: int = 2) -> list[SimpleTensor]:
    """A verified decomposition; over Q it may be improved by completion
    with rank-one matrices whose factors have entries in {-1, 0, 1}."""
    best = _slice_factorization(p)
    if p.field.is_finite or not improve or p.is_zero():
        return best
    q, maps = concise_reduce(p)
    lower = max(q.dims)
    if len(best) <= lower:
        return best
    for ax in range(3):
        W = slice_space(q, ax)
        b, c = W.shape
        cands = _small_candidates(q.field, b, c, limit)
        if cands is None:
            continue
        flat = [m.flat() for m in cands]
        for k in range(max(0, lower - W.dim), min(max_extra, len(best) - 1 - W.dim) + 1):
            found = _rational_completion(W, flat, k)
            if found is not None:
                mats = [Matrix.from_flat(q.field, b, c, flat[i]) for i in found]
                terms = _embed(_space_witness_to_tensor(q, ax, mats), maps)
                if len(terms) < len(best):
                    best = terms
                break
    return best


def _rational_completion(W: MatrixSubspace, flat: list[list], k: int) -> list[int] | None:
    """Candidate indices forming a basis of some ``W + U`` with ``|U| = k``."""
    f = W.field
    N = len(flat)
    cand = np.array([[int(x) for x in v] for v in flat], dtype=object)
    for picks in itertools.combinations(range(N), k):
        V = W.vectors() + [flat[i] for i in picks]
        M = Matrix(f, V)
        d = M.rank()
        if d < len(V):
            continue
        Y = Matrix(f, V).nullspace()
        if Y:
            Ym = Matrix(f, [list(col) for col in zip(*Y)])
            img = cand.dot(Ym.data)
            inside = [i for i in range(N) if not any(x != 0 for x in img[i])]
        else:
            inside = list(range(N))
        if len(inside) < d:
            continue
        chosen: list[int] = []
        for i in inside:
            if Matrix(f, [flat[j] for j in chosen] + [flat[i]]).rank() > len(chosen):
                chosen.append(i)
                if len(chosen) == d:
                    return chosen
    return None


def rank_bounds(p: Tensor3, budget: int | None = None, *, improve: bool = True) -> RankResult:
    """Exact over finite fields (when the budget allows), an interval over Q."""
    low = rank_lower_bound(p)
    if p.field.is_finite:
        cert = tensor_rank(p, budget)
        if cert.kind == "exact":
            return RankResult(cert, cert)
        up = _slice_factorization(p)
        return RankResult(cert, RankCertificate("upper", len(up), "slice-factorization", witness=up, field=p.field))
    terms = rank_upper_witness(p, improve=improve)
    upper = RankCertificate("upper", len(terms), "witness", witness=terms, field=p.field)
    return RankResult(low, upper)


# ---------------------------------------------------------------------------
# substitution method
# ---------------------------------------------------------------------------


@dataclass
class SubstitutionStep:
    factor: int
    alpha: tuple
    point: tuple
    result: Tensor3


def _insert(vec: Sequence, mat: Matrix, ax: int) -> np.ndarray:
    """Tensor ``vec ⊗ mat`` with ``vec`` placed on axis ``ax``."""
    arr = np.multiply.outer(np.array(list(vec), dtype=object), mat.data)
    return np.moveaxis(arr, 0, ax)


def substitution_step(p: Tensor3, alpha: Sequence, a: Sequence, factor: int | str = 0) -> SubstitutionStep:
    """``p - a ⊗ p(alpha)`` on the chosen factor; requires ``alpha(a) = 1``."""
    from .tensor3 import _axis

    ax = _axis(factor)
    f = p.field
    alpha = [f(x) for x in alpha]
    a = [f(x) for x in a]
    pa = p.contract(alpha, ax)
    if pa.is_zero():
        raise ValueError("p(alpha) is zero")
    val = f.zero
    for x, y in zip(alpha, a):
        val = f.add(val, f.mul(x, y))
    if val != f.one:
        raise ValueError("point does not lie on the affine hyperplane alpha = 1")
    arr = f.reduce_array(p.data - _insert(a, pa, ax))
    return SubstitutionStep(ax, tuple(alpha), tuple(a), Tensor3(f, arr.astype(object), _trusted=True))


def _affine_hyperplane(field: Field, alpha: Sequence) -> Iterator[tuple]:
    n = len(alpha)
    j = next(i for i, x in enumerate(alpha) if x != 0)
    inv = field.inv(alpha[j])
    others = [i for i in range(n) if i != j]
    for vals in itertools.product(range(field.p), repeat=n - 1):
        a = [0] * n
        s = 0
        for i, v in zip(others, vals):
            a[i] = v
            s = s + alpha[i] * v
        a[j] = field.mul(field.sub(1, s), inv)
        yield tuple(a)


@dataclass
class SubstitutionCheck:
    rank: int
    slice_rank_one: bool
    ranks: dict
    exists_drop: bool
    never_drops_more_than_one: bool | None

    @property
    def ok(self) -> bool:
        return self.exists_drop and self.never_drops_more_than_one is not False


def verify_substitution(p: Tensor3, alpha: Sequence, factor: int | str = 0) -> SubstitutionCheck:
    """Exhaust the affine hyperplane ``alpha = 1`` with oracle ranks."""
    from .tensor3 import _axis

    ax = _axis(factor)
    f = p.field
    if not f.is_finite:
        raise ValueError("exhaustive substitution check needs a finite field")
    alpha = [f(x) for x in alpha]
    r = tensor_rank(p).value
    pa = p.contract(alpha, ax)
    rank_one = pa.rank() == 1
    ranks = {}
    for a in _affine_hyperplane(f, alpha):
        ranks[a] = tensor_rank(substitution_step(p, alpha, a, ax).result).value
    exists = min(ranks.values()) <= r - 1
    never = all(v >= r - 1 for v in ranks.values()) if rank_one else None
    return SubstitutionCheck(r, rank_one, ranks, exists, never)


# ---------------------------------------------------------------------------
# rank-one elements of a matrix space
# ---------------------------------------------------------------------------


def _rational_roots(coeffs: Sequence[Fraction]) -> list[Fraction] | None:
    """Roots in Q of c0 + c1 t + c2 t^2; None when the polynomial is zero."""
    c0, c1, c2 = (Fraction(x) for x in coeffs)
    if c2 == 0:
        if c1 == 0:
            return None if c0 == 0 else []
        return [-c0 / c1]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    n, d = disc.numerator, disc.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn != n or rd * rd != d:
        return []
    s = Fraction(rn, rd)
    return sorted({(-c1 + s) / (2 * c2), (-c1 - s) / (2 * c2)})


def find_rank_one_in_space(W: MatrixSubspace) -> Matrix | None:
    """A rank-one element of ``W``, or None when there is certifiably none.

    Finite fields: exhaustive over projective points.  Over Q: spaces of
    dimension at most 2, by solving the 2x2-minor quadratics exactly.
    """
    f = W.field
    if f.is_finite:
        for m in W.elements():
            if m.rank() == 1:
                return m
        return None
    if W.dim == 0:
        return None
    if W.dim > 2:
        raise ValueError("over Q only spaces of dimension <= 2 are supported")
    M1 = W.basis[0]
    if M1.rank() == 1:
        return M1
    if W.dim == 1:
        return None
    M2 = W.basis[1]
    b, c = W.shape
    # minors of t*M1 + M2 as quadratics in t
    polys = []
    for i, k in itertools.combinations(range(b), 2):
        for j, l in itertools.combinations(range(c), 2):
            def ent(r, s):
                return (M1.data[r, s], M2.data[r, s])  # t-coefficient, constant

            (a1, a0), (d1, d0) = ent(i, j), ent(k, l)
            (b1, b0), (c1_, c0) = ent(i, l), ent(k, j)
            polys.append((a0 * d0 - b0 * c0, a1 * d0 + a0 * d1 - b1 * c0 - b0 * c1_, a1 * d1 - b1 * c1_))
    roots = None
    for poly in polys:
        rs = _rational_roots(poly)
        if rs is not None:
            roots = rs
            break
    if roots is None:
        return M2  # every minor vanishes identically at all t, so M2 is rank one
    for t in roots:
        cand = M1.scale(t) + M2
        if cand.rank() == 1:
            return cand
    return None


# ---------------------------------------------------------------------------
# hook additivity via substitution chains
# ---------------------------------------------------------------------------


def find_hook(W: MatrixSubspace, e: int, f: int) -> tuple[list[list], list[list]] | None:
    """Bases of ``E ⊆ B`` (dim e) and ``F ⊆ C`` (dim <= f) with ``W ⊆ E⊗C + B⊗F``."""
    field = W.field
    b, c = W.shape
    if not field.is_finite:
        raise ValueError("hook search needs a finite field")
    if W.dim == 0:
        return [], []
    for P in rref_matrices(field, b - e, b) if e < b else [[]]:
        if e >= b:
            E = [[1 if i == j else 0 for i in range(b)] for j in range(b)]
            return E, []
        Pm = Matrix(field, P)
        rows = []
        for m in W.basis:
            rows.extend((Pm @ m).tolist())
        R, _ = Matrix(field, rows).rref()
        if R.rows <= f:
            E = Pm.nullspace()
            return E, R.tolist()
    return None


@dataclass
class ChainStep:
    factor: int
    functional: tuple
    point: tuple
    tensor: Tensor3
    witness_length: int
    rank_second: int


@dataclass
class HookChain:
    """Outcome of the constructive hook prover."""

    verdict: str  # "additive" or "failed"
    steps: list[ChainStep] = dc_field(default_factory=list)
    rank_first: int | None = None
    rank_second: int | None = None
    rank_sum: int | None = None
    reason: str = ""
    basis_change: tuple | None = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "chain_length": len(self.steps),
            "rank_first": self.rank_first,
            "rank_second": self.rank_second,
            "rank_sum": self.rank_sum,
            "steps": [{"factor": "ABC"[s.factor], "functional": [str(x) for x in s.functional],
                       "point": [str(x) for x in s.point], "witness_length": s.witness_length,
                       "rank_second": s.rank_second} for s in self.steps],
        }


def _block_change(field: Field, n1: int, basis2: list[list], n2: int) -> Matrix:
    """Matrix sending coordinates to a basis of the second block starting with ``basis2``."""
    from .exactalg import complete_basis

    full = complete_basis(basis2, n2, field)
    G = Matrix(field, [[full[j][i] for j in range(n2)] for i in range(n2)])  # columns = new basis
    Ginv = G.inverse()
    blocks = [[Matrix.identity(field, n1), Matrix.zeros(field, n1, n2)],
              [Matrix.zeros(field, n2, n1), Ginv]]
    return Matrix.block(field, blocks)


def _sigma_masks(split: Splitting, f: int, hook: tuple[int, int]) -> list[tuple[np.ndarray, tuple[int, ...]]]:
    """Support patterns of the invariant subspaces used by the chain, with allowed factors."""
    (a1, a2), (b1, b2), (c1, c2) = split.parts
    dims = (a1 + a2, b1 + b2, c1 + c2)
    A1, A2 = slice(0, a1), slice(a1, a1 + a2)
    B1, B2 = slice(0, b1), slice(b1, b1 + b2)
    C1 = slice(0, c1)
    x = slice(b1, b1 + min(1, b2))
    K = slice(c1, c1 + f)

    def mask():
        return np.zeros(dims, dtype=bool)

    s1 = mask()
    s1[A1, B1, C1] = True
    s1[A2, B2, K] = True
    s1[A2, x, :] = True
    out = [(s1, (2,))]
    if hook == (1, 1):
        s2 = mask()
        s2[A1, B1, C1] = True
        s2[A2, :, C1] = True
        s2[A2, :, K] = True
        out.append((s2, (1,)))
    else:
        s3 = mask()
        s3[A1, B1, C1] = True
        s3[:, :, K] = True
        s3[:, x, C1] = True
        out.append((s3, (0, 1)))
    return out


def _functional_ok(mask: np.ndarray, ax: int, gamma: np.ndarray, split: Splitting) -> bool:
    """Sigma(gamma) ⊗ X ⊆ Sigma, and Sigma(gamma) avoids the primed corner."""
    m = np.moveaxis(mask, ax, 2)
    sg = (m & (gamma != 0)[None, None, :]).any(axis=2)
    if not m[sg].all():
        return False
    parts = [split.parts[i] for i in range(3) if i != ax]
    return not sg[: parts[0][0], : parts[1][0]].any()


def _second_corner(t: Tensor3, split: Splitting) -> Tensor3:
    return Tensor3(t.field, t.data.copy(), split, _trusted=True).part(1)


def _first_corner(t: Tensor3, split: Splitting) -> Tensor3:
    return Tensor3(t.field, t.data.copy(), split, _trusted=True).part(0)


def hook_additivity_prover(p: Tensor3, hook: tuple[int, int] = (1, 1)) -> HookChain:
    """Build a substitution chain proving ``R(p) = R(p') + R(p'')``.

    Requires a finite field, a split direct sum ``p`` and a second slice
    space that is ``hook``-shaped.  Functionals are tried in lexicographic
    order; when none qualifies the verdict is ``failed`` (this says nothing
    about non-additivity).
    """
    hook = tuple(hook)
    if hook not in ((1, 1), (1, 2)):
        raise ValueError("hook must be (1, 1) or (1, 2)")
    f = p.field
    if not f.is_finite:
        raise ValueError("the chain prover needs a finite field")
    if p.split is None or not p.is_block_diagonal():
        raise ValueError("input must be a split direct sum")
    split = p.split
    p1, p2 = p.part(0), p.part(1)
    r1 = tensor_rank(p1).value
    if p2.is_zero():
        return HookChain("additive", [], r1, 0, r1, "second summand is zero")
    W2 = slice_space(p2, 0)
    hk = find_hook(W2, hook[0], hook[1])
    if hk is None:
        raise ValueError(f"second slice space is not {hook}-hook shaped")
    E, F = hk
    (a1, a2), (b1, b2), (c1, c2) = split.parts
    Mb = _block_change(f, b1, E, b2)
    Mc = _block_change(f, c1, F, c2)
    pt = p.transform(None, Mb, Mc).with_split(split)
    r2 = tensor_rank(p2).value
    known = _pad_terms(tensor_rank(p1).witness, split) + _shift_terms(tensor_rank(p2).witness, split)
    cert = tensor_rank(p, known_upper=(r1 + r2, known))
    rsum = cert.value
    # a minimal witness of the transformed tensor
    terms = _transform_terms(cert.witness, (None, Mb, Mc), f)
    masks = _sigma_masks(split, len(F) if F else 0, hook)
    if not masks[0][0][pt.data != 0].all():
        return HookChain("failed", [], r1, r2, rsum, "internal: start tensor outside the invariant subspace")
    cur = pt
    steps: list[ChainStep] = []
    cur_second_rank = r2
    while not _second_corner(cur, split).is_zero():
        step = None
        for mask, axes in masks:
            if not mask[cur.data != 0].all():
                continue
            for ax in axes:
                lo, n2 = split.parts[ax]
                for g2 in projective_points(f, n2):
                    gamma = np.array([0] * lo + list(g2), dtype=object)
                    if not _functional_ok(mask, ax, gamma, split):
                        continue
                    sec = _second_corner(cur, split).contract(list(g2), ax)
                    if sec.rank() != 1:
                        continue
                    step = (ax, gamma)
                    break
                if step:
                    break
            if step:
                break
        if step is None:
            return HookChain("failed", steps, r1, r2, rsum, "no functional satisfies the step conditions")
        ax, gamma = step
        # pick the point from a witness term with gamma(w) != 0; kills that term
        idx = None
        for l, t in enumerate(terms):
            vec = (t.u, t.v, t.w)[ax]
            if sum(f.mul(g, x) for g, x in zip(gamma, vec)) % f.p:
                idx = l
                break
        if idx is None:
            return HookChain("failed", steps, r1, r2, rsum, "witness has no term hit by the functional")
        vec = (terms[idx].u, terms[idx].v, terms[idx].w)[ax]
        s = sum(f.mul(g, x) for g, x in zip(gamma, vec)) % f.p
        point = tuple(f.div(x, s) for x in vec)
        nxt = substitution_step(cur, gamma, point, ax).result
        new_terms = []
        for l, t in enumerate(terms):
            if l == idx:
                continue
            parts = [list(t.u), list(t.v), list(t.w)]
            gv = sum(f.mul(g, x) for g, x in zip(gamma, parts[ax])) % f.p
            parts[ax] = [f.sub(x, f.mul(gv, y)) for x, y in zip(parts[ax], point)]
            if any(x != 0 for x in parts[ax]):
                new_terms.append(SimpleTensor(*(tuple(v) for v in parts)))
        if not verify_witness(nxt, new_terms):
            return HookChain("failed", steps, r1, r2, rsum, "internal: propagated witness invalid")
        # conditions (2) and (3)
        if _first_corner(nxt, split) != _first_corner(cur, split):
            return HookChain("failed", steps, r1, r2, rsum, "primed corner changed")
        sec_rank = tensor_rank(_second_corner(nxt, split)).value
        if sec_rank < cur_second_rank - 1:
            return HookChain("failed", steps, r1, r2, rsum, "second corner rank dropped by more than one")
        steps.append(ChainStep(ax, tuple(gamma.tolist()), point, nxt, len(new_terms), sec_rank))
        cur, terms, cur_second_rank = nxt, new_terms, sec_rank
    # R(p') + len(steps) <= len(witness of p_0) = R(p), and len(steps) >= R(p'')
    ok = len(steps) >= r2 and r1 + len(steps) <= rsum
    verdict = "additive" if ok and rsum == r1 + r2 else "failed"
    return HookChain(verdict, steps, r1, r2, rsum, "chain complete" if ok else "chain too short",
                     basis_change=(Mb, Mc))


def _shift_terms(terms: list[SimpleTensor], split: Splitting) -> list[SimpleTensor]:
    out = []
    for t in terms:
        vecs = []
        for vec, (lo, hi) in zip((t.u, t.v, t.w), split.parts):
            vecs.append(tuple([0] * lo + list(vec)))
        out.append(SimpleTensor(*vecs))
    return out


def _pad_terms(terms: list[SimpleTensor], split: Splitting) -> list[SimpleTensor]:
    out = []
    for t in terms:
        vecs = []
        for vec, (lo, hi) in zip((t.u, t.v, t.w), split.parts):
            vecs.append(tuple(list(vec) + [0] * hi))
        out.append(SimpleTensor(*vecs))
    return out


def _transform_terms(terms: list[SimpleTensor], maps, field: Field) -> list[SimpleTensor]:
    out = []
    for t in terms:
        vecs = []
        for vec, M in zip((t.u, t.v, t.w), maps):
            if M is None:
                vecs.append(tuple(vec))
            else:
                col = Matrix(field, [[x] for x in vec])
                vecs.append(tuple((M @ col).data[:, 0]))
        out.append(SimpleTensor(*vecs))
    return out


# ---------------------------------------------------------------------------
# additivity
# ---------------------------------------------------------------------------


@dataclass
class AdditivityReport:
    status: str  # additive | deficit | undecided
    first: RankResult
    second: RankResult
    total: RankResult
    deficit: int | None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "deficit": self.deficit,
            "rank_first": self.first.to_json(),
            "rank_second": self.second.to_json(),
            "rank_sum": self.total.to_json(),
        }


def additivity_check(p1: Tensor3, p2: Tensor3, budget: int | None = None) -> AdditivityReport:
    """Compare ``R(p1 ⊕ p2)`` with ``R(p1) + R(p2)``."""
    p = direct_sum(p1, p2)
    if p1.field.is_finite:
        c1, c2 = tensor_rank(p1, budget), tensor_rank(p2, budget)
        if c1.kind == "exact" and c2.kind == "exact":
            union = _pad_terms(c1.witness, p.split) + _shift_terms(c2.witness, p.split)
            if budget is not None and c1.value + c2.value > budget:
                ct = tensor_rank(p, budget)
            else:
                ct = tensor_rank(p, known_upper=(c1.value + c2.value, union))
            r1, r2, rt = RankResult(c1, c1), RankResult(c2, c2), RankResult(ct, ct if ct.kind == "exact" else None)
            if ct.kind == "exact":
                d = c1.value + c2.value - ct.value
                return AdditivityReport("additive" if d == 0 else "deficit", r1, r2, rt, d)
            return AdditivityReport("undecided", r1, r2, rt, None)
    r1, r2 = rank_bounds(p1, budget), rank_bounds(p2, budget)
    rt = rank_bounds(p, budget)
    lo1, up1 = r1.interval
    lo2, up2 = r2.interval
    lot, upt = rt.interval
    if r1.exact and r2.exact and rt.exact:
        d = r1.value + r2.value - rt.value
        return AdditivityReport("additive" if d == 0 else "deficit", r1, r2, rt, d)
    if r1.exact and r2.exact and lot >= r1.value + r2.value:
        return AdditivityReport("additive", r1, r2, rt, 0)
    return AdditivityReport("undecided", r1, r2, rt, None)
