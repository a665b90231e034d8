"""Border rank tools: Strassen's commutator, Koszul flattenings, ε-curves.

Lower bounds come from flattening ranks and from nonvanishing of
Strassen's adjugate commutator.  Upper bounds are only ever certified by
an explicit ε-curve (an exact decomposition counts as a constant curve)
or by the format list of tensors whose border rank is forced.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .exactalg import QQ, Field, LaurentPoly, Matrix
from .tensor3 import SimpleTensor, Tensor3, concise_reduce, direct_sum, mm_tensor

__all__ = [
    "BorderCertificate",
    "FlatteningMatrix",
    "LaurentTensorCurve",
    "strassen_commutator",
    "strassen_test_333",
    "strassen_necessary_square",
    "koszul_flattening",
    "flattening_lower_bound",
    "sigma4_test_333",
    "minimal_br_case",
    "verify_border_decomposition",
    "border_additivity_report",
    "open_case_table",
    "format_table",
    "normal_form_322",
    "normal_form_122",
    "MAX_BORDER_RANK",
]

SIGMA4_NOTE = "σ₄ membership (set-theoretic over ℂ)"

# Largest border rank of a tensor in each format (dims sorted descending).
# Values for formats up to 4x4x4 are taken from the classical secant
# dimension tables; they are inputs to the case table, not computed here.
MAX_BORDER_RANK = {
    (1, 1, 1): 1, (2, 2, 1): 2, (2, 2, 2): 2, (3, 3, 1): 3, (3, 2, 2): 3,
    (3, 3, 2): 3, (3, 3, 3): 5, (4, 4, 1): 4, (4, 2, 2): 4, (4, 3, 2): 4,
    (4, 4, 2): 4, (4, 3, 3): 5, (4, 4, 3): 6, (4, 4, 4): 7,
}


@dataclass
class BorderCertificate:
    """``kind`` is ``lower`` or ``upper``; ``value`` bounds the border rank."""

    kind: str
    value: int
    method: str
    evidence: dict = dc_field(default_factory=dict)
    note: str | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "value": self.value, "method": self.method, "evidence": self.evidence}
        if self.note:
            out["note"] = self.note
        return out


# ---------------------------------------------------------------------------
# Strassen's commutator
# ---------------------------------------------------------------------------


def strassen_commutator(x: Matrix, y: Matrix, z: Matrix) -> Matrix:
    """``x adj(y) z - z adj(y) x`` for square matrices of one size."""
    n = x.shape[0]
    if any(m.shape != (n, n) for m in (x, y, z)):
        raise ValueError("commutator needs square matrices of equal size")
    ay = y.adjugate()
    return x @ ay @ z - z @ ay @ x


def _polarized_adjugates(ws: Sequence[Matrix]) -> list[Matrix]:
    """Matrices spanning ``{adj(y) : y in span(ws)}`` for 3x3 slices.

    ``adj`` is quadratic for n = 3, so ``adj(sum t_i w_i)`` is a
    combination of ``adj(w_i)`` and ``adj(w_i + w_j) - adj(w_i) - adj(w_j)``.
    """
    adj = [w.adjugate() for w in ws]
    out = list(adj)
    for i, j in itertools.combinations(range(len(ws)), 2):
        out.append((ws[i] + ws[j]).adjugate() - adj[i] - adj[j])
    return out


def _nonzero_commutator(ws: Sequence[Matrix], ys: Sequence[Matrix]) -> tuple | None:
    for (i, x), (j, z) in itertools.combinations_with_replacement(enumerate(ws), 2):
        for k, ay in enumerate(ys):
            if not (x @ ay @ z - z @ ay @ x).is_zero():
                return i, k, j
    return None


def strassen_test_333(p: Tensor3) -> BorderCertificate:
    """Decide ``border rank <= 3`` for a 3x3x3 tensor by the commutator."""
    if p.dims != (3, 3, 3):
        raise ValueError("strassen_test_333 needs a 3x3x3 tensor")
    ws = p.slices(0)
    hit = _nonzero_commutator(ws, _polarized_adjugates(ws))
    if hit is None:
        return BorderCertificate("upper", 3, "strassen-333", {"vanishing": "all slice triples"})
    return BorderCertificate("lower", 4, "strassen-333", {"nonvanishing": list(hit)})


def _y_samples(ws: Sequence[Matrix], rng: random.Random, extra: int) -> list[Matrix]:
    f = ws[0].field
    out = list(ws)
    out += [a + b for a, b in itertools.combinations(ws, 2)]
    for _ in range(extra):
        y = Matrix.zeros(f, *ws[0].shape)
        for w in ws:
            y = y + w.scale(f.random(rng, 3))
        out.append(y)
    return out


def strassen_necessary_square(p: Tensor3, seed: int = 0, samples: int = 8) -> BorderCertificate | None:
    """Lower certificate ``border rank >= a+1`` if the commutator is nonzero somewhere.

    Vanishing at every sampled point proves nothing.
    """
    a, b, c = p.dims
    if not a == b == c:
        raise ValueError("strassen_necessary_square needs a cube format")
    ws = p.slices(0)
    ys = [y.adjugate() for y in _y_samples(ws, random.Random(seed), samples)]
    hit = _nonzero_commutator(ws, ys)
    if hit is None:
        return None
    return BorderCertificate("lower", a + 1, "strassen-square", {"nonvanishing": list(hit)})


# ---------------------------------------------------------------------------
# Koszul flattenings
# ---------------------------------------------------------------------------


@dataclass
class FlatteningMatrix:
    matrix: Matrix
    blocks: tuple[int, int]
    dims: tuple[int, int, int]
    factor: int = 0

    @property
    def rank(self) -> int:
        return self.matrix.rank()

    def to_json(self) -> dict:
        return {"shape": list(self.matrix.shape), "blocks": list(self.blocks), "dims": list(self.dims),
                "factor": "ABC"[self.factor], "rank": self.rank}


def _m3(w1: Matrix, w2: Matrix, w3: Matrix) -> Matrix:
    f = w1.field
    Z = Matrix.zeros(f, *w1.shape)
    return Matrix.block(f, [[Z, w3, -w2], [-w3, Z, w1], [w2, -w1, Z]])


def _m4(w1: Matrix, w2: Matrix, w3: Matrix, w4: Matrix) -> Matrix:
    f = w1.field
    Z = Matrix.zeros(f, *w1.shape)
    return Matrix.block(f, [
        [Z, w3, -w2, w4, Z, Z],
        [-w3, Z, w1, Z, -w4, Z],
        [w2, -w1, Z, Z, Z, w4],
        [Z, Z, Z, -w1, w2, -w3],
    ])


def _to_front(p: Tensor3, factor: int) -> Tensor3:
    perm = [factor] + [i for i in range(3) if i != factor]
    return p.permute(perm)


def koszul_flattening(p: Tensor3, factor: int | str = 0) -> FlatteningMatrix:
    """Block matrix of the Koszul flattening along ``factor`` (dimension 3 or 4)."""
    ax = "ABC".index(factor) if isinstance(factor, str) else int(factor)
    q = _to_front(p, ax)
    a = q.dims[0]
    ws = q.slices(0)
    if a == 3:
        return FlatteningMatrix(_m3(*ws), (3, 3), q.dims, ax)
    if a == 4:
        return FlatteningMatrix(_m4(*ws), (4, 6), q.dims, ax)
    raise ValueError(f"Koszul flattening needs factor dimension 3 or 4, got {a}")


def slice_dim_bound(p: Tensor3) -> BorderCertificate:
    ranks = p.flattening_ranks()
    return BorderCertificate("lower", max(ranks), "slice-dim", {"flattening_ranks": list(ranks)})


def flattening_lower_bound(p: Tensor3) -> BorderCertificate:
    """Best of the slice-dimension bound and ``ceil(rk / (a-1))`` over admissible factors."""
    best = slice_dim_bound(p)
    for ax in range(3):
        a = p.dims[ax]
        if a not in (3, 4):
            continue
        fm = koszul_flattening(p, ax)
        rk = fm.rank
        bound = -(-rk // (a - 1))
        if bound > best.value:
            best = BorderCertificate("lower", bound, "flattening",
                                     {"factor": "ABC"[ax], "rank": rk, "divisor": a - 1})
    return best


def sigma4_test_333(p: Tensor3) -> BorderCertificate:
    """Degree-nine test: ``det M3 != 0`` forces border rank 5 in 3x3x3."""
    if p.dims != (3, 3, 3):
        raise ValueError("sigma4_test_333 needs a 3x3x3 tensor")
    det = koszul_flattening(p, 0).matrix.det()
    if det != 0:
        return BorderCertificate("lower", 5, "degree9", {"det": p.field.format(det)},
                                 note="maximal border rank in 3x3x3 is 5, so equality")
    return BorderCertificate("upper", 4, "degree9", {"det": "0"}, note=SIGMA4_NOTE)


# ---------------------------------------------------------------------------
# formats whose border rank is forced
# ---------------------------------------------------------------------------


def _forced_format(a: int, b: int, c: int) -> bool:
    """Formats where every concise tensor has border rank equal to ``a``."""
    if b == 1 or c == 1:
        return True
    if c == 2 and a >= b >= 2:
        return True
    if b == 2 and a >= c >= 2:
        return True
    return a >= b * c


def _oriented(dims: Sequence[int], ax: int) -> tuple[int, int, int]:
    rest = [dims[i] for i in range(3) if i != ax]
    return (dims[ax], rest[0], rest[1])


def minimal_br_case(dims: Sequence[int], concise: bool = True) -> BorderCertificate | None:
    """Border rank of a concise tensor whose format forces it, else ``None``."""
    if not concise:
        return None
    for ax in range(3):
        a, b, c = _oriented(dims, ax)
        if _forced_format(a, b, c):
            return BorderCertificate("lower", a, "case-table",
                                     {"factor": "ABC"[ax], "dims": list(dims), "equality": True, "upper": a},
                                     note="border rank equals the factor dimension for this format")
    return None


# ---------------------------------------------------------------------------
# ε-curves
# ---------------------------------------------------------------------------


@dataclass
class LaurentTensorCurve:
    """Rank-one terms with Laurent polynomial entries approximating ``target``."""

    terms: list[tuple[list[LaurentPoly], list[LaurentPoly], list[LaurentPoly]]]
    target: Tensor3

    def __post_init__(self):
        dims = self.target.dims
        for u, v, w in self.terms:
            if (len(u), len(v), len(w)) != dims:
                raise ValueError("curve term does not match target dims")
            for vec in (u, v, w):
                if all(x.is_zero() for x in vec):
                    raise ValueError("curve term has a zero factor")

    @classmethod
    def from_json(cls, obj: dict, target: Tensor3) -> LaurentTensorCurve:
        f = target.field
        terms = []
        for t in obj["terms"]:
            terms.append(tuple([LaurentPoly.from_json(f, x) for x in t[k]] for k in ("u", "v", "w")))
        return cls(terms, target)

    def to_json(self) -> dict:
        return {"terms": [{k: [x.to_json() for x in vec] for k, vec in zip("uvw", t)} for t in self.terms]}

    @classmethod
    def constant(cls, target: Tensor3, terms: Sequence[SimpleTensor]) -> LaurentTensorCurve:
        f = target.field
        lift = lambda vec: [LaurentPoly.const(f, x) for x in vec]  # noqa: E731
        return cls([(lift(t.u), lift(t.v), lift(t.w)) for t in terms], target)


def _expand(curve: LaurentTensorCurve) -> dict[int, np.ndarray]:
    f = curve.target.field
    dims = curve.target.dims
    out: dict[int, np.ndarray] = {}
    for u, v, w in curve.terms:
        for i, j, k in itertools.product(range(dims[0]), range(dims[1]), range(dims[2])):
            if u[i].is_zero() or v[j].is_zero() or w[k].is_zero():
                continue
            prod = u[i] * v[j] * w[k]
            for e, cval in prod.coeffs.items():
                arr = out.setdefault(e, np.full(dims, f.zero, dtype=object))
                arr[i, j, k] = f.add(arr[i, j, k], cval)
    return {e: a for e, a in out.items() if any(x != 0 for x in a.reshape(-1))}


def verify_border_decomposition(curve: LaurentTensorCurve) -> BorderCertificate:
    """Upper certificate if the lowest ε-coefficient is a nonzero multiple of the target."""
    target = curve.target
    f = target.field
    if target.is_zero():
        raise ValueError("target tensor is zero")
    coeffs = _expand(curve)
    if not coeffs:
        raise ValueError("curve sums to zero: every coefficient cancels")
    e = min(coeffs)
    low = coeffs[e]
    i, j, k, tv = next(iter(target.entries()))
    lam = f.div(low[i, j, k], tv)
    scaled = np.vectorize(lambda x: f.mul(lam, x), otypes=[object])(target.data)
    if lam == 0 or not all(x == y for x, y in zip(low.reshape(-1), scaled.reshape(-1))):
        raise ValueError(f"lowest coefficient (order {e}) is not a nonzero multiple of the target")
    return BorderCertificate("upper", len(curve.terms), "epsilon-curve",
                             {"order": e, "scalar": f.format(lam), "terms": len(curve.terms)})


def w_state_curve(field: Field = QQ) -> LaurentTensorCurve:
    """``(x + εy)^{⊗3} - x^{⊗3}``: two terms tending to the W-state at order one."""
    from .tensor3 import w_state

    L = lambda d: LaurentPoly(field, d)  # noqa: E731
    xe = [L({0: 1}), L({1: 1})]
    x = [L({0: 1}), L({})]
    mx = [L({0: -1}), L({})]
    return LaurentTensorCurve([(xe, xe, xe), (mx, x, x)], w_state(field))


# ---------------------------------------------------------------------------
# normal forms used by the degeneration arguments
# ---------------------------------------------------------------------------


def normal_form_322(field: Field = QQ) -> Tensor3:
    """Degenerate concise orbit in 3x2x2: ``a1 b1 c1 + a2 b1 c2 + a3 b2 c1``."""
    return Tensor3.from_entries(field, (3, 2, 2), [(0, 0, 0, 1), (1, 0, 1, 1), (2, 1, 0, 1)])


def normal_form_122(field: Field = QQ) -> Tensor3:
    """Concise 1x2x2 tensor; lies in the orbit closure of every concise 2x2x2 tensor."""
    return Tensor3.from_entries(field, (1, 2, 2), [(0, 0, 0, 1), (0, 1, 1, 1)])


# ---------------------------------------------------------------------------
# additivity report
# ---------------------------------------------------------------------------


def _upper(q: Tensor3) -> tuple[int, str]:
    """A certified upper bound on border rank for a concise tensor."""
    cert = minimal_br_case(q.dims)
    if cert is not None:
        return cert.value, "case-table"
    if q.dims == (3, 3, 3) and strassen_test_333(q).kind == "upper":
        return 3, "strassen-333"
    from .rankengine import rank_upper_witness

    return len(rank_upper_witness(q, improve=q.field.is_finite)), "rank-witness"


def _route_322(q1: Tensor3, q2: Tensor3) -> dict | None:
    """``(3,2,2) & (1,b,b)``: Koszul rank of the normal form padded by ``q2``."""
    for ax in range(3):
        d1, d2 = _oriented(q1.dims, ax), _oriented(q2.dims, ax)
        if d1 == (3, 2, 2) and d2[0] == 1:
            perm = [ax] + [i for i in range(3) if i != ax]
            q2o = q2.permute(perm)
            nf = normal_form_322(q1.field)
            rk = koszul_flattening(direct_sum(nf, q2o), 0).rank
            b2 = d2[1]
            return {"route": "322-normal-form", "factor": "ABC"[ax], "koszul_rank": rk,
                    "expected": 7 + 3 * b2, "lower": -(-rk // 3)}
    return None


def projected_flattening_rank(q1: Tensor3, w4: Matrix) -> int:
    """Rank of M3 on slices ``diag(w'_i, w4)`` (the A''-slice folded into all three)."""
    f = q1.field
    b1, c1 = q1.dims[1], q1.dims[2]
    b2, c2 = w4.shape
    Z12 = Matrix.zeros(f, b1, c2)
    Z21 = Matrix.zeros(f, b2, c1)
    bars = [Matrix.block(f, [[w, Z12], [Z21, w4]]) for w in q1.slices(0)]
    return _m3(*bars).rank()


def _route_333(q1: Tensor3, q2: Tensor3, seed: int) -> dict | None:
    """``(3,3,3) & (1,b,b)`` with both parts concise."""
    for ax in range(3):
        d1, d2 = _oriented(q1.dims, ax), _oriented(q2.dims, ax)
        if d1 == (3, 3, 3) and d2[0] == 1:
            perm = [ax] + [i for i in range(3) if i != ax]
            p1, p2 = q1.permute(perm), q2.permute(perm)
            b2 = d2[1]
            s = strassen_test_333(p1)
            if s.kind == "upper":
                return {"route": "333-slice-dim", "factor": "ABC"[ax], "border_rank_first": 3, "lower": 3 + b2}
            det = sigma4_test_333(p1)
            if det.kind == "lower":
                rk = projected_flattening_rank(p1, p2.slices(0)[0])
                return {"route": "333-projected-flattening", "factor": "ABC"[ax], "border_rank_first": 5,
                        "koszul_rank": rk, "expected": 9 + 2 * b2, "lower": -(-rk // 2)}
            # border rank 4: the commutator on the whole sum is nonzero somewhere
            cert = strassen_necessary_square(_pad_cube(direct_sum(p1, p2)), seed=seed)
            return {"route": "333-commutator", "factor": "ABC"[ax], "border_rank_first": 4,
                    "lower": cert.value if cert else None, "note": SIGMA4_NOTE}
    return None


def _pad_cube(p: Tensor3) -> Tensor3:
    """Embed ``p`` into an n x n x n space (border rank does not change)."""
    n = max(p.dims)
    arr = np.full((n, n, n), p.field.zero, dtype=object)
    a, b, c = p.dims
    arr[:a, :b, :c] = p.data
    return Tensor3(p.field, arr)


def _is_schoenhage(q1: Tensor3, q2: Tensor3) -> bool:
    pairs = [(mm_tensor(2, 1, 3, q1.field), mm_tensor(1, 2, 1, q1.field))]
    for s1, s2 in pairs:
        for perm in itertools.permutations(range(3)):
            t1, t2 = s1.permute(perm), s2.permute(perm)
            for x, y in ((q1, q2), (q2, q1)):
                if x.dims == t1.dims and y.dims == t2.dims and x.same_entries(t1) and y.same_entries(t2):
                    return True
    return False


def border_additivity_report(p1: Tensor3, p2: Tensor3, seed: int = 0) -> dict:
    """Decide border additivity where a known route applies, else give an interval."""
    q1, _ = concise_reduce(p1)
    q2, _ = concise_reduce(p2)
    total = direct_sum(q1, q2)
    low_sum = flattening_lower_bound(total)
    u1, m1 = _upper(q1)
    u2, m2 = _upper(q2)
    rep = {"dims": [list(q1.dims), list(q2.dims)], "upper_parts": [u1, u2], "upper_methods": [m1, m2],
           "lower_sum": low_sum.to_json(), "naive_sum": u1 + u2}
    l1 = flattening_lower_bound(q1).value
    l2 = flattening_lower_bound(q2).value
    rep["lower_parts"] = [l1, l2]

    def done(status: str, reason: str, **extra) -> dict:
        rep.update(status=status, reason=reason, **extra)
        return rep

    if q1.is_zero() or q2.is_zero():
        return done("additive", "zero summand")
    for ax in range(3):
        if u1 == q1.dims[ax] and u2 == q2.dims[ax]:
            return done("additive", "slice-dim", factor="ABC"[ax], value=u1 + u2)
    for ax in range(3):
        if _forced_format(*_oriented(q1.dims, ax)) and _forced_format(*_oriented(q2.dims, ax)):
            return done("additive", "format-list", factor="ABC"[ax], value=q1.dims[ax] + q2.dims[ax])
    if l1 == u1 and l2 == u2 and low_sum.value >= u1 + u2:
        return done("additive", "direct-flattening", value=u1 + u2)
    for x, y in ((q1, q2), (q2, q1)):
        r = _route_322(x, y)
        if r is not None:
            return done("additive", "322-route", evidence=r)
        r = _route_333(x, y, seed)
        if r is not None:
            return done("additive", "333-route", evidence=r)
    for x, y in ((q1, q2), (q2, q1)):
        if x.dims == (3, 3, 3) and sorted(y.dims) == [2, 2, 2]:
            r = _route_333(x, normal_form_122(x.field), seed)
            if r is not None:
                return done("additive", "333-222-degeneration", evidence=r,
                            note="second summand replaced by the 1x2x2 normal form in its orbit closure")
    if _is_schoenhage(q1, q2):
        return done("violated-per-literature", "schoenhage", interval=[low_sum.value, u1 + u2],
                    literature_value=7)
    return done("open", "no route applies", interval=[low_sum.value, u1 + u2])


# ---------------------------------------------------------------------------
# case table
# ---------------------------------------------------------------------------


def _concise_format(d: Sequence[int]) -> bool:
    a, b, c = d
    return min(d) >= 1 and a <= b * c and b <= a * c and c <= a * b


def _canonical(d1: tuple, d2: tuple) -> tuple:
    best = None
    for perm in itertools.permutations(range(3)):
        for x, y in ((d1, d2), (d2, d1)):
            key = (tuple(x[i] for i in perm), tuple(y[i] for i in perm))
            if best is None or key > best:
                best = key
    return best


def _covered_by_routes(d1: tuple, d2: tuple) -> bool:
    for ax in range(3):
        o1, o2 = _oriented(d1, ax), _oriented(d2, ax)
        if _forced_format(*o1) and _forced_format(*o2):
            return True
        for x, y in ((o1, o2), (o2, o1)):
            if y[0] == 1 and (x == (3, 2, 2) or x == (3, 3, 3)):
                return True
    return False


def _br_values(d: tuple) -> list[int]:
    key = tuple(sorted(d, reverse=True))
    if key not in MAX_BORDER_RANK:
        raise ValueError(f"no maximal border rank recorded for format {key}")
    return list(range(max(d), MAX_BORDER_RANK[key] + 1))


def open_case_table(max_dim: int = 5) -> list[dict]:
    """Pairs of concise formats with total dims ``<= max_dim`` that no route settles."""
    if not 1 <= max_dim <= 5:
        raise ValueError("open_case_table supports max_dim between 1 and 5")
    rows = set()
    rng = range(1, max_dim)
    for d1 in itertools.product(rng, repeat=3):
        for d2 in itertools.product(rng, repeat=3):
            if any(x + y > max_dim for x, y in zip(d1, d2)):
                continue
            if not (_concise_format(d1) and _concise_format(d2)):
                continue
            if _covered_by_routes(d1, d2):
                continue
            rows.add(_canonical(d1, d2))
    out = []
    for d1, d2 in sorted(rows):
        kept = [(v1, v2) for v1 in _br_values(d1) for v2 in _br_values(d2)
                if not any(v1 == d1[i] and v2 == d2[i] for i in range(3))]
        if not kept:
            continue
        out.append({"first": list(d1), "second": list(d2),
                    "first_values": sorted({v for v, _ in kept}),
                    "second_values": sorted({v for _, v in kept})})
    return out


def format_table(rows: list[dict]) -> str:
    lines = []
    for n, r in enumerate(rows, 1):
        lines.append("{:>2}. | {} | {} | {} | {}".format(
            n, ", ".join(map(str, r["first"])), ", ".join(map(str, r["second"])),
            ", ".join(map(str, r["first_values"])), ", ".join(map(str, r["second_values"]))))
    return "\n".join(lines) + ("\n" if lines else "")
