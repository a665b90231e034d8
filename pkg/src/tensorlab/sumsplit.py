"""Direct-sum analysis: how a minimal decomposition sits across the blocks.

For ``W = W' ⊕ W''`` inside ``(B'⊗C') ⊕ (B''⊗C'')`` and a minimal
decomposition ``V ⊇ W`` spanned by rank-one matrices, the off-diagonal
blocks of ``V`` determine four subspaces ``E' ⊆ B'``, ``E'' ⊆ B''``,
``F' ⊆ C'``, ``F'' ⊆ C''``.  Every rank-one element of ``V`` then lies in
one of seven product subspaces, and counting a well chosen rank-one basis
by type gives the inequalities checked here.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .exactalg import Field, Matrix, intersect_spans, row_basis, span_contains
from .rankengine import (
    RankResult,
    _inv_table,
    _annihilator,
    find_rank_one_in_space,
    rank_bounds,
    rank_of_space,
    rank_one_candidates,
    tensor_rank,
)
from .tensor3 import MatrixSubspace, Splitting, Tensor3, concise_reduce, min_hook_f, slice_space

__all__ = [
    "BUCKETS",
    "EFProfile",
    "ClassifiedDecomposition",
    "SplitPair",
    "FailureReport",
    "GateReport",
    "ef_profile",
    "bucket_subspaces",
    "buckets_containing",
    "classify_basis",
    "projection_inequalities",
    "check_projection_inequalities",
    "failure_certificate",
    "make_split_pair",
    "repletion",
    "digestion",
    "theorem_gate",
]

BUCKETS = ("prime", "bis", "hl", "hr", "vl", "vr", "mix")
_WEIGHT = {"prime": 2, "bis": 2, "hl": 1, "hr": 1, "vl": 1, "vr": 1, "mix": 0}


def _parts(split) -> tuple[tuple[int, int], tuple[int, int]]:
    """``(b_parts, c_parts)`` from a Splitting or a pair of pairs."""
    if isinstance(split, Splitting):
        return tuple(split.b_parts), tuple(split.c_parts)
    b, c = split
    return tuple(b), tuple(c)


@dataclass
class EFProfile:
    """Bases of ``E' ⊆ B'``, ``E'' ⊆ B''``, ``F' ⊆ C'``, ``F'' ⊆ C''`` (block coordinates)."""

    E1: list[list]
    E2: list[list]
    F1: list[list]
    F2: list[list]

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return len(self.E1), len(self.E2), len(self.F1), len(self.F2)

    @property
    def e1(self) -> int:
        return len(self.E1)

    @property
    def e2(self) -> int:
        return len(self.E2)

    @property
    def f1(self) -> int:
        return len(self.F1)

    @property
    def f2(self) -> int:
        return len(self.F2)

    def to_json(self, field: Field) -> dict:
        fmt = lambda basis: [[field.format(x) for x in v] for v in basis]  # noqa: E731
        e1, e2, f1, f2 = self.dims
        return {"e1": e1, "e2": e2, "f1": f1, "f2": f2,
                "E1": fmt(self.E1), "E2": fmt(self.E2), "F1": fmt(self.F1), "F2": fmt(self.F2)}


def ef_profile(V: MatrixSubspace, split) -> EFProfile:
    """Column and row spans of the two off-diagonal blocks of ``V``."""
    (b1, b2), (c1, c2) = _parts(split)
    if V.shape != (b1 + b2, c1 + c2):
        raise ValueError("splitting does not match the matrix shape")
    f = V.field
    tr_cols, bl_cols, tr_rows, bl_rows = [], [], [], []
    for m in V.basis:
        tr = m.data[:b1, c1:]
        bl = m.data[b1:, :c1]
        tr_cols.extend(list(col) for col in tr.T)
        tr_rows.extend(list(row) for row in tr)
        bl_cols.extend(list(col) for col in bl.T)
        bl_rows.extend(list(row) for row in bl)
    clean = lambda vs: row_basis([v for v in vs if any(x != 0 for x in v)], f)  # noqa: E731
    return EFProfile(clean(tr_cols), clean(bl_cols), clean(bl_rows), clean(tr_rows))


def _embed_vecs(basis: list[list], lo: int, total: int, field: Field) -> list[list]:
    return [[field.zero] * lo + list(v) + [field.zero] * (total - lo - len(v)) for v in basis]


def _units(lo: int, hi: int, total: int, field: Field) -> list[list]:
    return [[field.one if i == j else field.zero for i in range(total)] for j in range(lo, hi)]


def bucket_subspaces(profile: EFProfile, split, field: Field) -> dict[str, tuple[list[list], list[list]]]:
    """``bucket -> (X, Y)`` bases with the bucket subspace equal to ``X ⊗ Y``."""
    (b1, b2), (c1, c2) = _parts(split)
    b, c = b1 + b2, c1 + c2
    Bp, Bb = _units(0, b1, b, field), _units(b1, b, b, field)
    Cp, Cb = _units(0, c1, c, field), _units(c1, c, c, field)
    E1 = _embed_vecs(profile.E1, 0, b, field)
    E2 = _embed_vecs(profile.E2, b1, b, field)
    F1 = _embed_vecs(profile.F1, 0, c, field)
    F2 = _embed_vecs(profile.F2, c1, c, field)
    return {
        "prime": (Bp, Cp),
        "bis": (Bb, Cb),
        "hl": (E1, Cp + F2),
        "hr": (E2, F1 + Cb),
        "vl": (Bp + E2, F1),
        "vr": (E1 + Bb, F2),
        "mix": (E1 + E2, F1 + F2),
    }


def _in_product(m: Matrix, X: list[list], Y: list[list]) -> bool:
    f = m.field
    for col in m.data.T:
        if any(x != 0 for x in col) and not span_contains(X, list(col), f):
            return False
    for row in m.data:
        if any(x != 0 for x in row) and not span_contains(Y, list(row), f):
            return False
    return True


def buckets_containing(m: Matrix, subspaces: dict) -> list[str]:
    return [name for name in BUCKETS if _in_product(m, *subspaces[name])]


@dataclass
class ClassifiedDecomposition:
    """A rank-one basis of ``V`` split into the seven types."""

    buckets: dict[str, list[Matrix]]
    profile: EFProfile
    V: MatrixSubspace
    split: tuple[tuple[int, int], tuple[int, int]]
    elements: list[Matrix] = dc_field(default_factory=list)
    memberships: list[list[str]] = dc_field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        return {k: len(self.buckets[k]) for k in BUCKETS}

    def to_json(self) -> dict:
        f = self.V.field
        return {
            "counts": self.counts,
            "profile": self.profile.to_json(f),
            "buckets": {k: [m.to_strings() for m in v] for k, v in self.buckets.items()},
            "dim_V": self.V.dim,
            "rank_one_points": len(self.elements),
        }


def _rank_ones_in(V: MatrixSubspace) -> list[Matrix]:
    f = V.field
    b, c = V.shape
    cand = rank_one_candidates(f, b, c)
    inv = _inv_table(f.p)
    Vm = np.array([[int(x) for x in v] for v in V.vectors()], dtype=np.int64).reshape(-1, b * c)
    Y = _annihilator(Vm, b * c, f.p, inv)
    inside = ~(cand @ Y % f.p).any(axis=1) if Y.shape[1] else np.ones(len(cand), dtype=bool)
    return [Matrix.from_flat(f, b, c, cand[i].tolist()) for i in np.flatnonzero(inside)]


def classify_basis(V: MatrixSubspace, split, rank_ones: Sequence[Matrix] | None = None) -> ClassifiedDecomposition:
    """Rank-one basis of ``V`` with the most Prime/Bis, then the most HL/HR/VL/VR.

    Rank-one elements are weighted 2 (Prime, Bis), 1 (HL, HR, VL, VR) or 0
    (Mix) by their best type; greedy selection on the linear matroid of
    these elements is then lexicographically optimal.  Over Q the caller
    must pass ``rank_ones``.
    """
    f = V.field
    split = _parts(split)
    if rank_ones is None:
        if not f.is_finite:
            raise ValueError("over Q the rank-one elements of V must be supplied")
        rank_ones = _rank_ones_in(V)
    else:
        rank_ones = list(rank_ones)
        for m in rank_ones:
            if m.rank() != 1 or not V.contains(m):
                raise ValueError("supplied element is not a rank-one element of V")
    if V.dim and (not rank_ones or Matrix(f, [m.flat() for m in rank_ones]).rank() < V.dim):
        raise ValueError("V is not spanned by its rank-one elements")
    profile = ef_profile(V, split)
    subs = bucket_subspaces(profile, split, f)
    members = [buckets_containing(m, subs) for m in rank_ones]
    order = []
    for idx, mem in enumerate(members):
        if not mem:
            raise AssertionError("rank-one element outside every type subspace")
        best = min(mem, key=lambda k: (-_WEIGHT[k], BUCKETS.index(k)))
        order.append((-_WEIGHT[best], BUCKETS.index(best), idx, best))
    order.sort()
    buckets: dict[str, list[Matrix]] = {k: [] for k in BUCKETS}
    chosen: list[list] = []
    for _, _, idx, best in order:
        vec = rank_ones[idx].flat()
        if not chosen or not span_contains(chosen, vec, f):
            chosen.append(vec)
            buckets[best].append(rank_ones[idx])
            if len(chosen) == V.dim:
                break
    return ClassifiedDecomposition(buckets, profile, V, split, list(rank_ones), members)


# ---------------------------------------------------------------------------
# inequalities and refutation checks
# ---------------------------------------------------------------------------


def projection_inequalities(counts: dict[str, int], dims: tuple[int, int, int, int], r1: int, r2: int) -> dict[str, bool]:
    """The six lower bounds on bucket counts by the ranks of the summands."""
    pr, bi, hl, hr, vl, vr, mx = (counts[k] for k in BUCKETS)
    e1, e2, f1, f2 = dims
    return {
        "prime_short": pr + hl + vl + min(mx, e1 * f1) >= r1,
        "bis_short": bi + hr + vr + min(mx, e2 * f2) >= r2,
        "prime_long_h": pr + hl + vl + min(hr + mx, f1 * (e1 + e2)) >= r1 + e2,
        "prime_long_v": pr + hl + vl + min(vr + mx, e1 * (f1 + f2)) >= r1 + f2,
        "bis_long_h": bi + hr + vr + min(hl + mx, f2 * (e1 + e2)) >= r2 + e1,
        "bis_long_v": bi + hr + vr + min(vl + mx, e2 * (f1 + f2)) >= r2 + f1,
    }


def check_projection_inequalities(cd: ClassifiedDecomposition, rW1: int, rW2: int) -> dict[str, bool]:
    return projection_inequalities(cd.counts, cd.profile.dims, rW1, rW2)


@dataclass
class FailureReport:
    deficit: int
    checks: dict[str, bool]

    @property
    def refuted(self) -> bool:
        return not all(self.checks.values())

    @property
    def violated(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]

    def to_json(self) -> dict:
        return {"deficit": self.deficit, "refuted": self.refuted, "violated": self.violated, "checks": self.checks}


def failure_certificate(cd: ClassifiedDecomposition, rW1: int, rW2: int, rW: int,
                        dimW1: int, dimW2: int) -> FailureReport:
    """Necessary conditions for a claimed failure of additivity.

    Any check that comes out False refutes the claim.
    """
    c = cd.counts
    e1, e2, f1, f2 = cd.profile.dims
    d = rW1 + rW2 - rW
    g1, g2 = rW1 - dimW1, rW2 - dimW2
    checks = {
        "deficit_positive": d >= 1,
        "mix_at_least_deficit": c["mix"] >= d,
        "horizontal_plus_mix": c["hl"] + c["hr"] + c["mix"] >= e1 + e2 + d,
        "vertical_plus_mix": c["vl"] + c["vr"] + c["mix"] >= f1 + f2 + d,
        "e1_below_gap": e1 < g1,
        "f1_below_gap": f1 < g1,
        "e2_below_gap": e2 < g2,
        "f2_below_gap": f2 < g2,
        "no_zero_profile_space": min(e1, e2, f1, f2) > 0,
    }
    return FailureReport(d, checks)


# ---------------------------------------------------------------------------
# split pairs, repletion and digestion
# ---------------------------------------------------------------------------


def _embed_block(m: Matrix, which: int, split) -> Matrix:
    (b1, b2), (c1, c2) = _parts(split)
    f = m.field
    out = np.empty((b1 + b2, c1 + c2), dtype=object)
    out[...] = f.zero
    if which == 0:
        out[:b1, :c1] = m.data
    else:
        out[b1:, c1:] = m.data
    return Matrix(f, out, _trusted=True)


def _block(m: Matrix, which: int, split) -> Matrix:
    (b1, b2), (c1, c2) = _parts(split)
    sub = m.data[:b1, :c1] if which == 0 else m.data[b1:, c1:]
    return Matrix(m.field, sub.copy(), _trusted=True)


@dataclass
class SplitPair:
    """``W' ⊕ W''`` with a minimal decomposition ``V`` and its classification."""

    W1: MatrixSubspace
    W2: MatrixSubspace
    split: tuple[tuple[int, int], tuple[int, int]]
    V: MatrixSubspace
    cd: ClassifiedDecomposition | None = None
    d: int | None = None
    checks: dict = dc_field(default_factory=dict)

    @property
    def field(self) -> Field:
        return self.W1.field

    @property
    def W(self) -> MatrixSubspace:
        (b1, b2), (c1, c2) = self.split
        mats = [_embed_block(m, 0, self.split) for m in self.W1.basis]
        mats += [_embed_block(m, 1, self.split) for m in self.W2.basis]
        return MatrixSubspace(self.field, (b1 + b2, c1 + c2), mats, check=False)

    def embedded(self, which: int) -> list[Matrix]:
        src = self.W1 if which == 0 else self.W2
        return [_embed_block(m, which, self.split) for m in src.basis]


def make_split_pair(p: Tensor3, V: MatrixSubspace | None = None) -> SplitPair:
    """Pair of A-slice spaces of a split direct sum, with an oracle-minimal ``V``."""
    if p.split is None or not p.is_block_diagonal():
        raise ValueError("input must be a split direct sum")
    split = (p.split.b_parts, p.split.c_parts)
    W1 = slice_space(p.part(0), 0)
    W2 = slice_space(p.part(1), 0)
    pair = SplitPair(W1, W2, split, V if V is not None else None)  # type: ignore[arg-type]
    if V is None:
        cert = rank_of_space(pair.W)
        pair.V = MatrixSubspace(p.field, pair.W.shape, cert.matrices)
    if not pair.V.contains_space(pair.W):
        raise ValueError("V does not contain W")
    pair.cd = classify_basis(pair.V, split) if p.field.is_finite else None
    if p.field.is_finite:
        r1 = rank_of_space(W1).value if W1.dim else 0
        r2 = rank_of_space(W2).value if W2.dim else 0
        pair.d = r1 + r2 - pair.V.dim
        pair.checks["ranks"] = (r1, r2, pair.V.dim)
    return pair


def _space_rank(W: MatrixSubspace, known_upper: int | None = None) -> int:
    if W.dim == 0:
        return 0
    return rank_of_space(W, known_upper=known_upper).value


def repletion(pair: SplitPair, verify: bool = True) -> SplitPair:
    """Enlarge ``W'`` by ``<Prime>`` and ``W''`` by ``<Bis>``; same ``V`` and basis."""
    if pair.cd is None:
        raise ValueError("repletion needs a classified decomposition")
    f = pair.field
    prime = [_block(m, 0, pair.split) for m in pair.cd.buckets["prime"]]
    bis = [_block(m, 1, pair.split) for m in pair.cd.buckets["bis"]]
    W1 = MatrixSubspace.span(f, pair.W1.shape, list(pair.W1.basis) + prime)
    W2 = MatrixSubspace.span(f, pair.W2.shape, list(pair.W2.basis) + bis)
    out = SplitPair(W1, W2, pair.split, pair.V, pair.cd)
    if verify and f.is_finite:
        rW = _space_rank(pair.W, known_upper=pair.V.dim)
        rWt = _space_rank(out.W, known_upper=pair.V.dim)
        r1, r2 = _space_rank(pair.W1), _space_rank(pair.W2)
        t1, t2 = _space_rank(W1), _space_rank(W2)
        out.checks = {
            "rank_preserved": rWt == rW,
            "first_rank_bounds": r1 <= t1 <= r1 + (W1.dim - pair.W1.dim),
            "second_rank_bounds": r2 <= t2 <= r2 + (W2.dim - pair.W2.dim),
            "dim_growth_first": W1.dim - pair.W1.dim <= len(prime),
            "dim_growth_second": W2.dim - pair.W2.dim <= len(bis),
            "gaps_not_larger": (t1 - W1.dim <= r1 - pair.W1.dim) and (t2 - W2.dim <= r2 - pair.W2.dim)
            and (rWt - out.W.dim <= rW - pair.W.dim),
            "replete": is_replete(out),
        }
        out.d = t1 + t2 - rWt
    return out


def is_replete(pair: SplitPair) -> bool:
    W = pair.W
    return all(W.contains(m) for m in pair.cd.buckets["prime"] + pair.cd.buckets["bis"])


def digestion(pair: SplitPair, verify: bool = True) -> SplitPair:
    """Complements ``S' ⊆ W'`` and ``S'' ⊆ W''`` dropping Prime and Bis."""
    if pair.cd is None:
        raise ValueError("digestion needs a classified decomposition")
    if not is_replete(pair):
        raise ValueError("pair is not replete")
    f = pair.field
    cd = pair.cd
    rest1 = [m.flat() for k in BUCKETS if k != "prime" for m in cd.buckets[k]]
    rest2 = [m.flat() for k in BUCKETS if k != "bis" for m in cd.buckets[k]]
    W1e = [m.flat() for m in pair.embedded(0)]
    W2e = [m.flat() for m in pair.embedded(1)]
    b, c = pair.V.shape
    S1full = intersect_spans(rest1, W1e, f) if rest1 and W1e else []
    S2full = intersect_spans(rest2, W2e, f) if rest2 and W2e else []
    S1 = MatrixSubspace(f, pair.W1.shape, [_block(Matrix.from_flat(f, b, c, v), 0, pair.split) for v in S1full])
    S2 = MatrixSubspace(f, pair.W2.shape, [_block(Matrix.from_flat(f, b, c, v), 1, pair.split) for v in S2full])
    out = SplitPair(S1, S2, pair.split, pair.V, pair.cd)
    counts = cd.counts
    if verify and f.is_finite:
        rest_rank = sum(counts[k] for k in ("hl", "hr", "vl", "vr", "mix"))
        rW = _space_rank(pair.W, known_upper=pair.V.dim)
        rS = _space_rank(out.W, known_upper=rest_rank) if out.W.dim else 0
        prime_sp = [m.flat() for m in cd.buckets["prime"]]
        bis_sp = [m.flat() for m in cd.buckets["bis"]]
        out.checks = {
            "first_complement": S1.dim == pair.W1.dim - counts["prime"]
            and Matrix(f, (prime_sp + S1full) or [[0]]).rank() == pair.W1.dim,
            "second_complement": S2.dim == pair.W2.dim - counts["bis"]
            and Matrix(f, (bis_sp + S2full) or [[0]]).rank() == pair.W2.dim,
            "rank_drop": rS == rW - counts["prime"] - counts["bis"] == rest_rank,
            "no_rank_one_first": find_rank_one_in_space(S1) is None,
            "no_rank_one_second": find_rank_one_in_space(S2) is None,
        }
        out.checks["ranks"] = (rW, rS)
    return out


# ---------------------------------------------------------------------------
# theorem gates
# ---------------------------------------------------------------------------


@dataclass
class GateReport:
    """Which additivity theorems apply, and whether any does so unconditionally."""

    guaranteed: bool
    fired: list[dict]
    caveats: list[str]
    ranks: tuple

    @property
    def theorems(self) -> list[str]:
        return [g["gate"] for g in self.fired if g["valid_here"]]

    def to_json(self) -> dict:
        return {"guaranteed": self.guaranteed, "fired": self.fired, "caveats": self.caveats,
                "ranks": list(self.ranks)}


def _part_rank(p: Tensor3) -> RankResult:
    if p.field.is_finite:
        cert = tensor_rank(p)
        return RankResult(cert, cert)
    return rank_bounds(p)


def _hook_gate(q: Tensor3, e: int, f: int) -> bool:
    for ax in range(3):
        W = slice_space(q, ax)
        if W.dim == 0:
            continue
        for sp in (W, W.transpose()):
            if sp.shape[0] >= e and min_hook_f(sp, e) <= f:
                return True
    return False


def theorem_gate(p1: Tensor3, p2: Tensor3) -> GateReport:
    """Check the structural additivity theorems on either summand."""
    fired: list[dict] = []
    caveats: list[str] = []
    ranks = []
    for label, part in (("first", p1), ("second", p2)):
        q, _ = concise_reduce(part)
        dims = q.dims
        rr = _part_rank(q)
        ranks.append(rr.interval)
        lo, up = rr.interval
        top = max(dims) if dims else 0
        if q.is_zero():
            fired.append({"gate": "gap-0", "part": label, "valid_here": True, "detail": "zero summand"})
            continue
        if up is not None and rr.exact:
            gap = rr.value - top
            if gap == 0:
                fired.append({"gate": "gap-0", "part": label, "valid_here": True,
                              "detail": f"rank {rr.value} equals slice dimension"})
            elif gap == 1:
                fired.append({"gate": "gap-1", "part": label, "valid_here": True,
                              "detail": f"rank {rr.value} = slice dimension + 1"})
            elif gap == 2:
                fired.append({"gate": "gap-2-concise", "part": label, "valid_here": True,
                              "detail": f"concise with rank {rr.value} = {top} + 2"})
        elif up is not None and up - top <= 2:
            fired.append({"gate": f"gap-{up - top}" if up - top < 2 else "gap-2-concise", "part": label,
                          "valid_here": True, "detail": f"rank at most {up} = slice dimension + {up - top}"})
        if min(dims) <= 2:
            fired.append({"gate": "two-dim-factor", "part": label, "valid_here": True,
                          "detail": f"concise dims {dims}"})
        if part.field.is_finite or max(dims) <= 4:
            if _hook_gate(q, 1, 1):
                fired.append({"gate": "hook-1-1", "part": label, "valid_here": True,
                              "detail": "a slice space is (1,1)-hook shaped"})
            elif _hook_gate(q, 1, 2):
                fired.append({"gate": "hook-1-2", "part": label, "valid_here": False,
                              "detail": "a slice space is (1,2)-hook shaped"})
                caveats.append("hook-1-2: proven over algebraically closed fields only")
        if any(g["valid_here"] and g["part"] == label for g in fired):
            continue
        if list(dims).count(3) >= 2:
            fired.append({"gate": "three-by-three", "part": label, "valid_here": False,
                          "detail": f"concise dims {dims}"})
            caveats.append("three-by-three: holds for k=R,C only")
        if dims == (3, 3, 3) and up is not None and up <= 6:
            fired.append({"gate": "rank-le-6", "part": label, "valid_here": False,
                          "detail": f"rank at most {up}"})
            caveats.append("rank-le-6: needs maximal rank of 3x3x3 tensors <= 5 over the field "
                           "(true over R, C; false over GF(2))")
    guaranteed = any(g["valid_here"] for g in fired)
    return GateReport(guaranteed, fired, sorted(set(caveats)), tuple(ranks))
