from __future__ import annotations

import itertools
import random

import pytest
from oracle import brute_rank, minimal_spaces

from tensorlab.exactalg import GF, Matrix
from tensorlab.rankengine import additivity_check, rank_one_candidates
from tensorlab.sumsplit import (
    BUCKETS,
    bucket_subspaces,
    buckets_containing,
    check_projection_inequalities,
    classify_basis,
    digestion,
    ef_profile,
    failure_certificate,
    make_split_pair,
    projection_inequalities,
    repletion,
    theorem_gate,
)
from tensorlab.tensor3 import MatrixSubspace, Tensor3, diag_tensor, direct_sum, w_state

F2 = GF(2)
SPLIT = ((2, 2), (2, 2))


def mat(rows):
    return Matrix(F2, rows)


def embed4(u, w):
    return Matrix.outer(F2, u, w)


def test_ef_profile_reads_off_diagonal_blocks():
    m = mat([[1, 0, 0, 1], [0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0]])
    V = MatrixSubspace(F2, (4, 4), [m])
    prof = ef_profile(V, SPLIT)
    # top-right block has column (1,0) in B' and row (0,1) in C''
    assert prof.E1 == [[1, 0]] and prof.F2 == [[0, 1]]
    # bottom-left block has column (1,0) in B'' and row (0,1) in C'
    assert prof.E2 == [[1, 0]] and prof.F1 == [[0, 1]]


@pytest.mark.parametrize("u,w,expected", [
    ((1, 0, 0, 0), (1, 0, 0, 0), "prime"),
    ((0, 0, 1, 0), (0, 0, 0, 1), "bis"),
    ((1, 0, 1, 0), (1, 0, 1, 0), "mix"),
    ((1, 0, 1, 0), (1, 0, 0, 0), "vl"),
    ((1, 0, 1, 0), (0, 0, 1, 0), "vr"),
    ((1, 0, 0, 0), (1, 0, 1, 0), "hl"),
    ((0, 0, 1, 0), (1, 0, 1, 0), "hr"),
])
def test_rank_one_types(u, w, expected):
    m = embed4(u, w)
    V = MatrixSubspace.span(F2, (4, 4), [m, embed4((1, 0, 1, 0), (1, 0, 1, 0))])
    subs = bucket_subspaces(ef_profile(V, SPLIT), SPLIT, F2)
    assert expected in buckets_containing(m, subs)


def _random_space(rng, shape, extra):
    b, c = shape
    cand = rank_one_candidates(F2, b, c)
    picks = rng.sample(range(len(cand)), extra)
    return MatrixSubspace.span(F2, shape, [Matrix.from_flat(F2, b, c, cand[i].tolist()) for i in picks])


def test_every_rank_one_lands_in_a_bucket():
    rng = random.Random(4)
    for _ in range(30):
        V = _random_space(rng, (4, 4), rng.randint(2, 5))
        cd = classify_basis(V, SPLIT)
        assert all(cd.memberships)
        assert sum(cd.counts.values()) == V.dim
        subs = bucket_subspaces(cd.profile, SPLIT, F2)
        for name in BUCKETS:
            for m in cd.buckets[name]:
                assert name in buckets_containing(m, subs)


def _lex_best(cd):
    """Brute force over all rank-one bases: best (prime+bis, hl+hr+vl+vr)."""
    elems = cd.elements
    weights = []
    for mem in cd.memberships:
        weights.append(2 if ("prime" in mem or "bis" in mem) else (1 if set(mem) & {"hl", "hr", "vl", "vr"} else 0))
    best = None
    n = cd.V.dim
    for combo in itertools.combinations(range(len(elems)), n):
        if Matrix(F2, [elems[i].flat() for i in combo]).rank() < n:
            continue
        key = (sum(weights[i] == 2 for i in combo), sum(weights[i] == 1 for i in combo))
        best = key if best is None or key > best else best
    return best


def test_greedy_basis_is_lexicographically_optimal():
    rng = random.Random(9)
    checked = 0
    while checked < 12:
        V = _random_space(rng, (4, 4), rng.randint(2, 4))
        cd = classify_basis(V, SPLIT)
        if len(cd.elements) > 18:
            continue
        c = cd.counts
        assert (c["prime"] + c["bis"], c["hl"] + c["hr"] + c["vl"] + c["vr"]) == _lex_best(cd)
        checked += 1


def test_classify_rejects_space_without_rank_one_basis():
    V = MatrixSubspace(F2, (4, 4), [Matrix.identity(F2, 4)])
    with pytest.raises(ValueError):
        classify_basis(V, SPLIT)


def _pairs(seed, count):
    rng = random.Random(seed)
    shapes = [((1, 2, 2), (1, 1, 1)), ((2, 2, 1), (1, 1, 2)), ((2, 2, 2), (1, 1, 1)), ((1, 2, 1), (2, 1, 2))]
    out = []
    while len(out) < count:
        d1, d2 = rng.choice(shapes)
        p1, p2 = Tensor3.random(F2, d1, rng), Tensor3.random(F2, d2, rng)
        if not p1.is_zero() and not p2.is_zero():
            out.append((p1, p2))
    return out


def test_inequalities_on_all_minimal_decompositions():
    for p1, p2 in _pairs(1, 10):
        pair = make_split_pair(direct_sum(p1, p2))
        r1, r2, r = pair.checks["ranks"]
        W = pair.W
        flats = [m.flat() for m in W.basis]
        for basis in minimal_spaces(flats, W.shape, 2, r):
            b, c = W.shape
            V = MatrixSubspace(F2, W.shape, [Matrix.from_flat(F2, b, c, v) for v in basis])
            cd = classify_basis(V, pair.split)
            assert all(check_projection_inequalities(cd, r1, r2).values())
            e1, e2, f1, f2 = cd.profile.dims
            if min(e1, e2, f1, f2) == 0:
                assert r == r1 + r2


def test_failure_certificate_refutes_additive_claim():
    pair = make_split_pair(direct_sum(w_state(F2), diag_tensor(1, F2)))
    r1, r2, r = pair.checks["ranks"]
    rep = failure_certificate(pair.cd, r1, r2, r, pair.W1.dim, pair.W2.dim)
    assert rep.deficit == 0 and rep.refuted and "deficit_positive" in rep.violated


def test_repletion_and_digestion_checks():
    for p1, p2 in _pairs(2, 8) + [(w_state(F2), w_state(F2))]:
        pair = make_split_pair(direct_sum(p1, p2))
        rep = repletion(pair)
        assert all(rep.checks.values()), rep.checks
        dig = digestion(rep)
        assert all(v for k, v in dig.checks.items() if k != "ranks"), dig.checks
        rW, rS = dig.checks["ranks"]
        c = pair.cd.counts
        assert rS == rW - c["prime"] - c["bis"]


def test_digestion_requires_replete_pair():
    pair = make_split_pair(direct_sum(w_state(F2), w_state(F2)))
    if pair.W1.dim < pair.cd.counts["prime"]:
        with pytest.raises(ValueError):
            digestion(pair)


def _example_points(hr_range, vr_range):
    for hl, hr, vl, vr, mix in itertools.product(range(2, 4), hr_range, range(3, 5), vr_range, range(1, 4)):
        if hl + hr + vl + vr + mix == 13 and hl + vl <= 6 and hr + vr <= 6:
            yield {"prime": 0, "bis": 0, "hl": hl, "hr": hr, "vl": vl, "vr": vr, "mix": mix}


@pytest.mark.parametrize("hr_range,vr_range", [(range(2, 4), range(3, 5)), (range(3, 5), range(2, 4))])
def test_counterexample_profile_consistent(hr_range, vr_range):
    pts = list(_example_points(hr_range, vr_range))
    assert pts
    for c in pts:
        assert all(projection_inequalities(c, (2, 2, 2, 2), 7, 7).values())
        assert c["mix"] >= 1
        assert c["hl"] + c["hr"] + c["mix"] >= 2 + 2 + 1
        assert c["vl"] + c["vr"] + c["mix"] >= 2 + 2 + 1


def test_counterexample_sum_bounds_follow_from_inequalities():
    for hl, hr, vl, vr in itertools.product(range(2, 8), repeat=4):
        mix = 13 - hl - hr - vl - vr
        if mix < 1:
            continue
        c = {"prime": 0, "bis": 0, "hl": hl, "hr": hr, "vl": vl, "vr": vr, "mix": mix}
        if all(projection_inequalities(c, (2, 2, 2, 2), 7, 7).values()):
            assert hl + vl <= 6 and hr + vr <= 6


def test_theorem_gate_examples():
    g = theorem_gate(diag_tensor(2, F2), diag_tensor(1, F2))
    assert g.guaranteed and "gap-0" in g.theorems
    g = theorem_gate(w_state(F2), w_state(F2))
    assert g.guaranteed and "gap-1" in g.theorems


def test_gates_agree_with_oracle_small():
    rng = random.Random(5)
    for _ in range(20):
        p1 = Tensor3.random(F2, rng.choice([(1, 1, 2), (1, 2, 1)]), rng)
        p2 = Tensor3.random(F2, (1, 1, 1), rng)
        g = theorem_gate(p1, p2)
        if g.guaranteed:
            r = brute_rank(direct_sum(p1, p2).data, 2)
            assert r == brute_rank(p1.data, 2) + brute_rank(p2.data, 2)


def test_gates_agree_with_engine():
    rng = random.Random(6)
    fired = 0
    for _ in range(25):
        p1 = Tensor3.random(F2, (2, 2, 2), rng)
        p2 = Tensor3.random(F2, rng.choice([(1, 2, 2), (2, 1, 2), (1, 1, 1)]), rng)
        g = theorem_gate(p1, p2)
        if g.guaranteed:
            fired += 1
            assert additivity_check(p1, p2).status == "additive"
    assert fired
