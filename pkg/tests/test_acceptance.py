"""Acceptance criteria 1-10, each with its tolerance and time limit.

Every test writes one PASS/FAIL line into ``conftest.ACCEPTANCE``; the lines
are printed in a separate section at the end of the run.
"""

from __future__ import annotations

import random
import subprocess
import sys
import time
from pathlib import Path

import pytest
from conftest import ACCEPTANCE
from oracle import brute_rank, minimal_spaces

from tensorlab.borderlab import (
    border_additivity_report,
    koszul_flattening,
    minimal_br_case,
    normal_form_322,
    open_case_table,
    projected_flattening_rank,
    sigma4_test_333,
    slice_dim_bound,
    strassen_test_333,
    verify_border_decomposition,
    w_state_curve,
)
from tensorlab.exactalg import GF, QQ, Matrix
from tensorlab.rankengine import additivity_check, rank_one_candidates, tensor_rank, verify_substitution
from tensorlab.sumsplit import (
    BUCKETS,
    bucket_subspaces,
    buckets_containing,
    check_projection_inequalities,
    digestion,
    make_split_pair,
    repletion,
    theorem_gate,
)
from tensorlab.tensor3 import MatrixSubspace, Tensor3, diag_tensor, direct_sum, mm_tensor, w_state

GOLDEN = Path(__file__).parent / "golden"


def record(n: int, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    ok = ok and elapsed < limit
    ACCEPTANCE[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.2f}s, limit {limit:g}s)"
    print(ACCEPTANCE[n])


def invertible(n, rng, field=QQ):
    while True:
        m = Matrix.random(field, n, n, rng)
        if m.det() != 0:
            return m


def one_slice(w: Matrix) -> Tensor3:
    return Tensor3.from_slices(w.field, [w])


def test_criterion_01_strassen_iff():
    rng = random.Random(0)
    t0 = time.perf_counter()
    low = [Tensor3.random_rank(QQ, (3, 3, 3), 3, rng) for _ in range(100)]
    dense = [Tensor3.random(QQ, (3, 3, 3), rng) for _ in range(100)]
    low_ok = sum(strassen_test_333(p).kind == "upper" for p in low)
    dense_fail = sum(strassen_test_333(p).kind == "lower" for p in dense)
    dense_det = sum(sigma4_test_333(p).kind == "lower" for p in dense)
    el = time.perf_counter() - t0
    ok = low_ok == 100 and dense_fail == 100 and dense_det == 100
    record(1, ok, f"rank<=3 vanish {low_ok}/100, dense nonvanish {dense_fail}/100, det(M3)!=0 {dense_det}/100", el, 10)
    assert ok and el < 10


def test_criterion_02_flattening_ranks():
    rng = random.Random(0)
    t0 = time.perf_counter()
    E = lambda i, j: Matrix.unit(QQ, 2, 2, i, j)  # noqa: E731
    m3 = koszul_flattening(Tensor3.from_slices(QQ, [E(0, 0), E(0, 1), E(1, 0)]), 0).rank
    bad = []
    for b2 in (1, 2, 3):
        for _ in range(20):
            rk = koszul_flattening(direct_sum(normal_form_322(), one_slice(invertible(b2, rng))), 0).rank
            if rk != 7 + 3 * b2:
                bad.append((b2, rk))
    rep = []
    for b in range(1, 7):
        w = invertible(b, rng)
        rep.append(koszul_flattening(Tensor3.from_slices(QQ, [w, w, w]), 0).rank == 2 * b)
    el = time.perf_counter() - t0
    ok = m3 == 5 and not bad and all(rep)
    record(2, ok, f"rk M3(normal form)={m3}, M4 mismatches {len(bad)}/60, M3(w,w,w)=2b for b<=6: {all(rep)}", el, 5)
    assert ok and el < 5


def test_criterion_03_projected_route():
    rng = random.Random(0)
    t0 = time.perf_counter()
    good = 0
    for k in range(20):
        while True:
            p1 = Tensor3.random(QQ, (3, 3, 3), rng)
            if sigma4_test_333(p1).kind == "lower":
                break
        b2 = k % 3 + 1
        w4 = invertible(b2, rng)
        rk = projected_flattening_rank(p1, w4)
        rep = border_additivity_report(p1, one_slice(w4))
        lower = -(-rk // 2)
        good += rk == 9 + 2 * b2 and lower == 5 + b2 and rep["status"] == "additive"
    el = time.perf_counter() - t0
    record(3, good == 20, f"rank 9+2b'' and additive in {good}/20", el, 10)
    assert good == 20 and el < 10


def test_criterion_04_schoenhage_numbers():
    t0 = time.perf_counter()
    m1, m2 = mm_tensor(2, 1, 3, QQ), mm_tensor(1, 2, 1, QQ)
    c1, c2 = minimal_br_case(m1.dims), minimal_br_case(m2.dims)
    sd = slice_dim_bound(direct_sum(m1, m2)).value
    rep = border_additivity_report(m1, m2)
    el = time.perf_counter() - t0
    ok = (c1.value, c2.value, sd) == (6, 2, 7) and rep["naive_sum"] == 8 \
        and rep["lower_sum"]["value"] == 7 and rep["status"] == "violated-per-literature"
    record(4, ok, f"parts {c1.value},{c2.value}; slice-dim on sum {sd} < naive {rep['naive_sum']}", el, 1)
    assert ok and el < 1


# rows exactly as listed in the reference table (dims and value sets)
REFERENCE_TABLE = [
    ((3, 2, 2), (2, 3, 2), [3], [3]),
    ((3, 3, 2), (2, 2, 3), [3], [3]),
    ((3, 3, 3), (2, 2, 2), [4, 5], [2]),
    ((4, 2, 2), (1, 2, 2), [4], [2]),
    ((4, 2, 2), (1, 3, 3), [4], [3]),
    ((4, 3, 2), (1, 2, 2), [4], [2]),
    ((4, 3, 3), (1, 1, 1), [5], [1]),
    ((4, 3, 3), (1, 2, 2), [5], [2]),
    ((4, 4, 3), (1, 1, 1), [5, 6], [1]),
    ((4, 4, 4), (1, 1, 1), [5, 6, 7], [1]),
]
# row 8: a concise 4x3x3 tensor of border rank 4 exists, and no exclusion
# rule available here removes that value; see the decisions ledger
KNOWN_DIFF = {7: {"first_values": [4, 5]}}


def _cli_table(max_dim: int) -> bytes:
    return subprocess.run([sys.executable, "-m", "tensorlab.cli", "table", "--max-dim", str(max_dim), "--text"],
                          capture_output=True, check=True).stdout


def test_criterion_05_table():
    t0 = time.perf_counter()
    empty = open_case_table(4) == []
    rows = open_case_table(5)
    el = time.perf_counter() - t0
    dims_ok = [(tuple(r["first"]), tuple(r["second"])) for r in rows] == [(a, b) for a, b, _, _ in REFERENCE_TABLE]
    diffs = []
    for i, (r, ref) in enumerate(zip(rows, REFERENCE_TABLE)):
        if (r["first_values"], r["second_values"]) != (ref[2], ref[3]):
            diffs.append(i)
    expected_only = all(i in KNOWN_DIFF and all(rows[i][k] == v for k, v in KNOWN_DIFF[i].items()) for i in diffs)
    golden = _cli_table(5) == (GOLDEN / "table_max5.txt").read_bytes() and _cli_table(4) == b""
    ok = empty and dims_ok and len(rows) == 10 and not diffs and golden
    detail = f"max-dim 4 empty: {empty}; 10 rows with matching dims: {dims_ok}; golden bytes: {golden}"
    if diffs:
        detail += "; value sets differ in row " + ", ".join(
            f"{i + 1} (computed {rows[i]['first_values']}|{rows[i]['second_values']}, "
            f"listed {REFERENCE_TABLE[i][2]}|{REFERENCE_TABLE[i][3]})" for i in diffs)
    record(5, ok, detail, el, 1)
    # everything except the documented row 8 value set must agree
    assert empty and dims_ok and golden and expected_only and el < 1


@pytest.mark.xfail(strict=True, reason="row 8 keeps border rank 4 for the 4x3x3 part; see ledger")
def test_criterion_05_row8_matches_listed_values():
    assert open_case_table(5)[7]["first_values"] == [5]


def test_criterion_06_rank_ground_truth():
    F2 = GF(2)
    t0 = time.perf_counter()
    diag_ok = all(tensor_rank(diag_tensor(n, F2)).value == n for n in (1, 2, 3))
    w = tensor_rank(w_state(F2))
    w_ok = w.value == 3 and brute_rank(w_state(F2).data, 2) == 3
    small = time.perf_counter() - t0
    t1 = time.perf_counter()
    mm = mm_tensor(2, 2, 2, F2)
    n_cand = len(rank_one_candidates(F2, 4, 4))
    comp = tensor_rank(mm, strategy="completion")
    dfs = tensor_rank(mm, strategy="dfs")
    big = time.perf_counter() - t1
    mm_ok = all(c.kind == "exact" and c.value == 7 and c.searched_depth == 6 for c in (comp, dfs)) and n_cand == 225
    ok = diag_ok and w_ok and mm_ok and small < 1 and big < 900
    ACCEPTANCE[6] = (f"criterion  6: {'PASS' if ok else 'FAIL'}  diag ranks {diag_ok}, W-state 3: {w_ok}, "
                     f"mm222 rank 7 with depth 6 exhausted over {n_cand} candidates (both strategies): {mm_ok}  "
                     f"({small:.2f}s limit 1s; mm222 {big:.1f}s limit 900s)")
    print(ACCEPTANCE[6])
    assert ok


def _split_pairs(rng, n):
    shapes = {2: [(3, 3, 3), (4, 4, 2)], 3: [(3, 3, 3), (4, 4, 2)]}
    out = []
    while len(out) < n:
        q = rng.choice([2, 3])
        tot = rng.choice(shapes[q])
        d1 = tuple(rng.randint(1, t - 1) for t in tot)
        d2 = tuple(t - x for t, x in zip(tot, d1))
        F = GF(q)
        # half the time use sums of many rank-ones to reach parts with a gap
        make = lambda d: (Tensor3.random_rank(F, d, max(d) + 1, rng) if rng.random() < 0.5  # noqa: E731
                          else Tensor3.random(F, d, rng))
        p1, p2 = make(d1), make(d2)
        if not (p1.is_zero() or p2.is_zero()):
            out.append((p1, p2))
    return out


def test_criterion_07_additivity_suite():
    rng = random.Random(0)
    t0 = time.perf_counter()
    fired = violations = 0
    tally: dict[str, int] = {}
    pairs = _split_pairs(rng, 240)
    for p1, p2 in pairs:
        gate = theorem_gate(p1, p2)
        if gate.guaranteed:
            fired += 1
            for name in set(gate.theorems):
                tally[name] = tally.get(name, 0) + 1
            if additivity_check(p1, p2).status != "additive":
                violations += 1
    el = time.perf_counter() - t0
    ok = fired >= 200 and violations == 0
    record(7, ok, f"{len(pairs)} pairs, gates fired {fired} ({', '.join(f'{k} {v}' for k, v in sorted(tally.items()))}), "
              f"violations {violations}", el, 600)
    assert ok and el < 600


SHAPES_8 = [((1, 2, 2), (1, 1, 1)), ((2, 2, 1), (1, 1, 2)), ((1, 2, 1), (2, 1, 2)), ((2, 2, 2), (1, 1, 1)),
            ((1, 2, 2), (1, 1, 2)), ((2, 1, 2), (1, 2, 1)), ((2, 2, 2), (1, 1, 2)), ((2, 2, 2), (1, 2, 1)),
            ((2, 2, 2), (2, 1, 1))]


def _rank_ones_of(V: MatrixSubspace):
    b, c = V.shape
    return [Matrix.from_flat(V.field, b, c, row.tolist()) for row in rank_one_candidates(V.field, b, c)
            if V.contains(Matrix.from_flat(V.field, b, c, row.tolist()))]


def test_criterion_08_classification_coherence():
    F2 = GF(2)
    rng = random.Random(0)
    t0 = time.perf_counter()
    count = violations = 0
    k = 0
    while count < 60:
        d1, d2 = SHAPES_8[k % len(SHAPES_8)]
        k += 1
        p1, p2 = Tensor3.random(F2, d1, rng), Tensor3.random(F2, d2, rng)
        if p1.is_zero() or p2.is_zero():
            continue
        p = direct_sum(p1, p2)
        base = make_split_pair(p)
        r1, r2, r = base.checks["ranks"]
        W = base.W
        for basis in minimal_spaces([m.flat() for m in W.basis], W.shape, 2, r):
            V = MatrixSubspace(F2, W.shape, [Matrix.from_flat(F2, *W.shape, v) for v in basis])
            pair = make_split_pair(p, V)
            count += 1
            subs = bucket_subspaces(pair.cd.profile, pair.split, F2)
            bad = [m for m in _rank_ones_of(V) if not buckets_containing(m, subs)]
            ineq = check_projection_inequalities(pair.cd, r1, r2)
            rep = repletion(pair)
            dig = digestion(rep)
            c = pair.cd.counts
            rW, rS = dig.checks["ranks"]
            if bad or not all(ineq.values()) or not rep.checks["rank_preserved"] \
                    or rS != rW - c["prime"] - c["bis"] or sum(c[b] for b in BUCKETS) != V.dim:
                violations += 1
    el = time.perf_counter() - t0
    ok = count >= 50 and violations == 0
    record(8, ok, f"{count} minimal decompositions, violations {violations}", el, 600)
    assert ok and el < 600


def _with_rank_one_slice(rng, dims):
    F2 = GF(2)
    while True:
        p = Tensor3.random(F2, dims, rng)
        alpha = [rng.randint(0, 1) for _ in range(dims[0])]
        if any(alpha):
            break
    j = next(i for i, x in enumerate(alpha) if x)
    a0 = [0] * dims[0]
    a0[j] = 1
    while True:
        u = [rng.randint(0, 1) for _ in range(dims[1])]
        v = [rng.randint(0, 1) for _ in range(dims[2])]
        if any(u) and any(v):
            break
    target = Matrix.outer(F2, u, v)
    fix = target - p.contract(alpha, 0)
    arr = p.data.copy()
    for i in range(dims[1]):
        for k in range(dims[2]):
            arr[j, i, k] = (arr[j, i, k] + fix[i, k]) % 2
    return Tensor3(F2, arr), alpha


def test_criterion_09_substitution():
    rng = random.Random(0)
    t0 = time.perf_counter()
    shapes = [(2, 2, 2), (3, 2, 2), (2, 2, 3), (2, 3, 2), (3, 2, 1)]
    good = cross = 0
    for n in range(100):
        p, alpha = _with_rank_one_slice(rng, shapes[n % len(shapes)])
        chk = verify_substitution(p, alpha, 0)
        assert chk.slice_rank_one
        good += chk.ok
        # independent confirmation of every rank with the brute force oracle
        cross += brute_rank(p.data, 2) == chk.rank
    el = time.perf_counter() - t0
    ok = good == 100 and cross == 100
    record(9, ok, f"drop exists and is at most one in {good}/100; oracle agrees {cross}/100", el, 300)
    assert ok and el < 300


def test_criterion_10_curve_gap():
    F2 = GF(2)
    t0 = time.perf_counter()
    cert = verify_border_decomposition(w_state_curve(F2))
    r = tensor_rank(w_state(F2))
    el = time.perf_counter() - t0
    ok = cert.kind == "upper" and cert.value == 2 and r.value == 3
    record(10, ok, f"curve certifies border rank <= {cert.value}, rank {r.value}: strict gap", el, 1)
    assert ok and el < 1
