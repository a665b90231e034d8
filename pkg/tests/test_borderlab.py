from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorlab.borderlab import (
    LaurentTensorCurve,
    border_additivity_report,
    flattening_lower_bound,
    format_table,
    koszul_flattening,
    minimal_br_case,
    normal_form_122,
    normal_form_322,
    open_case_table,
    projected_flattening_rank,
    sigma4_test_333,
    slice_dim_bound,
    strassen_commutator,
    strassen_necessary_square,
    strassen_test_333,
    verify_border_decomposition,
    w_state_curve,
)
from tensorlab.exactalg import QQ, GF, LaurentPoly, Matrix
from tensorlab.tensor3 import SimpleTensor, Tensor3, diag_tensor, direct_sum, mm_tensor, w_state

ints = st.integers(-3, 3)


def qmat(n):
    return st.lists(st.lists(ints, min_size=n, max_size=n), min_size=n, max_size=n).map(lambda r: Matrix(QQ, r))


def invertible(n, rng, field=QQ):
    while True:
        m = Matrix.random(field, n, n, rng)
        if m.det() != 0:
            return m


def test_commutator_examples():
    E = lambda i, j: Matrix.unit(QQ, 3, 3, i, j)  # noqa: E731
    I3 = Matrix.identity(QQ, 3)
    assert strassen_commutator(E(0, 1), I3, E(1, 0)) == E(0, 0) - E(1, 1)
    d1, d2 = Matrix.diag(QQ, [1, 2, 3]), Matrix.diag(QQ, [4, 0, 5])
    assert strassen_commutator(d1, Matrix.diag(QQ, [2, 2, 7]), d2).is_zero()
    with pytest.raises(ValueError):
        strassen_commutator(I3, Matrix.identity(QQ, 2), I3)


@given(qmat(3), qmat(3))
def test_commutator_vanishes_on_repeated_argument(x, y):
    assert strassen_commutator(x, y, x).is_zero()


@given(qmat(3), qmat(3), qmat(3))
def test_commutator_antisymmetric(x, y, z):
    assert strassen_commutator(x, y, z) == -strassen_commutator(z, y, x)


@given(qmat(3), qmat(3), qmat(3), qmat(3), ints)
def test_commutator_linear_in_first(x1, x2, y, z, s):
    lhs = strassen_commutator(x1 + x2.scale(QQ(s)), y, z)
    assert lhs == strassen_commutator(x1, y, z) + strassen_commutator(x2, y, z).scale(QQ(s))


def test_strassen_test_classifies():
    rng = random.Random(1)
    assert strassen_test_333(Tensor3.random_rank(QQ, (3, 3, 3), 3, rng)).kind == "upper"
    p = Tensor3.from_slices(QQ, [Matrix.identity(QQ, 3), Matrix.unit(QQ, 3, 3, 0, 1), Matrix.unit(QQ, 3, 3, 1, 0)])
    cert = strassen_test_333(p)
    assert cert.kind == "lower" and cert.value == 4
    with pytest.raises(ValueError):
        strassen_test_333(diag_tensor(2, QQ))


def test_strassen_necessary_square_cube_only():
    with pytest.raises(ValueError):
        strassen_necessary_square(Tensor3.zeros(QQ, (2, 2, 3)))
    assert strassen_necessary_square(diag_tensor(3, QQ)) is None


def test_sigma4_on_generic_and_low_rank():
    rng = random.Random(2)
    cert = sigma4_test_333(Tensor3.random(QQ, (3, 3, 3), rng))
    assert cert.kind == "lower" and cert.value == 5
    low = sigma4_test_333(Tensor3.random_rank(QQ, (3, 3, 3), 4, rng))
    assert low.kind == "upper" and low.note


def test_koszul_rank_invariant_under_basis_change():
    rng = random.Random(3)
    for _ in range(5):
        p = Tensor3.random(QQ, (3, 3, 2), rng)
        q = p.transform(invertible(3, rng), invertible(3, rng), invertible(2, rng))
        assert koszul_flattening(p, 0).rank == koszul_flattening(q, 0).rank


def test_koszul_dims_and_bad_factor():
    fm = koszul_flattening(Tensor3.zeros(QQ, (4, 2, 3)), 0)
    assert fm.matrix.shape == (4 * 2, 6 * 3)
    with pytest.raises(ValueError):
        koszul_flattening(Tensor3.zeros(QQ, (2, 2, 2)), 0)


def test_m3_on_repeated_slice():
    rng = random.Random(4)
    for b in range(1, 7):
        w = invertible(b, rng)
        assert koszul_flattening(Tensor3.from_slices(QQ, [w, w, w]), 0).rank == 2 * b


def test_lower_bounds():
    assert slice_dim_bound(mm_tensor(2, 2, 2, QQ)).value == 4
    assert flattening_lower_bound(diag_tensor(3, QQ)).value == 3
    rng = random.Random(5)
    assert flattening_lower_bound(Tensor3.random(QQ, (3, 3, 3), rng)).value == 5


@pytest.mark.parametrize("dims,value", [((2, 3, 6), 6), ((2, 2, 1), 2), ((4, 2, 2), 4), ((3, 3, 2), 3)])
def test_minimal_br_case_forced(dims, value):
    cert = minimal_br_case(dims)
    assert cert.value == value and cert.evidence["equality"]


def test_minimal_br_case_unforced():
    assert minimal_br_case((3, 3, 3)) is None
    assert minimal_br_case((2, 2, 2), concise=False) is None


def test_w_state_curve_certifies_two():
    for f in (QQ, GF(2)):
        cert = verify_border_decomposition(w_state_curve(f))
        assert cert.kind == "upper" and cert.value == 2 and cert.evidence["order"] == 1


def test_curve_rejects_zero_sum_and_wrong_limit():
    t = w_state(QQ)
    one = [LaurentPoly.const(QQ, 1), LaurentPoly.const(QQ, 0)]
    neg = [LaurentPoly.const(QQ, -1), LaurentPoly.const(QQ, 0)]
    with pytest.raises(ValueError, match="zero"):
        verify_border_decomposition(LaurentTensorCurve([(one, one, one), (neg, one, one)], t))
    with pytest.raises(ValueError, match="multiple"):
        verify_border_decomposition(LaurentTensorCurve([(one, one, one)], t))


def test_constant_curve_of_decomposition():
    t = diag_tensor(2, QQ)
    terms = [SimpleTensor([1, 0], [1, 0], [1, 0]), SimpleTensor([0, 1], [0, 1], [0, 1])]
    assert verify_border_decomposition(LaurentTensorCurve.constant(t, terms)).value == 2


def test_normal_forms_concise():
    assert normal_form_322().flattening_ranks() == (3, 2, 2)
    assert normal_form_122().flattening_ranks() == (1, 2, 2)


def test_projected_flattening_rank_formula():
    rng = random.Random(6)
    for b2 in (1, 2, 3):
        while True:
            p = Tensor3.random(QQ, (3, 3, 3), rng)
            if sigma4_test_333(p).kind == "lower":
                break
        assert projected_flattening_rank(p, invertible(b2, rng)) == 9 + 2 * b2


def test_report_routes():
    rng = random.Random(7)
    generic = Tensor3.random(QQ, (3, 3, 3), rng)
    rep = border_additivity_report(generic, normal_form_122())
    assert rep["status"] == "additive" and rep["reason"] == "333-route"
    rep = border_additivity_report(normal_form_322(), normal_form_122())
    assert rep["status"] == "additive" and rep["reason"] in ("322-route", "format-list", "direct-flattening")
    rep = border_additivity_report(mm_tensor(2, 1, 3, QQ), mm_tensor(1, 2, 1, QQ))
    assert rep["status"] == "violated-per-literature" and rep["naive_sum"] == 8
    assert border_additivity_report(Tensor3.zeros(QQ, (1, 1, 1)), diag_tensor(2, QQ))["reason"] == "zero summand"


def test_report_deterministic():
    rng = random.Random(8)
    p = Tensor3.random(QQ, (3, 3, 3), rng)
    assert border_additivity_report(p, diag_tensor(2, QQ), seed=3) == border_additivity_report(p, diag_tensor(2, QQ), seed=3)


def test_table_small_dims_empty():
    for m in (1, 2, 3, 4):
        assert open_case_table(m) == []
    with pytest.raises(ValueError):
        open_case_table(6)


def test_table_rows_canonical_and_unsettled():
    rows = open_case_table(5)
    assert len(rows) == 10
    for r in rows:
        d1, d2 = tuple(r["first"]), tuple(r["second"])
        assert all(x + y <= 5 for x, y in zip(d1, d2))
        assert min(r["first_values"]) >= max(d1) and min(r["second_values"]) >= max(d2)
    assert format_table(rows).count("\n") == 10


def test_direct_sum_of_diagonals_additive():
    rep = border_additivity_report(diag_tensor(2, QQ), diag_tensor(1, QQ))
    assert rep["status"] == "additive"
    assert direct_sum(diag_tensor(2, QQ), diag_tensor(1, QQ)).flattening_ranks() == (3, 3, 3)
