import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_poly
from polynorm.polycore import HomPoly, evaluate
from polynorm.supnorm import AscentOptions, estimate
from polynorm.vonneumann import (
    CommutatorError,
    ConditionViolated,
    OperatorTuple,
    check_condition,
    eval_poly_on_tuple,
    gen_diagonal_tuple,
    gen_nilpotent_tuple,
    gen_shiftpoly_tuple,
    opnorm,
    parse_tuple,
    serialize_tuple,
    shift_matrix,
    vn_ratio,
    vn_records_to_csv,
)

FAST = AscentOptions(starts=8, max_iters=200)


def test_opnorm_examples():
    assert opnorm(np.eye(4))[0] == pytest.approx(1, rel=1e-12)
    assert opnorm(np.diag([3, -4j]))[0] == pytest.approx(4, rel=1e-9)
    assert opnorm(shift_matrix(3))[0] == pytest.approx(1, rel=1e-12)
    assert opnorm(np.zeros((3, 3))) == (0.0, True)


@settings(max_examples=30)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_opnorm_against_svd(r, c, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))
    val, conv = opnorm(M)
    assert conv
    assert val == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-8)


def test_opnorm_flags_non_convergence():
    M = np.diag([1.0, 1.0 - 1e-9, 0.5])
    val, conv = opnorm(M, tol=1e-16, max_iter=3)
    assert not conv and 0 < val <= 1


def test_nilpotent_tuple_basics():
    c = np.array([0.6, 0.8j])
    t = gen_nilpotent_tuple(2, 2, c)
    assert t.d == 3 and t.commutes()
    N = shift_matrix(3)
    assert np.any(np.linalg.matrix_power(N, 2)) and not np.any(np.linalg.matrix_power(N, 3))
    assert check_condition(t, "Ip", 2).value == pytest.approx(1)
    assert check_condition(t, "IIp", 2).value == pytest.approx(1, rel=1e-9)
    assert check_condition(t, "Ip", 1).value == pytest.approx(1.4)
    with pytest.raises(ValueError):
        gen_nilpotent_tuple(2, 2, c, d=2)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, math.inf])
def test_IIp_nilpotent_equals_lp_norm(p):
    rng = np.random.default_rng(1)
    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    t = gen_nilpotent_tuple(2, 4, c)
    want = np.abs(c).max() if math.isinf(p) else np.sum(np.abs(c) ** p) ** (1 / p)
    assert check_condition(t, "IIp", p).value == pytest.approx(want, rel=1e-8)


def test_zero_tuple():
    t = OperatorTuple(np.zeros((3, 2, 2)))
    for which in ("Ip", "IIp"):
        rep = check_condition(t, which, 2)
        assert rep.value == 0 and rep.satisfied


def test_nilpotent_closed_form():
    rng = np.random.default_rng(2)
    for _ in range(30):
        m, n = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        P = random_poly(rng, m, n)
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        M = eval_poly_on_tuple(P, gen_nilpotent_tuple(m, n, c))
        assert np.allclose(M, evaluate(P, c) * np.linalg.matrix_power(shift_matrix(m + 1), m))
        assert opnorm(M)[0] == pytest.approx(abs(evaluate(P, c)), rel=1e-9)


def test_diagonal_tuple():
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    t = gen_diagonal_tuple(pts)
    assert np.all(t.commutator_residuals() == 0)
    P = random_poly(rng, 2, 3)
    M = eval_poly_on_tuple(P, t)
    assert np.allclose(np.diag(M), [evaluate(P, z) for z in pts])
    single = gen_diagonal_tuple([pts[0]])
    assert opnorm(eval_poly_on_tuple(P, single))[0] == pytest.approx(abs(evaluate(P, pts[0])))


def test_power_monomial():
    t = gen_shiftpoly_tuple(3, 2, 5, 0)
    P = HomPoly(3, 2, {(3, 0): 1})
    assert np.allclose(eval_poly_on_tuple(P, t), np.linalg.matrix_power(t.ops[0], 3))


def test_shiftpoly_properties():
    t = gen_shiftpoly_tuple(3, 4, 6, 7, p=2)
    assert t.commutator_residuals().max() <= 1e-14
    assert np.allclose(np.tril(t.ops[2]), 0)
    assert check_condition(t, "Ip", 2).value == pytest.approx(1 - 1e-9, abs=1e-12)
    lin = gen_shiftpoly_tuple(2, 3, 3, 1, terms=1)
    c = lin.ops[:, 0, 1]
    assert np.allclose(lin.ops, gen_nilpotent_tuple(2, 3, c).ops)


def test_order_independence():
    rng = np.random.default_rng(5)
    t = gen_shiftpoly_tuple(3, 3, 5, 3)
    P = random_poly(rng, 3, 3)
    base = eval_poly_on_tuple(P, t)
    for perm in itertools.permutations(range(3)):
        other = eval_poly_on_tuple(P, t, order=perm)
        assert np.abs(other - base).max() <= 1e-10 * max(1.0, np.abs(base).max())


def test_non_commuting_refused():
    A = np.array([[0, 1], [0, 0]], dtype=complex)
    t = OperatorTuple(np.array([A, A.T]))
    with pytest.raises(CommutatorError):
        eval_poly_on_tuple(HomPoly(2, 2, {(1, 1): 1}), t)


def test_vn_ratio_examples():
    c = np.array([2 ** -0.5, 2 ** -0.5])
    t = gen_nilpotent_tuple(2, 2, c)
    rec = vn_ratio(HomPoly(2, 2, {(1, 1): 1}), t, 2, 2)
    assert rec.ratio_certified <= 1 + 1e-9
    assert rec.ratio_certified == pytest.approx(1.0)
    # z_1^2 - z_2^2 vanishes at c
    rec = vn_ratio(HomPoly(2, 2, {(2, 0): 1, (0, 2): -1}), t, 2, 2)
    assert rec.ratio_certified == 0
    bad = gen_nilpotent_tuple(2, 2, np.array([1.0, 1.0]))
    with pytest.raises(ConditionViolated):
        vn_ratio(HomPoly(2, 2, {(1, 1): 1}), bad, 2, 2)


def test_diagonal_ratio_bounded_on_ball():
    rng = np.random.default_rng(8)
    for q in (1.0, 2.0, 4.0):
        for _ in range(5):
            P = random_poly(rng, 2, 3)
            Z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            Z /= (np.sum(np.abs(Z) ** q, axis=1) ** (1 / q))[:, None]
            t = gen_diagonal_tuple(Z * 0.999)
            val = opnorm(eval_poly_on_tuple(P, t))[0]
            assert val / estimate(P, q, FAST).upper <= 1 + 1e-9


def test_archive_round_trip_and_csv():
    t = gen_shiftpoly_tuple(2, 3, 4, 9, p=2)
    text = serialize_tuple(t)
    assert text.splitlines()[0] == "3 4 shiftpoly 9"
    u = parse_tuple(text)
    assert np.array_equal(u.ops, t.ops) and u.family == t.family and u.seed == t.seed
    with pytest.raises(ValueError):
        parse_tuple("2 2 x 0\n1 0 0 0\n")
    rec = vn_ratio(HomPoly(2, 3, {(1, 1, 0): 1}), t, 2, 2, opts=FAST)
    csv = vn_records_to_csv([rec])
    assert csv.splitlines()[0] == "family,m,n,d,p,q,ratio_certified,ratio_empirical,Ip_value"
