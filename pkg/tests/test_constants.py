import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polynorm.constants import (
    CONDITIONAL,
    EXACT,
    UNKNOWN,
    UPPER_ONLY,
    A_upper_cert_crude,
    B_upper_cert,
    RegionPoint,
    classify_region_A,
    estimate_A,
    estimate_B,
    fit_exponent,
    predicted_B_exponent,
    records_from_csv,
    records_to_csv,
    sweep,
)
from polynorm.construct import random_gaussian
from polynorm.polycore import CapacityError, HomPoly
from polynorm.supnorm import AscentOptions, estimate

FAST = AscentOptions(starts=8, max_iters=200)
INF = math.inf


def test_region_examples():
    v = classify_region_A(RegionPoint(0.0, 0.5, 2))
    assert "A" in v.labels and v.exponent == 0
    v = classify_region_A(RegionPoint(1.0, 1.0, 2))
    assert "D" in v.labels and v.exponent == pytest.approx(2)
    v = classify_region_A(RegionPoint(0.5, 1.0, 2))
    assert "C" in v.labels and v.exponent == pytest.approx(1.5)
    with pytest.raises(ValueError):
        classify_region_A(RegionPoint(0.5, 0.5, 1))


def test_region_statuses():
    # (E) interior point
    v = classify_region_A(RegionPoint(0.7, 0.2, 3))
    assert v.labels == ("E",) and v.status == UPPER_ONLY
    assert v.exponent == pytest.approx(2 * 0.2)
    # (F) interior
    v = classify_region_A(RegionPoint(0.4, 0.1, 3))
    assert "F" in v.labels and v.status == EXACT and v.exponent == pytest.approx(0.1)
    # conditional strip for m = 4
    v = classify_region_A(RegionPoint(0.3, 0.45, 4))
    assert set(v.labels) <= {"Fbar", "Gbar"} and v.status == CONDITIONAL
    # the spread region B below the 1/r = 1/2 line
    v = classify_region_A(RegionPoint(0.4, 0.3, 2))
    assert "B" in v.labels and v.exponent == pytest.approx(2 * 0.4 + 0.3 - 1)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_region_grid_consistency(m):
    for i in range(101):
        for j in range(101):
            v = classify_region_A(RegionPoint(i / 100, j / 100, m))
            if v.status == UNKNOWN:
                assert v.labels == ("UNKNOWN",) and v.exponent is None
                continue
            exps = [e for e, _ in v.per_label.values()]
            assert max(exps) - min(exps) <= 1e-12
            if "E" in v.labels and len(v.labels) == 1:
                assert v.status == UPPER_ONLY


def test_predicted_B():
    assert predicted_B_exponent(3, 2, 2) == (0.0, EXACT)
    assert predicted_B_exponent(3, INF, INF)[0] == 3
    for r in (1, 2, 7, INF):
        assert predicted_B_exponent(2, 1, r)[0] == 0


@given(st.integers(1, 5), st.floats(0, 1), st.floats(0, 1))
def test_B_exponent_zero_exactly_on_dual_set(m, x, y):
    exp, _ = predicted_B_exponent(m, INF if x == 0 else 1 / x, INF if y == 0 else 1 / y)
    if y >= 1 - x:
        assert exp == 0
    elif 1 - x - y > 1e-12:
        assert exp > 0


def test_B_cert():
    assert B_upper_cert(2, 5, 2, 2) == 1
    assert B_upper_cert(2, 2, INF, INF) == pytest.approx(3)
    assert B_upper_cert(2, 6, 3, 1.5) == pytest.approx(1)


def test_A_crude_cert_examples():
    assert A_upper_cert_crude(1, 1, 2, 3) == 1
    assert A_upper_cert_crude(2, 2, INF, INF) == 1
    assert A_upper_cert_crude(2, 4, 2, 1) == pytest.approx(10 * 4)


def test_A_crude_cert_bounds_coefficients_on_torus():
    rng = np.random.default_rng(0)
    for _ in range(20):
        P = random_gaussian(2, 2, int(rng.integers(1 << 30)))
        assert np.abs(P.coeffs).max() <= estimate(P, INF).lower * (1 + 1e-9)


def test_estimate_A_examples():
    e = estimate_A(2, 4, 2, 1, "spread")
    assert e.certified_lower >= 2
    assert e.empirical == pytest.approx(4)
    for n in (3, 5):
        for p, r in [(2, 2), (1.5, 4), (3, 1.5)]:
            e = estimate_A(1, n, p, r, "ones")
            assert e.empirical == pytest.approx(n ** (1 / r + 1 / p - 1))


def test_estimate_B_examples():
    e = estimate_B(2, 4, INF, INF, "ones", opts=FAST)
    assert e.certified_lower >= 10 - 1e-9
    assert estimate_B(1, 5, 2, 2, "ones").certified_lower == pytest.approx(1)
    for fam in ("spread", "ones", "unimodular", "steiner"):
        for p, r in [(2, 2), (1, 5), (3, 1.5)]:
            m = 2 if fam != "steiner" else 3
            e = estimate_B(m, 6, p, r, fam, rounds=2, opts=FAST)
            assert e.certified_lower <= 1 + 1e-9


@pytest.mark.parametrize("fam", ["spread", "ones", "unimodular", "steiner", "all"])
def test_certified_not_above_empirical(fam):
    for p, r in [(2, 1), (INF, 2), (1.5, 3)]:
        e = estimate_A(3, 6, p, r, fam, rounds=2, opts=FAST)
        assert e.certified_lower <= e.empirical * (1 + 1e-12)


def test_estimate_rejects_unknown_family():
    with pytest.raises(ValueError):
        estimate_A(2, 4, 2, 1, "bogus")


def test_sweep_rows_and_failure():
    recs = sweep("A", 2, 3, 1, [4, 8, 16], "spread")
    assert [r.n for r in recs] == [4, 8, 16]
    assert all(r.ok for r in recs)
    vals = [r.empirical for r in recs]
    assert vals == sorted(vals)
    recs = sweep("A", 2, 2, 1, [4, 8, 200], "ones", cap=1000)
    assert [r.ok for r in recs] == [True, True, False]
    assert recs[-1].status.startswith("failed")
    with pytest.raises(ValueError):
        sweep("A", 2, 2, 1, [8, 4])


def test_sweep_csv_round_trip_and_parallel_order():
    recs = sweep("B", 2, INF, 1, [3, 5, 7], "ones", opts=FAST)
    text = records_to_csv(recs)
    assert text.splitlines()[0] == "kind,m,n,p,r,family,certified_lower,empirical,upper_cert,seed,status"
    assert records_to_csv(records_from_csv(text)) == text
    par = sweep("B", 2, INF, 1, [3, 5, 7], "ones", opts=FAST, threads=3)
    assert records_to_csv(par) == text


def test_fit_synthetic():
    ns = [4, 8, 16, 32]
    f = fit_exponent([(n, n ** 2) for n in ns])
    assert f.slope == pytest.approx(2, abs=1e-12) and f.r_squared == pytest.approx(1)
    f = fit_exponent([(n, 5 * n ** (2 / 3)) for n in ns])
    assert f.slope == pytest.approx(2 / 3, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(5), abs=1e-12)
    with pytest.raises(ValueError):
        fit_exponent([(1, 1), (2, 2)])
    with pytest.raises(ValueError):
        fit_exponent([(1, 1), (2, 0), (3, 3)])


@given(st.lists(st.floats(0.1, 100), min_size=3, max_size=8), st.floats(0.01, 100))
def test_fit_scaling_equivariance(vals, c):
    pts = [(n, v) for n, v in zip(range(2, 2 + len(vals)), vals)]
    a = fit_exponent(pts)
    b = fit_exponent([(n, c * v) for n, v in pts])
    assert b.slope == pytest.approx(a.slope, abs=1e-12)
    assert b.intercept == pytest.approx(a.intercept + math.log(c), abs=1e-11)
    assert 0 <= a.r_squared <= 1


def test_spread_fit_region_b_slope():
    recs = sweep("A", 2, 3, 1, [6, 12, 24, 48], "spread")
    assert fit_exponent(recs).slope == pytest.approx(2 / 3, abs=0.05)
