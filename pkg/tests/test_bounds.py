from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seccache.bounds import (
    RatePoint,
    achievable_points,
    corollary_flag,
    cutset_violations,
    gap_ratio,
    lower_convex_envelope,
    outer_bound,
    outer_bound_s_range,
    rc_of_t,
)
from seccache.errors import DomainError, InvalidCollusion, InvalidT
from seccache.scheme import derive_params, rate_pair

# R^C / R_s* at t = 0..5 for (30, 30, 5).  Frozen; t = 1 checked by hand:
# M = 59/25, R = 87/5, best s = 10 gives 33/5, ratio 29/11.
RATIOS_30_30_5 = [
    Fraction(2),
    Fraction(29, 11),
    Fraction(1015, 389),
    Fraction(5481, 2300),
    Fraction(71253, 31625),
    Fraction(1131, 506),
]


def test_small_examples():
    curve = achievable_points(4, 4, 2)
    assert [(p.t, p.memory, p.rate) for p in curve.points] == [
        (0, Fraction(1), Fraction(4)),
        (1, Fraction(7, 2), Fraction(3)),
    ]
    assert [p.t for p in achievable_points(30, 30, 5).points] == list(range(6))
    for l in range(1, 30):
        first = achievable_points(30, 30, l).points[0]
        assert (first.memory, first.rate) == (1, 30)


def test_rc_of_t():
    assert rc_of_t(4, 4, 2, 1) == 3
    for k in range(2, 12):
        for l in range(1, k):
            assert rc_of_t(5, k, l, 0) == k
    rates = [rc_of_t(30, 30, 5, t) for t in range(6)]
    assert all(a > b for a, b in zip(rates, rates[1:]))
    with pytest.raises(InvalidT):
        rc_of_t(30, 30, 5, 6)
    with pytest.raises(InvalidCollusion):
        achievable_points(4, 4, 4)


def test_rate_pair_matches_bounds():
    for k in range(2, 9):
        for l in range(1, k):
            for n in (1, 3, k):
                curve = achievable_points(n, k, l)
                for p in curve.points:
                    pair = rate_pair(derive_params(n, k, l, p.t, 1, pad=True))
                    assert (pair.memory, pair.rate) == (p.memory, p.rate)


def test_outer_bound_examples():
    for m in (1, Fraction(3, 2), 7, 100):
        assert outer_bound(m, 4, 4, 2) == 2
    # the s = l term alone is 5 at M = 1, but s = 15 gives 15
    assert outer_bound(1, 30, 30, 5) == 15
    s_eq_l = Fraction(5 * 6 - 5 - 0, 6 - 1)
    assert s_eq_l == 5
    assert list(outer_bound_s_range(30, 30, 5)) == list(range(5, 16))
    # the s = l term is the constant l, so regime 1 never drops below l
    assert outer_bound(10**6, 30, 30, 5) == 5
    # N = 3: floor(N/2) = 1 = l, so the constant second regime applies
    assert outer_bound(10**6, 3, 3, 1) == 1
    with pytest.raises(DomainError):
        outer_bound(Fraction(1, 2), 30, 30, 5)


def test_outer_bound_against_direct_max():
    for n in range(1, 21):
        for k in range(2, 12):
            for l in range(1, k):
                top = min(n // 2, k)
                for m in (1, Fraction(5, 3), 4, 9):
                    if l >= top:
                        want = Fraction(top)
                    else:
                        want = max(
                            Fraction(s * (n // s) - l - (s - l) * m, n // s - 1) for s in range(l, top + 1)
                        )
                        want = max(want, 0)
                    assert outer_bound(m, n, k, l) == want


def test_second_regime_is_flat():
    for n, k, l in ((4, 4, 2), (5, 6, 3), (3, 9, 1), (30, 30, 15), (30, 30, 20)):
        assert l >= min(n // 2, k)
        vals = {outer_bound(m, n, k, l) for m in (1, 2, Fraction(7, 3), 50)}
        assert len(vals) == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 40), st.integers(2, 40), st.data())
def test_envelope_properties(n, k, data):
    l = data.draw(st.integers(1, k - 1))
    curve = achievable_points(n, k, l)
    env = curve.envelope
    assert env[0].memory == 1
    assert all(a.memory < b.memory and a.rate >= b.rate for a, b in zip(env, env[1:]))
    slopes = [(b.rate - a.rate) / (b.memory - a.memory) for a, b in zip(env, env[1:])]
    assert all(x < y for x, y in zip(slopes, slopes[1:]))
    for p in curve.points:
        assert curve.envelope_at(p.memory) <= p.rate


def test_envelope_drops_dominated_points():
    pts = [RatePoint(0, Fraction(1), Fraction(4)), RatePoint(1, Fraction(2), Fraction(3)),
           RatePoint(2, Fraction(3), Fraction(2)), RatePoint(3, Fraction(2), Fraction(5))]
    env = lower_convex_envelope(pts)
    # (2, 3) is collinear with its neighbours, (2, 5) is dominated
    assert [(p.memory, p.rate) for p in env] == [(1, 4), (3, 2)]


def test_cutset_soundness_grid():
    for n in range(1, 31):
        for k in range(2, 31):
            for l in range(1, k):
                for p in achievable_points(n, k, l).points:
                    assert not cutset_violations(p.memory, p.rate, n, k, l), (n, k, l, p)
                    assert p.rate >= outer_bound(p.memory, n, k, l)


def test_cutset_detects_infeasible_point():
    assert cutset_violations(1, 1, 30, 30, 5)


def test_gap_30_30_5():
    rows = gap_ratio(30, 30, 5)
    assert [r.t for r in rows] == list(range(6))
    assert [r.ratio for r in rows] == RATIOS_30_30_5
    assert all(r.flagged for r in rows)
    assert max(r.ratio for r in rows) < 3
    for r in rows:
        assert r.ratio == r.rate / r.outer


def test_corollary_flag():
    assert corollary_flag(30, 30, 1, 3)
    assert not corollary_flag(30, 30, 1, 2)
    assert not corollary_flag(10, 31, 1, 10)


def test_ratio_is_one_when_bounds_meet():
    # N = 2, K = 2, l = 1: regime 2 bound 1, and the t = 1 point has rate 1
    rows = gap_ratio(2, 2, 1)
    assert any(r.ratio == 1 for r in rows)
