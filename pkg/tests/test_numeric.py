import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from wdim.numeric import (AffinePlane, Box, BudgetExceeded, affine_hull, dangerous_rationals, fmt, frac,
                          matrix_rank, plane_meets_box, pow_cmp, subdivide, tau_rationals, weighted_norm_approx,
                          weighted_norm_cmp)

rats = st.fractions(min_value=-10, max_value=10, max_denominator=50)
pos = st.fractions(min_value=F(1, 50), max_value=10, max_denominator=50)
exps = st.fractions(min_value=F(1, 7), max_value=3, max_denominator=7)


def test_frac_accepts_exact_inputs_only():
    assert frac("3/4") == F(3, 4)
    assert frac(" 2 ") == 2
    assert frac("0.125") == F(1, 8)
    with pytest.raises(TypeError):
        frac(0.5)
    with pytest.raises(TypeError):
        frac(True)


def test_fmt_round_trip():
    assert fmt(F(6, 4)) == "3/2"
    assert fmt(F(-4, 2)) == "-2"
    assert frac(fmt(F(-7, 9))) == F(-7, 9)


@given(st.fractions(min_value=0, max_value=10, max_denominator=30), exps, pos)
def test_pow_cmp_matches_high_precision_float(x, u, c):
    import mpmath
    with mpmath.workdps(60):
        lhs = mpmath.mpf(x.numerator) / x.denominator
        rhs = mpmath.power(mpmath.mpf(c.numerator) / c.denominator, mpmath.mpf(u.numerator) / u.denominator)
        if abs(lhs - rhs) < mpmath.mpf(10) ** -40:
            return
        want = 1 if lhs > rhs else -1
    assert pow_cmp(x, u, c) == want


def test_pow_cmp_exact_ties():
    assert pow_cmp(F(1, 2), F(1, 2), F(1, 4)) == 0
    assert pow_cmp(F(8), F(3, 2), F(4)) == 0


def test_weighted_norm_small_cases():
    # max(|1/4|^2, |1/8|^(3/2)) = 1/16
    assert weighted_norm_cmp([F(1, 4), F(1, 8)], [F(1, 2), F(2, 3)], F(1, 16)) == "equal"
    assert weighted_norm_cmp([F(1, 4), F(-1, 8)], [F(1, 2), F(2, 3)], F(1, 15)) == "less"
    assert weighted_norm_cmp([F(1, 4), F(1, 8)], [F(1, 2), F(2, 3)], F(1, 17)) == "greater"
    assert float(weighted_norm_approx([F(1, 4), F(1, 8)], [F(1, 2), F(2, 3)])) == pytest.approx(1 / 16)


@given(st.lists(rats, min_size=2, max_size=2), st.sampled_from([(F(1, 2), F(1, 2)), (F(1, 3), F(2, 3))]), pos)
def test_weighted_norm_consistent_with_approx(x, u, c):
    import mpmath
    v = weighted_norm_approx(x, u, 40)
    got = weighted_norm_cmp(x, u, c)
    cv = mpmath.mpf(c.numerator) / c.denominator
    if abs(v - cv) > mpmath.mpf(10) ** -30:
        assert got == ("less" if v < cv else "greater")


def test_box_predicates():
    A = Box((0, 0), (1, 1))
    B = Box((1, 0), (2, 1))
    assert A.meets(B) and not A.meets_interior(B)
    assert A.contains_point((F(1, 2), 1)) and not A.contains_point((2, 0))
    assert A.contains_box(Box((F(1, 4), F(1, 4)), (F(1, 2), 1)))
    assert Box.from_center((1, 1), (F(1, 2), F(1, 4))).side == (1, F(1, 2))
    assert len(list(A.corners())) == 4
    with pytest.raises(ValueError):
        Box((0,), (0,))


@given(st.fractions(min_value=F(1, 20), max_value=1, max_denominator=20),
       st.fractions(min_value=F(1, 20), max_value=1, max_denominator=20),
       st.sampled_from(["lo", "hi"]))
def test_subdivide_tiles_the_box(sx, sy, anchor):
    E = Box((0, 0), (1, 1))
    full, rem = subdivide(E, (sx, sy), anchor)
    assert sum(b.volume() for b in full + rem) == 1
    assert all(b.side == (sx, sy) for b in full)
    assert len(full) == math.floor(1 / sx) * math.floor(1 / sy)
    for a, b in itertools.combinations(full + rem, 2):
        assert not a.meets_interior(b)


def test_affine_hull_and_plane_meeting():
    rank, plane = affine_hull([(0, 0), (1, 1), (2, 2)], 2)
    assert rank == 1 and plane.contains((5, 5)) and not plane.contains((1, 0))
    rank, plane = affine_hull([(0, 0), (1, 0), (0, 1)], 2)
    assert rank == 2 and plane is None
    rank, plane = affine_hull([(1, 2)], 2)
    assert rank == 0 and plane.contains((1, 2))
    P = AffinePlane((1, 1), 1)
    assert plane_meets_box(P, (0, 0), (F(1, 2), F(1, 2)))
    assert not plane_meets_box(P, (0, 0), (F(1, 3), F(1, 3)))
    assert matrix_rank([(1, 2), (2, 4)]) == 1


def _brute_dangerous(E, s_lo, s_hi, u, eps):
    out = set()
    for s in range(s_lo, s_hi):
        axes = []
        for lo, hi, ui in zip(E.lo, E.hi, u):
            ok = []
            for r in range(math.floor(s * lo) - 2, math.ceil(s * hi) + 3):
                gap = max(F(0), s * lo - r, r - s * hi)
                if pow_cmp(gap, ui, eps / s) <= 0:
                    ok.append(r)
            axes.append(ok)
        for r in itertools.product(*axes):
            out.add((r, s))
    return out


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=0, max_value=1, max_denominator=97),
       st.fractions(min_value=0, max_value=1, max_denominator=97),
       st.fractions(min_value=F(1, 200), max_value=F(1, 10), max_denominator=200),
       st.fractions(min_value=F(1, 100), max_value=F(1, 2), max_denominator=100))
def test_dangerous_rationals_match_brute_force(cx, cy, rad, eps):
    E = Box.from_center((cx, cy), (rad, rad))
    u = (F(1, 3), F(2, 3))
    got = {(p.p, p.q) for p in dangerous_rationals(E, 1, 30, u, eps)}
    assert got == _brute_dangerous(E, 1, 30, u, eps)


def test_tau_rationals_definition():
    E = Box((F(1, 3), F(1, 3)), (F(2, 5), F(2, 5)))
    w, tau = (F(1, 2), F(1, 2)), F(4)
    got = {(p.p, p.q) for p in tau_rationals(E, 1, 40, w, tau)}
    want = set()
    for s in range(1, 40):
        for r in itertools.product(range(0, s + 1), repeat=2):
            # distance from r to s*E on each axis within s^(-tau w_i) = s^-2
            if all(max(F(0), s * a - ri, ri - s * b) <= F(1, s * s) for a, b, ri in zip(E.lo, E.hi, r)):
                want.add((r, s))
    assert got == want


def test_scan_budget():
    E = Box((0, 0), (1, 1))
    with pytest.raises(BudgetExceeded):
        dangerous_rationals(E, 1, 10**4, (F(1, 2), F(1, 2)), F(1, 2), budget=1000)


def test_huge_rationals_round_trip():
    x = 1 - F(1, 2**20000)
    assert frac(fmt(x)) == x
    assert frac(fmt(-x * 3)) == -3 * x
