from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from gaudinlab.rings import (
    LaurentSeries,
    MPoly,
    RatFn,
    WPoly,
    as_rat,
    bareiss_det,
    falling_factorial,
    fmt_rat,
    laurent_at,
    taylor_at_infinity,
)

rats = st.fractions(min_value=-5, max_value=5, max_denominator=6)
small_lists = st.lists(rats, min_size=0, max_size=4)
POINTS = [F(0), F(1), F(-2), F(1, 2)]


def ratfns():
    poles = st.dictionaries(
        st.tuples(st.sampled_from(POINTS), st.integers(1, 3)), rats, max_size=4
    )
    return st.builds(lambda p, q: RatFn(p, q), st.lists(rats, max_size=3), poles)


def wpolys():
    return st.builds(WPoly, small_lists)


def mpolys():
    mono = st.sampled_from(
        [(), ((("w",), 1),), ((("y", 1, 1, 1), 1),), ((("y", 1, 1, 1), 2),), ((("y", 2, 1, 1), 1), (("w",), 1))]
    )
    return st.builds(MPoly, st.dictionaries(mono, rats, max_size=4))


class TestScalars:
    def test_fmt(self):
        assert fmt_rat(F(3, 4)) == "3/4"
        assert fmt_rat(F(-6, 3)) == "-2"
        assert as_rat("-5/10") == F(-1, 2)

    def test_floats_rejected(self):
        with pytest.raises(TypeError):
            as_rat(0.5)

    def test_falling_factorial(self):
        assert falling_factorial(5, 3) == 60
        assert falling_factorial(F(7, 2), 0) == 1
        assert falling_factorial(WPoly.w(), 2) == WPoly([0, -1, 1])
        assert repr(falling_factorial(WPoly.w(), 2)) == "w^2 - w"


class TestWPoly:
    @settings(max_examples=60, deadline=None)
    @given(wpolys(), wpolys(), wpolys())
    def test_ring_axioms(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a

    @settings(max_examples=60, deadline=None)
    @given(wpolys(), wpolys(), rats)
    def test_evaluation_is_homomorphism(self, p, q, t):
        assert (p * q).eval(t) == p.eval(t) * q.eval(t)
        assert (p + q).eval(t) == p.eval(t) + q.eval(t)

    def test_divexact(self):
        w = WPoly.w()
        assert ((w - 1) * (w + 3)).divexact(w + 3) == w - 1


class TestMPoly:
    @settings(max_examples=40, deadline=None)
    @given(mpolys(), mpolys(), mpolys())
    def test_ring_axioms(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c

    def test_subs_and_linear_parts(self):
        y = MPoly.y(1, 1, 1)
        w = MPoly.w()
        p = y * 3 + w * 2 + 1
        assert p.subs({("y", 1, 1, 1): 2, ("w",): 5}) == 17
        const, lin = p.linear_parts()
        assert const == 1 and lin[("y", 1, 1, 1)] == 3

    def test_w_coefficients(self):
        y = MPoly.y(2, 1, 1)
        p = y * MPoly.w() + y * 2 + MPoly.w()
        groups = p.w_coefficients()
        assert groups[((("y", 2, 1, 1), 1),)] == WPoly([2, 1])
        assert groups[()] == WPoly([0, 1])


class TestRatFn:
    def test_partial_fractions(self):
        f = RatFn.pole(0) * RatFn.pole(1)
        assert f == RatFn.pole(1) - RatFn.pole(0)

    def test_derivative(self):
        z = F(3, 2)
        assert RatFn.pole(z).derivative() == RatFn.pole(z, 2, F(-1))

    def test_same_point_product(self):
        assert RatFn.pole(0) * RatFn.pole(0) == RatFn.pole(0, 2)

    def test_polynomial_times_pole(self):
        u = RatFn.u()
        # u^2/(u-1) = u + 1 + 1/(u-1)
        assert u * u * RatFn.pole(1) == RatFn([1, 1], {(F(1), 1): 1})

    @settings(max_examples=60, deadline=None)
    @given(ratfns(), ratfns(), ratfns())
    def test_ring_axioms(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a * b == b * a

    @settings(max_examples=60, deadline=None)
    @given(ratfns(), rats.filter(lambda t: t not in POINTS))
    def test_product_evaluates_pointwise(self, a, t):
        b = RatFn.pole(F(1), 2, F(3)) + RatFn([F(1, 2)])
        assert (a * b).eval(t) == a.eval(t) * b.eval(t)

    @settings(max_examples=60, deadline=None)
    @given(ratfns())
    def test_fraction_round_trip(self, a):
        num, den = a.to_fraction()
        orders = {}
        for z, j in a.poles:
            orders[z] = max(orders.get(z, 0), j)
        assert RatFn.from_fraction(num, orders) == a


class TestLaurent:
    def test_pole_at_own_point(self):
        s = laurent_at(RatFn.pole(F(2)), F(2), 2)
        assert s.items() == [(-1, 1)]

    def test_geometric(self):
        s = laurent_at(RatFn.pole(1), 0, 2)
        assert [s.coeff(k) for k in range(3)] == [-1, -1, -1]

    def test_double_pole_elsewhere(self):
        # 1/(x - 1)^2 = sum (k+1) x^k at z_b = 0, z_a = 1
        s = laurent_at(RatFn.pole(1, 2), 0, 5)
        assert s.valuation == 0
        assert [s.coeff(k) for k in range(6)] == [1, 2, 3, 4, 5, 6]

    def test_infinity(self):
        z = F(2, 3)
        s = taylor_at_infinity(RatFn.pole(z), 3)
        assert [s.coeff(k) for k in range(4)] == [0, 1, z, z * z]
        s2 = taylor_at_infinity(RatFn.pole(z, 2), 4)
        assert [s2.coeff(k) for k in range(5)] == [0, 0, 1, 2 * z, 3 * z * z]
        assert taylor_at_infinity(RatFn.const(1), 3).items() == [(0, 1)]

    @settings(max_examples=50, deadline=None)
    @given(ratfns(), ratfns(), st.sampled_from([F(0), F(1), F(7)]))
    def test_multiplicative(self, a, b, z):
        T = 4
        prod = laurent_at(a * b, z, T)
        sa, sb = laurent_at(a, z, T + 6), laurent_at(b, z, T + 6)
        assert prod.agrees_with(sa * sb, T)

    def test_inverse(self):
        s = LaurentSeries(-1, [F(2), F(1), F(3)], 1)
        inv = s.inverse(4)
        assert (s * inv).agrees_with(LaurentSeries.monomial(1, 0), 2)

    def test_coeff_beyond_order_raises(self):
        with pytest.raises(ValueError):
            LaurentSeries(0, [1], 0).coeff(3)


class TestBareiss:
    def test_integer(self):
        assert bareiss_det([[2, 1, 0], [1, 3, 1], [0, 1, 4]]) == 18

    def test_pivot_swap(self):
        assert bareiss_det([[0, 1], [1, 0]]) == -1

    def test_polynomial_matrix(self):
        y = MPoly.y(1, 1, 1)
        w = MPoly.w()
        det = bareiss_det([[y, w], [w, y]])
        assert det == y * y - w * w
