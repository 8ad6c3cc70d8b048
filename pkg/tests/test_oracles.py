"""Cross-checks against sympy, used here only as an independent oracle."""

import random
from fractions import Fraction as F

import pytest
import sympy as sp

from gaudinlab.fuchs import FuchsOp
from gaudinlab.psdo import PsDO, psdo_inverse
from gaudinlab.rings import LaurentSeries, bareiss_det

u = sp.Symbol("u")


def to_sympy(q):
    return sp.Rational(q.numerator, q.denominator)


@pytest.mark.parametrize("size", [1, 2, 3, 4, 5])
def test_bareiss_matches_sympy(size):
    rng = random.Random(size)
    for _ in range(10):
        rows = [[F(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(size)] for _ in range(size)]
        assert to_sympy(bareiss_det(rows)) == sp.Matrix([[to_sympy(c) for c in r] for r in rows]).det()


@pytest.mark.parametrize(
    "polys,zs",
    [
        ([[0, F(-1, 2), 1], [0, 0, 0, 1]], (0, 1)),
        ([[1], [0, 1]], (0,)),
        ([[1, 1], [0, 0, 1]], (0, -2)),
        ([[1], [0, 0, 0, 1]], (0,)),
        ([[1], [0, 0, 1], [0, 0, 0, 0, 1]], (0,)),
    ],
)
def test_kernel_operator_matches_sympy(polys, zs):
    """The monic operator with the given kernel, rebuilt from sympy Wronskians."""
    fs = [sum(to_sympy(F(c)) * u**k for k, c in enumerate(p)) for p in polys]
    n = len(fs)
    D = FuchsOp.from_kernel(polys, zs)
    for f in fs:
        total = sp.diff(f, u, n)
        for i in range(1, n + 1):
            b = D.b(i)
            expr = sum(to_sympy(c) / (u - to_sympy(z)) ** j for (z, j), c in b.poles.items())
            total += expr * sp.diff(f, u, n - i)
        assert sp.simplify(total) == 0


def test_kernel_wronskian_outside_poles():
    # W(1, u^2 - 1) vanishes at u = 0 only, but the pole list is {1}
    with pytest.raises(ValueError):
        FuchsOp.from_kernel([[1], [-1, 0, 1]], (1,))


def _series_to_sympy(s, x):
    return sum(to_sympy(c) * x**k for k, c in s.items())


def test_inverse_square_factorization():
    x = sp.Symbol("x")
    f = sp.Function("f")(x)
    outer = lambda g: sp.diff(g, x) - g / x
    inner = lambda g: sp.diff(g, x) + g / x
    assert sp.simplify(outer(inner(f)) - (sp.diff(f, x, 2) - 2 * f / x**2)) == 0


def test_first_order_inverse_against_sympy_series():
    """Coefficients of (d + a)^{-1} = sum_k c_k d^{-1-k}, recomputed in sympy.

    Comparing powers of d in (d + a) X = 1 gives c_0 = 1 and
    c_k = -c_{k-1}' - a c_{k-1}.
    """
    x = sp.Symbol("x")
    q, a1 = F(3), F(2, 5)
    a = to_sympy(q) / x + to_sympy(a1) * x
    depth = 4
    one = LaurentSeries.monomial(F(1), 0)
    P = PsDO.from_coeffs(1, [one, LaurentSeries.from_dict({-1: q, 1: a1})], depth)
    Pi = psdo_inverse(P)
    cs = [sp.Integer(1)]
    for _ in range(depth):
        cs.append(sp.expand(-sp.diff(cs[-1], x) - a * cs[-1]))
    for k in range(depth + 1):
        mine = _series_to_sympy(Pi.coeffs[k], x)
        assert sp.simplify(mine - cs[k]) == 0
