import itertools
import random
from fractions import Fraction as F
from math import comb, factorial

import pytest

from gaudinlab import diagrams as dg
from gaudinlab.gaudin import (
    B_tilde,
    DimensionError,
    GlnModule,
    NCPoly,
    UDiffOp,
    cdet_direct,
    evaluate_to_deligne,
    evaluate_to_matrices,
    gaudin_S,
    lax_operator,
    newton_sigma,
    sigma_series,
    trace_power,
    universal_B,
)
from gaudinlab.linalg import QMat
from gaudinlab.partitions import Bipartition, bipartition_to_weight
from gaudinlab.rings import RatFn, WPoly, falling_factorial

ZS = (F(0), F(1))


def pole(a, j=1, c=1):
    return RatFn.pole(ZS[a - 1], j, F(c))


def same_op(x, y):
    keys = set(x.terms) | set(y.terms)
    for k in keys:
        a, b = x.terms.get(k), y.terms.get(k)
        if a is None or b is None:
            return False
        if not (a - b).is_zero():
            return False
    return True


class TestTracePower:
    def test_k1(self):
        t = trace_power(1, 2, ZS)
        assert t.coeff(1) == NCPoly({((),): 1})
        assert t.coeff(0) == NCPoly({((1,),): pole(1, c=-1), ((2,),): pole(2, c=-1)})

    def test_k2(self):
        t = trace_power(2, 2, ZS)
        assert t.coeff(2) == NCPoly({((),): 1})
        assert t.coeff(1) == NCPoly({((1,),): pole(1, c=-2), ((2,),): pole(2, c=-2)})
        expected = {}
        for a, b in itertools.product((1, 2), repeat=2):
            expected[((a, b),)] = pole(a) * pole(b)
        for a in (1, 2):
            expected[((a,),)] = pole(a, 2)
        assert t.coeff(0) == NCPoly(expected)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_leading_term_is_dimension(self, k):
        assert trace_power(k, 2, ZS).coeff(k) == NCPoly({((),): 1})

    def test_distinct_points_required(self):
        with pytest.raises(ValueError):
            trace_power(2, 2, [0, 0])

    def test_S_extraction(self):
        assert gaudin_S(1, 1, 1, 2, 2, ZS) == NCPoly({((2,),): -1})
        with pytest.raises(ValueError):
            gaudin_S(1, 2, 1, 1, 2, ZS)


class TestNewton:
    def test_low_orders(self):
        t = [trace_power(k, 2, ZS) for k in (1, 2)]
        s = newton_sigma(t, 2)
        assert same_op(s[1], t[0])
        assert same_op(s[2], (t[0] * t[0] - t[1]).scale(F(1, 2)))

    def test_commutative_scalar(self):
        # gl_1: cdet(1 + alpha a) = 1 + alpha a has no alpha^2 term
        mod = GlnModule(1, [(2,), (-1,)])
        sig = sigma_series(2, 2, ZS)
        assert evaluate_to_matrices(sig[2], mod).is_zero()

    def test_B_tilde_constant_terms(self):
        # sigma_r starts with binom(C_0, r) d^r; on matrices C_0 = n
        mod = GlnModule(3, [(1, 0, 0), (1, 1, 0)])
        for r in (1, 2, 3):
            lead = evaluate_to_matrices(B_tilde(r, 0, 2, ZS), mod)
            assert lead == mod.identity() * comb(3, r)

    def test_B111(self):
        assert universal_B(1, 1, 1, 1, 2, ZS) == NCPoly({((1,),): -1})
        mod = GlnModule(2, [(1, 0), (1, 0)])
        assert evaluate_to_matrices(universal_B(1, 1, 1, 1, 2, ZS), mod) == mod.identity() * -1

    def test_index_errors(self):
        with pytest.raises(ValueError):
            universal_B(2, 3, 1, 1, 2, ZS)
        with pytest.raises(ValueError):
            universal_B(2, 2, 1, 3, 2, ZS)


class TestModules:
    def test_C1_identity(self):
        mod = GlnModule(2, [(1, 0)])
        assert evaluate_to_matrices(NCPoly.word((1,)), mod) == QMat.identity(2)

    def test_C2_flip(self):
        mod = GlnModule(2, [(1, 0), (1, 0)])
        flip = QMat.from_entries(4, 4, [(0, 0, 1), (1, 2, 1), (2, 1, 1), (3, 3, 1)])
        assert evaluate_to_matrices(NCPoly.word((1, 2)), mod) == flip

    def test_empty_word(self):
        mod = GlnModule(3, [(1, 0, 0)])
        assert evaluate_to_matrices(NCPoly.word(()), mod) == QMat.identity(3) * 3

    @pytest.mark.parametrize(
        "weights,dim",
        [([(2, 0)], 3), ([(1, 1, 0)], 3), ([(2, 1, 0)], 8), ([(0, -1, -1)], 3), ([(0, 0, -2)], 6), ([(2, 0), (0, -1)], 6)],
    )
    def test_dimension(self, weights, dim):
        mod = GlnModule(len(weights[0]), weights)
        assert mod.dim == dim
        assert mod.projector * mod.projector == mod.projector

    @pytest.mark.parametrize("weights", [[(2, 0, 0)], [(0, -1, -1)], [(1, 0), (0, -2)]])
    def test_gl_relations(self, weights):
        n = len(weights[0])
        mod = GlnModule(n, weights)
        E = lambda i, j: sum((mod.generator(a, i, j) for a in range(1, mod.m + 1)), QMat.zeros(mod.dim, mod.dim))
        for i, j, k, l in itertools.product(range(n), repeat=4):
            lhs = E(i, j) * E(k, l) - E(k, l) * E(i, j)
            rhs = QMat.zeros(mod.dim, mod.dim)
            if j == k:
                rhs = rhs + E(i, l)
            if l == i:
                rhs = rhs - E(k, j)
            assert lhs == rhs

    def test_dimension_cap(self):
        with pytest.raises(DimensionError):
            GlnModule(3, [(3, 0, 0), (3, 0, 0)], dim_cap=500)


class TestCdet:
    def test_n1(self):
        mod = GlnModule(1, [(1,), (2,)])
        op = cdet_direct(1, 2, ZS, mod)
        a = lax_operator(mod, ZS)[0][0]
        assert same_op(op, a)
        c0 = op.coeff(0)
        assert c0.pole_coeff(0, 1) == QMat.identity(1) * -1
        assert c0.pole_coeff(1, 1) == QMat.identity(1) * -2

    @pytest.mark.parametrize(
        "n,weights",
        [(2, [(1, 0), (1, 0)]), (2, [(2, 0), (0, -1)]), (3, [(1, 0, 0), (1, 1, 0)]), (3, [(1, 0, 0), (0, 0, -1)])],
    )
    def test_newton_matches_cdet(self, n, weights):
        mod = GlnModule(n, weights)
        sig = sigma_series(n, 2, ZS)
        assert same_op(evaluate_to_matrices(sig[n], mod), cdet_direct(n, 2, ZS, mod))
        graded = cdet_direct(n, 2, ZS, mod, with_alpha=True)
        for r in range(1, n + 1):
            part = UDiffOp({(0, p): c for (g, p), c in graded.terms.items() if g == r})
            assert same_op(evaluate_to_matrices(sig[r], mod), part)

    def test_cap(self):
        mod = GlnModule(2, [(1, 0), (1, 0)])
        with pytest.raises(ValueError):
            cdet_direct(2, 2, ZS, mod, cap=1)


class TestManin:
    def test_random_quadruples(self):
        # entries of d - L(u), as operators with matrix coefficients, satisfy [a_ij, a_pq] = [a_pj, a_iq]
        rng = random.Random(7)
        mod = GlnModule(3, [(1, 0, 0), (1, 1, 0)])
        ops = lax_operator(mod, ZS)

        def commutator(x, y):
            return x * y - y * x

        for _ in range(12):
            i, j, p, q = (rng.randrange(3) for _ in range(4))
            lhs = commutator(ops[i][j], ops[p][q])
            rhs = commutator(ops[p][j], ops[i][q])
            assert same_op(lhs, rhs)


def _matrix_binomial(n, weights):
    mod = GlnModule(n, weights)
    for r in range(1, n + 1):
        for s in range(1, r + 1):
            lhs = evaluate_to_matrices(B_tilde(r, s, 2, ZS), mod, True)
            rhs = evaluate_to_matrices(B_tilde(s, s, 2, ZS), mod, True)
            if not (lhs - rhs * comb(n - s, r - s)).is_zero():
                return False
    return True


class TestBinomial:
    @pytest.mark.parametrize("n,weights", [(2, [(1, 0), (2, 0)]), (3, [(1, 0, 0), (0, 0, -1)])])
    def test_matrix(self, n, weights):
        assert _matrix_binomial(n, weights)

    def test_deligne_w(self):
        bps = (Bipartition((2,), ()), Bipartition((), (1,)))
        w = WPoly.w()
        for r in (1, 2, 3):
            for s in range(1, r + 1):
                lhs = evaluate_to_deligne(B_tilde(r, s, 2, ZS), bps, True)
                rhs = evaluate_to_deligne(B_tilde(s, s, 2, ZS), bps, True)
                assert not rhs.is_zero()
                binom = falling_factorial(w - s, r - s) * F(1, factorial(r - s))
                assert (lhs - rhs * binom).is_zero()


class TestTransport:
    @pytest.mark.parametrize(
        "bps",
        [
            (Bipartition((1,), ()), Bipartition((1,), ())),
            (Bipartition((2,), ()), Bipartition((), (1,))),
        ],
    )
    def test_S_klj(self, bps):
        N = sum(bp.length for bp in bps)
        for k in (1, 2):
            t = trace_power(k, 2, ZS)
            for l in range(1, k + 1):
                for j in range(1, l + 1):
                    for a in (1, 2):
                        S = gaudin_S(k, l, j, a, 2, ZS)
                        D = evaluate_to_deligne(S, bps)
                        for n in (max(N, 2), max(N, 2) + 1):
                            mod = GlnModule(n, [bipartition_to_weight(bp, n) for bp in bps], restrict=False)
                            assert dg.evaluate_G_n(D, n) == mod.sandwich(evaluate_to_matrices(S, mod))

    def test_empty_word_is_w(self):
        bps = (Bipartition((1,), ()),)
        D = evaluate_to_deligne(NCPoly.word(()), bps)
        assert D == dg.identity("b") * WPoly.w()
