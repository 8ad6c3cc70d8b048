import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaudinlab.fuchs import (
    ExponentData,
    FuchsOp,
    LocalOp,
    ObstructionError,
    frobenius_solve,
    obstruction_matrices,
    random_local_op,
)
from gaudinlab.partitions import Partition
from gaudinlab.psdo import (
    PsDO,
    attach,
    conjugate_counts,
    has_no_monodromy,
    has_residue,
    hook_partition,
    matrix_R,
    psdo_inverse,
    psdo_mul,
    ratio_check,
    ratio_conditions,
    regular_at_infinity,
    residue_rho,
    wronskian,
    wronskian_factorize,
)
from gaudinlab.rings import LaurentSeries as LS
from gaudinlab.rings import RatFn, WPoly, bareiss_det, falling_factorial

ONE = LS.monomial(F(1), 0)
ZERO = LS.zero(None)
ZS = (F(0), F(1))


def xpow(k, c=1):
    return LS.monomial(F(c), k)


def first_order(tail, depth):
    """d + tail, with tail a dict exponent -> coefficient."""
    return PsDO.from_coeffs(1, [ONE, LS.from_dict({k: F(v) for k, v in tail.items()})], depth)


def random_psdo(rng, depth, order):
    coeffs = [ONE] + [LS.from_dict({k: F(rng.randint(-3, 3), rng.randint(1, 3)) for k in range(-3, 3)}) for _ in range(depth)]
    return PsDO(order, tuple(coeffs))


def unit(depth):
    return PsDO.d_power(0, depth, ONE)


def random_member(rng, lam, depth):
    """A differential operator with residue lam and no monodromy."""
    n = max(lam.length, 1) + rng.randint(0, 1)
    nu = list(lam.parts) + [0] * (n - lam.length)
    L = random_local_op(rng, n, ExponentData.from_weight(nu), depth + 2, True)
    return PsDO.from_local(L, depth)


def random_tail(rng, lead, lo):
    tail = {k: F(rng.randint(-3, 3), rng.randint(1, 3)) for k in range(lo, 4)}
    tail[-1] = tail.get(-1, 0) + lead
    return tail


SMALL_PARTITIONS = [(), (1,), (2,), (1, 1), (2, 1), (3, 1), (2, 2), (1, 1, 1), (4,), (2, 1, 1)]


class TestProduct:
    def test_d_times_x(self):
        t = F(5, 2)
        P = PsDO.d_power(t, 2, ONE) * PsDO(0, (xpow(1), ZERO, ZERO))
        assert P.order == t
        assert P.coeffs == (xpow(1), LS.monomial(t, 0), ZERO)

    def test_symbolic_order(self):
        w = WPoly.w()
        P = PsDO(w, (ONE, ZERO)) * PsDO(0, (xpow(1), ZERO))
        assert P.order == w
        assert P.coeffs[1] == LS.monomial(w, 0)

    def test_times_one(self):
        D = PsDO.d_power(F(7, 3), 3, ONE)
        assert (D * unit(3)).equals(D)

    def test_commutator_of_simple_factors(self):
        s = 3
        a = first_order({-1: -s}, 2) * first_order({-1: s}, 2)
        b = first_order({-1: s}, 2) * first_order({-1: -s}, 2)
        assert a.coeffs[1].is_zero() and b.coeffs[1].is_zero()
        assert a.coeffs[2] - b.coeffs[2] == xpow(-2, -2 * s)

    def test_depth_mismatch(self):
        with pytest.raises(ValueError):
            psdo_mul(unit(2), unit(3))

    def test_zero_leading_coefficient(self):
        with pytest.raises(ValueError):
            PsDO(1, (ZERO, ONE))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_associative(self, seed):
        rng = random.Random(seed)
        A, B, C = (random_psdo(rng, 5, F(rng.randint(-4, 4), rng.randint(1, 2))) for _ in range(3))
        assert ((A * B) * C).equals(A * (B * C))


class TestInverse:
    def test_plain_derivative(self):
        D = PsDO.d_power(1, 6, ONE)
        assert (psdo_inverse(D) * D).equals(unit(6))

    def test_simple_factor(self):
        D = first_order({-1: -2}, 6)
        Di = psdo_inverse(D)
        assert (Di * D).equals(unit(6)) and (D * Di).equals(unit(6))

    def test_first_coefficient(self):
        q, a1 = 3, F(2, 5)
        Di = psdo_inverse(first_order({-1: q, 1: a1}, 4))
        assert Di.order == -1
        assert Di.coeffs[1] == LS.from_dict({-1: -q, 1: -a1})

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_two_sided(self, seed):
        rng = random.Random(seed)
        D = random_psdo(rng, 6, F(rng.randint(-3, 3)))
        Di = psdo_inverse(D)
        assert (D * Di).equals(unit(6)) and (Di * D).equals(unit(6))

    def test_non_invertible_leading(self):
        D = PsDO(1, (RatFn.u(), RatFn()))
        with pytest.raises(ZeroDivisionError):
            psdo_inverse(D)


def regular_global(rng, depth):
    coeffs = [RatFn.const(1)]
    for i in range(1, depth + 1):
        c = RatFn()
        for z in ZS:
            for j in (i, i + 1):
                c = c + RatFn.pole(z, j, F(rng.randint(-2, 2), rng.randint(1, 2)))
        coeffs.append(c)
    return PsDO(F(rng.randint(-2, 2)), tuple(coeffs))


class TestInfinity:
    def test_examples(self):
        assert regular_at_infinity(PsDO.d_power(F(1, 2), 4, RatFn.const(1)))
        assert regular_at_infinity(PsDO.from_coeffs(1, [RatFn.const(1), RatFn.pole(F(2), 1)], 4))
        assert not regular_at_infinity(PsDO.from_coeffs(1, [RatFn.const(1), RatFn.u()], 4))

    def test_cancelling_poles(self):
        # 1/u - 1/(u-1) = -1/(u(u-1)) vanishes to order 2 at infinity
        c = RatFn.pole(0, 1) - RatFn.pole(1, 1)
        assert regular_at_infinity(PsDO.from_coeffs(2, [RatFn.const(1), RatFn(), c], 3))
        assert not regular_at_infinity(PsDO.from_coeffs(2, [RatFn.const(1), RatFn(), RatFn.pole(0, 1)], 3))

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_closure(self, seed):
        rng = random.Random(seed)
        A, B = regular_global(rng, 5), regular_global(rng, 5)
        assert regular_at_infinity(A) and regular_at_infinity(B)
        assert regular_at_infinity(A * B)
        assert regular_at_infinity(psdo_inverse(A))

    def test_local_coefficients_rejected(self):
        with pytest.raises(TypeError):
            regular_at_infinity(unit(2))


class TestResidue:
    def test_rho_of_pure_power(self):
        D = PsDO.d_power(F(3, 2), 3, ONE)
        assert residue_rho(D, Partition.of([]), 0, F(7)) == 1

    def test_rho_of_simple_factor(self):
        s = 3
        D = first_order({-1: -s}, 3)
        for a in range(-3, 5):
            assert residue_rho(D, Partition.of([s]), 0, a) == a + 1 - s

    def test_rho_is_linear(self):
        rng = random.Random(8)
        lam = Partition.of([2, 1])
        A, B = random_psdo(rng, 5, 2), random_psdo(rng, 5, 2)
        S = PsDO(2, tuple(a + b for a, b in zip(A.coeffs, B.coeffs)))
        for k in range(3):
            assert residue_rho(S, lam, k, F(1, 3)) == residue_rho(A, lam, k, F(1, 3)) + residue_rho(B, lam, k, F(1, 3))

    def test_examples(self):
        assert has_residue(unit(3), Partition.of([])).passed
        assert has_residue(first_order({-1: -2}, 3), Partition.of([2])).passed
        assert not has_residue(first_order({-1: -2}, 3), Partition.of([3])).passed

    def test_pole_depth(self):
        # a_2 with x^-2 is too deep for a partition of length 1
        D = PsDO.from_coeffs(2, [ONE, xpow(-1, -1), xpow(-2, 1)], 3)
        rep = has_residue(D, Partition.of([1]))
        assert [g.generator_id for g in rep.failures()] == ["pole[i=2,j=-2]"]


def c_psdo(c, depth=4):
    return PsDO.from_coeffs(2, [ONE, xpow(-1, -1), xpow(-1, c)], depth)


class TestMatrixR:
    def test_one_by_one(self):
        D = first_order({-1: -2, 0: 1}, 4)
        R, red = matrix_R(D, Partition.of([2]), 1, 2)
        assert len(R) == 3
        R, red = matrix_R(c_psdo(F(1)), Partition.of([1, 1]), 1, 2, check=False)
        assert len(R) == 1 and R == red

    def test_conventions_on_c_example(self):
        lam = Partition.of([1])
        for c in (F(3), F(-2), F(1, 2)):
            D = c_psdo(c)
            A = obstruction_matrices(LocalOp(2, {(0, 0): 1, (1, -1): -1, (2, -1): c}, 4), ExponentData((0, 2)), 1, 2)[1]
            plain = bareiss_det(matrix_R(D, lam, 1, 2)[1])
            assert plain == c * c == bareiss_det(A)
            assert bareiss_det(matrix_R(D, lam, 1, 2, convention="scaled")[1]) == c * c
            # the row factor of row 1 vanishes for j > l
            R = matrix_R(D, lam, 1, 2, convention="literal")[0]
            assert R[0] == [0, 0]
            assert bareiss_det(R) == 0

    def test_reduction(self):
        rng = random.Random(6)
        lam = Partition.of([3, 1])
        D = PsDO.from_local(random_local_op(rng, 2, ExponentData.from_weight([3, 1]), 8, False), 8)
        R, red = matrix_R(D, lam, 1, 3)
        # K = 3 - 0 + 2 = 5; alpha_{s+1} = lambda_2 - 2 at s = 2 removes column 2 and row 3
        assert len(R) == 5 and len(red) == 4
        assert red[2] == [R[3][c] for c in (0, 2, 3, 4)]

    def test_precondition(self):
        with pytest.raises(ValueError):
            matrix_R(first_order({-1: -2}, 3), Partition.of([3]), 1, 2)
        with pytest.raises(ValueError):
            matrix_R(first_order({-1: -2}, 3), Partition.of([2]), 2, 1)
        with pytest.raises(ValueError):
            matrix_R(first_order({-1: -2}, 3), Partition.of([2]), 1, 2, convention="other")


def frobenius_truth(L, exps, depth):
    for i in range(1, exps.n + 1):
        try:
            frobenius_solve(L, exps, i, depth)
        except ObstructionError:
            return False
    return True


class TestNoMonodromy:
    def test_simple_factor(self):
        assert has_no_monodromy(first_order({-1: -2}, 6), Partition.of([2])).passed

    def test_attached_row(self):
        rng = random.Random(1)
        D = first_order({-1: -2, 0: 1, 2: -1}, 8) * random_member(rng, Partition.of([1]), 8)
        assert has_no_monodromy(D, Partition.of([2, 1])).passed

    def test_perturbed_residue(self):
        D = first_order({-1: F(-2) + F(1, 100)}, 6)
        assert not has_no_monodromy(D, Partition.of([2])).passed

    def test_c_example(self):
        assert has_no_monodromy(c_psdo(F(0), 6), Partition.of([1])).passed
        rep = has_no_monodromy(c_psdo(F(3), 6), Partition.of([1]))
        assert [g.generator_id for g in rep.failures()] == ["detR[i=1,j=2]"]
        assert has_no_monodromy(c_psdo(F(3), 6), Partition.of([1]), convention="literal").passed

    def test_horizon_marks_unevaluated(self):
        D = first_order({-1: -2}, 2)
        rep = has_no_monodromy(D, Partition.of([2]))
        ids = {g.generator_id for g in rep.values}
        assert "detR[i=1,j=2]" not in ids

    def test_conventions_against_frobenius(self):
        rng = random.Random(11)
        agree = {"plain": 0, "literal": 0, "scaled": 0}
        trials = 60
        for _ in range(trials):
            nu = rng.choice([(1, 0), (2, 0), (2, 1), (3, 1), (1, 1), (2, 1, 0), (3, 1, 0), (3, 2, 1), (4, 2, 0)])
            exps = ExponentData.from_weight(nu)
            L = random_local_op(rng, len(nu), exps, 11, rng.random() < 0.5)
            truth = frobenius_truth(L, exps, 8)
            D = PsDO.from_local(L, 8)
            for conv in agree:
                agree[conv] += has_no_monodromy(D, Partition.of(nu), convention=conv).passed == truth
        assert agree["plain"] == trials
        assert agree["scaled"] == trials
        assert agree["literal"] < trials


class TestAttachment:
    def test_attach(self):
        assert attach(Partition.of([2, 1]), "row", 3) == Partition.of([3, 2, 1])
        assert attach(Partition.of([2, 1]), "col", 3) == Partition.of([3, 2, 1])
        assert attach(Partition.of([]), "row", 0) == Partition.of([])
        with pytest.raises(ValueError):
            attach(Partition.of([2, 1]), "row", 1)
        with pytest.raises(ValueError):
            attach(Partition.of([2, 1]), "col", 1)
        with pytest.raises(ValueError):
            attach(Partition.of([2, 1]), "diag", 1)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_row_lemma(self, seed):
        rng = random.Random(seed)
        lam = Partition.of(rng.choice(SMALL_PARTITIONS))
        D = random_member(rng, lam, 8)
        s = rng.randint(lam[1], 5)
        E = first_order(random_tail(rng, -s, 0), 8) * D
        assert has_no_monodromy(E, attach(lam, "row", s)).passed

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_column_lemma(self, seed):
        rng = random.Random(seed)
        lam = Partition.of(rng.choice(SMALL_PARTITIONS))
        D = random_member(rng, lam, 8)
        q = rng.randint(lam.length, 4)
        E = psdo_inverse(first_order(random_tail(rng, q, 1), 8)) * D
        assert has_no_monodromy(E, attach(lam, "col", q)).passed

    def test_wrong_row_detected(self):
        rng = random.Random(4)
        lam = Partition.of([2, 1])
        E = first_order({-1: -3, 0: 1}, 8) * random_member(rng, lam, 8)
        assert not has_no_monodromy(E, attach(lam, "row", 4)).passed


def _prime_product(factor, K, red_cols):
    out = F(1)
    for k in range(1, K + 1):
        if k not in red_cols:
            out *= factor(k)
    return out


class TestScalingRelations:
    """Determinant identities between R for D and for the attached operator, j = i + 1."""

    def _data(self, seed):
        rng = random.Random(seed)
        lam = Partition.of(rng.choice([(2, 1), (3, 1), (2, 2), (3, 2, 1), (2, 1, 1)]))
        L = random_local_op(rng, lam.length, ExponentData.from_weight(list(lam.parts)), 12, False)
        return rng, lam, PsDO.from_local(L, 10)

    @pytest.mark.parametrize("seed", range(6))
    def test_row(self, seed):
        rng, lam, D = self._data(seed)
        s = rng.randint(lam[1], 4)
        E = first_order(random_tail(rng, -s, 0), 10) * D
        lt = attach(lam, "row", s)
        for i in range(2, lt.length + 1):
            j = i + 1
            K = lt[i] - lt[j] + j - i
            if lt.length + K > 10:
                continue
            lhs = bareiss_det(matrix_R(E, lt, i, j)[1])
            fac = _prime_product(lambda k: lt[j] - j + 1 + k - s, K, ())
            assert lhs == fac * bareiss_det(matrix_R(D, lam, i - 1, j - 1)[1])

    @pytest.mark.parametrize("seed", range(6))
    def test_column(self, seed):
        rng, lam, D = self._data(seed)
        l = lam.length
        q = rng.randint(l, l + 1)
        E = psdo_inverse(first_order(random_tail(rng, q, 1), 10)) * D
        lt = attach(lam, "col", q)
        checked = 0
        for i in range(1, l + 1):
            j = i + 1
            if j > q:
                continue
            K = lt[i] - lt[j] + j - i
            if lt.length + K > 10:
                continue
            lhs = bareiss_det(matrix_R(E, lt, i, j)[1])
            fac = _prime_product(lambda k: falling_factorial(lt[j] - j + k + q - 1, q - l), K, ())
            assert lhs == fac * bareiss_det(matrix_R(D, lam, i, j)[1])
            checked += 1
        assert checked

    def test_literal_breaks_column_relation(self):
        bad = 0
        for seed in range(6):
            rng, lam, D = self._data(seed)
            l = lam.length
            q = rng.randint(l, l + 1)
            E = psdo_inverse(first_order(random_tail(rng, q, 1), 10)) * D
            lt = attach(lam, "col", q)
            i, j = 1, 2
            K = lt[i] - lt[j] + j - i
            fac = _prime_product(lambda k: falling_factorial(lt[j] - j + k + q - 1, q - l), K, ())
            for conv in ("literal", "scaled"):
                lhs = bareiss_det(matrix_R(E, lt, i, j, convention=conv)[1])
                bad += lhs != fac * bareiss_det(matrix_R(D, lam, i, j, convention=conv)[1])
        assert bad > 0


class TestWronskian:
    def test_hand_determinant(self):
        assert wronskian([xpow(-1), xpow(2)]) == LS.monomial(F(3), 0)

    def test_single_factor(self):
        L = LocalOp(1, {(0, 0): 1, (1, -1): -2}, None)
        (f,) = wronskian_factorize(L, ExponentData((2,)), 6)
        assert f.coeffs[1].agrees_with(xpow(-1, -2))

    def test_inverse_square(self):
        L = LocalOp(2, {(0, 0): 1, (2, -2): -2}, None)
        outer, inner = wronskian_factorize(L, ExponentData((-1, 2)), 8)
        assert outer.coeffs[1].items() == [(-1, -1)]
        assert inner.coeffs[1].items() == [(-1, 1)]
        assert (outer * inner).equals(PsDO.from_local(L, 2))

    @pytest.mark.parametrize("nu", [(2, 1), (3, 1, 0), (1, 0), (2, 2, 0)])
    def test_round_trip(self, nu):
        rng = random.Random(sum(nu))
        exps = ExponentData.from_weight(nu)
        L = random_local_op(rng, len(nu), exps, 10, True)
        factors = wronskian_factorize(L, exps, 10)
        P = factors[0]
        for f in factors[1:]:
            P = P * f
        assert P.equals(PsDO.from_local(L, len(nu)))
        # the innermost factor kills the first Frobenius solution
        f1 = frobenius_solve(L, exps, 1, 9).series
        h = factors[-1].coeffs[1]
        assert (f1.derivative() + h * f1).truncate(6).is_zero()

    def test_obstruction_propagates(self):
        L = LocalOp(2, {(0, 0): 1, (1, -1): -1, (2, -1): F(3)}, 8)
        with pytest.raises(ObstructionError):
            wronskian_factorize(L, ExponentData((0, 2)), 6)


class TestHooks:
    def test_examples(self):
        assert hook_partition((2, 1), (-1,), 2, 1) == Partition.of([2, 1, 1])
        assert hook_partition((2, 1), (0, 0), 2, 2) == Partition.of([2, 1])
        assert hook_partition((1, 1), (-2,), 2, 1, truncate=True) == Partition.of([1, 1, 1])
        assert hook_partition((1, 1), (-2,), 2, 1) == Partition.of([1, 1, 1, 1])

    def test_conjugate_counts(self):
        assert conjugate_counts([3, 1]) == [2, 1, 1]
        assert conjugate_counts([]) == []

    def test_invalid(self):
        with pytest.raises(ValueError):
            hook_partition((1, 0), (-1,), 2, 1)
        with pytest.raises(ValueError):
            hook_partition((1, 0), (1,), 2, 1)
        with pytest.raises(ValueError):
            hook_partition((1,), (0,), 2, 1)


DN = FuchsOp.from_kernel([[0, F(-1, 2), 1], [0, 0, 0, 1]], ZS)
DNP = FuchsOp.from_ratfns(1, ZS, [RatFn.pole(0, 1, F(1))])
NUS = [(2, 1), (1, 0)]
ETAS = [(-1,), (0,)]


class TestRatio:
    def test_desk_case(self):
        rep = ratio_check(DN, DNP, NUS, ETAS, 8)
        assert rep.hooks == (Partition.of([2, 1, 1]), Partition.of([1]))
        assert rep.passed
        evaluated = [g for g in rep.stabilized.values if g.evaluated]
        assert len(evaluated) > 90
        assert all(g.value == 0 for g in evaluated)
        assert all(r.passed for _, r in rep.local)

    def test_no_denominator(self):
        rep = ratio_check(DN, None, NUS, [(), ()], 6)
        assert rep.passed and rep.hooks == (Partition.of([2, 1]), Partition.of([1]))

    def test_equal_operators(self):
        D = FuchsOp(1, ZS, {})
        rep = ratio_check(D, D, [(0,), (0,)], [(0,), (0,)], 6)
        assert rep.passed
        assert all(g.value == 0 for g in rep.stabilized.values if g.evaluated)

    @pytest.mark.parametrize("i", [1, 2, 3])
    def test_perturbation_detected(self, i):
        P = PsDO.from_fuchs(DN, 8) * psdo_inverse(PsDO.from_fuchs(DNP, 8))
        coeffs = list(P.coeffs)
        coeffs[i] = coeffs[i] + RatFn.pole(0, 1, F(1, 5))
        rep = ratio_conditions(PsDO(P.order, tuple(coeffs)), ZS, (Partition.of([2, 1, 1]), Partition.of([1])))
        assert not rep.passed
        assert rep.stabilized.failures()

    def test_full_conjugate_needed(self):
        Dnp = FuchsOp.from_ratfns(1, ZS, [RatFn.pole(0, 1, F(2))])
        rep = ratio_check(DN, Dnp, NUS, [(-2,), (0,)], 8)
        assert rep.hooks[0] == Partition.of([2, 1, 1, 1]) and rep.passed
        P = PsDO.from_fuchs(DN, 8) * psdo_inverse(PsDO.from_fuchs(Dnp, 8))
        truncated = hook_partition((2, 1), (-2,), 2, 1, truncate=True)
        assert not ratio_conditions(P, ZS, (truncated, Partition.of([1]))).passed

    def test_inputs_validated(self):
        with pytest.raises(ValueError):
            ratio_check(DN.map_coeffs(lambda c: c + 1), DNP, NUS, ETAS, 6)

    def test_records(self):
        rows = ratio_check(DN, DNP, NUS, ETAS, 6).records()
        assert {"point", "condition_id", "value", "zero"} <= set(rows[0])
        assert any(r["value"] == "not evaluated" for r in rows)
