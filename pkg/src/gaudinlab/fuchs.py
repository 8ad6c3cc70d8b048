"""Fuchsian operators, Frobenius exponents and the no-monodromy conditions.

A :class:`FuchsOp` is ``d^n + sum_{i,j,a} c_{ija} / (u - z_a)^j d^{n-i}`` over a
commutative coefficient ring (``Fraction`` for numeric operators, ``MPoly`` for
the universal operator in the variables ``y_ij^(a)``).  :func:`localize` turns
it into a :class:`LocalOp` ``sum b_ij x^j d_x^{n-i}`` at a pole or at infinity.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .linalg import QMat, from_fmpq
from .partitions import Bipartition, bipartition_to_weight, exponents_from_weight
from .rings import (
    LaurentSeries,
    MPoly,
    RatFn,
    as_rat,
    bareiss_det,
    falling_factorial,
    fmt_rat,
    is_zero,
    laurent_at,
    taylor_at_infinity,
)

__all__ = [
    "INFINITY",
    "ExponentData",
    "FrobeniusSolution",
    "FuchsOp",
    "GeneratorValue",
    "HorizonError",
    "LocalOp",
    "MonodromyReport",
    "ObstructionError",
    "ReductionReport",
    "ResidueError",
    "btilde",
    "evaluate_stabilized",
    "frobenius_solve",
    "indicial",
    "jn_generators",
    "local_from_solutions",
    "localize",
    "mutual_linear_reduction",
    "no_monodromy_check",
    "obstruction_factor",
    "obstruction_matrices",
    "project",
    "random_local_op",
    "rtilde",
    "stabilized_generators",
    "tilde_conversions",
]

INFINITY = "inf"

Point = Union[Fraction, str]


class ObstructionError(ArithmeticError):
    """The Frobenius recursion is inconsistent at a degenerate level."""

    def __init__(self, level: int, value: Any, exponent: int):
        self.level = level
        self.value = value
        self.exponent = exponent
        super().__init__(f"exponent {exponent}: obstruction at level {level} with value {value}")


class HorizonError(ValueError):
    """A coefficient beyond the truncation horizon was requested."""


class ResidueError(ValueError):
    """Some prescribed exponent is not a root of the indicial polynomial."""

    def __init__(self, index: int, value: Any):
        self.index = index
        self.value = value
        super().__init__(f"r_0(m_{index}) = {value} is not zero")


# ---------------------------------------------------------------------------
# exponent data


@dataclass(frozen=True)
class ExponentData:
    """Strictly increasing integers m_1 < ... < m_n."""

    m_list: Tuple[int, ...]

    def __post_init__(self) -> None:
        ms = tuple(int(m) for m in self.m_list)
        if any(a >= b for a, b in zip(ms, ms[1:])):
            raise ValueError(f"exponents {ms} are not strictly increasing")
        object.__setattr__(self, "m_list", ms)

    @classmethod
    def from_weight(cls, weight: Sequence[int]) -> "ExponentData":
        return cls(exponents_from_weight(weight))

    @property
    def n(self) -> int:
        return len(self.m_list)

    def m(self, i: int) -> int:
        """1-based access."""
        if not 1 <= i <= self.n:
            raise IndexError(f"exponent index {i} outside 1..{self.n}")
        return self.m_list[i - 1]

    def degenerate_levels(self, i: int, j: Optional[int] = None) -> List[int]:
        """Levels d with m_i + d = m_l for i < l (< j when j is given)."""
        top = self.n if j is None else j - 1
        return [self.m(l) - self.m(i) for l in range(i + 1, top + 1)]


@dataclass(frozen=True)
class FrobeniusSolution:
    exponent: int
    series: LaurentSeries

    def coefficient(self, level: int) -> Any:
        return self.series.coeff(self.exponent + level)


# ---------------------------------------------------------------------------
# small dense polynomial helpers (ascending coefficient lists over Q)


def _ptrim(p: List[Fraction]) -> List[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _padd(p: Sequence[Fraction], q: Sequence[Fraction]) -> List[Fraction]:
    out = [Fraction(0)] * max(len(p), len(q))
    for k, c in enumerate(p):
        out[k] += c
    for k, c in enumerate(q):
        out[k] += c
    return _ptrim(out)


def _pmul(p: Sequence[Fraction], q: Sequence[Fraction]) -> List[Fraction]:
    if not p or not q:
        return []
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return _ptrim(out)


def _pderiv(p: Sequence[Fraction]) -> List[Fraction]:
    return _ptrim([k * c for k, c in enumerate(p)][1:])


def _pdeflate(p: Sequence[Fraction], z: Fraction) -> Optional[List[Fraction]]:
    """p / (u - z) when exact, else None."""
    if len(p) < 2:
        return None
    n = len(p) - 1
    q = [Fraction(0)] * n
    acc = Fraction(0)
    for k in range(n, 0, -1):
        acc = p[k] + acc * z if k < n else p[k]
        q[k - 1] = acc
    if p[0] + q[0] * z != 0:
        return None
    return q


def _leibniz_det(
    mat: Sequence[Sequence[Any]], mul: Callable, add: Callable, zero: Any, neg: Callable = lambda v: -v
) -> Any:
    n = len(mat)
    total = zero
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        term = None
        for r in range(n):
            term = mat[r][perm[r]] if term is None else mul(term, mat[r][perm[r]])
        if term is None:
            continue
        total = add(total, term if inv % 2 == 0 else neg(term))
    return total


# ---------------------------------------------------------------------------
# global operators


class FuchsOp:
    """Monic operator with partial-fraction coefficients, poles only at ``zs``."""

    def __init__(self, n: int, zs: Sequence[Any], coeffs: Mapping[Tuple[int, int, int], Any]):
        if n < 1:
            raise ValueError("order must be positive")
        self.n = int(n)
        self.zs = tuple(as_rat(z) for z in zs)
        if len(set(self.zs)) != len(self.zs):
            raise ValueError("poles must be pairwise distinct")
        clean: Dict[Tuple[int, int, int], Any] = {}
        for (i, j, a), c in coeffs.items():
            if not (1 <= j <= i <= self.n) or not (1 <= a <= len(self.zs)):
                raise ValueError(f"coefficient index ({i}, {j}, {a}) out of range")
            if not is_zero(c):
                clean[(i, j, a)] = c
        self.coeffs = clean

    @property
    def m(self) -> int:
        return len(self.zs)

    @classmethod
    def universal(cls, n: int, zs: Sequence[Any]) -> "FuchsOp":
        """The operator with a free variable y_ij^(a) in every slot."""
        coeffs = {}
        for i in range(1, n + 1):
            for j in range(1, i + 1):
                for a in range(1, len(zs) + 1):
                    coeffs[(i, j, a)] = MPoly.y(i, j, a)
        return cls(n, zs, coeffs)

    @classmethod
    def from_ratfns(cls, n: int, zs: Sequence[Any], bs: Sequence[RatFn]) -> "FuchsOp":
        """From b_1, ..., b_n; each must be a sum of poles of order <= i at zs."""
        zs = tuple(as_rat(z) for z in zs)
        if len(bs) != n:
            raise ValueError(f"expected {n} coefficients, got {len(bs)}")
        coeffs = {}
        for i, b in enumerate(bs, start=1):
            if any(not is_zero(c) for c in b.poly):
                raise ValueError(f"b_{i} has a polynomial part")
            for (z, j), c in b.poles.items():
                if z not in zs:
                    raise ValueError(f"b_{i} has a pole at {fmt_rat(z)} outside the pole list")
                if j > i:
                    raise ValueError(f"b_{i} has a pole of order {j} > {i}: not Fuchsian")
                coeffs[(i, j, zs.index(z) + 1)] = c
        return cls(n, zs, coeffs)

    @classmethod
    def from_kernel(cls, polys: Sequence[Sequence[Any]], zs: Sequence[Any]) -> "FuchsOp":
        """The monic operator annihilating the given polynomials.

        ``polys`` are ascending coefficient lists.  The Wronskian must vanish
        only at points of ``zs``.
        """
        ps = [_ptrim([as_rat(c) for c in p]) for p in polys]
        n = len(ps)
        rows = []
        for p in ps:
            col = [p]
            for _ in range(n):
                col.append(_pderiv(col[-1]))
            rows.append(col)
        # column c of the Wronskian matrix holds the c-th derivatives
        def minor(skip: int) -> List[Fraction]:
            ds = [d for d in range(n + 1) if d != skip]
            mat = [[rows[p][d] for p in range(n)] for d in ds]
            return _leibniz_det(mat, _pmul, _padd, [], lambda p: [-c for c in p])

        W = minor(n)
        if not W:
            raise ValueError("kernel functions are linearly dependent")
        lead = W[-1]
        rest = list(W)
        orders: Dict[Fraction, int] = {}
        for z in (as_rat(z) for z in zs):
            while True:
                q = _pdeflate(rest, z)
                if q is None:
                    break
                rest = q
                orders[z] = orders.get(z, 0) + 1
        if len(rest) != 1:
            raise ValueError("the Wronskian has zeros outside the pole list")
        bs = []
        for i in range(1, n + 1):
            num = [c * (-1) ** i / lead for c in minor(n - i)]
            bs.append(RatFn.from_fraction(num, orders))
        return cls.from_ratfns(n, zs, bs)

    def b(self, i: int) -> RatFn:
        """The coefficient of d^{n-i}."""
        if i == 0:
            return RatFn.const(Fraction(1))
        poles = {(self.zs[a - 1], j): c for (ii, j, a), c in self.coeffs.items() if ii == i}
        return RatFn((), poles)

    def map_coeffs(self, fn: Callable[[Any], Any]) -> "FuchsOp":
        return FuchsOp(self.n, self.zs, {k: fn(c) for k, c in self.coeffs.items()})

    def apply(self, f: RatFn) -> RatFn:
        """D f for a rational function f."""
        out = RatFn()
        derivs = [f]
        for _ in range(self.n):
            derivs.append(derivs[-1].derivative())
        for i in range(self.n + 1):
            out = out + self.b(i) * derivs[self.n - i]
        return out

    def to_json(self) -> Dict[str, Any]:
        def enc(c: Any) -> Any:
            return c.to_json() if hasattr(c, "to_json") else fmt_rat(c)

        return {
            "order": self.n,
            "poles": [fmt_rat(z) for z in self.zs],
            "coeffs": [
                {"i": i, "j": j, "a": a, "value": enc(c)} for (i, j, a), c in sorted(self.coeffs.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "FuchsOp":
        coeffs = {(int(e["i"]), int(e["j"]), int(e["a"])): as_rat(e["value"]) for e in data.get("coeffs", [])}
        return cls(int(data["order"]), [as_rat(z) for z in data["poles"]], coeffs)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, FuchsOp):
            return NotImplemented
        return self.n == other.n and self.zs == other.zs and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        return f"FuchsOp(n={self.n}, zs={[fmt_rat(z) for z in self.zs]}, {len(self.coeffs)} coefficients)"


# ---------------------------------------------------------------------------
# local operators


class LocalOp:
    """sum_{i,j} b_ij x^j d_x^{n-i}, coefficients known for j <= order."""

    def __init__(self, n: int, b: Mapping[Tuple[int, int], Any], order: Optional[int], at_infinity: bool = False):
        self.n = int(n)
        self.order = order
        self.at_infinity = at_infinity
        clean: Dict[Tuple[int, int], Any] = {}
        for (i, j), c in b.items():
            if is_zero(c):
                continue
            if not 0 <= i <= self.n:
                raise ValueError(f"row index {i} outside 0..{self.n}")
            if order is not None and j > order:
                continue
            if i == 0 and j != 0:
                raise ValueError("the leading coefficient must be exactly 1")
            if not at_infinity and j < -i:
                raise ValueError(f"b_{i},{j}: pole deeper than a regular singularity allows")
            clean[(i, j)] = c
        if clean.get((0, 0)) != 1:
            raise ValueError("the leading coefficient must be exactly 1")
        self.b = clean

    def coeff(self, i: int, j: int) -> Any:
        if i == 0:
            return Fraction(1) if j == 0 else Fraction(0)
        if self.order is not None and j > self.order:
            raise HorizonError(f"b_{i},{j} lies beyond truncation order {self.order}")
        return self.b.get((i, j), Fraction(0))

    def series(self, i: int) -> LaurentSeries:
        if i == 0:
            return LaurentSeries.monomial(Fraction(1), 0)
        terms = {j: c for (ii, j), c in self.b.items() if ii == i}
        return LaurentSeries.from_dict(terms, self.order)

    def r(self, k: int, alpha: Any) -> Any:
        """r_k(alpha) = sum_i b_{i,-i+k} alpha^(n-i falling)."""
        if k < 0:
            raise ValueError("k must be non-negative")
        acc: Any = Fraction(0)
        for i in range(self.n + 1):
            c = self.coeff(i, k - i)
            if not is_zero(c):
                acc = acc + c * falling_factorial(alpha, self.n - i)
        return acc

    def apply(self, f: LaurentSeries) -> LaurentSeries:
        derivs = [f]
        for _ in range(self.n):
            derivs.append(derivs[-1].derivative())
        out = LaurentSeries.zero(None)
        for i in range(self.n + 1):
            out = out + self.series(i) * derivs[self.n - i]
        return out

    def __repr__(self) -> str:
        where = "infinity" if self.at_infinity else "finite point"
        return f"LocalOp(n={self.n}, order={self.order}, {where}, {len(self.b)} coefficients)"


def indicial(L: LocalOp, k: int, alpha: Any) -> Any:
    return L.r(k, alpha)


def _minus_x2_d_powers(p_max: int) -> List[Dict[int, LaurentSeries]]:
    """(-x^2 d)^p as {q: coefficient of d^q}, exact Laurent polynomials."""
    out = [{0: LaurentSeries.monomial(Fraction(1), 0)}]
    mx2 = LaurentSeries.monomial(Fraction(-1), 2)
    for _ in range(p_max):
        prev = out[-1]
        nxt: Dict[int, LaurentSeries] = {}
        for q, c in prev.items():
            for key, val in ((q, mx2 * c.derivative()), (q + 1, mx2 * c)):
                nxt[key] = nxt[key] + val if key in nxt else val
        out.append({q: c for q, c in nxt.items() if not c.is_zero()})
    return out


def localize(D: FuchsOp, point: Point, T: int) -> LocalOp:
    """Local operator at a pole z (x = u - z) or at infinity (u = 1/x)."""
    n = D.n
    if point == INFINITY:
        powers = _minus_x2_d_powers(n)
        sign = Fraction((-1) ** n)
        acc: Dict[int, LaurentSeries] = {}
        for i in range(n + 1):
            bi = LaurentSeries.monomial(Fraction(1), 0) if i == 0 else taylor_at_infinity(D.b(i), T + 2 * n)
            if bi.is_zero() and bi.order is not None:
                continue
            for q, c in powers[n - i].items():
                term = bi * c
                acc[q] = acc[q] + term if q in acc else term
        b: Dict[Tuple[int, int], Any] = {}
        for q, s in acc.items():
            s = s.shift(-2 * n) * sign
            for j, c in s.truncate(T).items():
                b[(n - q, j)] = c
        return LocalOp(n, b, T, at_infinity=True)
    z = as_rat(point)
    if z not in D.zs:
        raise ValueError(f"{fmt_rat(z)} is not in the pole list")
    b = {(0, 0): Fraction(1)}
    for i in range(1, n + 1):
        for j, c in laurent_at(D.b(i), z, T).items():
            b[(i, j)] = c
    return LocalOp(n, b, T)


def local_from_solutions(solutions: Sequence[LaurentSeries], T: int) -> LocalOp:
    """The monic operator whose kernel is spanned by the given exact series."""
    n = len(solutions)
    cols = []
    for f in solutions:
        col = [f]
        for _ in range(n):
            col.append(col[-1].derivative())
        cols.append(col)
    zero = LaurentSeries.zero(None)

    def minor(skip: int) -> LaurentSeries:
        ds = [d for d in range(n + 1) if d != skip]
        mat = [[cols[p][d] for p in range(n)] for d in ds]
        return _leibniz_det(mat, lambda a, b: a * b, lambda a, b: a + b, zero)

    W = minor(n)
    if W.is_zero():
        raise ValueError("solutions are linearly dependent")
    v = W.valuation
    inv = W.inverse(T + n + 1 - v)
    b: Dict[Tuple[int, int], Any] = {(0, 0): Fraction(1)}
    for i in range(1, n + 1):
        s = (minor(n - i) * inv).truncate(T)
        for j, c in s.items():
            b[(i, j)] = c * (-1) ** i
    return LocalOp(n, b, T)


# ---------------------------------------------------------------------------
# obstruction matrices and the Frobenius solver


def _check_pair(L: LocalOp, exps: ExponentData, i: int, j: int) -> None:
    if exps.n != L.n:
        raise ValueError(f"{exps.n} exponents for an operator of order {L.n}")
    if not 1 <= i < j <= exps.n:
        raise ValueError(f"need 1 <= i < j <= {exps.n}, got ({i}, {j})")


def _reduce_indices(exps: ExponentData, i: int, j: int) -> Tuple[List[int], List[int]]:
    K = exps.m(j) - exps.m(i)
    dead = set(exps.degenerate_levels(i, j))
    rows = [d for d in range(K) if d not in dead]
    cols = [c for c in range(K) if c + 1 not in dead]
    return rows, cols


def obstruction_matrices(L: LocalOp, exps: ExponentData, i: int, j: int) -> Tuple[List[List[Any]], List[List[Any]]]:
    """(A_ij, reduced A_ij); entry (d, c) of A_ij is r_{c-d+1}(m_i + d)."""
    _check_pair(L, exps, i, j)
    mi = exps.m(i)
    K = exps.m(j) - mi
    A = [[L.r(c - d + 1, mi + d) if c - d + 1 >= 0 else Fraction(0) for c in range(K)] for d in range(K)]
    rows, cols = _reduce_indices(exps, i, j)
    return A, [[A[d][c] for c in cols] for d in rows]


def obstruction_factor(L: LocalOp, exps: ExponentData, i: int, j: int) -> Any:
    """f with det(reduced A_ij) = f * v, v the recursion defect at level m_j - m_i.

    Valid when the recursion for x^{m_i} passed every earlier degenerate level.
    """
    _check_pair(L, exps, i, j)
    mi = exps.m(i)
    K = exps.m(j) - mi
    dead = set(exps.degenerate_levels(i, j))
    prod: Any = Fraction(1)
    for l in range(1, K):
        if l not in dead:
            prod = prod * L.r(0, mi + l)
    size = K - len(dead)
    return prod if size % 2 == 1 else -prod


def frobenius_solve(L: LocalOp, exps: ExponentData, i: int, depth: int) -> FrobeniusSolution:
    """x^{m_i} + a_1 x^{m_i+1} + ... + a_depth x^{m_i+depth}, gauge a_{m_k-m_i} = 0."""
    if exps.n != L.n:
        raise ValueError(f"{exps.n} exponents for an operator of order {L.n}")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if L.order is not None and depth > L.order + 1:
        raise ValueError(f"depth {depth} needs coefficients beyond order {L.order}")
    for k in range(1, exps.n + 1):
        v = L.r(0, exps.m(k))
        if not is_zero(v):
            raise ResidueError(k, v)
    mi = exps.m(i)
    dead = set(exps.degenerate_levels(i))
    cache: Dict[Tuple[int, int], Any] = {}

    def r(k: int, d: int) -> Any:
        if (k, d) not in cache:
            cache[(k, d)] = L.r(k, mi + d)
        return cache[(k, d)]

    a: List[Any] = [Fraction(1)]
    for l in range(1, depth + 1):
        s: Any = Fraction(0)
        for j in range(l):
            if not is_zero(a[j]):
                s = s + a[j] * r(l - j, j)
        if l in dead:
            if not is_zero(s):
                raise ObstructionError(l, s, mi)
            a.append(Fraction(0))
        else:
            a.append(-s / r(0, l))
    return FrobeniusSolution(mi, LaurentSeries(mi, a, mi + depth))


# ---------------------------------------------------------------------------
# the ideal J_n and the no-monodromy report


@dataclass(frozen=True)
class GeneratorValue:
    generator_id: str
    value: Any

    @property
    def evaluated(self) -> bool:
        return self.value is not None

    def is_zero(self, tol: Optional[Any] = None) -> bool:
        if self.value is None:
            return False
        if tol is None or is_zero(self.value):
            return is_zero(self.value)
        if isinstance(self.value, (int, Fraction)) and not isinstance(tol, (int, Fraction)):
            # exact value against a float-like tolerance such as mpf
            tol = Fraction(str(tol))
        return abs(self.value) <= tol

    def to_json(self) -> Dict[str, Any]:
        v = self.value
        if v is None:
            enc: Any = "not evaluated"
        elif hasattr(v, "to_json"):
            enc = v.to_json()
        else:
            enc = fmt_rat(v) if isinstance(v, (int, Fraction)) else str(v)
        return {"generator_id": self.generator_id, "value": enc, "is_zero": self.is_zero()}


@dataclass(frozen=True)
class MonodromyReport:
    values: Tuple[GeneratorValue, ...]
    tol: Optional[Any] = None

    @property
    def passed(self) -> bool:
        return all(g.is_zero(self.tol) for g in self.values if g.evaluated)

    def failures(self) -> List[GeneratorValue]:
        return [g for g in self.values if g.evaluated and not g.is_zero(self.tol)]

    def to_json(self) -> Dict[str, Any]:
        rows = []
        for g in self.values:
            row = g.to_json()
            row["is_zero"] = g.is_zero(self.tol)
            rows.append(row)
        return {"passed": self.passed, "generators": rows}


def _weights_for(D: FuchsOp, weights: Sequence[Sequence[int]]) -> List[ExponentData]:
    if len(weights) != D.m:
        raise ValueError(f"{len(weights)} weights for {D.m} poles")
    out = []
    for w in weights:
        if len(w) != D.n:
            raise ValueError(f"weight {tuple(w)} has length != {D.n}")
        out.append(ExponentData.from_weight(w))
    return out


def jn_generators(D: FuchsOp, weights: Sequence[Sequence[int]]) -> List[GeneratorValue]:
    """Residue values, reduced obstruction determinants and infinity coefficients."""
    n = D.n
    out: List[GeneratorValue] = []
    for a, exps in enumerate(_weights_for(D, weights), start=1):
        span = exps.m_list[-1] - exps.m_list[0]
        L = localize(D, D.zs[a - 1], max(span, 1))
        for i in range(1, n + 1):
            # indexed by nu_i, i.e. the exponent m_{n+1-i}
            out.append(GeneratorValue(f"gen1[a={a},i={i}]", L.r(0, exps.m(n + 1 - i))))
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                _, Abar = obstruction_matrices(L, exps, i, j)
                out.append(GeneratorValue(f"gen2[a={a},i={i},j={j}]", bareiss_det(Abar)))
    Linf = localize(D, INFINITY, 0)
    for i in range(1, n + 1):
        for j in range(-2 * i + 1, -i):
            out.append(GeneratorValue(f"gen4[i={i},j={j}]", Linf.coeff(i, j)))
    return out


def no_monodromy_check(D: FuchsOp, weights: Sequence[Sequence[int]], tol: Optional[Any] = None) -> MonodromyReport:
    return MonodromyReport(tuple(jn_generators(D, weights)), tol)


# ---------------------------------------------------------------------------
# stabilized generators


def project(elem: Any, n: int) -> Any:
    """pr_n after pi_n: set w = n, then kill y_ij^(a) with i > n."""
    if isinstance(elem, MPoly):
        return elem.eval_w(n).drop_y_above(n)
    return elem


def _binom(x: Any, s: int) -> Any:
    return falling_factorial(x, s) * Fraction(1, factorial(s))


def btilde(L: LocalOp, n_expr: Any, l_mu: int, i: int, k: int, i_cap: Optional[int] = None) -> Any:
    """Coefficient of (alpha - l_mu)^(n-i falling) in r_k(alpha)."""
    cap = L.n if i_cap is None else i_cap
    acc: Any = Fraction(0)
    for s in range(0, min(l_mu, i) + 1):
        if i - s > cap:
            continue
        c = L.coeff(i - s, -i + s + k)
        if is_zero(c):
            continue
        acc = acc + c * (_binom(n_expr - i + s, s) * falling_factorial(l_mu, s))
    return acc


def rtilde(L: LocalOp, n_expr: Any, bp: Bipartition, k: int, alpha: Any, i_cap: Optional[int] = None) -> Any:
    l_lam, l_mu = bp.left.length, bp.right.length
    l = l_lam + l_mu
    acc: Any = Fraction(0)
    for i in range(0, l + k + 1):
        bt = btilde(L, n_expr, l_mu, i, k, i_cap)
        if is_zero(bt):
            continue
        acc = acc + bt * falling_factorial(alpha - n_expr + l_lam + k, l + k - i)
    return acc


def _m_bar(L, n_expr, bp, m_lo, m_hi, between, i_cap) -> List[List[Any]]:
    """Reduced M matrix between exponents m_lo < m_hi (symbolic in n allowed)."""
    K = int(_difference(m_hi, m_lo))
    dead = {int(_difference(m, m_lo)) for m in between}
    l_lam = bp.left.length
    rt: Dict[Tuple[int, int], Any] = {}
    rows = [d for d in range(K) if d not in dead]
    cols = [c for c in range(K) if c + 1 not in dead]
    out = []
    for d in rows:
        alpha = m_lo + d
        row = []
        for c in cols:
            s = c - d + 1
            if s < 0:
                row.append(Fraction(0))
                continue
            if (s, d) not in rt:
                rt[(s, d)] = rtilde(L, n_expr, bp, s, alpha, i_cap)
            row.append(falling_factorial(alpha - n_expr + l_lam + K - d, K - d - s) * rt[(s, d)])
        out.append(row)
    return out


def _difference(a: Any, b: Any) -> Fraction:
    d = a - b
    if isinstance(d, MPoly):
        if not d.is_const():
            raise ValueError("exponent difference depends on n")
        return d.const_value()
    return Fraction(d)


def _check_one_sided(bps: Sequence[Bipartition], n: int) -> None:
    for bp in bps:
        if not isinstance(bp, Bipartition):
            raise TypeError("expected Bipartition data")
        if bp.left.length + bp.right.length > n:
            raise ValueError(f"n = {n} is too small for {bp}")


def stabilized_generators(
    D: FuchsOp,
    bipartitions: Sequence[Bipartition],
    mode: str = "at_n",
    n_max: Optional[int] = None,
) -> List[GeneratorValue]:
    """The stabilized generating set at order n = D.n.

    ``mode="at_n"`` evaluates everything at the integer n using D's local
    data.  ``mode="symbolic_w"`` returns the w-interpolated elements: n is
    replaced by the variable w and the universal operator of order ``n_max``
    supplies y_ij^(a) with i > n.
    """
    n = D.n
    if len(bipartitions) != D.m:
        raise ValueError(f"{len(bipartitions)} bipartitions for {D.m} poles")
    bps = [bp if isinstance(bp, Bipartition) else Bipartition(*bp) for bp in bipartitions]
    _check_one_sided(bps, n)
    if mode == "at_n":
        n_expr: Any = Fraction(n)
        src = D
        cap = n
    elif mode == "symbolic_w":
        n_expr = MPoly.w()
        if n_max is None:
            n_max = max((bp.length for bp in bps), default=0) * D.m + 4
        n_max = max(n_max, n)
        src = FuchsOp.universal(n_max, D.zs)
        cap = n_max
    else:
        raise ValueError(f"unknown mode {mode!r}")
    locals_ = []
    for a, bp in enumerate(bps, start=1):
        nu = bipartition_to_weight(bp, n)
        span = max(nu) - min(nu) + n
        locals_.append(localize(src, D.zs[a - 1], cap + span + 1))

    def pole_coeff(i: int, j: int, a: int) -> Any:
        return src.coeffs.get((i, j, a), Fraction(0))

    return evaluate_stabilized(locals_, pole_coeff, D.zs, bps, n, n_expr, cap)


def evaluate_stabilized(
    locals_: Sequence[Any],
    pole_coeff: Callable[[int, int, int], Any],
    zs: Sequence[Any],
    bps: Sequence[Bipartition],
    n: int,
    n_expr: Any,
    i_cap: Optional[int] = None,
) -> List[GeneratorValue]:
    """The set S_n evaluated on arbitrary local data.

    ``locals_[a-1].coeff(i, j)`` gives the local coefficients at z_a and
    ``pole_coeff(i, j, a)`` the global coefficient of d^{-i}/(u - z_a)^j.  The
    integer n fixes the index ranges while ``n_expr`` is substituted for n in
    the formulas (an integer, w, or a complex rank t).  A generator needing data
    beyond a horizon is returned with value None.
    """
    out: List[GeneratorValue] = []

    def add(gid: str, thunk: Callable[[], Any]) -> None:
        try:
            out.append(GeneratorValue(gid, thunk()))
        except HorizonError:
            out.append(GeneratorValue(gid, None))

    for a, bp in enumerate(bps, start=1):
        L = locals_[a - 1]
        l_lam, l_mu = bp.left.length, bp.right.length
        l = l_lam + l_mu
        nu = bipartition_to_weight(bp, n)

        def m_of_nu(t: int, nu=nu) -> Any:
            # m_{n+1-t} = n + nu_t - t
            return n_expr + nu[t - 1] - t

        def m_low(t: int, bp=bp, l_mu=l_mu) -> Any:
            # m_t = t - 1 - mu_t on the dual side
            mu_t = bp.right[t] if t <= l_mu else 0
            return Fraction(t - 1 - mu_t)

        for k in range(0, n - l):
            for i in range(k + l + 1, n + 1):
                add(f"b~[a={a},i={i},k={k}]", lambda L=L, i=i, k=k: btilde(L, n_expr, l_mu, i, k, i_cap))
        if not bp.is_dual:
            for j in range(1, l + 1):
                add(f"r~0[a={a},j={j}]", lambda L=L, bp=bp, j=j: rtilde(L, n_expr, bp, 0, m_of_nu(j), i_cap))
                for i in range(j + 1, n + 1):
                    between = [m_of_nu(t) for t in range(j + 1, i)]
                    add(
                        f"detM[a={a},i={i},j={j}]",
                        lambda L=L, bp=bp, i=i, j=j, between=between: bareiss_det(
                            _m_bar(L, n_expr, bp, m_of_nu(i), m_of_nu(j), between, i_cap)
                        ),
                    )
        else:
            for i in range(1, l + 1):
                add(f"r~0[a={a},i={i}]", lambda L=L, bp=bp, i=i: rtilde(L, n_expr, bp, 0, m_low(i), i_cap))
                for j in range(i + 1, n + 1):
                    between = [m_low(t) for t in range(i + 1, j)]
                    add(
                        f"detM[a={a},i={i},j={j}]",
                        lambda L=L, bp=bp, i=i, j=j, between=between: bareiss_det(
                            _m_bar(L, n_expr, bp, m_low(i), m_low(j), between, i_cap)
                        ),
                    )

    def a_inf(i: int, j: int) -> Any:
        val: Any = Fraction(0)
        for a, z in enumerate(zs, start=1):
            for jp in range(1, j + 1):
                c = pole_coeff(i, jp, a)
                if not is_zero(c):
                    val = val + c * (comb(j - 1, jp - 1) * z ** (j - jp))
        return val

    for i in range(2, n + 1):
        for j in range(1, i):
            add(f"a_inf[i={i},j={j}]", lambda i=i, j=j: a_inf(i, j))
    return out


def tilde_conversions(values: Any, n: int, direction: str) -> Any:
    """Switch between r_k(l_mu + i - 1), i = 1..n, and the b~_{j,-j+k}, j = 1..n.

    ``direction="r_to_b"`` takes the list of n values r_k(l_mu), r_k(l_mu+1), ...
    and returns {j: b~_j}; ``"b_to_r"`` is the inverse.
    """
    if direction == "r_to_b":
        rs = list(values)
        if len(rs) != n:
            raise ValueError(f"expected {n} values")
        out = {}
        for i in range(1, n + 1):
            acc: Any = Fraction(0)
            for t in range(i):
                acc = acc + rs[i - 1 - t] * ((-1) ** t * comb(i - 1, t))
            out[n - i + 1] = acc * Fraction(1, factorial(i - 1))
        return out
    if direction == "b_to_r":
        bt = dict(values)
        rs = []
        for i in range(1, n + 1):
            acc = Fraction(0)
            for j in range(n - i + 1, n + 1):
                acc = acc + bt.get(j, Fraction(0)) * falling_factorial(i - 1, n - j)
            rs.append(acc)
        return rs
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# mutual linear reduction of two generating sets


@dataclass(frozen=True)
class ReductionReport:
    linear_rank: Tuple[int, int, int]
    nonlinear_rank: Tuple[int, int, int]
    unit_ideal: bool

    @property
    def equal(self) -> bool:
        if self.unit_ideal:
            return True
        return len(set(self.linear_rank)) == 1 and len(set(self.nonlinear_rank)) == 1


def _as_mpoly(v: Any) -> MPoly:
    return v if isinstance(v, MPoly) else MPoly.const(v)


def _rank(rows: List[List[Fraction]], width: int) -> int:
    if not rows or width == 0:
        return 0
    return QMat.from_rows(rows).rank()


def mutual_linear_reduction(gens_a: Sequence[Any], gens_b: Sequence[Any]) -> ReductionReport:
    """Compare the ideals generated by two sets that differ only by linear moves.

    The affine generators of each side must span the same space; modulo that
    space the remaining generators must span the same Q-vector space.
    """
    pa = [_as_mpoly(g) for g in gens_a if not is_zero(g)]
    pb = [_as_mpoly(g) for g in gens_b if not is_zero(g)]
    lin_a = [p for p in pa if p.total_degree() <= 1]
    lin_b = [p for p in pb if p.total_degree() <= 1]
    non_a = [p for p in pa if p.total_degree() > 1]
    non_b = [p for p in pb if p.total_degree() > 1]
    variables = sorted(set().union(*(p.variables() for p in lin_a + lin_b)) if lin_a + lin_b else set(), key=repr)
    width = len(variables) + 1

    def affine_row(p: MPoly) -> List[Fraction]:
        const, lin = p.linear_parts()
        return [lin.get(v, Fraction(0)) for v in variables] + [const]

    rows_a = [affine_row(p) for p in lin_a]
    rows_b = [affine_row(p) for p in lin_b]
    ranks = (_rank(rows_a, width), _rank(rows_b, width), _rank(rows_a + rows_b, width))
    subst: Dict[Any, MPoly] = {}
    unit = False
    if rows_a:
        R, rk = QMat.from_rows(rows_a).m.rref()
        for r in range(rk):
            row = [from_fmpq(R[r, c]) for c in range(width)]
            piv = next(c for c in range(width) if row[c] != 0)
            if piv == width - 1:
                unit = True
                break
            expr = MPoly.const(-row[-1])
            for c in range(piv + 1, width - 1):
                if row[c]:
                    expr = expr - MPoly.var(variables[c]) * row[c]
            subst[variables[piv]] = expr
    if unit:
        return ReductionReport(ranks, (0, 0, 0), ranks[1] == ranks[2] and ranks[0] == ranks[2])
    red_a = [_as_mpoly(p.subs(subst)) for p in non_a]
    red_b = [_as_mpoly(p.subs(subst)) for p in non_b]
    monos = sorted(set().union(*(set(p.terms) for p in red_a + red_b)) if red_a + red_b else set(), key=repr)
    idx = {mo: k for k, mo in enumerate(monos)}

    def vec(p: MPoly) -> List[Fraction]:
        row = [Fraction(0)] * len(monos)
        for mo, c in p.terms.items():
            row[idx[mo]] = c
        return row

    va = [vec(p) for p in red_a]
    vb = [vec(p) for p in red_b]
    nranks = (_rank(va, len(monos)), _rank(vb, len(monos)), _rank(va + vb, len(monos)))
    return ReductionReport(ranks, nranks, False)


# ---------------------------------------------------------------------------
# random local operators for equivalence testing


def random_local_op(rng: random.Random, n: int, exps: ExponentData, T: int, monodromy_free: bool) -> LocalOp:
    """A random local operator with the given exponents.

    With ``monodromy_free`` it is built from random gauge-fixed solutions, so
    all exponents admit Laurent solutions.  Otherwise the residue condition is
    imposed but the higher coefficients are random.
    """
    if exps.n != n:
        raise ValueError("exponent count differs from the order")
    if monodromy_free:
        sols = []
        for i in range(1, n + 1):
            mi = exps.m(i)
            dead = set(exps.degenerate_levels(i))
            coeffs = [Fraction(1)]
            for l in range(1, T + n + 2):
                coeffs.append(Fraction(0) if l in dead else Fraction(rng.randint(-3, 3), rng.randint(1, 3)))
            sols.append(LaurentSeries(mi, coeffs))
        return local_from_solutions(sols, T)
    # r_0(alpha) = prod (alpha - m_i), rewritten in the falling-factorial basis
    prod = [Fraction(1)]
    for m in exps.m_list:
        prod = _pmul(prod, [Fraction(-m), Fraction(1)])
    b: Dict[Tuple[int, int], Any] = {(0, 0): Fraction(1)}
    rem = list(prod) + [Fraction(0)] * (n + 1 - len(prod))
    for i in range(0, n + 1):
        deg = n - i
        c = rem[deg] if deg < len(rem) else Fraction(0)
        if i > 0:
            b[(i, -i)] = c
        ff = [Fraction(1)]
        for t in range(deg):
            ff = _pmul(ff, [Fraction(-t), Fraction(1)])
        rem = _padd(rem, [-c * x for x in ff])
        rem = rem + [Fraction(0)] * (n + 1 - len(rem))
    for i in range(1, n + 1):
        for j in range(-i + 1, T + 1):
            if rng.random() < 0.5:
                b[(i, j)] = Fraction(rng.randint(-3, 3), rng.randint(1, 2))
    return LocalOp(n, b, T)
