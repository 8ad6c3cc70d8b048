"""Truncated pseudo-differential operators sum_r a_r d^{t-r}.

Coefficients are either :class:`LaurentSeries` in x (local operators) or
:class:`RatFn` in u (global operators).  Only the d-index is truncated, at the
depth I; coefficient series carry their own truncation orders.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .fuchs import (
    INFINITY,
    ExponentData,
    FuchsOp,
    GeneratorValue,
    HorizonError,
    LocalOp,
    MonodromyReport,
    evaluate_stabilized,
    frobenius_solve,
    no_monodromy_check,
)
from .partitions import Bipartition, Partition
from .rings import (
    LaurentSeries,
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
    "PsDO",
    "R_CONVENTIONS",
    "RatioReport",
    "attach",
    "conjugate_counts",
    "has_no_monodromy",
    "has_residue",
    "hook_partition",
    "matrix_R",
    "psdo_inverse",
    "psdo_mul",
    "ratio_check",
    "ratio_conditions",
    "regular_at_infinity",
    "residue_rho",
    "wronskian",
    "wronskian_factorize",
]


def _zero_like(c: Any) -> Any:
    if isinstance(c, LaurentSeries):
        return LaurentSeries.zero(None)
    if isinstance(c, RatFn):
        return RatFn()
    return Fraction(0)


def _one_like(c: Any) -> Any:
    if isinstance(c, LaurentSeries):
        return LaurentSeries.monomial(Fraction(1), 0)
    if isinstance(c, RatFn):
        return RatFn.const(Fraction(1))
    return Fraction(1)


def _derivative(c: Any) -> Any:
    return c.derivative() if hasattr(c, "derivative") else Fraction(0)


@dataclass(frozen=True)
class PsDO:
    """sum_{r=0}^{I} coeffs[r] d^{order - r}."""

    order: Any
    coeffs: Tuple[Any, ...]

    def __post_init__(self) -> None:
        cs = tuple(self.coeffs)
        if not cs:
            raise ValueError("a pseudo-differential operator needs a leading coefficient")
        if is_zero(cs[0]):
            raise ValueError("leading coefficient a_0 must be nonzero")
        object.__setattr__(self, "coeffs", cs)
        if isinstance(self.order, (int, Fraction, str)):
            object.__setattr__(self, "order", as_rat(self.order))

    @property
    def depth(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def d_power(cls, order: Any, depth: int, like: Any) -> "PsDO":
        """d^order with coefficients of the same kind as ``like``."""
        one, zero = _one_like(like), _zero_like(like)
        return cls(order, (one,) + (zero,) * depth)

    @classmethod
    def from_coeffs(cls, order: Any, coeffs: Sequence[Any], depth: int) -> "PsDO":
        """Pad (or cut) a coefficient list to the given depth."""
        cs = list(coeffs)[: depth + 1]
        zero = _zero_like(cs[0])
        cs += [zero] * (depth + 1 - len(cs))
        return cls(order, tuple(cs))

    @classmethod
    def from_fuchs(cls, D: FuchsOp, depth: int) -> "PsDO":
        return cls.from_coeffs(D.n, [D.b(i) for i in range(D.n + 1)], depth)

    @classmethod
    def from_local(cls, L: LocalOp, depth: int) -> "PsDO":
        return cls.from_coeffs(L.n, [L.series(i) for i in range(L.n + 1)], depth)

    def coeff(self, r: int) -> Any:
        if r > self.depth:
            raise HorizonError(f"coefficient {r} beyond depth {self.depth}")
        return self.coeffs[r]

    def beta(self, i: int, j: int) -> Any:
        """Coefficient of x^j in a_i (local operators)."""
        try:
            return self.coeff(i).coeff(j)
        except HorizonError:
            raise
        except ValueError as exc:
            raise HorizonError(str(exc)) from None

    def localize(self, z: Any, T: int) -> "PsDO":
        """Laurent expansion of every RatFn coefficient at u = z."""
        return PsDO(self.order, tuple(laurent_at(c, z, T) for c in self.coeffs))

    def map_coeffs(self, fn) -> "PsDO":
        return PsDO(self.order, tuple(fn(c) for c in self.coeffs))

    def __mul__(self, other: "PsDO") -> "PsDO":
        return psdo_mul(self, other)

    def equals(self, other: "PsDO") -> bool:
        """Equality to the common depth and the coefficients' known orders."""
        if self.order != other.order:
            return False
        for a, b in zip(self.coeffs, other.coeffs):
            if not is_zero(a - b):
                return False
        return True

    def __repr__(self) -> str:
        o = fmt_rat(self.order) if isinstance(self.order, Fraction) else repr(self.order)
        return f"PsDO(order={o}, depth={self.depth})"


def psdo_mul(A: PsDO, B: PsDO) -> PsDO:
    """Product by the rule d^mu a = sum_i mu^(i falling)/i! (d^i a) d^{mu-i}."""
    if A.depth != B.depth:
        raise ValueError(f"depth mismatch: {A.depth} vs {B.depth}")
    I = A.depth
    derivs: List[List[Any]] = []
    for b in B.coeffs:
        row = [b]
        for _ in range(I):
            row.append(_derivative(row[-1]))
        derivs.append(row)
    out = []
    for l in range(I + 1):
        acc = _zero_like(A.coeffs[0])
        for r in range(l + 1):
            a = A.coeffs[r]
            if is_zero(a):
                continue
            mu = A.order - r
            for i in range(l - r + 1):
                s = l - r - i
                d = derivs[s][i]
                if is_zero(d):
                    continue
                c = falling_factorial(mu, i) * Fraction(1, factorial(i))
                if is_zero(c):
                    continue
                acc = acc + a * d * c
        out.append(acc)
    return PsDO(A.order + B.order, tuple(out))


def _invert_leading(a0: Any, horizon: Optional[int]) -> Any:
    if isinstance(a0, RatFn):
        if a0.poles or len(a0.poly) > 1:
            raise ZeroDivisionError("leading coefficient is not an invertible constant")
        return RatFn.const(1 / as_rat(a0.poly[0]))
    if isinstance(a0, LaurentSeries):
        if a0.order is None and len(a0.coeffs) == 1:
            return LaurentSeries.monomial(1 / as_rat(a0.coeffs[0]), -a0.start)
        return a0.inverse(horizon)
    return 1 / as_rat(a0)


def psdo_inverse(D: PsDO, horizon: Optional[int] = None) -> PsDO:
    """Two-sided inverse, solving D X = 1 level by level."""
    I = D.depth
    inv0 = _invert_leading(D.coeffs[0], horizon)
    derivs: List[List[Any]] = []
    xs: List[Any] = []
    t = D.order
    for l in range(I + 1):
        if l == 0:
            x = inv0
        else:
            acc = _zero_like(D.coeffs[0])
            for r in range(l + 1):
                a = D.coeffs[r]
                if is_zero(a):
                    continue
                mu = t - r
                for i in range(l - r + 1):
                    s = l - r - i
                    if s == l:
                        continue
                    d = derivs[s][i]
                    if is_zero(d):
                        continue
                    c = falling_factorial(mu, i) * Fraction(1, factorial(i))
                    if not is_zero(c):
                        acc = acc + a * d * c
            x = -(inv0 * acc)
        xs.append(x)
        row = [x]
        for _ in range(I - l):
            row.append(_derivative(row[-1]))
        derivs.append(row)
    return PsDO(-t, tuple(xs))


# ---------------------------------------------------------------------------
# residue and monodromy of local operators


def residue_rho(D: PsDO, lam: Partition, k: int, alpha: Any) -> Any:
    """rho_k(alpha) = sum_{i <= l+k} beta_{i,-i+k} (alpha + l + k)^(l+k-i falling)."""
    l = lam.length
    acc: Any = Fraction(0)
    for i in range(l + k + 1):
        b = D.beta(i, -i + k)
        if not is_zero(b):
            acc = acc + b * falling_factorial(alpha + l + k, l + k - i)
    return acc


def _residue_values(D: PsDO, lam: Partition) -> List[GeneratorValue]:
    l = lam.length
    out: List[GeneratorValue] = []
    a0 = D.coeffs[0]
    # literal reading: the leading coefficient has no pole deeper than l
    if isinstance(a0, LaurentSeries):
        lo = a0.valuation if a0.valuation is not None else 0
        for j in range(min(lo, -l - 1), -l):
            out.append(GeneratorValue(f"beta0[j={j}]", a0.coeff(j)))
    for i in range(1, D.depth + 1):
        ai = D.coeffs[i]
        v = ai.valuation if ai.valuation is not None else 0
        for j in range(min(v, -i), -l):
            if j < -i and is_zero(ai.coeff(j)):
                continue
            out.append(GeneratorValue(f"pole[i={i},j={j}]", ai.coeff(j)))
    for i in range(1, l + 1):
        try:
            val = residue_rho(D, lam, 0, lam[i] - i)
        except HorizonError:
            val = None
        out.append(GeneratorValue(f"rho0[i={i}]", val))
    return out


def has_residue(D: PsDO, lam: Partition) -> MonodromyReport:
    """Pole-depth bound beta_ij = 0 (j < -l) and rho_0(lambda_i - i) = 0."""
    return MonodromyReport(tuple(_residue_values(D, lam)))


def _alpha(lam: Partition, j: int, s: int) -> int:
    return lam[j] - j + s - 1


R_CONVENTIONS = ("plain", "literal", "scaled")


def matrix_R(
    D: PsDO, lam: Partition, i: int, j: int, convention: str = "plain", check: bool = True
) -> Tuple[List[List[Any]], List[List[Any]]]:
    """(R_ij, reduced R_ij) with rows s = 1..K and entry (s, c) = rho_{c-s+1, s}.

    rho_{k,s} = P * rho_k(alpha_s) where P depends on the convention:

    ``plain``    P = 1
    ``literal``  P = (alpha_s + l + K - s + 1)^(K - s + 1 falling)
    ``scaled``   P = (alpha_s + l + K - s + 1)^(K - s + 1 - k falling)

    Since alpha_s + l + K - s + 1 does not depend on s, ``literal`` is a row
    scaling of ``plain`` and ``scaled`` a column scaling.  The row factors
    vanish for j > l, which makes every literal determinant with j > l zero.
    """
    if convention not in R_CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if not 1 <= i < j:
        raise ValueError(f"need 1 <= i < j, got ({i}, {j})")
    if check and not has_residue(D, lam).passed:
        raise ValueError(f"operator does not have residue {lam}")
    l = lam.length
    K = lam[i] - lam[j] + j - i
    rho: Dict[Tuple[int, int], Any] = {}
    R = []
    for s in range(1, K + 1):
        a_s = _alpha(lam, j, s)
        row = []
        for c in range(1, K + 1):
            k = c - s + 1
            if k < 0:
                row.append(Fraction(0))
                continue
            if (k, s) not in rho:
                rho[(k, s)] = residue_rho(D, lam, k, a_s)
            if convention == "plain":
                row.append(rho[(k, s)])
                continue
            e = K - s + 1 if convention == "literal" else K - s + 1 - k
            row.append(falling_factorial(a_s + l + K - s + 1, e) * rho[(k, s)])
        R.append(row)
    dead_cols, dead_rows = set(), set()
    specials = {lam[d] - d for d in range(1, j + 1)}
    for s in range(1, K):
        if _alpha(lam, j, s + 1) in specials:
            dead_cols.add(s)
            dead_rows.add(s + 1)
    red = [[R[s - 1][c - 1] for c in range(1, K + 1) if c not in dead_cols] for s in range(1, K + 1) if s not in dead_rows]
    return R, red


def _monodromy_values(D: PsDO, lam: Partition, convention: str) -> List[GeneratorValue]:
    out = _residue_values(D, lam)
    l = lam.length
    for i in range(1, l + 1):
        j = i + 1
        while True:
            K = lam[i] - lam[j] + j - i
            if l + K > D.depth:
                break
            try:
                _, red = matrix_R(D, lam, i, j, convention=convention, check=False)
                val = bareiss_det(red)
            except HorizonError:
                val = None
            out.append(GeneratorValue(f"detR[i={i},j={j}]", val))
            j += 1
    return out


def has_no_monodromy(D: PsDO, lam: Partition, convention: str = "plain") -> MonodromyReport:
    """Residue conditions plus det R_ij^red = 0 up to the depth horizon."""
    return MonodromyReport(tuple(_monodromy_values(D, lam, convention)))


# ---------------------------------------------------------------------------
# infinity


def regular_at_infinity(D: PsDO) -> bool:
    """Every a_i(1/x) has valuation >= i at x = 0."""
    for i, c in enumerate(D.coeffs):
        if not isinstance(c, RatFn):
            raise TypeError("regularity at infinity is defined for RatFn coefficients")
        s = taylor_at_infinity(c, i - 1)
        if not s.is_zero():
            return False
    return True


# ---------------------------------------------------------------------------
# Wronskian factorization


def wronskian(fs: Sequence[LaurentSeries]) -> LaurentSeries:
    """det(d^{j-1} f_i)."""
    n = len(fs)
    if n == 0:
        return LaurentSeries.monomial(Fraction(1), 0)
    cols = []
    for f in fs:
        col = [f]
        for _ in range(n - 1):
            col.append(col[-1].derivative())
        cols.append(col)
    mat = [[cols[i][d] for d in range(n)] for i in range(n)]
    # cofactor expansion keeps truncation bookkeeping exact
    return _cofactor_det(mat)


def _cofactor_det(mat: List[List[Any]]) -> Any:
    n = len(mat)
    if n == 1:
        return mat[0][0]
    acc = None
    for c in range(n):
        minor = [row[:c] + row[c + 1 :] for row in mat[1:]]
        term = mat[0][c] * _cofactor_det(minor)
        if c % 2:
            term = -term
        acc = term if acc is None else acc + term
    return acc


def wronskian_factorize(L: LocalOp, exps: ExponentData, order: int, depth: Optional[int] = None) -> List[PsDO]:
    """First-order factors [d - h_n, ..., d - h_1] whose product is L.

    h_k = g_k'/g_k with g_k = W(f_1..f_k) / W(f_1..f_{k-1}) for the Frobenius
    solutions f_i, computed through x^order.  ``depth`` defaults to n.
    """
    n = L.n
    depth = n if depth is None else depth
    fs = [frobenius_solve(L, exps, i, order).series for i in range(1, n + 1)]
    W = [wronskian(fs[:k]) for k in range(n + 1)]
    hs = []
    for k in range(1, n + 1):
        g = W[k] if k == 1 else W[k] * W[k - 1].inverse()
        hs.append(g.derivative() * g.inverse())
    one = LaurentSeries.monomial(Fraction(1), 0)
    return [PsDO.from_coeffs(Fraction(1), [one, -hs[k - 1]], depth) for k in range(n, 0, -1)]


# ---------------------------------------------------------------------------
# partitions


def attach(lam: Partition, kind: str, size: int) -> Partition:
    """Attach a row of length s on top (``"row"``) or a column of length q on the left (``"col"``)."""
    if kind == "row":
        if size < lam[1]:
            raise ValueError(f"row length {size} is shorter than lambda_1 = {lam[1]}")
        return Partition.of((size,) + lam.parts)
    if kind == "col":
        if size < lam.length:
            raise ValueError(f"column length {size} is shorter than the length {lam.length}")
        return Partition.of(lam[i] + 1 for i in range(1, size + 1))
    raise ValueError(f"unknown attachment {kind!r}")


def conjugate_counts(eta: Sequence[int]) -> List[int]:
    """c_j = the largest c with eta_1, ..., eta_c >= j, for j = 1..eta_1."""
    out = []
    j = 1
    while eta and eta[0] >= j:
        c = 0
        while c < len(eta) and eta[c] >= j:
            c += 1
        out.append(c)
        j += 1
    return out


def hook_partition(
    nu: Sequence[int], eta: Sequence[int], n: int, n_prime: int, truncate: bool = False
) -> Partition:
    """lambda_j = nu_j for j <= n, then the conjugate counts of eta.

    ``eta`` is the gl_{n'} weight (-eta_{n'}, ..., -eta_1).  All eta_1
    conjugate counts are appended; ``truncate=True`` keeps only the first n'
    of them, which loses rows as soon as eta_1 > n'.
    """
    if len(nu) != n or len(eta) != n_prime:
        raise ValueError("weight lengths do not match n and n'")
    if any(v < 0 for v in nu) or any(v > 0 for v in eta):
        raise ValueError("nu must be non-negative and eta non-positive")
    etas = [-v for v in reversed(eta)]  # eta_1 >= eta_2 >= ...
    ceta = conjugate_counts(etas)
    if truncate:
        ceta = ceta[:n_prime]
    parts = list(nu) + ceta
    if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
        raise ValueError(f"{parts} is not a partition: (nu, eta) violate the hook assumption")
    lam = Partition.of(parts)
    if lam[n + 1] > n_prime:
        raise ValueError(f"lambda_(n+1) = {lam[n + 1]} exceeds n' = {n_prime}")
    return lam


# ---------------------------------------------------------------------------
# ratios of monodromy-free operators


@dataclass(frozen=True)
class RatioReport:
    hooks: Tuple[Partition, ...]
    local: Tuple[Tuple[str, MonodromyReport], ...]
    stabilized: MonodromyReport
    regular_at_infinity: bool

    @property
    def passed(self) -> bool:
        return self.regular_at_infinity and self.stabilized.passed and all(r.passed for _, r in self.local)

    def records(self) -> List[Dict[str, Any]]:
        rows = []
        for point, rep in self.local:
            for g in rep.values:
                row = g.to_json()
                rows.append({"point": point, "condition_id": g.generator_id, "value": row["value"], "zero": row["is_zero"]})
        for g in self.stabilized.values:
            row = g.to_json()
            rows.append({"point": "all", "condition_id": g.generator_id, "value": row["value"], "zero": row["is_zero"]})
        rows.append(
            {"point": "inf", "condition_id": "regular", "value": str(self.regular_at_infinity), "zero": self.regular_at_infinity}
        )
        return rows


class _PsdoLocal:
    """coeff(i, j) access to a local ratio, raising beyond the horizon."""

    def __init__(self, P: PsDO):
        self.P = P
        self.n = P.depth

    def coeff(self, i: int, j: int) -> Any:
        return self.P.beta(i, j)


def ratio_check(
    Dn: FuchsOp,
    Dnp: Optional[FuchsOp],
    nus: Sequence[Sequence[int]],
    etas: Sequence[Sequence[int]],
    depth: int = 8,
) -> RatioReport:
    """Check that D_n D_{n'}^{-1} satisfies the interpolated conditions at rank n - n'.

    ``Dnp=None`` stands for n' = 0.  Returns every evaluated generator value;
    all of them should vanish.
    """
    n = Dn.n
    n_prime = 0 if Dnp is None else Dnp.n
    zs = Dn.zs
    if Dnp is not None and Dnp.zs != zs:
        raise ValueError("both operators must use the same pole list")
    if not no_monodromy_check(Dn, nus).passed:
        raise ValueError("D_n fails its own no-monodromy conditions")
    if Dnp is not None and not no_monodromy_check(Dnp, etas).passed:
        raise ValueError("D_n' fails its own no-monodromy conditions")
    hooks = tuple(hook_partition(nu, eta, n, n_prime) for nu, eta in zip(nus, etas))
    P = PsDO.from_fuchs(Dn, depth)
    if Dnp is not None:
        P = P * psdo_inverse(PsDO.from_fuchs(Dnp, depth))
    return ratio_conditions(P, zs, hooks)


def ratio_conditions(P: PsDO, zs: Sequence[Any], hooks: Sequence[Partition]) -> RatioReport:
    """Local, stabilized and infinity conditions for a global operator of order t."""
    depth = P.depth
    local = []
    locals_ = []
    for z, lam in zip(zs, hooks):
        Pz = P.localize(z, depth)
        locals_.append(_PsdoLocal(Pz))
        local.append((fmt_rat(z), has_no_monodromy(Pz, lam)))

    def pole_coeff(i: int, j: int, a: int) -> Any:
        return P.coeff(i).pole_coeff(zs[a - 1], j)

    bps = [Bipartition(lam, ()) for lam in hooks]
    N = max(depth, max((lam.length for lam in hooks), default=0))
    stab = evaluate_stabilized(locals_, pole_coeff, zs, bps, N, P.order)
    return RatioReport(tuple(hooks), tuple(local), MonodromyReport(tuple(stab)), regular_at_infinity(P))
