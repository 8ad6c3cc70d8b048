"""Exact coefficient rings.

Rationals are :class:`fractions.Fraction`.  On top of them this module
provides polynomials in the interpolation parameter ``w`` (:class:`WPoly`),
sparse multivariate polynomials (:class:`MPoly`), rational functions of ``u``
kept in partial-fraction form (:class:`RatFn`) and truncated Laurent series
in ``x`` (:class:`LaurentSeries`).

The classes are immutable and compare by value.  Coefficients of
:class:`RatFn` and :class:`LaurentSeries` may come from any ring whose
elements support ``+``, ``-`` and ``*`` (rationals, ``WPoly``, ``MPoly``,
``mpmath.mpf`` or exact matrices); products keep the written order, so
noncommutative coefficients are fine.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import zip_longest
from math import comb
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

__all__ = [
    "Rat",
    "as_rat",
    "fmt_rat",
    "is_zero",
    "falling_factorial",
    "WPoly",
    "MPoly",
    "RatFn",
    "LaurentSeries",
    "laurent_at",
    "taylor_at_infinity",
    "bareiss_det",
]

Rat = Fraction


def as_rat(value: Any) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a string like '1/3'")
    return Fraction(value)


def fmt_rat(q: Any) -> str:
    """Serialize a rational as ``"p/q"`` (``"p"`` when q = 1)."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def is_zero(x: Any) -> bool:
    """Zero test that works across the coefficient rings used here."""
    if x is None:
        return True
    if isinstance(x, (int, Fraction)):
        return x == 0
    probe = getattr(x, "is_zero", None)
    if probe is not None:
        return probe() if callable(probe) else bool(probe)
    return x == 0


def falling_factorial(alpha: Any, j: int) -> Any:
    """alpha (alpha-1) ... (alpha-j+1); the identity of alpha's ring when j = 0."""
    if j < 0:
        raise ValueError("falling factorial needs j >= 0")
    result = alpha * 0 + 1
    for k in range(j):
        result = result * (alpha - k)
    return result


def _rat_or_none(x: Any) -> Optional[Fraction]:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return None


# ---------------------------------------------------------------------------
# WPoly


class WPoly:
    """Univariate polynomial in ``w`` with rational coefficients (low degree first)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Any] = ()):
        cs = [as_rat(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: Tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def const(cls, c: Any) -> "WPoly":
        return cls([c])

    @classmethod
    def w(cls) -> "WPoly":
        return cls([0, 1])

    @staticmethod
    def _lift(other: Any) -> Optional["WPoly"]:
        if isinstance(other, WPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return WPoly([other])
        return None

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_const(self) -> bool:
        return len(self.coeffs) <= 1

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError(f"{self} is not constant")
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def __add__(self, other: Any) -> "WPoly":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return WPoly(a + b for a, b in zip_longest(self.coeffs, o.coeffs, fillvalue=Fraction(0)))

    __radd__ = __add__

    def __neg__(self) -> "WPoly":
        return WPoly(-c for c in self.coeffs)

    def __sub__(self, other: Any) -> "WPoly":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: Any) -> "WPoly":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other: Any) -> "WPoly":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if not self.coeffs or not o.coeffs:
            return WPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    out[i + j] += a * b
        return WPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "WPoly":
        r = _rat_or_none(other)
        if r is None:
            if isinstance(other, WPoly) and other.is_const():
                r = other.const_value()
            else:
                return self.divexact(other)
        return WPoly(c / r for c in self.coeffs)

    def divexact(self, other: "WPoly") -> "WPoly":
        o = self._lift(other)
        if o is None or o.is_zero():
            raise ZeroDivisionError("division by zero WPoly")
        rem = list(self.coeffs)
        q = [Fraction(0)] * max(len(rem) - len(o.coeffs) + 1, 0)
        lead = o.coeffs[-1]
        for k in range(len(q) - 1, -1, -1):
            c = rem[k + len(o.coeffs) - 1] / lead
            q[k] = c
            for i, b in enumerate(o.coeffs):
                rem[k + i] -= c * b
        if any(rem):
            raise ArithmeticError("inexact WPoly division")
        return WPoly(q)

    def __pow__(self, e: int) -> "WPoly":
        out = WPoly([1])
        for _ in range(e):
            out = out * self
        return out

    def __call__(self, t: Any) -> Any:
        return self.eval(t)

    def eval(self, t: Any) -> Any:
        """Evaluate at w = t (Horner); t may be any ring element."""
        acc: Any = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def __eq__(self, other: Any) -> bool:
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self) -> int:
        if len(self.coeffs) <= 1:
            return hash(self.coeffs[0] if self.coeffs else Fraction(0))
        return hash(("WPoly", self.coeffs))

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def to_json(self) -> List[str]:
        return [fmt_rat(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data: Sequence[str]) -> "WPoly":
        return cls(as_rat(c) for c in data)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for d in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[d]
            if not c:
                continue
            mono = "" if d == 0 else ("w" if d == 1 else f"w^{d}")
            if mono and abs(c) == 1:
                term = mono
            else:
                term = fmt_rat(abs(c)) + (("*" + mono) if mono else "")
            parts.append(("- " if c < 0 else "+ ") + term)
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


# ---------------------------------------------------------------------------
# MPoly

Var = Tuple[Any, ...]
Monomial = Tuple[Tuple[Var, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


class MPoly:
    """Sparse polynomial with rational coefficients in named variables.

    Variables are tuples: ``("y", i, j, a)`` for the generator y_ij^(a)
    and ``("w",)`` for the interpolation parameter, so an element of
    A[w] is stored with ``w`` as one more variable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Any]] = None):
        clean: Dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = as_rat(c)
                if c:
                    clean[m] = c
        self.terms: Dict[Monomial, Fraction] = clean

    @classmethod
    def var(cls, name: Var) -> "MPoly":
        return cls({((name, 1),): 1})

    @classmethod
    def y(cls, i: int, j: int, a: int) -> "MPoly":
        return cls.var(("y", i, j, a))

    @classmethod
    def w(cls) -> "MPoly":
        return cls.var(("w",))

    @classmethod
    def const(cls, c: Any) -> "MPoly":
        return cls({(): c})

    @classmethod
    def lift(cls, other: Any) -> Optional["MPoly"]:
        if isinstance(other, MPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return cls({(): other})
        if isinstance(other, WPoly):
            w = ("w",)
            return cls({(((w, d),) if d else ()): c for d, c in enumerate(other.coeffs)})
        return None

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(not m for m in self.terms)

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError("not a constant polynomial")
        return self.terms.get((), Fraction(0))

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e for _, e in m) for m in self.terms)

    def variables(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def __add__(self, other: Any) -> "MPoly":
        o = self.lift(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, 0) + c
        return MPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "MPoly":
        return MPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: Any) -> "MPoly":
        o = self.lift(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, 0) - c
        return MPoly(out)

    def __rsub__(self, other: Any) -> "MPoly":
        o = self.lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other: Any) -> "MPoly":
        r = _rat_or_none(other)
        if r is not None:
            return MPoly({m: c * r for m, c in self.terms.items()}) if r else MPoly()
        o = self.lift(other)
        if o is None:
            return NotImplemented
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return MPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "MPoly":
        r = _rat_or_none(other)
        if r is None:
            o = self.lift(other)
            if o is not None and o.is_const():
                r = o.const_value()
            else:
                return self.divexact(other)
        return MPoly({m: c / r for m, c in self.terms.items()})

    def __pow__(self, e: int) -> "MPoly":
        out = MPoly.const(1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other: Any) -> bool:
        o = self.lift(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def divexact(self, other: Any) -> "MPoly":
        """Exact division by lex leading terms; raises if not divisible."""
        o = self.lift(other)
        if o is None or o.is_zero():
            raise ZeroDivisionError("division by zero MPoly")
        if o.is_const():
            return self / o.const_value()
        order = sorted(self.variables() | o.variables())
        pos = {v: k for k, v in enumerate(order)}

        def key(m: Monomial) -> Tuple[int, ...]:
            vec = [0] * len(order)
            for v, e in m:
                vec[pos[v]] = e
            return tuple(vec)

        lead_m = max(o.terms, key=key)
        lead_c = o.terms[lead_m]
        lead_d = dict(lead_m)
        rem = MPoly(self.terms)
        quotient: Dict[Monomial, Fraction] = {}
        while rem.terms:
            m = max(rem.terms, key=key)
            md = dict(m)
            qd = {}
            for v, e in lead_d.items():
                if md.get(v, 0) < e:
                    raise ArithmeticError("inexact MPoly division")
            for v, e in md.items():
                r = e - lead_d.get(v, 0)
                if r:
                    qd[v] = r
            qm = tuple(sorted(qd.items()))
            qc = rem.terms[m] / lead_c
            quotient[qm] = quotient.get(qm, 0) + qc
            rem = rem - MPoly({qm: qc}) * o
        return MPoly(quotient)

    def subs(self, values: Mapping[Var, Any]) -> Any:
        """Substitute variables by ring elements (others are kept)."""
        acc: Any = MPoly()
        for m, c in self.terms.items():
            term: Any = MPoly.const(c)
            for v, e in m:
                if v in values:
                    val = values[v]
                    for _ in range(e):
                        term = term * val
                else:
                    term = term * MPoly({((v, e),): 1})
            acc = acc + term
        return acc

    def eval_w(self, t: Any) -> "MPoly":
        """The evaluation w -> t (written pi_t)."""
        return self.subs({("w",): t})

    def drop_y_above(self, n: int) -> "MPoly":
        """Projection killing every y_ij^(a) with i > n."""
        keep = {}
        for m, c in self.terms.items():
            if any(v[0] == "y" and v[1] > n for v, _ in m):
                continue
            keep[m] = c
        return MPoly(keep)

    def linear_parts(self) -> Tuple[Fraction, Dict[Var, Fraction]]:
        """Constant term and linear coefficients; raises when degree > 1."""
        const = Fraction(0)
        lin: Dict[Var, Fraction] = {}
        for m, c in self.terms.items():
            if not m:
                const = c
            elif len(m) == 1 and m[0][1] == 1:
                lin[m[0][0]] = c
            else:
                raise ValueError("polynomial is not linear")
        return const, lin

    def w_coefficients(self) -> Dict[Monomial, WPoly]:
        """Group terms by their y-monomial, collecting w-powers into a WPoly."""
        grouped: Dict[Monomial, Dict[int, Fraction]] = {}
        for m, c in self.terms.items():
            dw = 0
            rest = []
            for v, e in m:
                if v == ("w",):
                    dw = e
                else:
                    rest.append((v, e))
            slot = grouped.setdefault(tuple(rest), {})
            slot[dw] = slot.get(dw, 0) + c
        out = {}
        for m, d in grouped.items():
            top = max(d)
            out[m] = WPoly(d.get(k, 0) for k in range(top + 1))
        return out

    def to_json(self) -> List[Dict[str, Any]]:
        rows = []
        for m, c in sorted(self.terms.items(), key=lambda t: repr(t[0])):
            rows.append({"monomial": [[list(v), e] for v, e in m], "coeff": fmt_rat(c)})
        return rows

    def __repr__(self) -> str:
        if not self.terms:
            return "0"

        def vname(v: Var) -> str:
            if v[0] == "y":
                return f"y{v[1]}{v[2]}_{v[3]}"
            return "".join(str(p) for p in v)

        parts = []
        for m, c in sorted(self.terms.items(), key=lambda t: repr(t[0])):
            mono = "*".join(vname(v) + (f"^{e}" if e > 1 else "") for v, e in m)
            if not mono:
                parts.append(fmt_rat(c))
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{fmt_rat(c)}*{mono}")
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# RatFn


def _add_into(d: Dict[Any, Any], key: Any, value: Any) -> None:
    if key in d:
        d[key] = d[key] + value
    else:
        d[key] = value


class RatFn:
    """Rational function of ``u`` stored as polynomial part plus principal parts.

    ``poly[k]`` is the coefficient of u^k and ``poles[(z, j)]`` the coefficient
    of 1/(u - z)^j.  Pole locations are rationals.
    """

    __slots__ = ("poly", "poles")

    def __init__(self, poly: Sequence[Any] = (), poles: Optional[Mapping[Tuple[Fraction, int], Any]] = None):
        p = list(poly)
        while p and is_zero(p[-1]):
            p.pop()
        self.poly: Tuple[Any, ...] = tuple(p)
        clean = {}
        if poles:
            for (z, j), c in poles.items():
                if j < 1:
                    raise ValueError("pole orders start at 1")
                if not is_zero(c):
                    clean[(as_rat(z), j)] = c
        self.poles: Dict[Tuple[Fraction, int], Any] = clean

    @classmethod
    def const(cls, c: Any) -> "RatFn":
        return cls([c])

    @classmethod
    def pole(cls, z: Any, j: int = 1, c: Any = Fraction(1)) -> "RatFn":
        return cls((), {(as_rat(z), j): c})

    @classmethod
    def u(cls) -> "RatFn":
        return cls([Fraction(0), Fraction(1)])

    def is_zero(self) -> bool:
        return not self.poly and not self.poles

    def points(self) -> List[Fraction]:
        return sorted({z for z, _ in self.poles})

    def pole_coeff(self, z: Any, j: int) -> Any:
        return self.poles.get((as_rat(z), j), Fraction(0))

    def pole_order(self, z: Any) -> int:
        z = as_rat(z)
        return max((j for (p, j) in self.poles if p == z), default=0)

    def map_coeffs(self, fn: Callable[[Any], Any]) -> "RatFn":
        return RatFn([fn(c) for c in self.poly], {k: fn(c) for k, c in self.poles.items()})

    def __add__(self, other: Any) -> "RatFn":
        if not isinstance(other, RatFn):
            other = RatFn.const(other)
        poly = [None] * max(len(self.poly), len(other.poly))
        for k, c in enumerate(self.poly):
            poly[k] = c
        for k, c in enumerate(other.poly):
            poly[k] = c if poly[k] is None else poly[k] + c
        poles = dict(self.poles)
        for key, c in other.poles.items():
            _add_into(poles, key, c)
        return RatFn([Fraction(0) if c is None else c for c in poly], poles)

    __radd__ = __add__

    def __neg__(self) -> "RatFn":
        return self.map_coeffs(lambda c: -c)

    def __sub__(self, other: Any) -> "RatFn":
        if not isinstance(other, RatFn):
            other = RatFn.const(other)
        return self + (-other)

    def scale(self, c: Any, left: bool = True) -> "RatFn":
        """Multiply every coefficient by c (on the left by default)."""
        if left:
            return self.map_coeffs(lambda x: c * x)
        return self.map_coeffs(lambda x: x * c)

    def __mul__(self, other: Any) -> "RatFn":
        if not isinstance(other, RatFn):
            return self.scale(other, left=False)
        return _ratfn_mul(self, other)

    def __rmul__(self, other: Any) -> "RatFn":
        return self.scale(other, left=True)

    def derivative(self, times: int = 1) -> "RatFn":
        out = self
        for _ in range(times):
            poly = [k * c for k, c in enumerate(out.poly)][1:]
            poles = {(z, j + 1): -j * c for (z, j), c in out.poles.items()}
            out = RatFn(poly, poles)
        return out

    def eval(self, u: Any) -> Any:
        acc: Any = Fraction(0)
        for k, c in enumerate(self.poly):
            acc = acc + c * (u ** k)
        for (z, j), c in self.poles.items():
            acc = acc + c / (u - z) ** j
        return acc

    def to_fraction(self) -> Tuple[List[Fraction], List[Fraction]]:
        """Numerator and denominator coefficient lists (rational coefficients only)."""
        den = [Fraction(1)]
        order: Dict[Fraction, int] = {}
        for (z, j) in self.poles:
            order[z] = max(order.get(z, 0), j)
        for z, j in sorted(order.items()):
            for _ in range(j):
                den = _poly_mul(den, [-z, Fraction(1)])
        num = _poly_mul([Fraction(c) for c in self.poly], den)
        for (z, j), c in self.poles.items():
            part = [Fraction(c)]
            for p, jp in sorted(order.items()):
                e = jp - j if p == z else jp
                for _ in range(e):
                    part = _poly_mul(part, [-p, Fraction(1)])
            num = _poly_add(num, part)
        return _poly_trim(num), den

    @classmethod
    def from_fraction(cls, num: Sequence[Any], poles: Mapping[Any, int]) -> "RatFn":
        """Partial fractions of num(u) / prod (u - z)^e with rational data."""
        out = cls([as_rat(c) for c in num])
        for z, e in poles.items():
            inv = cls.pole(z, e)
            out = out * inv
        return out

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, RatFn):
            other = RatFn.const(other)
        d = self - other
        return d.is_zero()

    def __hash__(self) -> int:
        return hash(len(self.poly))

    def __repr__(self) -> str:
        parts = []
        for k, c in enumerate(self.poly):
            parts.append(f"({c})*u^{k}" if k else f"({c})")
        for (z, j), c in sorted(self.poles.items()):
            parts.append(f"({c})/(u-{fmt_rat(z)})^{j}")
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> Dict[str, Any]:
        def enc(c: Any) -> Any:
            if isinstance(c, (int, Fraction)):
                return fmt_rat(c)
            if hasattr(c, "to_json"):
                return c.to_json()
            return str(c)

        return {
            "poly": [enc(c) for c in self.poly],
            "poles": [{"z": fmt_rat(z), "order": j, "coeff": enc(c)} for (z, j), c in sorted(self.poles.items())],
        }


def _poly_mul(a: Sequence[Any], b: Sequence[Any]) -> List[Any]:
    if not a or not b:
        return []
    out: List[Any] = [None] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            t = x * y
            out[i + j] = t if out[i + j] is None else out[i + j] + t
    return out


def _poly_add(a: Sequence[Any], b: Sequence[Any]) -> List[Any]:
    out = list(a) + [Fraction(0)] * max(0, len(b) - len(a))
    for k, c in enumerate(b):
        out[k] = out[k] + c
    return out


def _poly_trim(a: List[Any]) -> List[Any]:
    while a and is_zero(a[-1]):
        a.pop()
    return a


def _ratfn_mul(f: RatFn, g: RatFn) -> RatFn:
    poly: Dict[int, Any] = {}
    poles: Dict[Tuple[Fraction, int], Any] = {}

    for i, a in enumerate(f.poly):
        for j, b in enumerate(g.poly):
            _add_into(poly, i + j, a * b)

    def poly_times_pole(p: int, z: Fraction, i: int, coeff_fn: Callable[[Fraction], Any]) -> None:
        # u^p / (u-z)^i with u = x + z
        for r in range(p + 1):
            s = comb(p, r) * z ** (p - r)
            if not s:
                continue
            if r < i:
                _add_into(poles, (z, i - r), coeff_fn(Fraction(s)))
            else:
                e = r - i
                for q in range(e + 1):
                    t = s * comb(e, q) * (-z) ** (e - q)
                    if t:
                        _add_into(poly, q, coeff_fn(Fraction(t)))

    for p, a in enumerate(f.poly):
        for (z, i), b in g.poles.items():
            poly_times_pole(p, z, i, lambda s, a=a, b=b: s * (a * b))
    for (z, i), a in f.poles.items():
        for p, b in enumerate(g.poly):
            poly_times_pole(p, z, i, lambda s, a=a, b=b: s * (a * b))

    for (za, i), a in f.poles.items():
        for (zb, j), b in g.poles.items():
            ab = a * b
            if za == zb:
                _add_into(poles, (za, i + j), ab)
                continue
            d = za - zb
            for s in range(i):
                c = Fraction((-1) ** s * comb(j + s - 1, s)) / d ** (j + s)
                _add_into(poles, (za, i - s), c * ab)
            for s in range(j):
                c = Fraction((-1) ** s * comb(i + s - 1, s)) / (-d) ** (i + s)
                _add_into(poles, (zb, j - s), c * ab)

    top = max(poly) + 1 if poly else 0
    return RatFn([poly.get(k, Fraction(0)) for k in range(top)], poles)


# ---------------------------------------------------------------------------
# LaurentSeries


class LaurentSeries:
    """Truncated Laurent series sum_k c_k x^k.

    ``start`` is the exponent of ``coeffs[0]``.  ``order`` is the truncation
    order T: coefficients are exact for exponents <= T and unknown above.
    ``order=None`` marks a series known exactly (a Laurent polynomial).
    """

    __slots__ = ("start", "coeffs", "order")

    def __init__(self, start: int, coeffs: Sequence[Any], order: Optional[int] = None):
        cs = list(coeffs)
        if order is not None:
            cs = cs[: max(0, order - start + 1)]
        while cs and is_zero(cs[0]):
            cs.pop(0)
            start += 1
        while cs and is_zero(cs[-1]):
            cs.pop()
        self.start = start if cs else 0
        self.coeffs: Tuple[Any, ...] = tuple(cs)
        self.order = order

    @classmethod
    def zero(cls, order: Optional[int] = None) -> "LaurentSeries":
        return cls(0, (), order)

    @classmethod
    def monomial(cls, c: Any, k: int, order: Optional[int] = None) -> "LaurentSeries":
        return cls(k, [c], order)

    @classmethod
    def from_dict(cls, terms: Mapping[int, Any], order: Optional[int] = None) -> "LaurentSeries":
        terms = {k: c for k, c in terms.items() if not is_zero(c)}
        if not terms:
            return cls.zero(order)
        lo, hi = min(terms), max(terms)
        return cls(lo, [terms.get(k, Fraction(0)) for k in range(lo, hi + 1)], order)

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def valuation(self) -> Optional[int]:
        """Exponent of the first nonzero coefficient (None for a zero series)."""
        return self.start if self.coeffs else None

    def _val_bound(self) -> Optional[int]:
        # lower bound for the true valuation; None means exactly zero
        if self.coeffs:
            return self.start
        if self.order is None:
            return None
        return self.order + 1

    def coeff(self, k: int) -> Any:
        if self.order is not None and k > self.order:
            raise ValueError(f"coefficient x^{k} lies beyond truncation order {self.order}")
        idx = k - self.start
        if 0 <= idx < len(self.coeffs):
            return self.coeffs[idx]
        return Fraction(0)

    def known(self, k: int) -> bool:
        return self.order is None or k <= self.order

    def items(self) -> List[Tuple[int, Any]]:
        return [(self.start + i, c) for i, c in enumerate(self.coeffs) if not is_zero(c)]

    def truncate(self, order: int) -> "LaurentSeries":
        new = order if self.order is None else min(order, self.order)
        return LaurentSeries(self.start, self.coeffs, new)

    def map_coeffs(self, fn: Callable[[Any], Any]) -> "LaurentSeries":
        return LaurentSeries(self.start, [fn(c) for c in self.coeffs], self.order)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by x^k."""
        return LaurentSeries(self.start + k, self.coeffs, None if self.order is None else self.order + k)

    def __add__(self, other: Any) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            other = LaurentSeries(0, [other])
        order = _min_order(self.order, other.order)
        terms: Dict[int, Any] = {}
        for k, c in self.items():
            _add_into(terms, k, c)
        for k, c in other.items():
            _add_into(terms, k, c)
        return LaurentSeries.from_dict(terms, order)

    __radd__ = __add__

    def __neg__(self) -> "LaurentSeries":
        return self.map_coeffs(lambda c: -c)

    def __sub__(self, other: Any) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            other = LaurentSeries(0, [other])
        return self + (-other)

    def __rsub__(self, other: Any) -> "LaurentSeries":
        return (-self) + other

    def __mul__(self, other: Any) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return self.map_coeffs(lambda c: c * other)
        va, vb = self._val_bound(), other._val_bound()
        if va is None or vb is None:
            return LaurentSeries.zero(None)
        cands = []
        if self.order is not None:
            cands.append(self.order + vb)
        if other.order is not None:
            cands.append(other.order + va)
        order = min(cands) if cands else None
        terms: Dict[int, Any] = {}
        for i, a in self.items():
            for j, b in other.items():
                if order is not None and i + j > order:
                    continue
                _add_into(terms, i + j, a * b)
        return LaurentSeries.from_dict(terms, order)

    def __rmul__(self, other: Any) -> "LaurentSeries":
        return self.map_coeffs(lambda c: other * c)

    def derivative(self) -> "LaurentSeries":
        terms = {k - 1: k * c for k, c in self.items() if k != 0}
        return LaurentSeries.from_dict(terms, None if self.order is None else self.order - 1)

    def inverse(self, order: Optional[int] = None) -> "LaurentSeries":
        """Multiplicative inverse; the leading coefficient must be invertible.

        For exact input a target ``order`` is required; otherwise the result is
        known as far as the input precision allows (and at most ``order``).
        """
        if not self.coeffs:
            raise ZeroDivisionError("series is zero to its truncation order")
        v = self.start
        avail = None if self.order is None else self.order - 2 * v
        if order is None:
            if avail is None:
                raise ValueError("inverting an exact series needs a truncation order")
            order = avail
        elif avail is not None:
            order = min(order, avail)
        lead = self.coeffs[0]
        inv_lead = _invert_scalar(lead)
        n_terms = order + v + 1
        out: List[Any] = []
        for k in range(max(n_terms, 0)):
            if k == 0:
                out.append(inv_lead)
                continue
            acc: Any = None
            for i in range(1, min(k, len(self.coeffs) - 1) + 1):
                t = self.coeffs[i] * out[k - i]
                acc = t if acc is None else acc + t
            out.append(Fraction(0) if acc is None else -(inv_lead * acc))
        return LaurentSeries(-v, out, order)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, LaurentSeries):
            other = LaurentSeries(0, [other])
        if self.order != other.order:
            return False
        return self.items() == other.items() if all(
            isinstance(c, (int, Fraction)) for _, c in self.items() + other.items()
        ) else (self - other).is_zero()

    def agrees_with(self, other: "LaurentSeries", order: Optional[int] = None) -> bool:
        """Equality of coefficients up to the common (or given) truncation order."""
        o = _min_order(self.order, other.order)
        o = _min_order(o, order)
        d = self.truncate(o) - other.truncate(o) if o is not None else self - other
        return d.is_zero()

    def __hash__(self) -> int:
        return hash((self.start, len(self.coeffs), self.order))

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*x^{k}" for k, c in self.items()) or "0"
        return body + (f" + O(x^{self.order + 1})" if self.order is not None else "")


def _min_order(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _invert_scalar(c: Any) -> Any:
    if isinstance(c, (int, Fraction)):
        return Fraction(1) / Fraction(c)
    if isinstance(c, (MPoly, WPoly)):
        if not c.is_const() or c.const_value() == 0:
            raise ZeroDivisionError("leading coefficient is not an invertible constant")
        return Fraction(1) / c.const_value()
    return 1 / c


def laurent_at(b: RatFn, z: Any, T: int) -> LaurentSeries:
    """Expansion of b(u) at u = z in x = u - z, exact through x^T."""
    z = as_rat(z)
    terms: Dict[int, Any] = {}
    for k, c in enumerate(b.poly):
        # u^k = (x + z)^k
        for r in range(k + 1):
            s = comb(k, r) * z ** (k - r)
            if s and r <= T:
                _add_into(terms, r, Fraction(s) * c)
    for (p, j), c in b.poles.items():
        if p == z:
            if -j <= T:
                _add_into(terms, -j, c)
            continue
        d = z - p
        # (x + d)^{-j} = sum_s (-1)^s C(j+s-1, s) d^{-j-s} x^s
        for s in range(0, T + 1):
            coef = Fraction((-1) ** s * comb(j + s - 1, s)) / d ** (j + s)
            _add_into(terms, s, coef * c)
    return LaurentSeries.from_dict(terms, T)


def taylor_at_infinity(b: RatFn, T: int) -> LaurentSeries:
    """Expansion of b(1/x) at x = 0, exact through x^T."""
    terms: Dict[int, Any] = {}
    for k, c in enumerate(b.poly):
        if -k <= T:
            _add_into(terms, -k, c)
    for (z, j), c in b.poles.items():
        # (1/x - z)^{-j} = x^j (1 - z x)^{-j} = sum_s C(j+s-1, s) z^s x^{j+s}
        for s in range(0, T - j + 1):
            coef = Fraction(comb(j + s - 1, s)) * z ** s
            if coef:
                _add_into(terms, j + s, coef * c)
    return LaurentSeries.from_dict(terms, T)


# ---------------------------------------------------------------------------
# determinants


def _exact_div(a: Any, b: Any) -> Any:
    if hasattr(a, "divexact"):
        return a.divexact(b)
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return Fraction(a) / Fraction(b)
    return a / b


def bareiss_det(matrix: Sequence[Sequence[Any]]) -> Any:
    """Fraction-free Gaussian elimination determinant over an integral domain."""
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    a = [list(row) for row in matrix]
    if any(len(row) != n for row in a):
        raise ValueError("determinant of a non-square matrix")
    sign = 1
    prev: Any = Fraction(1)
    for k in range(n - 1):
        if is_zero(a[k][k]):
            swap = next((r for r in range(k + 1, n) if not is_zero(a[r][k])), None)
            if swap is None:
                return a[k][k] * 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                a[i][j] = _exact_div(num, prev)
        prev = a[k][k]
    det = a[n - 1][n - 1]
    return det if sign > 0 else -det
