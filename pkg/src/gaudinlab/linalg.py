"""Exact dense rational matrices backed by FLINT's ``fmpq_mat``."""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Iterable, List, Sequence, Tuple

import flint

__all__ = ["QMat", "to_fmpq", "from_fmpq"]


def to_fmpq(x: Any) -> flint.fmpq:
    if isinstance(x, flint.fmpq):
        return x
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    if isinstance(x, int):
        return flint.fmpq(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def from_fmpq(x: flint.fmpq) -> Fraction:
    return Fraction(int(x.p), int(x.q))


class QMat:
    """Immutable exact matrix; ``*`` and ``@`` are matrix products."""

    __slots__ = ("m",)

    def __init__(self, m: flint.fmpq_mat):
        self.m = m

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "QMat":
        return cls(flint.fmpq_mat(rows, cols))

    @classmethod
    def identity(cls, n: int) -> "QMat":
        m = flint.fmpq_mat(n, n)
        for i in range(n):
            m[i, i] = 1
        return cls(m)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]]) -> "QMat":
        r = len(rows)
        c = len(rows[0]) if r else 0
        return cls(flint.fmpq_mat(r, c, [to_fmpq(x) for row in rows for x in row]))

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Iterable[Tuple[int, int, Any]]) -> "QMat":
        m = flint.fmpq_mat(rows, cols)
        for i, j, v in entries:
            m[i, j] = m[i, j] + to_fmpq(v)
        return cls(m)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.m.nrows(), self.m.ncols()

    def __getitem__(self, ij: Tuple[int, int]) -> Fraction:
        return from_fmpq(self.m[ij[0], ij[1]])

    def rows(self) -> List[List[Fraction]]:
        r, c = self.shape
        return [[self[i, j] for j in range(c)] for i in range(r)]

    def is_zero(self) -> bool:
        return not any(self.m.entries())

    def __add__(self, other: Any) -> "QMat":
        if not isinstance(other, QMat):
            if other == 0:
                return self
            return NotImplemented
        return QMat(self.m + other.m)

    def __radd__(self, other: Any) -> "QMat":
        if not isinstance(other, QMat) and other == 0:
            return self
        return NotImplemented

    def __neg__(self) -> "QMat":
        return QMat(-self.m)

    def __sub__(self, other: "QMat") -> "QMat":
        return QMat(self.m - other.m)

    def __mul__(self, other: Any) -> "QMat":
        if isinstance(other, QMat):
            return QMat(self.m * other.m)
        return QMat(self.m * to_fmpq(other))

    def __rmul__(self, other: Any) -> "QMat":
        return QMat(self.m * to_fmpq(other))

    __matmul__ = __mul__

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, QMat):
            if other == 0:
                return self.is_zero()
            return NotImplemented
        return self.shape == other.shape and self.m == other.m

    def __hash__(self) -> int:
        return hash(self.shape)

    def transpose(self) -> "QMat":
        return QMat(self.m.transpose())

    def kron(self, other: "QMat") -> "QMat":
        (a, b), (c, d) = self.shape, other.shape
        out = flint.fmpq_mat(a * c, b * d)
        A, B = self.m, other.m
        for i in range(a):
            for j in range(b):
                x = A[i, j]
                if x == 0:
                    continue
                for k in range(c):
                    for l in range(d):
                        y = B[k, l]
                        if y != 0:
                            out[i * c + k, j * d + l] = x * y
        return QMat(out)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "QMat":
        m = flint.fmpq_mat(len(rows), len(cols))
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                m[a, b] = self.m[i, j]
        return QMat(m)

    def column_basis(self) -> Tuple["QMat", List[int]]:
        """Basis B of the column space with B[pivots, :] = identity."""
        rref, rank = self.m.transpose().rref()
        r, c = self.shape
        basis = flint.fmpq_mat(r, rank)
        pivots = []
        for k in range(rank):
            row = [rref[k, j] for j in range(r)]
            pivots.append(next(j for j, v in enumerate(row) if v != 0))
            for j, v in enumerate(row):
                basis[j, k] = v
        return QMat(basis), pivots

    def rank(self) -> int:
        return self.m.rank()

    def to_json(self) -> List[List[str]]:
        from .rings import fmt_rat

        return [[fmt_rat(x) for x in row] for row in self.rows()]

    def __repr__(self) -> str:
        return f"QMat{self.shape}"
