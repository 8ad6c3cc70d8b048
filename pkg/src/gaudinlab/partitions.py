"""Partitions, one-sided bipartitions and weights."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable, List, Sequence, Tuple

__all__ = [
    "Partition",
    "Bipartition",
    "TwoSidedBipartitionError",
    "weight_to_bipartition",
    "bipartition_to_weight",
    "exponents_from_weight",
]


class TwoSidedBipartitionError(ValueError):
    """Raised for (lambda, mu) with both parts nonempty.

    The idempotents of such objects are not polynomial in w, so they cannot
    be handled uniformly in the interpolation parameter.
    """


@dataclass(frozen=True)
class Partition:
    parts: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        parts = tuple(int(p) for p in self.parts if int(p) != 0)
        if any(p < 0 for p in parts):
            raise ValueError(f"negative part in {self.parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts of {self.parts} are not weakly decreasing")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, parts: Iterable[int]) -> "Partition":
        return cls(tuple(parts))

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __getitem__(self, i: int) -> int:
        """1-based part lambda_i, zero beyond the length."""
        if i < 1:
            raise IndexError("parts are indexed from 1")
        return self.parts[i - 1] if i <= len(self.parts) else 0

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def conjugate(self) -> "Partition":
        if not self.parts:
            return Partition()
        return Partition(tuple(sum(1 for p in self.parts if p >= j) for j in range(1, self.parts[0] + 1)))

    def hook_lengths(self) -> List[List[int]]:
        conj = self.conjugate()
        return [
            [self.parts[i] - j - 1 + conj.parts[j] - i for j in range(self.parts[i])]
            for i in range(len(self.parts))
        ]

    def num_standard_tableaux(self) -> int:
        prod = 1
        for row in self.hook_lengths():
            for h in row:
                prod *= h
        return factorial(self.size) // prod

    def row_tableau(self) -> List[List[int]]:
        """Standard tableau filled row by row with 0..|lambda|-1."""
        out, k = [], 0
        for p in self.parts:
            out.append(list(range(k, k + p)))
            k += p
        return out

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.parts)) + ")"


@dataclass(frozen=True)
class Bipartition:
    """A pair (lambda, mu) where at least one side is empty."""

    left: Partition = Partition()
    right: Partition = Partition()

    def __post_init__(self) -> None:
        if not isinstance(self.left, Partition):
            object.__setattr__(self, "left", Partition(tuple(self.left)))
        if not isinstance(self.right, Partition):
            object.__setattr__(self, "right", Partition(tuple(self.right)))
        if self.left.size and self.right.size:
            raise TwoSidedBipartitionError(
                f"bipartition ({self.left}, {self.right}) has both sides nonempty; "
                "its idempotent is not polynomial in w"
            )

    @property
    def is_dual(self) -> bool:
        return self.right.size > 0

    @property
    def partition(self) -> Partition:
        return self.right if self.is_dual else self.left

    @property
    def letters(self) -> str:
        """Word of the tensor power T^{r,s} carrying this object."""
        return "b" * self.left.size + "w" * self.right.size

    @property
    def length(self) -> int:
        return max(self.left.length, self.right.length)


def weight_to_bipartition(weight: Sequence[int]) -> Bipartition:
    """gl_n weight nu (weakly decreasing) to the one-sided pair (lambda, mu)."""
    nu = [int(v) for v in weight]
    if any(nu[i] < nu[i + 1] for i in range(len(nu) - 1)):
        raise ValueError(f"weight {nu} is not dominant")
    if any(v > 0 for v in nu) and any(v < 0 for v in nu):
        raise TwoSidedBipartitionError(f"weight {nu} has entries of both signs")
    lam = Partition(tuple(v for v in nu if v > 0))
    mu = Partition(tuple(-v for v in reversed(nu) if v < 0))
    return Bipartition(lam, mu)


def bipartition_to_weight(bp: Bipartition, n: int) -> Tuple[int, ...]:
    """(lambda, mu) to (lambda_1, ..., 0, ..., -mu_1); needs n >= the length."""
    if bp.left.length + bp.right.length > n:
        raise ValueError(f"n = {n} is too small for {bp}")
    nu = [0] * n
    for i, p in enumerate(bp.left.parts):
        nu[i] = p
    for i, p in enumerate(bp.right.parts):
        nu[n - 1 - i] = -p
    return tuple(nu)


def exponents_from_weight(weight: Sequence[int]) -> Tuple[int, ...]:
    """Frobenius exponents m_1 < ... < m_n with m_{n+1-i} = n + nu_i - i."""
    n = len(weight)
    m = [0] * n
    for i in range(1, n + 1):
        m[n - i] = n + int(weight[i - 1]) - i
    return tuple(m)
