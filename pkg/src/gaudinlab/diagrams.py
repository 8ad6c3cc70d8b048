"""The diagram category with loop parameter w, and its evaluation at w = n.

Words are strings over ``"b"`` (black, the object V) and ``"w"`` (white,
the dual V*).  A :class:`Diagram` from ``top`` to ``bottom`` is a perfect
matching of the vertices of both rows: edges inside a row join a black and
a white vertex, edges between rows join vertices of equal color.  A
:class:`Morphism` is a finite linear combination of diagrams with
coefficients in Q[w]; composing two diagrams multiplies by w for every
closed loop that gets erased.

The evaluation functor sends a diagram to the contraction of Kronecker
deltas on copies of Q^n (black) and its dual (white), with w -> n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from math import factorial
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .linalg import QMat
from .partitions import Bipartition, Partition
from .rings import WPoly

__all__ = [
    "DiagramError",
    "CompositionError",
    "Diagram",
    "Morphism",
    "identity",
    "compose",
    "tensor",
    "basis_diagrams",
    "permutation_morphism",
    "cup",
    "cap",
    "young_idempotent",
    "bipartition_idempotent",
    "cyclic_morphism",
    "cycle_diagram",
    "action_tilde",
    "action_morphism",
    "factor_action",
    "word_action",
    "evaluate_G_n",
]

GL = "bw"  # the adjoint object V (x) V*


class DiagramError(ValueError):
    pass


class CompositionError(DiagramError):
    pass


def _check_word(word: str) -> str:
    if any(c not in "bw" for c in word):
        raise DiagramError(f"word {word!r} has letters outside 'bw'")
    return word


@dataclass(frozen=True)
class Diagram:
    """Perfect matching on ``top`` (vertices 0..a-1) and ``bottom`` (a..a+b-1)."""

    top: str
    bottom: str
    match: Tuple[int, ...]

    def __post_init__(self) -> None:
        _check_word(self.top)
        _check_word(self.bottom)
        a = len(self.top)
        size = a + len(self.bottom)
        if len(self.match) != size:
            raise DiagramError("matching has the wrong number of vertices")
        for v, p in enumerate(self.match):
            if not 0 <= p < size or p == v or self.match[p] != v:
                raise DiagramError(f"vertex {v} is not matched exactly once")
            cv, cp = self.color(v), self.color(p)
            same_row = (v < a) == (p < a)
            if same_row and cv == cp:
                raise DiagramError("an edge inside a row must join black and white")
            if not same_row and cv != cp:
                raise DiagramError("an edge between rows must join equal colors")

    def color(self, v: int) -> str:
        a = len(self.top)
        return self.top[v] if v < a else self.bottom[v - a]

    @classmethod
    def from_edges(cls, top: str, bottom: str, edges: Iterable[Tuple[Tuple[str, int], Tuple[str, int]]]) -> "Diagram":
        a = len(top)
        match = [-1] * (a + len(bottom))

        def idx(end: Tuple[str, int]) -> int:
            row, i = end
            if row in ("t", "top"):
                if not 0 <= i < a:
                    raise DiagramError(f"top vertex {i} out of range")
                return i
            if row in ("b", "bottom"):
                if not 0 <= i < len(bottom):
                    raise DiagramError(f"bottom vertex {i} out of range")
                return a + i
            raise DiagramError(f"unknown row {row!r}")

        for e1, e2 in edges:
            u, v = idx(e1), idx(e2)
            if match[u] != -1 or match[v] != -1:
                raise DiagramError("vertex used twice")
            match[u], match[v] = v, u
        if -1 in match:
            raise DiagramError("some vertex is unmatched")
        return cls(top, bottom, tuple(match))

    def edges(self) -> List[Tuple[Tuple[str, int], Tuple[str, int]]]:
        a = len(self.top)

        def name(v: int) -> Tuple[str, int]:
            return ("top", v) if v < a else ("bottom", v - a)

        return [(name(v), name(p)) for v, p in enumerate(self.match) if v < p]

    def to_json(self) -> Dict[str, Any]:
        return {"top": self.top, "bottom": self.bottom, "edges": [[list(x), list(y)] for x, y in self.edges()]}


@lru_cache(maxsize=None)
def _compose_diagrams(y: Diagram, x: Diagram) -> Tuple[Diagram, int]:
    """Stack x above y; returns the resulting diagram and the number of loops."""
    a, b, c = len(x.top), len(x.bottom), len(y.bottom)
    xm, ym = x.match, y.match
    out = [-1] * (a + c)
    seen_mid = [False] * b

    def walk_from_x(v: int) -> int:
        # v is a vertex of x; follow x's edge, then alternate through the middle
        while True:
            p = xm[v]
            if p < a:
                return p
            k = p - a
            seen_mid[k] = True
            q = ym[k]
            if q >= b:
                return a + (q - b)
            seen_mid[q] = True
            v = a + q

    def walk_from_y(v: int) -> int:
        while True:
            q = ym[v]
            if q >= b:
                return a + (q - b)
            seen_mid[q] = True
            p = xm[a + q]
            if p < a:
                return p
            k = p - a
            seen_mid[k] = True
            v = k

    for v in range(a):
        if out[v] == -1:
            end = walk_from_x(v)
            out[v], out[end] = end, v
    for j in range(c):
        if out[a + j] == -1:
            end = walk_from_y(b + j)
            out[a + j], out[end] = end, a + j

    loops = 0
    for k in range(b):
        if seen_mid[k]:
            continue
        loops += 1
        cur = k
        while True:
            seen_mid[cur] = True
            nxt = xm[a + cur] - a  # x-edge from the middle stays in the middle
            seen_mid[nxt] = True
            cur = ym[nxt]
            if cur == k:
                break
    return Diagram(x.top, y.bottom, tuple(out)), loops


def _tensor_diagrams(x: Diagram, y: Diagram) -> Diagram:
    a1, b1 = len(x.top), len(x.bottom)
    a2, b2 = len(y.top), len(y.bottom)
    top, bottom = x.top + y.top, x.bottom + y.bottom

    def rx(v: int) -> int:
        return v if v < a1 else a1 + a2 + (v - a1)

    def ry(v: int) -> int:
        return a1 + v if v < a2 else a1 + a2 + b1 + (v - a2)

    match = [0] * (a1 + a2 + b1 + b2)
    for v, p in enumerate(x.match):
        match[rx(v)] = rx(p)
    for v, p in enumerate(y.match):
        match[ry(v)] = ry(p)
    return Diagram(top, bottom, tuple(match))


class Morphism:
    """Q[w]-linear combination of diagrams sharing source and target."""

    __slots__ = ("source", "target", "terms")

    def __init__(self, source: str, target: str, terms: Optional[Mapping[Diagram, Any]] = None):
        self.source = _check_word(source)
        self.target = _check_word(target)
        clean: Dict[Diagram, WPoly] = {}
        if terms:
            for d, c in terms.items():
                if d.top != source or d.bottom != target:
                    raise DiagramError("diagram does not match the morphism's words")
                c = c if isinstance(c, WPoly) else WPoly.const(c)
                if c:
                    clean[d] = clean[d] + c if d in clean else c
        self.terms: Dict[Diagram, WPoly] = {d: c for d, c in clean.items() if c}

    @classmethod
    def of(cls, d: Diagram, coeff: Any = 1) -> "Morphism":
        return cls(d.top, d.bottom, {d: coeff})

    @classmethod
    def zero(cls, source: str, target: str) -> "Morphism":
        return cls(source, target)

    def is_zero(self) -> bool:
        return not self.terms

    def _same(self, other: "Morphism") -> None:
        if (self.source, self.target) != (other.source, other.target):
            raise DiagramError("morphisms live in different Hom spaces")

    def __add__(self, other: "Morphism") -> "Morphism":
        if isinstance(other, int) and other == 0:
            return self
        self._same(other)
        terms = dict(self.terms)
        for d, c in other.terms.items():
            terms[d] = terms[d] + c if d in terms else c
        return Morphism(self.source, self.target, terms)

    __radd__ = __add__

    def __neg__(self) -> "Morphism":
        return Morphism(self.source, self.target, {d: -c for d, c in self.terms.items()})

    def __sub__(self, other: "Morphism") -> "Morphism":
        return self + (-other)

    def __mul__(self, scalar: Any) -> "Morphism":
        if isinstance(scalar, Morphism):
            return compose(self, scalar)
        return Morphism(self.source, self.target, {d: c * scalar for d, c in self.terms.items()})

    def __rmul__(self, scalar: Any) -> "Morphism":
        return Morphism(self.source, self.target, {d: c * scalar for d, c in self.terms.items()})

    def __matmul__(self, other: "Morphism") -> "Morphism":
        return compose(self, other)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Morphism):
            return NotImplemented
        return (self.source, self.target) == (other.source, other.target) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.source, self.target, len(self.terms)))

    def eval_w(self, t: Any) -> "Morphism":
        return Morphism(self.source, self.target, {d: WPoly.const(c.eval(t)) for d, c in self.terms.items()})

    def to_json(self) -> Dict[str, Any]:
        rows = sorted(((d.match, d, c) for d, c in self.terms.items()), key=lambda t: t[0])
        return {
            "source": self.source,
            "target": self.target,
            "terms": [{"diagram": d.to_json(), "coeff": c.to_json()} for _, d, c in rows],
        }

    def __repr__(self) -> str:
        return f"Morphism({self.source!r} -> {self.target!r}, {len(self.terms)} terms)"


def identity(word: str) -> Morphism:
    a = len(word)
    match = tuple(a + i for i in range(a)) + tuple(range(a))
    return Morphism.of(Diagram(word, word, match))


def compose(y: Morphism, x: Morphism) -> Morphism:
    """y o x: x is applied first (drawn on top)."""
    if x.target != y.source:
        raise CompositionError(f"cannot compose {x.source!r}->{x.target!r} with {y.source!r}->{y.target!r}")
    terms: Dict[Diagram, WPoly] = {}
    wpow: Dict[int, WPoly] = {}
    for dy, cy in y.terms.items():
        for dx, cx in x.terms.items():
            d, loops = _compose_diagrams(dy, dx)
            if loops not in wpow:
                wpow[loops] = WPoly.w() ** loops
            c = cy * cx * wpow[loops]
            terms[d] = terms[d] + c if d in terms else c
    return Morphism(x.source, y.target, terms)


def tensor(x: Morphism, y: Morphism) -> Morphism:
    terms: Dict[Diagram, WPoly] = {}
    for dx, cx in x.terms.items():
        for dy, cy in y.terms.items():
            d = _tensor_diagrams(dx, dy)
            terms[d] = terms[d] + cx * cy if d in terms else cx * cy
    return Morphism(x.source + y.source, x.target + y.target, terms)


def tensor_all(items: Sequence[Morphism]) -> Morphism:
    out = identity("")
    for m in items:
        out = tensor(out, m)
    return out


def permutation_diagram(perm: Sequence[int], word: str) -> Diagram:
    """Strand i of ``word`` goes to position perm[i] of the permuted word."""
    k = len(perm)
    if sorted(perm) != list(range(k)) or len(word) != k:
        raise DiagramError("not a permutation of the word's positions")
    bottom = [""] * k
    for i, p in enumerate(perm):
        bottom[p] = word[i]
    bottom_w = "".join(bottom)
    return Diagram.from_edges(word, bottom_w, [(("t", i), ("b", perm[i])) for i in range(k)])


def basis_diagrams(top: str, bottom: str) -> List[Diagram]:
    """Every diagram from ``top`` to ``bottom``, in a fixed order."""
    _check_word(top)
    _check_word(bottom)
    a = len(top)
    size = a + len(bottom)
    colors = top + bottom
    out: List[Diagram] = []
    match = [-1] * size

    def allowed(v: int, p: int) -> bool:
        same_row = (v < a) == (p < a)
        return (colors[v] != colors[p]) if same_row else (colors[v] == colors[p])

    def rec() -> None:
        try:
            v = match.index(-1)
        except ValueError:
            out.append(Diagram(top, bottom, tuple(match)))
            return
        for p in range(v + 1, size):
            if match[p] == -1 and allowed(v, p):
                match[v], match[p] = p, v
                rec()
                match[v] = match[p] = -1

    rec()
    return out


def permutation_morphism(perm: Sequence[int], word: str) -> Morphism:
    return Morphism.of(permutation_diagram(perm, word))


def cup() -> Morphism:
    """Coevaluation: empty word -> V (x) V*."""
    return Morphism.of(Diagram.from_edges("", GL, [(("b", 0), ("b", 1))]))


def cap() -> Morphism:
    """Evaluation: V (x) V* -> empty word."""
    return Morphism.of(Diagram.from_edges(GL, "", [(("t", 0), ("t", 1))]))


def _perm_sign(p: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _group_sum(blocks: List[List[int]], k: int, signed: bool) -> Dict[Tuple[int, ...], int]:
    """Sum over the product of symmetric groups on the given blocks."""
    elems: Dict[Tuple[int, ...], int] = {tuple(range(k)): 1}
    for block in blocks:
        nxt: Dict[Tuple[int, ...], int] = {}
        for img in permutations(block):
            local = list(range(k))
            for src, dst in zip(block, img):
                local[src] = dst
            s = _perm_sign(local) if signed else 1
            for p, c in elems.items():
                q = tuple(local[p[i]] for i in range(k))
                nxt[q] = nxt.get(q, 0) + c * s
        elems = nxt
    return elems


def young_symmetrizer_terms(lam: Partition) -> Dict[Tuple[int, ...], Fraction]:
    """Normalized Young symmetrizer (f/|lam|!) * rowsym o colantisym as {perm: coeff}."""
    k = lam.size
    tab = lam.row_tableau()
    rows = tab
    cols = [[tab[r][c] for r in range(len(tab)) if c < len(tab[r])] for c in range(len(tab[0]))] if tab else []
    row_sum = _group_sum(rows, k, signed=False)
    col_sum = _group_sum(cols, k, signed=True)
    scale = Fraction(lam.num_standard_tableaux(), factorial(k))
    out: Dict[Tuple[int, ...], Fraction] = {}
    for p, a in row_sum.items():
        for q, b in col_sum.items():
            pq = tuple(p[q[i]] for i in range(k))  # p o q: q first
            out[pq] = out.get(pq, Fraction(0)) + a * b * scale
    return {p: c for p, c in out.items() if c}


def young_idempotent(lam: Partition, color: str = "b") -> Morphism:
    """(f^lam/|lam|!) c_lam on V^{|lam|} (color 'b') or V*^{|lam|} (color 'w')."""
    if not isinstance(lam, Partition):
        lam = Partition(tuple(lam))
    if lam.size < 1:
        raise DiagramError("young_idempotent needs |lam| >= 1")
    if color not in ("b", "w"):
        raise DiagramError("color must be 'b' or 'w'")
    word = color * lam.size
    terms = {permutation_diagram(p, word): c for p, c in young_symmetrizer_terms(lam).items()}
    return Morphism(word, word, terms)


def bipartition_idempotent(bp: Bipartition) -> Morphism:
    if bp.left.size:
        return young_idempotent(bp.left, "b")
    if bp.right.size:
        return young_idempotent(bp.right, "w")
    return identity("")


def total_idempotent(bps: Sequence[Bipartition]) -> Morphism:
    return tensor_all([bipartition_idempotent(bp) for bp in bps])


# ---------------------------------------------------------------------------
# structural morphisms into tensor powers of gl = V (x) V*


def cycle_diagram(k: int) -> Diagram:
    """The cyclic element sum e_{j1 j2} (x) e_{j2 j3} (x) ... (x) e_{jk j1}.

    Arcs join the white vertex of each factor with the black vertex of the
    next one, and the first black vertex with the last white vertex.
    """
    if k < 1:
        raise DiagramError("cycle needs k >= 1")
    word = GL * k
    edges = [(("b", 2 * a + 1), ("b", 2 * a + 2)) for a in range(k - 1)]
    edges.append((("b", 0), ("b", 2 * k - 1)))
    return Diagram.from_edges("", word, edges)


def _block_permutation(sigma: Sequence[int], block: int) -> List[int]:
    perm = []
    for i, p in enumerate(sigma):
        for s in range(block):
            perm.append(block * p + s)
    return perm


def _merge_morphism(groups: Sequence[Sequence[int]], total: int) -> Morphism:
    """gl^{total} -> gl^{len(groups)}: multiplies the listed factors as matrices.

    Each group lists factor positions (0-based) in multiplication order.
    Factors must be grouped contiguously in increasing order.
    """
    top = GL * total
    bottom = GL * len(groups)
    edges = []
    for g, members in enumerate(groups):
        edges.append((("t", 2 * members[0]), ("b", 2 * g)))
        for x, y in zip(members, members[1:]):
            edges.append((("t", 2 * x + 1), ("t", 2 * y)))
        edges.append((("t", 2 * members[-1] + 1), ("b", 2 * g + 1)))
    return Morphism.of(Diagram.from_edges(top, bottom, edges))


def _distinct_cyclic(labels: Sequence[int], total: int) -> Morphism:
    """sigma o (C_k (x) C_1^{total-k}) for distinct 1-based labels."""
    k = len(labels)
    base = tensor_all([Morphism.of(cycle_diagram(k))] + [Morphism.of(cycle_diagram(1))] * (total - k))
    rest = [a for a in range(1, total + 1) if a not in labels]
    sigma = [a - 1 for a in labels] + [a - 1 for a in rest]
    perm = permutation_morphism(_block_permutation(sigma, 2), GL * total)
    return compose(perm, base)


def cyclic_morphism(k: int, indices: Sequence[int], m: int) -> Morphism:
    """The element C_k^{i,m} in Hom(empty, gl^{m}).

    Distinct indices give a permuted cycle.  Repeated indices are first given
    fresh labels, ordered by value and then by position, and the factors
    sharing a value are multiplied as matrices afterwards.  Values that do
    not occur contribute the identity element of gl_n.
    """
    idx = list(indices)
    if k < 1 or len(idx) != k:
        raise DiagramError("need k >= 1 indices")
    if any(not 1 <= a <= m for a in idx):
        raise DiagramError(f"indices {idx} out of range 1..{m}")
    if len(set(idx)) == k:
        return _distinct_cyclic(idx, m)
    labels = [0] * k
    groups: List[List[int]] = []
    nxt = 0
    for a in range(1, m + 1):
        members = [p for p, v in enumerate(idx) if v == a]
        if not members:
            groups.append([nxt])
            nxt += 1
            continue
        group = []
        for p in members:
            labels[p] = nxt + 1
            group.append(nxt)
            nxt += 1
        groups.append(group)
    element = _distinct_cyclic(labels, nxt)
    return compose(_merge_morphism(groups, nxt), element)


def _factor_words(bps: Sequence[Bipartition]) -> Tuple[str, List[Tuple[int, int]]]:
    word, spans, pos = "", [], 0
    for bp in bps:
        w = bp.letters
        spans.append((pos, pos + len(w)))
        word += w
        pos += len(w)
    return word, spans


def _pairing_terms(n_gl: int, wword: str, assignment: Sequence[Optional[int]]) -> Tuple[Diagram, int]:
    """Diagram gl^{n_gl} (x) W -> W pairing gl factor g with strand assignment[g]."""
    top = GL * n_gl + wword
    off = 2 * n_gl
    edges = []
    paired = {}
    sign = 1
    for g, s in enumerate(assignment):
        if s is None:
            continue
        paired[s] = g
        if wword[s] == "b":
            edges.append((("t", 2 * g + 1), ("t", off + s)))
            edges.append((("t", 2 * g), ("b", s)))
        else:
            # the dual action carries a minus sign: e_pq acts on V* as -E_qp
            edges.append((("t", 2 * g), ("t", off + s)))
            edges.append((("t", 2 * g + 1), ("b", s)))
            sign = -sign
    for s in range(len(wword)):
        if s not in paired:
            edges.append((("t", off + s), ("b", s)))
    return Diagram.from_edges(top, wword, edges), sign


def action_tilde(bps: Sequence[Bipartition]) -> Morphism:
    """Sum over pairings: gl factor a acts on one strand of W_a."""
    wword, spans = _factor_words(bps)
    m = len(bps)
    terms: Dict[Diagram, int] = {}
    for choice in product(*[range(lo, hi) for lo, hi in spans]):
        d, sign = _pairing_terms(m, wword, list(choice))
        terms[d] = terms.get(d, 0) + sign
    return Morphism(GL * m + wword, wword, terms)


def action_morphism(bps: Sequence[Bipartition]) -> Morphism:
    """rho = e o rho~ o (id (x) e) for the product idempotent e."""
    e = total_idempotent(bps)
    m = len(bps)
    return compose(e, compose(action_tilde(bps), tensor(identity(GL * m), e)))


@lru_cache(maxsize=None)
def factor_action(bps: Tuple[Bipartition, ...], a: int) -> Morphism:
    """gl (x) W -> W: the derivation action of one gl factor on W_a (1-based a)."""
    wword, spans = _factor_words(bps)
    lo, hi = spans[a - 1]
    terms: Dict[Diagram, int] = {}
    for s in range(lo, hi):
        d, sign = _pairing_terms(1, wword, [s])
        terms[d] = terms.get(d, 0) + sign
    return Morphism(GL + wword, wword, terms)


@lru_cache(maxsize=None)
def word_action(bps: Tuple[Bipartition, ...], indices: Tuple[int, ...]) -> Morphism:
    """Action of C_k^{i} on the object cut out of W by the idempotents.

    The k-cycle in gl^{k} is fed into single-factor actions, the last factor
    acting first, so factors sharing a value multiply in U(gl_n) order and
    values that do not occur act trivially.  The result is sandwiched
    between the idempotents.  The empty word gives w times the idempotent.
    """
    wword, _ = _factor_words(bps)
    e = total_idempotent(bps)
    if not indices:
        return e * WPoly.w()
    k = len(indices)
    state = tensor(Morphism.of(cycle_diagram(k)), identity(wword))
    for pos in range(k - 1, -1, -1):
        act = factor_action(bps, indices[pos])
        state = compose(tensor(identity(GL * pos), act), state)
    return compose(e, compose(state, e))


# ---------------------------------------------------------------------------
# evaluation at w = n


@lru_cache(maxsize=None)
def _diagram_pattern(d: Diagram, n: int) -> Tuple[Tuple[int, int], ...]:
    a, b = len(d.top), len(d.bottom)
    edges = [(v, p) for v, p in enumerate(d.match) if v < p]
    entries = []
    idx = [0] * (a + b)
    for assignment in product(range(n), repeat=len(edges)):
        for (v, p), val in zip(edges, assignment):
            idx[v] = idx[p] = val
        col = 0
        for v in range(a):
            col = col * n + idx[v]
        row = 0
        for v in range(a, a + b):
            row = row * n + idx[v]
        entries.append((row, col))
    return tuple(entries)


def evaluate_G_n(x: Morphism, n: int) -> QMat:
    """Exact matrix of x on tensor powers of Q^n and its dual, with w = n."""
    if n < 1:
        raise ValueError("n must be positive")
    rows, cols = n ** len(x.target), n ** len(x.source)
    acc: Dict[Tuple[int, int], Fraction] = {}
    for d, c in x.terms.items():
        val = c.eval(Fraction(n))
        if not val:
            continue
        for rc in _diagram_pattern(d, n):
            acc[rc] = acc.get(rc, Fraction(0)) + val
    return QMat.from_entries(rows, cols, ((r, c, v) for (r, c), v in acc.items() if v))
