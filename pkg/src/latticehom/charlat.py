"""Characteristic vectors, lattice weights, SpinC classes and Maslov gradings.

Characteristic vectors are tuples of ints in the graph's vertex order; vertex
subsets are bitmasks (bit i is vertex i).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import floor, gcd
from operator import add
from typing import Iterator

from sympy import Matrix
from sympy.matrices.normalforms import smith_normal_decomp

from .graph import PlumbingGraph, determinant, intersection_matrix, signature_chi

__all__ = [
    "CharError",
    "Form",
    "SpinCClass",
    "CubePair",
    "WeightCache",
    "form",
    "bits",
    "popcount",
    "is_characteristic",
    "weight_f",
    "min_weight_g",
    "shift_K",
    "ab_exponents",
    "spinc_of",
    "enumerate_spinc",
    "torsion_data",
    "k_square",
    "maslov_gr",
    "relative_maslov",
]

CharVec = tuple[int, ...]


class CharError(ValueError):
    pass


def bits(E: int) -> Iterator[int]:
    i = 0
    while E:
        if E & 1:
            yield i
        E >>= 1
        i += 1


def popcount(E: int) -> int:
    return bin(E).count("1")


def _solve_rational(M: list[list[int]], b: list) -> list[Fraction] | None:
    """One solution of M x = b over Q (free variables set to 0), or None."""
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(M, b)]
    piv_cols, r = [], 0
    for c in range(n):
        p = next((i for i in range(r, n) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(n):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        piv_cols.append(c)
        r += 1
    if any(A[i][n] != 0 for i in range(r, n)):
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(piv_cols):
        x[c] = A[i][n]
    return x


class Form:
    """Cached linear-algebra data of the intersection form of a graph."""

    def __init__(self, G: PlumbingGraph):
        self.G = G
        self.n = G.size
        self.M = intersection_matrix(G)
        self.sigma, self.chi = signature_chi(G)
        self.det = determinant(self.M)

    @cached_property
    def snf(self):
        """(S, diag, rank, S_inverse, T) with S M T diagonal."""
        if self.n == 0:
            return [], [], 0, [], []
        D, S, T = smith_normal_decomp(Matrix(self.M))
        diag = [int(D[i, i]) for i in range(self.n)]
        rank = sum(1 for d in diag if d != 0)
        Sl = [[int(S[i, j]) for j in range(self.n)] for i in range(self.n)]
        Si = S.inv()
        Sil = [[int(Si[i, j]) for j in range(self.n)] for i in range(self.n)]
        Tl = [[int(T[i, j]) for j in range(self.n)] for i in range(self.n)]
        return Sl, diag, rank, Sil, Tl

    def k_ref(self) -> CharVec:
        return tuple(m % 2 for m in self.G.framings)

    def apply(self, A, v):
        return [sum(a * x for a, x in zip(row, v)) for row in A]

    def pair(self, x, y):
        return sum(x[i] * self.M[i][j] * y[j] for i in range(self.n) for j in range(self.n))

    def lift(self, y) -> list[int] | None:
        """Integral x with M x = y, or None if y is not in the integral image."""
        S, diag, rank, _, T = self.snf
        a = self.apply(S, y)
        z = [0] * self.n
        for i in range(self.n):
            if i < rank:
                if a[i] % diag[i]:
                    return None
                z[i] = a[i] // diag[i]
            elif a[i] != 0:
                return None
        return self.apply(T, z)


_FORMS: dict[PlumbingGraph, Form] = {}


def form(G: PlumbingGraph) -> Form:
    f = _FORMS.get(G)
    if f is None:
        if len(_FORMS) > 512:
            _FORMS.clear()
        f = _FORMS[G] = Form(G)
    return f


def is_characteristic(G: PlumbingGraph, K) -> bool:
    return len(K) == G.size and all((k - m) % 2 == 0 for k, m in zip(K, G.framings))


def _check(G, K):
    if not is_characteristic(G, K):
        raise CharError(f"{tuple(K)} is not characteristic for framings {G.framings}")


@dataclass(frozen=True)
class CubePair:
    """The generator U^u [K, E]."""

    K: CharVec
    E: int
    u: int = 0


def weight_f(G: PlumbingGraph, K, I: int) -> int:
    _check(G, K)
    M = form(G).M
    idx = list(bits(I))
    two_f = sum(K[i] for i in idx) + sum(M[i][j] for i in idx for j in idx)
    return two_f // 2


def shift_K(G: PlumbingGraph, K, v: int) -> CharVec:
    if not 0 <= v < G.size:
        raise CharError(f"unknown vertex index {v}")
    row = form(G).M[v]
    return tuple(k + 2 * r for k, r in zip(K, row))


class WeightCache:
    """Memoised minimal weights g([K, E]) for one graph."""

    def __init__(self, G: PlumbingGraph):
        self.G = G
        self.M = form(G).M
        self._rows2 = [tuple(2 * x for x in row) for row in self.M]
        self.g: dict[tuple[CharVec, int], int] = {}

    def shift(self, K: CharVec, v: int) -> CharVec:
        return tuple(map(add, K, self._rows2[v]))

    def min_weight(self, K: CharVec, E: int) -> int:
        if E == 0:
            return 0
        key = (K, E)
        val = self.g.get(key)
        if val is None:
            v = (E & -E).bit_length() - 1
            rest = E & ~(1 << v)
            A = self.min_weight(K, rest)
            B = (K[v] + self.M[v][v]) // 2 + self.min_weight(self.shift(K, v), rest)
            val = self.g[key] = min(A, B)
        return val

    def ab(self, K: CharVec, E: int, v: int) -> tuple[int, int]:
        rest = E & ~(1 << v)
        A = self.min_weight(K, rest)
        B = (K[v] + self.M[v][v]) // 2 + self.min_weight(self.shift(K, v), rest)
        g = min(A, B)
        return A - g, B - g


def min_weight_g(G: PlumbingGraph, K, E: int, cache: WeightCache | None = None) -> int:
    _check(G, K)
    cache = cache or WeightCache(G)
    return cache.min_weight(tuple(K), E)


def ab_exponents(G: PlumbingGraph, K, E: int, v: int,
                 cache: WeightCache | None = None) -> tuple[int, int]:
    _check(G, K)
    if not (E >> v) & 1:
        raise CharError(f"vertex {v} is not in E")
    cache = cache or WeightCache(G)
    return cache.ab(tuple(K), E, v)


@dataclass(frozen=True)
class SpinCClass:
    """A coset of characteristic vectors modulo 2 Im(M)."""

    key: tuple[int, ...]
    representative: CharVec
    torsion: bool
    divisibility: int  # 0 for torsion classes


def _class_key(F: Form, K) -> tuple[int, ...]:
    S, diag, rank, _, _ = F.snf
    c = [(k - r) // 2 for k, r in zip(K, F.k_ref())]
    a = F.apply(S, c)
    return tuple(a[i] % abs(diag[i]) if i < rank else a[i] for i in range(F.n))


def _canonical_rep(F: Form, K) -> CharVec:
    if F.n == 0:
        return ()
    if F.det != 0:
        # K = 2 M z; recentre z into [-1/2, 1/2) componentwise
        z = _solve_rational(F.M, [Fraction(k, 2) for k in K])
        y = [floor(zi + Fraction(1, 2)) for zi in z]
        My = F.apply(F.M, y)
        return tuple(k - 2 * t for k, t in zip(K, My))
    S, diag, rank, Si, _ = F.snf
    ref = F.k_ref()
    c = [(k - r) // 2 for k, r in zip(K, ref)]
    a = F.apply(S, c)
    a = [a[i] % abs(diag[i]) if i < rank else a[i] for i in range(F.n)]
    c2 = F.apply(Si, a)
    return tuple(r + 2 * x for r, x in zip(ref, c2))


def torsion_data(G: PlumbingGraph, K) -> tuple[bool, int]:
    _check(G, K)
    F = form(G)
    S, _, rank, _, _ = F.snf
    a = F.apply(S, list(K))
    free = [a[i] for i in range(rank, F.n)]
    if all(x == 0 for x in free):
        return True, 0
    d = 0
    for x in free:
        d = gcd(d, x)
    return False, abs(d)


def spinc_of(G: PlumbingGraph, K) -> SpinCClass:
    _check(G, K)
    F = form(G)
    tors, d = torsion_data(G, K)
    return SpinCClass(_class_key(F, K), _canonical_rep(F, K), tors, d)


def enumerate_spinc(G: PlumbingGraph) -> list[SpinCClass]:
    F = form(G)
    if F.det == 0:
        raise CharError("degenerate intersection form: supply SpinC representatives explicitly")
    S, diag, rank, Si, _ = F.snf
    ref = F.k_ref()
    out = {}

    def rec(i, a):
        if i == F.n:
            c = F.apply(Si, a)
            K = tuple(r + 2 * x for r, x in zip(ref, c))
            s = spinc_of(G, K)
            out[s.key] = s
            return
        for t in range(abs(diag[i])):
            rec(i + 1, a + [t])

    rec(0, [])
    return sorted(out.values(), key=lambda s: s.representative)


def k_square(G: PlumbingGraph, K) -> Fraction:
    _check(G, K)
    F = form(G)
    x = _solve_rational(F.M, list(K))
    if x is None:
        raise CharError("K^2 is undefined for non-torsion K")
    return sum((Fraction(k) * xi for k, xi in zip(K, x)), Fraction(0))


def maslov_gr(G: PlumbingGraph, gen: CubePair, cache: WeightCache | None = None) -> Fraction:
    """Absolute grading of U^i [K, E] in a torsion SpinC class."""
    F = form(G)
    K = tuple(gen.K)
    k2 = k_square(G, K)
    cache = cache or WeightCache(G)
    g = cache.min_weight(K, gen.E)
    return -2 * gen.u + 2 * g + popcount(gen.E) + (k2 - 3 * F.sigma - 2 * F.chi) / 4


def relative_maslov(G: PlumbingGraph, gen1: CubePair, gen2: CubePair,
                    cache: WeightCache | None = None) -> Fraction:
    """Grading of gen1 relative to gen2; reduced into [0, d) for non-torsion classes."""
    _check(G, gen1.K)
    _check(G, gen2.K)
    F = form(G)
    K1, K2 = tuple(gen1.K), tuple(gen2.K)
    x = F.lift([(a - b) // 2 for a, b in zip(K1, K2)])
    if x is None:
        raise CharError("generators lie in different SpinC classes")
    cache = cache or WeightCache(G)
    quarter = sum(k * xi for k, xi in zip(K1, x)) - F.pair(x, x)
    val = Fraction(-2 * (gen1.u - gen2.u) + 2 * cache.min_weight(K1, gen1.E)
                   - 2 * cache.min_weight(K2, gen2.E)
                   + popcount(gen1.E) - popcount(gen2.E) + quarter)
    tors, d = torsion_data(G, K1)
    return val if tors else val % d
