"""Finite boxed models of the lattice chain complex over F2[U]/U^n.

A chain complex here is a list of generators with a sparse differential of
``(source, target, u_exponent)`` triples.  Coefficients are elements of
F2[U]/U^n, and are stored as one triple per monomial.
"""

from __future__ import annotations

import itertools
from operator import add, sub
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .charlat import CharError, SpinCClass, bits, form, k_square, popcount, spinc_of
from .graph import PlumbingGraph

__all__ = [
    "BoxSpec",
    "TruncationSpec",
    "GradedComplex",
    "LatticeComplex",
    "CharBox",
    "build_complex",
    "build_char_complex",
    "boundary_of",
    "verify_d_squared",
    "dump_complex",
    "fmt_rational",
]


@dataclass(frozen=True)
class BoxSpec:
    radius: int
    base: tuple[int, ...]


@dataclass(frozen=True)
class TruncationSpec:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("truncation exponent must be positive")


@dataclass
class GradedComplex:
    """Free F2[U]/U^n complex with (Maslov, delta) gradings.

    ``modulus`` is 0 for absolute gradings and d for gradings taken mod d.
    ``deep`` marks generators whose whole neighbourhood (faces and cofaces)
    lies inside the model; homology is reported for classes supported there.
    """

    n: int
    delta: list[int]
    grading: list[Fraction]
    triples: list[tuple[int, int, int]]
    interior: list[bool]
    deep: list[bool]
    modulus: int = 0
    labels: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.delta)

    def rows(self) -> list[list[tuple[int, int]]]:
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.size)]
        for s, t, e in self.triples:
            out[s].append((t, e))
        return out

    def reduce_grading(self, q: Fraction) -> Fraction:
        return q % self.modulus if self.modulus else q


@dataclass
class LatticeComplex(GradedComplex):
    graph: PlumbingGraph | None = None
    spinc: SpinCClass | None = None
    Ks: list[tuple[int, ...]] = field(default_factory=list)
    index: dict = field(default_factory=dict)
    weights: list[int] = field(default_factory=list)  # g([K, E]) per generator

    def gen_id(self, K, E: int) -> int:
        return self.index[(tuple(K), E)]


@dataclass(frozen=True)
class CharBox:
    """Product of characteristic ranges: vertex i takes values lo_i, lo_i+2, ..., hi_i."""

    ranges: tuple[tuple[int, int], ...]

    @classmethod
    def around(cls, G: PlumbingGraph, radius: int | list[int]) -> "CharBox":
        rads = [radius] * G.size if isinstance(radius, int) else list(radius)
        out = []
        for m, r in zip(G.framings, rads):
            lo = -r if (r - m) % 2 == 0 else -r - 1
            out.append((lo, -lo))
        return cls(tuple(out))

    def values(self, i: int) -> range:
        lo, hi = self.ranges[i]
        return range(lo, hi + 1, 2)

    def points(self):
        return itertools.product(*(self.values(i) for i in range(len(self.ranges))))


def subset_weights(G: PlumbingGraph, Kmat: np.ndarray):
    """Minimal weights for every K (rows of ``Kmat``) and every vertex subset.

    Returns (g, B) with g[E, j] = g([K_j, E]) and B[v][E, j] the minimum of
    f([K_j, I]) over I inside E containing v, which equals B_v([K_j, E]).
    f([K, I]) is linear in K, so both are subset minima of 2^V linear forms.
    """
    V = G.size
    S = 1 << V
    M = np.array(form(G).M, dtype=np.int64).reshape(V, V)
    N = Kmat.shape[0]
    F = np.empty((S, N), dtype=np.int64)
    for I in range(S):
        idx = list(bits(I))
        F[I] = (Kmat[:, idx].sum(axis=1) + M[np.ix_(idx, idx)].sum()) // 2
    g = F.copy()
    for v in range(V):
        for E in range(S):
            if (E >> v) & 1:
                np.minimum(g[E], g[E ^ (1 << v)], out=g[E])
    B = []
    for v in range(V):
        H = F.copy()
        for u in range(V):
            if u == v:
                continue
            for E in range(S):
                if (E >> u) & 1 and (E >> v) & 1:
                    np.minimum(H[E], H[E ^ (1 << u)], out=H[E])
        B.append(H)
    return g, B


def _assemble(G: PlumbingGraph, Ks: list[tuple[int, ...]], grade0: list[Fraction] | None,
              n: int, modulus: int) -> LatticeComplex:
    """Build the complex on generators [K, E] for K in ``Ks``.

    Generator [Ks[j], E] has id j * 2^V + E.  Boundary terms leaving the K-set
    are dropped.  ``grade0[j]`` is the grading of [Ks[j], {}]; other gradings
    follow from 2g + |E|.  Without ``grade0`` every grading is 0.
    """
    V = G.size
    S = 1 << V
    N = len(Ks)
    M = form(G).M
    kset = {K: j for j, K in enumerate(Ks)}
    Kmat = np.array(Ks, dtype=np.int64).reshape(N, V)
    g, B = subset_weights(G, Kmat)
    up = np.full((V, N), -1, dtype=np.int64)
    down = np.full((V, N), -1, dtype=np.int64)
    for v in range(V):
        row = [2 * x for x in M[v]]
        for j, K in enumerate(Ks):
            up[v, j] = kset.get(tuple(map(add, K, row)), -1)
            down[v, j] = kset.get(tuple(map(sub, K, row)), -1)
    jj = np.arange(N, dtype=np.int64)
    srcs, dsts, exps = [], [], []
    interior = np.ones((N, S), dtype=bool)
    deep = np.ones((N, S), dtype=bool)
    for E in range(S):
        for v in range(V):
            if (E >> v) & 1:
                rest = E ^ (1 << v)
                gE = g[E]
                a = g[rest] - gE
                b = B[v][E] - gE
                keep = a < n
                srcs.append(jj[keep] * S + E)
                dsts.append(jj[keep] * S + rest)
                exps.append(a[keep])
                ok = up[v] >= 0
                interior[:, E] &= ok
                keep = (b < n) & ok
                srcs.append(jj[keep] * S + E)
                dsts.append(up[v][keep] * S + rest)
                exps.append(b[keep])
            else:
                deep[:, E] &= down[v] >= 0
    deep &= interior
    delta_arr = np.array([popcount(E) for E in range(S)], dtype=np.int64)
    if srcs:
        tr = np.stack([np.concatenate(srcs), np.concatenate(dsts), np.concatenate(exps)], axis=1)
    else:
        tr = np.zeros((0, 3), dtype=np.int64)
    if len(tr):
        # coincident terms cancel in pairs over F2
        tr, counts = np.unique(tr, axis=0, return_counts=True)
        tr = tr[counts % 2 == 1]
        order = np.lexsort((tr[:, 2], tr[:, 1], tr[:, 0], delta_arr[tr[:, 0] % S]))
        tr = tr[order]
    triples = [tuple(t) for t in tr.tolist()]
    labels = [(K, E) for K in Ks for E in range(S)]
    index = {lab: i for i, lab in enumerate(labels)}
    weights = g.T.reshape(-1).tolist()
    delta = [popcount(E) for E in range(S)] * N
    if grade0 is None:
        grading = [Fraction(0)] * (N * S)
    else:
        grading = []
        for j in range(N):
            for E in range(S):
                q = grade0[j] + 2 * weights[j * S + E] + delta[E]
                grading.append(q % modulus if modulus else q)
    return LatticeComplex(n=n, delta=delta, grading=grading, triples=triples,
                          interior=interior.reshape(-1).tolist(), deep=deep.reshape(-1).tolist(),
                          modulus=modulus, labels=labels, graph=G, Ks=list(Ks), index=index,
                          weights=weights)


def build_complex(G: PlumbingGraph, spinc: SpinCClass, box: BoxSpec,
                  trunc: TruncationSpec) -> LatticeComplex:
    """Boxed model for one SpinC class: K = K0 + 2 M x with x in [-r, r]^V."""
    F = form(G)
    K0 = tuple(box.base)
    if spinc_of(G, K0).key != spinc.key:
        raise CharError("box base is not in the requested SpinC class")
    r = box.radius
    V = G.size
    seen: dict[tuple[int, ...], tuple[int, ...]] = {}
    for x in itertools.product(range(-r, r + 1), repeat=V):
        Mx = F.apply(F.M, x)
        K = tuple(k + 2 * t for k, t in zip(K0, Mx))
        if K not in seen:
            seen[K] = x
    Ks = list(seen)
    if spinc.torsion:
        base = (k_square(G, K0) - 3 * F.sigma - 2 * F.chi) / 4
        modulus = 0
    else:
        base = Fraction(0)
        modulus = spinc.divisibility
    grade0 = []
    for K in Ks:
        x = seen[K]
        q = base + sum(k * xi for k, xi in zip(K0, x)) + F.pair(x, x)
        grade0.append(Fraction(q))
    cx = _assemble(G, Ks, grade0, trunc.n, modulus)
    cx.spinc = spinc
    return cx


def build_char_complex(G: PlumbingGraph, box: CharBox, trunc: TruncationSpec,
                       graded: bool = True) -> LatticeComplex:
    """Model on all characteristic vectors of a coordinate box, all SpinC classes at once.

    Absolute gradings need a nondegenerate form.  With ``graded=False`` every
    generator gets grading 0, which is enough for checking maps.
    """
    F = form(G)
    if graded and F.det == 0:
        raise CharError("characteristic boxes need a nondegenerate form")
    Ks = [tuple(K) for K in box.points()]
    grade0 = [(k_square(G, K) - 3 * F.sigma - 2 * F.chi) / 4 for K in Ks] if graded else None
    return _assemble(G, Ks, grade0, trunc.n, 0)


def boundary_of(cx: GradedComplex, gid: int) -> list[tuple[int, int]]:
    return [(t, e) for s, t, e in cx.triples if s == gid]


def _apply(rows, chain: dict[int, int], n: int) -> dict[int, int]:
    """Apply a differential given by rows to a chain {gen: poly bitmask}."""
    out: dict[int, int] = {}
    mask = (1 << n) - 1
    for g, p in chain.items():
        for t, e in rows[g]:
            q = (p << e) & mask
            if q:
                out[t] = out.get(t, 0) ^ q
    return {t: p for t, p in out.items() if p}


@dataclass
class Report:
    name: str
    checked: int = 0
    violations: list = field(default_factory=list)
    excluded: int = 0
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_d_squared(cx: GradedComplex) -> Report:
    """Check d∘d = 0 on generators whose faces and faces-of-faces are all interior."""
    rep = Report("d_squared")
    rows = cx.rows()
    for g in range(cx.size):
        if not cx.interior[g] or not all(cx.interior[t] for t, _ in rows[g]):
            rep.excluded += 1
            continue
        rep.checked += 1
        dd = _apply(rows, _apply(rows, {g: 1}, cx.n), cx.n)
        if dd:
            rep.violations.append({"generator": g, "dd": dd})
    return rep


def fmt_rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dump_complex(cx: LatticeComplex) -> str:
    lines = []
    for gid, (K, E) in enumerate(cx.labels):
        q = cx.grading[gid]
        gr = f"rel:base+{fmt_rational(q)} mod {cx.modulus}" if cx.modulus else fmt_rational(q)
        lines.append(f"gen {gid} K={','.join(map(str, K))} E={E} delta={cx.delta[gid]} "
                     f"gr={gr} interior={int(cx.interior[gid])}")
    for s, t, e in cx.triples:
        lines.append(f"d {s} {t} {e}")
    return "\n".join(lines) + "\n"
