"""The surgery exact triangle on boxed lattice complexes, with machine checks.

For a graph G with a distinguished vertex v the three complexes are CF(G - v),
CF(G) and CF(G_{+1}(v)), joined by the maps phi_v and psi_v.  A further graph
G_e (a fresh (-1)-vertex e attached to v) gives the factorisation
psi_v = P o phi_e.  Characteristic vectors of G are written (K', p) where p is
the value at v and K' the values elsewhere.

All complexes are built on characteristic-coordinate boxes (every SpinC class
at once).  Infinite sums are cut off by the box and by U^n = 0; checks are only
made where the cut-off cannot matter, and the rest is counted as excluded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .charlat import WeightCache, bits, enumerate_spinc, form, popcount
from .complex import (CharBox, LatticeComplex, Report, TruncationSpec, _apply,
                      build_char_complex)
from .graph import (PlumbingGraph, adjoin_e, bump_framing, delete_vertex,
                    is_negative_definite)

__all__ = [
    "ChainMap",
    "TriangleInstance",
    "m_bound",
    "phi_v",
    "phi_e",
    "psi_v",
    "map_P",
    "compose",
    "verify_chain_map",
    "verify_psi_phi_zero",
    "verify_factorization",
    "verify_short_exact_hat",
    "les_dims",
    "les_rank_check",
    "triangle_report",
]


def m_bound(n: int) -> int:
    """Largest |m| whose exponent lower bound j(j-1)/2 stays below n."""
    j = 0
    while (j + 1) * j // 2 < n:
        j += 1
    return j


def _insert(seq: tuple, i: int, x) -> tuple:
    return tuple(seq[:i]) + (x,) + tuple(seq[i:])


def _lift_bits(E: int, i: int) -> int:
    """Insert a zero bit at position i."""
    low = E & ((1 << i) - 1)
    return low | ((E >> i) << (i + 1))


@dataclass
class ChainMap:
    """Sparse F2[U]/U^n map between two boxed complexes.

    ``complete`` marks source generators none of whose image terms were lost
    to the target box; only those are used as sources in checks.  A map whose
    defining sum is itself cut off by the box (phi) instead marks, in
    ``reliable``, the targets whose coefficients cannot be affected by the cut.
    """

    name: str
    src: LatticeComplex
    dst: LatticeComplex
    triples: list[tuple[int, int, int]]
    complete: list[bool]
    reliable: list[bool] | None = None

    def trusted(self, t: int) -> bool:
        return self.reliable is None or self.reliable[t]

    @property
    def n(self) -> int:
        return self.dst.n

    def rows(self) -> list[list[tuple[int, int]]]:
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.src.size)]
        for s, t, e in self.triples:
            out[s].append((t, e))
        return out

    def apply(self, chain: dict[int, int]) -> dict[int, int]:
        return _apply(self.rows(), chain, self.n)

    def corrupted(self) -> "ChainMap":
        """A copy with one coefficient's exponent raised by one (negative control).

        The term is chosen so that the change is visible to verify_chain_map: its
        source is checked and the boundary of its target reaches a trusted generator
        at a power that survives truncation.  The term is dropped instead when the
        raised exponent reaches n.
        """
        tr = list(self.triples)
        rd = self.dst.rows()
        rs = self.src.rows()

        def visible(s, t, e):
            if not (self.src.interior[s] and self.complete[s]):
                return False
            if not all(self.complete[b] for b, _ in rs[s]):
                return False
            return any(self.trusted(u) and e + x < self.n for u, x in rd[t])

        k = next((i for i, tri in enumerate(tr) if visible(*tri)), 0)
        if tr:
            s, t, e = tr[k]
            if e + 1 < self.n:
                tr[k] = (s, t, e + 1)
            else:
                del tr[k]
        return ChainMap(self.name + "*", self.src, self.dst, tr, self.complete, self.reliable)


def _coefficients(acc: dict[int, int], src: int, out: list, n: int):
    mask = (1 << n) - 1
    for t in sorted(acc):
        p = acc[t] & mask
        e = 0
        while p:
            if p & 1:
                out.append((src, t, e))
            p >>= 1
            e += 1


@dataclass
class TriangleInstance:
    """A graph, a vertex, and aligned boxes for the four complexes involved.

    A vertex u with framing m_u gets the characteristic range of radius
    |m_u| + ``radius`` (so that cubes in direction u fit inside), and the vertex
    v gets |m_v| + ``radius_v``.  The box of G restricts to the box of G - v away
    from v.  The box of G_{+1}(v) is wider at v by 2 m_bound(n) + 1 so that
    psi_v loses no terms, and the box of G_e covers every e-coordinate 2m - 1
    with |m| <= m_bound(n).
    """

    G: PlumbingGraph
    v: str
    radius: int = 0
    radius_v: int = 1
    n: int = 2

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("truncation exponent must be positive")
        if self.radius < 0 or self.radius_v < 0:
            raise ValueError("radii must be nonnegative")
        self.iv = self.G.index(self.v)
        self.G_minus = delete_vertex(self.G, self.v)
        self.G_plus = bump_framing(self.G, self.v, 1)
        name = "e"
        while name in self.G.vertices:
            name += "'"
        self.e_name = name
        self.G_e = adjoin_e(self.G, self.v, name)

    def _rads(self, extra_v: int = 0) -> list[int]:
        rads = [abs(m) + self.radius for m in self.G.framings]
        rads[self.iv] = abs(self.G.framings[self.iv]) + self.radius_v + extra_v
        return rads

    @cached_property
    def box_minus(self) -> CharBox:
        rads = self._rads()
        del rads[self.iv]
        return CharBox.around(self.G_minus, rads)

    @cached_property
    def box_G(self) -> CharBox:
        return CharBox.around(self.G, self._rads())

    @cached_property
    def box_plus(self) -> CharBox:
        return CharBox.around(self.G_plus, self._rads(2 * m_bound(self.n) + 1))

    @cached_property
    def box_e(self) -> CharBox:
        J = m_bound(self.n)
        return CharBox(self.box_G.ranges + ((-2 * J - 1, 2 * J + 1),))

    def weights(self, H: PlumbingGraph) -> WeightCache:
        """One shared weight cache per graph, for vectors outside the boxes."""
        caches = self.__dict__.setdefault("_caches", {})
        if H not in caches:
            caches[H] = WeightCache(H)
        return caches[H]

    def _build(self, H, box):
        # the maps and checks never look at Maslov gradings
        return build_char_complex(H, box, TruncationSpec(self.n), graded=False)

    @cached_property
    def cx_minus(self) -> LatticeComplex:
        return self._build(self.G_minus, self.box_minus)

    @cached_property
    def cx_G(self) -> LatticeComplex:
        return self._build(self.G, self.box_G)

    @cached_property
    def cx_plus(self) -> LatticeComplex:
        return self._build(self.G_plus, self.box_plus)

    @cached_property
    def cx_e(self) -> LatticeComplex:
        return self._build(self.G_e, self.box_e)

    def describe(self) -> dict:
        return {"graph": {"vertices": list(self.G.vertices), "framings": list(self.G.framings),
                          "edges": [[self.G.vertices[a], self.G.vertices[b]]
                                    for a, b in sorted(self.G.edges)]},
                "v": self.v, "radius": self.radius, "radius_v": self.radius_v, "n": self.n}


def _phi(src: LatticeComplex, dst: LatticeComplex, iv: int, name: str) -> ChainMap:
    """[K', E] -> sum over the box of [(K', p), E], with p inserted at index iv.

    Boundaries of the omitted terms move p by at most 2, so coefficients are
    trusted away from the two ends of the p-range.
    """
    ps = sorted({K[iv] for K in dst.Ks})
    lo, hi = ps[0], ps[-1]
    reliable = [lo + 2 <= K[iv] <= hi - 2 for K, _ in dst.labels]
    triples, complete = [], []
    for gid, (K, E) in enumerate(src.labels):
        E2 = _lift_bits(E, iv)
        for p in ps:
            t = dst.index.get((_insert(K, iv, p), E2))
            if t is not None:
                triples.append((gid, t, 0))
        complete.append(True)
    return ChainMap(name, src, dst, triples, complete, reliable)


def phi_v(T: TriangleInstance) -> ChainMap:
    return _phi(T.cx_minus, T.cx_G, T.iv, "phi_v")


def phi_e(T: TriangleInstance) -> ChainMap:
    return _phi(T.cx_G, T.cx_e, T.G.size, "phi_e")


def psi_v(T: TriangleInstance) -> ChainMap:
    """[(K', p), E] -> sum_m U^{s_m} [(K', p + 2m - 1), E]."""
    src, dst, iv, n = T.cx_G, T.cx_plus, T.iv, T.n
    cp = T.weights(T.G_plus)
    J = m_bound(n)
    triples, complete = [], []
    for gid, (K, E) in enumerate(src.labels):
        g0 = src.weights[gid]
        acc: dict[int, int] = {}
        ok = True
        for m in range(-J, J + 1):
            K2 = K[:iv] + (K[iv] + 2 * m - 1,) + K[iv + 1:]
            t = dst.index.get((K2, E))
            w = cp.min_weight(K2, E) if t is None else dst.weights[t]
            s = w - g0 + m * (m - 1) // 2
            if s < 0:
                raise AssertionError(f"negative psi exponent at {K, E, m}")
            if s >= n:
                continue
            if t is None:
                ok = False
                continue
            acc[t] = acc.get(t, 0) ^ (1 << s)
        _coefficients(acc, gid, triples, n)
        complete.append(ok)
    return ChainMap("psi_v", src, dst, triples, complete)


def map_P(T: TriangleInstance) -> ChainMap:
    """[(K', p, 2m - 1), E] -> U^s [(K', p + 2m - 1), E] when e is not in E, else 0."""
    src, dst, iv, n = T.cx_e, T.cx_plus, T.iv, T.n
    cp = T.weights(T.G_plus)
    ie = T.G.size
    triples, complete = [], []
    for gid, (K, E) in enumerate(src.labels):
        if (E >> ie) & 1:
            complete.append(True)
            continue
        ke = K[ie]
        m = (ke + 1) // 2
        K2 = K[:iv] + (K[iv] + ke,) + K[iv + 1:ie]
        t = dst.index.get((K2, E))
        w = cp.min_weight(K2, E) if t is None else dst.weights[t]
        s = w - src.weights[gid] + m * (m - 1) // 2
        if s < 0:
            raise AssertionError(f"negative P exponent at {K, E}")
        ok = True
        if s < n:
            if t is None:
                ok = False
            else:
                triples.append((gid, t, s))
        complete.append(ok)
    return ChainMap("P", src, dst, triples, complete)


def compose(g: ChainMap, f: ChainMap, name: str | None = None) -> ChainMap:
    """g o f, for f: A -> B and g: B -> C."""
    rows_g = g.rows()
    triples, complete = [], []
    frows = f.rows()
    for a in range(f.src.size):
        img = _apply(rows_g, {t: 1 << e for t, e in frows[a]}, g.n)
        _coefficients(img, a, triples, g.n)
        complete.append(f.complete[a] and all(g.complete[t] for t, _ in frows[a]))
    return ChainMap(name or f"{g.name}.{f.name}", f.src, g.dst, triples, complete, g.reliable)


def _restrict(chain: dict[int, int], keep) -> dict[int, int]:
    return {t: p for t, p in chain.items() if keep[t]}


def verify_chain_map(f: ChainMap) -> Report:
    """d_dst o f = f o d_src over F2[U]/U^n.

    Sources must be interior with complete images, and so must every generator
    in their boundary; both sides are then exact at every trusted target.
    """
    rep = Report(f"chain_map:{f.name}")
    n = f.n
    rs, rd = f.src.rows(), f.dst.rows()
    frows = f.rows()
    nonzero = 0
    for s, t, e in f.triples:
        if f.src.delta[s] != f.dst.delta[t]:
            rep.violations.append({"source": _label(f.src, s), "target": _label(f.dst, t),
                                   "problem": "delta not preserved"})
        if e < 0:
            rep.violations.append({"source": _label(f.src, s), "problem": "negative exponent"})
    for a in range(f.src.size):
        if not (f.src.interior[a] and f.complete[a]):
            rep.excluded += 1
            continue
        down = _apply(rs, {a: 1}, n)
        if not all(f.complete[b] for b in down):
            rep.excluded += 1
            continue
        rep.checked += 1
        lhs = _apply(rd, {t: 1 << e for t, e in frows[a]}, n)
        rhs = _apply(frows, down, n)
        if any(f.trusted(t) for t in lhs) or any(f.trusted(t) for t in rhs):
            nonzero += 1
        diff = {t: lhs.get(t, 0) ^ rhs.get(t, 0) for t in set(lhs) | set(rhs)}
        bad = {t: p for t, p in diff.items() if p and f.trusted(t)}
        if bad:
            t = min(bad)
            rep.violations.append({"source": _label(f.src, a), "target": _label(f.dst, t),
                                   "difference": _poly(bad[t])})
    rep.info["nonzero_comparisons"] = nonzero
    return rep


def _label(cx: LatticeComplex, gid: int) -> str:
    K, E = cx.labels[gid]
    names = [cx.graph.vertices[i] for i in bits(E)] if cx.graph is not None else list(bits(E))
    return f"[({','.join(map(str, K))}),{{{','.join(names)}}}]"


def _poly(p: int) -> str:
    terms = [("1" if e == 0 else f"U^{e}") for e in range(p.bit_length()) if (p >> e) & 1]
    return "+".join(terms) or "0"


def _p_range(T: TriangleInstance) -> tuple[int, int]:
    return T.box_G.ranges[T.iv]


def verify_psi_phi_zero(T: TriangleInstance, phi: ChainMap | None = None,
                        psi: ChainMap | None = None) -> Report:
    """psi_v o phi_v = 0, at targets (K', q) all of whose possible sources lie in the box."""
    rep = Report("psi_phi_zero")
    phi = phi or phi_v(T)
    psi = psi or psi_v(T)
    lo, hi = _p_range(T)
    J = m_bound(T.n)
    prow, qrow = phi.rows(), psi.rows()

    def covered(t):
        q = T.cx_plus.labels[t][0][T.iv]
        return all(lo <= q - 2 * m + 1 <= hi for m in range(-J, J + 1))

    keep = [covered(t) for t in range(T.cx_plus.size)]
    for a in range(T.cx_minus.size):
        rep.checked += 1
        img = _apply(qrow, {t: 1 << e for t, e in prow[a]}, T.n)
        bad = _restrict(img, keep)
        if bad:
            t = min(bad)
            rep.violations.append({"source": _label(T.cx_minus, a),
                                   "target": _label(T.cx_plus, t), "coefficient": _poly(bad[t])})
    rep.excluded = sum(1 for k in keep if not k)
    rep.info["uncovered_targets"] = rep.excluded
    return rep


def verify_factorization(T: TriangleInstance, psi: ChainMap | None = None) -> Report:
    """psi_v = P o phi_e as boxed maps (the e-range covers every relevant m)."""
    rep = Report("psi_factorization")
    psi = psi or psi_v(T)
    PE = compose(map_P(T), phi_e(T))
    r1, r2 = psi.rows(), PE.rows()
    for a in range(T.cx_G.size):
        rep.checked += 1
        x, y = sorted(r1[a]), sorted(r2[a])
        if x != y:
            rep.violations.append({"source": _label(T.cx_G, a),
                                   "psi": [(_label(T.cx_plus, t), e) for t, e in x],
                                   "P_phi_e": [(_label(T.cx_plus, t), e) for t, e in y]})
    return rep


def verify_short_exact_hat(T: TriangleInstance) -> Report:
    """Exactness of 0 -> CF^(G - v) -> CF^(G) -> CF^(G_{+1}(v)) -> 0, summand by summand.

    Uses the U^0 parts of phi_v and psi_v on each (K', E) summand.  For v not in
    E, psi^ must kill exactly the image of phi^ and the truncated right inverse
    r must split it; for v in E, psi^ must be inverted by the truncated q built
    around the unique p with A_v = B_v.  Summands whose special p lies outside
    the box are excluded.
    """
    T1 = TriangleInstance(T.G, T.v, T.radius, T.radius_v, 1)
    rep = Report("short_exact_hat")
    psi = psi_v(T1)
    lo, hi = _p_range(T1)
    P = list(range(lo, hi + 1, 2))
    Pset = set(P)
    cx_G, cx_p = T1.cx_G, T1.cx_plus
    iv = T1.iv
    cache = T1.weights(T1.G)
    Q = set(cx_p.labels[t][0][iv] for t in range(cx_p.size))
    hat: dict[int, set[int]] = {}
    for s, t, e in psi.triples:
        if e == 0:
            hat.setdefault(s, set()).add(t)
    summands: dict[tuple, list[int]] = {}
    for gid, (K, E) in enumerate(cx_G.labels):
        key = (K[:iv] + K[iv + 1:], E)
        summands.setdefault(key, []).append(gid)
    for (Kp, E), gids in sorted(summands.items()):
        col = {cx_G.labels[g][0][iv]: {cx_p.labels[t][0][iv] for t in hat.get(g, ())}
               for g in gids}
        vin = (E >> iv) & 1
        where = f"[({','.join(map(str, Kp))}),E={E}]"
        if not vin:
            viol = _hat_vnotin(col, P, Pset)
        else:
            special = [p for p in P if cache.ab(_insert(Kp, iv, p), E, iv) == (0, 0)]
            if len(special) > 1:
                viol = [f"{len(special)} values of p with A_v = B_v"]
            elif not special:
                rep.excluded += 1
                continue
            else:
                sign = {p: _cmp(cache.ab(_insert(Kp, iv, p), E, iv)) for p in P}
                viol = _hat_vin(col, P, Pset, Q, special[0], sign)
        rep.checked += 1
        for msg in viol:
            rep.violations.append({"summand": where, "problem": msg})
    return rep


def _cmp(ab: tuple[int, int]) -> int:
    a, b = ab
    return (a > b) - (a < b)


def _hat_apply(col, chain: set[int]) -> set[int]:
    out: set[int] = set()
    for p in chain:
        out ^= col[p]
    return out


def _hat_vnotin(col, P, Pset) -> list[str]:
    out = []
    for p in P:
        if not col[p] <= {p - 1, p + 1}:
            out.append(f"psi^ at p={p} has terms {sorted(col[p])}")
    # rows all of whose possible sources p = q +- 1 are in the box
    rows = list(range(P[0] + 1, P[-1], 2))
    # psi^ o phi^ = 0 and the kernel is exactly the image of phi^
    img = _hat_apply(col, set(P)) & set(rows)
    if img:
        out.append(f"psi^ o phi^ nonzero at {sorted(img)}")
    A = np.zeros((len(rows), len(P)), dtype=np.uint8)
    ri = {q: i for i, q in enumerate(rows)}
    for j, p in enumerate(P):
        for q in col[p]:
            if q in ri:
                A[ri[q], j] = 1
    rank = _f2_rank(A)
    if rank != len(rows):
        out.append(f"psi^ not surjective on covered rows (rank {rank} < {len(rows)})")
    if len(P) - rank != 1:
        out.append(f"kernel of psi^ has dimension {len(P) - rank}, image of phi^ has 1")
    # r[(K', p - 1), E] = sum_{i >= 0} [(K', p + 2i), E], truncated to the box
    for q in rows:
        got = _hat_apply(col, {p for p in P if p >= q + 1}) & set(rows)
        if got != {q}:
            out.append(f"psi^ o r differs from identity at q={q}")
    return out


def _hat_vin(col, P, Pset, Q, p0, sign) -> list[str]:
    out = []
    full = {}
    for p in P:
        want = {p - 1, p + 1, p - 3} if p == p0 else (
            {p - 3, p - 1} if sign[p] > 0 else {p - 1, p + 1})
        full[p] = want <= Q
        if col[p] != want & Q:
            out.append(f"psi^ at p={p} is {sorted(col[p])}, expected {sorted(want)}")
    lo, hi = P[0], P[-1]

    def q_inv(x):
        if x == p0 - 1:
            return set(P)
        if x <= p0 - 3:
            return {p for p in P if p <= x + 1}
        return {p for p in P if p >= x + 1}

    # q o psi^ = id on every column whose image is inside the box
    for p in P:
        if not full[p]:
            continue
        acc: set[int] = set()
        for x in col[p]:
            acc ^= q_inv(x)
        if acc != {p}:
            out.append(f"q o psi^ differs from identity at p={p}")
    # psi^ o q = id on covered rows (possible sources x + 1, x - 1, x + 3 in the box)
    rows = [x for x in range(lo - 3, hi + 2, 2)
            if all(y in Pset for y in (x + 1, x - 1, x + 3))]
    for x in rows:
        got = _hat_apply(col, q_inv(x)) & set(rows)
        if got != {x}:
            out.append(f"psi^ o q differs from identity at q={x}")
    return out


def _f2_rank(A) -> int:
    A = A.copy()
    r = 0
    rows, cols = A.shape
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i, c]), None)
        if piv is None:
            continue
        A[[r, piv]] = A[[piv, r]]
        for i in range(rows):
            if i != r and A[i, c]:
                A[i] ^= A[r]
        r += 1
        if r == rows:
            break
    return r


def les_dims(H: PlumbingGraph, n: int, r_cap: int = 8) -> dict[int, int]:
    """Total dimension over all SpinC classes of the truncated homology, by delta."""
    from .homology import stabilize

    out: dict[int, int] = {}
    for sp in enumerate_spinc(H):
        res = stabilize(H, sp, n, r_cap=r_cap)
        for (_, dl), c in res.homology.dims.items():
            out[dl] = out.get(dl, 0) + c
    return out


def les_rank_check(T: TriangleInstance, n: int, dims: dict | None = None,
                   r_cap: int = 8) -> Report:
    """Solve the truncated long exact sequence for nonnegative connecting ranks.

    The sequence reads ... -> C_{i+1} -> A_i -> B_i -> C_i -> A_{i-1} -> ...
    with A, B, C the delta-graded truncated homologies of G - v, G, G_{+1}(v).
    ``dims`` may supply {"minus": ..., "G": ..., "plus": ...}; otherwise they are
    computed over all SpinC classes, which needs nondegenerate forms; for
    indefinite forms the stabilised homologies are heuristic.
    """
    rep = Report("les_ranks")
    if dims is None:
        for H in (T.G_minus, T.G, T.G_plus):
            if form(H).det == 0:
                raise ValueError("les_rank_check needs nondegenerate forms to sum over SpinC"
                                 " classes; pass dims explicitly otherwise")
        dims = {"minus": les_dims(T.G_minus, n, r_cap), "G": les_dims(T.G, n, r_cap),
                "plus": les_dims(T.G_plus, n, r_cap)}
    A, B, C = dims["minus"], dims["G"], dims["plus"]
    top = max([0, *A, *B, *C])
    gamma_next = 0
    ranks = {}
    for i in range(top, -1, -1):
        alpha = A.get(i, 0) - gamma_next
        beta = B.get(i, 0) - alpha
        gamma = C.get(i, 0) - beta
        ranks[i] = {"phi": alpha, "psi": beta, "connecting": gamma}
        rep.checked += 1
        if min(alpha, beta, gamma) < 0:
            rep.violations.append({"delta": i, "ranks": ranks[i]})
        gamma_next = gamma
    if gamma_next != 0:
        rep.violations.append({"delta": 0, "problem": f"connecting map out of delta 0 has rank {gamma_next}"})
    rep.info = {"n": n, "heuristic": not all(is_negative_definite(H)
                                             for H in (T.G_minus, T.G, T.G_plus)),
                "dims": {"minus": dict(sorted(A.items())), "G": dict(sorted(B.items())),
                                 "plus": dict(sorted(C.items()))},
                "ranks": dict(sorted(ranks.items()))}
    return rep


def triangle_report(T: TriangleInstance, les_n: tuple[int, ...] = (),
                    corrupt: bool = False) -> list[Report]:
    """All checks for one instance; ``corrupt`` perturbs psi_v as a negative control."""
    phi, psi, P = phi_v(T), psi_v(T), map_P(T)
    if corrupt:
        psi = psi.corrupted()
    reps = [verify_chain_map(phi), verify_chain_map(psi), verify_chain_map(P),
            verify_psi_phi_zero(T, phi, psi), verify_factorization(T, psi),
            verify_short_exact_hat(T)]
    for k in les_n:
        reps.append(les_rank_check(T, k))
    return reps
