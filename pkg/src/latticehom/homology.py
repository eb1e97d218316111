"""Homology of graded F2[U]/U^n complexes, U-action and M(d,k) decompositions.

Each generator of a complex is expanded into n F2-slots ``U^i g`` (i < n).  The
differential preserves the difference between Maslov and delta grading, so the
slot complex splits into small blocks indexed by (Maslov, delta), and kernels
and images are computed block by block with bitset Gaussian elimination.

Only classes represented by cycles supported on ``deep`` generators are kept.
Those are the classes that cannot be created or destroyed by cutting the
lattice down to a box.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .complex import GradedComplex

__all__ = [
    "Homology",
    "Summand",
    "ModuleDecomposition",
    "compute_homology",
    "delta_split",
    "decompose_module",
    "total_dims",
    "TOWER",
    "RadiusCapExceeded",
    "StableResult",
    "homology_at",
    "stabilize",
    "SeriesError",
    "CutoffTooSmall",
    "PoincareSeries",
    "summand_series",
    "poincare_series",
    "reconstruct_from_series",
    "series_from_dims",
    "grading_dims",
]

Key = tuple[Fraction, int]


class _Echelon:
    """Row echelon form over F2 with bitmask rows, tracking a combination tag per row."""

    __slots__ = ("rows",)

    def __init__(self):
        self.rows: dict[int, tuple[int, int]] = {}  # pivot bit -> (row, tag)

    def reduce(self, vec: int, tag: int = 0) -> tuple[int, int]:
        rows = self.rows
        while vec:
            p = vec.bit_length() - 1
            hit = rows.get(p)
            if hit is None:
                break
            vec ^= hit[0]
            tag ^= hit[1]
        return vec, tag

    def full_reduce(self, vec: int, tag: int = 0) -> tuple[int, int]:
        """Reduce until no set bit of ``vec`` is a pivot."""
        rows = self.rows
        out = 0
        while vec:
            p = vec.bit_length() - 1
            hit = rows.get(p)
            if hit is None:
                out |= 1 << p
                vec ^= 1 << p
            else:
                vec ^= hit[0]
                tag ^= hit[1]
        return out, tag

    def add(self, vec: int, tag: int = 0) -> bool:
        vec, tag = self.reduce(vec, tag)
        if vec:
            self.rows[vec.bit_length() - 1] = (vec, tag)
            return True
        return False

    @property
    def rank(self) -> int:
        return len(self.rows)


def _rank(vectors) -> int:
    ech = _Echelon()
    return sum(1 for v in vectors if ech.add(v))


@dataclass
class Homology:
    """Interior-supported homology of one complex at truncation n.

    ``basis[key]`` lists representative cycles (bitmasks over the slots of that
    block), and ``umap[key][i]`` is the coordinate bitmask of U applied to basis
    element i, in the basis of the block two Maslov units lower.
    """

    n: int
    modulus: int
    dims: dict[Key, int]
    basis: dict[Key, list[int]] = field(default_factory=dict)
    umap: dict[Key, list[int]] = field(default_factory=dict)
    slots: dict[Key, list[tuple[int, int]]] = field(default_factory=dict)
    excluded: int = 0

    def lower(self, key: Key, steps: int = 1) -> Key:
        m, d = key
        q = m - 2 * steps
        return (q % self.modulus if self.modulus else q, d)

    def u_power_rank(self, key: Key, j: int) -> int:
        """Rank of U^j from the block ``key`` into the block 2j lower."""
        dim = self.dims.get(key, 0)
        if dim == 0:
            return 0
        vecs = [1 << i for i in range(dim)]
        cur = key
        for _ in range(j):
            images = self.umap.get(cur)
            if images is None:
                return 0
            nxt = []
            for v in vecs:
                w, i = 0, 0
                while v:
                    if v & 1:
                        w ^= images[i]
                    v >>= 1
                    i += 1
                nxt.append(w)
            vecs = nxt
            cur = self.lower(cur)
        return _rank(vecs)

    def total(self) -> int:
        return sum(self.dims.values())


def compute_homology(cx: GradedComplex) -> Homology:
    n = cx.n
    mod = cx.modulus

    def red(q):
        return q % mod if mod else q

    groups: dict[Key, list[tuple[int, int]]] = defaultdict(list)
    for g in range(cx.size):
        for i in range(n):
            groups[(red(cx.grading[g] - 2 * i), cx.delta[g])].append((g, i))
    local = {}
    for key, sl in groups.items():
        sl.sort()
        for idx, s in enumerate(sl):
            local[s] = idx
    rows = cx.rows()

    def image(g, i) -> int:
        vec = 0
        for t, e in rows[g]:
            if i + e < n:
                vec ^= 1 << local[(t, i + e)]
        return vec

    def below(key: Key) -> Key:
        m, d = key
        return (red(m - 1), d - 1)

    # image of the differential landing in each block
    bounds: dict[Key, _Echelon] = defaultdict(_Echelon)
    for key, sl in groups.items():
        if key[1] == 0:
            continue
        ech = bounds[below(key)]
        for g, i in sl:
            vec = image(g, i)
            if vec:
                ech.add(vec)

    hom = Homology(n=n, modulus=mod, dims={}, slots=dict(groups))
    hom.excluded = sum(1 for g in range(cx.size) if not cx.deep[g])
    reduce_sys: dict[Key, _Echelon] = {}
    for key in sorted(groups, key=lambda k: (k[1], k[0])):
        sl = groups[key]
        # kernel of d restricted to slots of deep generators
        kern = _Echelon()
        cycles = []
        for g, i in sl:
            if not cx.deep[g]:
                continue
            vec, tag = kern.reduce(image(g, i), 1 << local[(g, i)])
            if vec:
                kern.rows[vec.bit_length() - 1] = (vec, tag)
            else:
                cycles.append(tag)
        ech = _Echelon()
        b = bounds.get(key)
        if b is not None:
            ech.rows = dict(b.rows)
        basis = []
        for z in cycles:
            r, tag = ech.reduce(z, 0)
            if r:
                k = len(basis)
                ech.rows[r.bit_length() - 1] = (r, tag ^ (1 << k))
                basis.append(z)
        if basis:
            hom.dims[key] = len(basis)
            hom.basis[key] = basis
            reduce_sys[key] = ech
    # U-action on chosen representatives
    for key, basis in hom.basis.items():
        tgt = hom.lower(key)
        ech = reduce_sys.get(tgt)
        sl = groups[key]
        images = []
        for z in basis:
            w, i = 0, 0
            while z:
                if z & 1:
                    g, u = sl[i]
                    if u + 1 < n:
                        w ^= 1 << local[(g, u + 1)]
                z >>= 1
                i += 1
            if ech is None:
                b = bounds.get(tgt)
                rest = b.reduce(w)[0] if b is not None else w
                tag = 0
            else:
                rest, tag = ech.reduce(w, 0)
            if rest:
                raise AssertionError("U image escaped the interior-supported classes")
            images.append(tag)
        hom.umap[key] = images
    return hom


def delta_split(hom: Homology) -> dict[int, int]:
    out: dict[int, int] = defaultdict(int)
    for (_, d), k in hom.dims.items():
        out[d] += k
    return dict(sorted(out.items()))


def total_dims(hom: Homology) -> dict[Key, int]:
    return dict(hom.dims)


TOWER = 0


@dataclass(frozen=True, order=True)
class Summand:
    """M(d, k) in delta-grading ``delta``; k = 0 encodes the tower."""

    d: Fraction
    k: int
    delta: int
    mult: int = 1

    def label(self) -> str:
        from .complex import fmt_rational
        kk = "tower" if self.k == TOWER else str(self.k)
        return f"M({fmt_rational(self.d)},{kk})@{self.delta}" + (f"x{self.mult}" if self.mult > 1 else "")


@dataclass
class ModuleDecomposition:
    summands: list[Summand]
    modulus: int = 0
    tower_evidence: str = "none"
    unpaired: int = 0

    def normalized(self) -> tuple[Summand, ...]:
        acc: dict[tuple, int] = defaultdict(int)
        for s in self.summands:
            acc[(s.d, s.k, s.delta)] += s.mult
        return tuple(Summand(d, k, dl, c) for (d, k, dl), c in sorted(acc.items()) if c)

    def __eq__(self, other):
        if not isinstance(other, ModuleDecomposition):
            return NotImplemented
        return self.normalized() == other.normalized() and self.modulus == other.modulus

    def without_delta(self) -> tuple[tuple[Fraction, int, int], ...]:
        acc: dict[tuple, int] = defaultdict(int)
        for s in self.summands:
            acc[(s.d, s.k)] += s.mult
        return tuple((d, k, c) for (d, k), c in sorted(acc.items()) if c)

    def towers(self) -> list[Summand]:
        return [s for s in self.normalized() if s.k == TOWER]

    def labels(self) -> list[str]:
        return [s.label() for s in self.normalized()]


def _blocks(hom: Homology) -> dict[tuple[Fraction, int, int], int]:
    """Jordan block counts {(top grading, delta, length): multiplicity}."""
    n = hom.n
    out: dict[tuple[Fraction, int, int], int] = {}
    memo: dict[tuple[Key, int], int] = {}

    def r(key, j):
        if j >= n:
            return 0
        if j == 0:
            return hom.dims.get(key, 0)
        k2 = (key, j)
        if k2 not in memo:
            memo[k2] = hom.u_power_rank(key, j)
        return memo[k2]

    def up(key):
        m, d = key
        q = m + 2
        return (q % hom.modulus if hom.modulus else q, d)

    for key in hom.dims:
        hi = up(key)
        for k in range(1, n + 1):
            c = (r(key, k - 1) - r(hi, k)) - (r(key, k) - r(hi, k + 1))
            if c < 0:
                raise AssertionError("negative Jordan block count")
            if c:
                out[(key[0], key[1], k)] = c
    return out


def decompose_module(hom: Homology, confirm: Homology | None = None) -> ModuleDecomposition:
    """Split into M(d,k) summands of the untruncated module.

    A finite summand M(d,k) of the untruncated homology shows up after
    truncation by U^n twice: as a block of length k topped at d, and as its
    torsion shadow, a block of length k topped at d - 2n + 1 one delta-step
    higher.  Blocks are peeled from the top grading down, each removing its
    shadow.  A full-length unshadowed block is a tower when ``confirm`` (the same
    complex at truncation n+1) has a block of length n+1 at the same place;
    without ``confirm`` the tower call rests on a single truncation.

    For gradings taken mod d there is no top to peel from, and the blocks of the
    truncated module are reported as they are.
    """
    n = hom.n
    blocks = dict(_blocks(hom))
    conf = _blocks(confirm) if confirm is not None else None
    out = []
    unpaired = 0
    if hom.modulus:
        for (d, dl, k), c in sorted(blocks.items()):
            out.append(Summand(d, TOWER if k == n else k, dl, c))
        return ModuleDecomposition(out, hom.modulus, "truncated module, relative gradings")
    while blocks:
        d, dl, k = max(blocks, key=lambda b: (b[0], -b[1], b[2]))
        c = blocks.pop((d, dl, k))
        shadow = (d - 2 * n + 1, dl + 1, k)
        paired = min(c, blocks.get(shadow, 0))
        if paired:
            blocks[shadow] -= paired
            if not blocks[shadow]:
                del blocks[shadow]
            out.append(Summand(d, k, dl, paired))
        rest = c - paired
        if not rest:
            continue
        if k < n:
            unpaired += rest
            out.append(Summand(d, k, dl, rest))
        elif conf is None:
            out.append(Summand(d, TOWER, dl, rest))
        else:
            t = min(rest, conf.get((d, dl, n + 1), 0))
            if t:
                out.append(Summand(d, TOWER, dl, t))
            if rest - t:
                out.append(Summand(d, n, dl, rest - t))
    has_tower = any(s.k == TOWER for s in out)
    ev = "none" if not has_tower else (
        "two truncations" if conf is not None else "single truncation")
    dec = ModuleDecomposition(out, 0, ev)
    dec.unpaired = unpaired
    return dec


# --------------------------------------------------------------------------
# stabilisation over growing boxes


class RadiusCapExceeded(RuntimeError):
    pass


@dataclass
class StableResult:
    decomposition: ModuleDecomposition
    homology: Homology
    certificate: dict


def homology_at(G, spinc, r: int, n: int, method: str = "auto"):
    """Interior-supported homology of one SpinC class in the radius-r box.

    ``method`` is "box" (boxed lattice complex), "projection" (closed box reduced
    by line projections; negative-definite graphs) or "auto".
    """
    from .charlat import form
    from .complex import BoxSpec, TruncationSpec, build_complex
    from .graph import is_negative_definite
    from .reduction import cells_to_complex, project_box

    if method == "auto":
        method = "projection" if (spinc.torsion and form(G).det != 0
                                  and is_negative_definite(G)) else "box"
    info = {"method": method}
    if method == "projection":
        pr = project_box(G, spinc, r)
        cx = cells_to_complex(pr.levels, pr.base, n)
        info["remaining_vertices"] = [G.vertices[a] for a in pr.axes]
    else:
        cx = build_complex(G, spinc, BoxSpec(r, spinc.representative), TruncationSpec(n))
    info["generators"] = cx.size
    return compute_homology(cx), info


def stabilize(G, spinc, n: int, r_start: int = 1, r_cap: int = 8,
              method: str = "auto") -> StableResult:
    """Grow the box until two consecutive radii give the same decomposition."""
    from .graph import is_negative_definite

    if r_start < 1:
        raise ValueError("starting radius must be at least 1")
    prev = None
    runs = []
    for r in range(r_start, r_cap + 1):
        h, info = homology_at(G, spinc, r, n, method)
        h2, _ = homology_at(G, spinc, r, n + 1, info["method"])
        dec = decompose_module(h, h2)
        runs.append({"radius": r, **info})
        if prev is not None and prev[0] == dec and prev[1].dims == h.dims:
            cert = {"radii": [r - 1, r], "runs": runs,
                    "heuristic": not is_negative_definite(G),
                    "tower_evidence": dec.tower_evidence,
                    "excluded_generators": h.excluded}
            return StableResult(dec, h, cert)
        prev = (dec, h)
    raise RadiusCapExceeded(f"no agreement between consecutive radii up to {r_cap}")


# --------------------------------------------------------------------------
# Poincare series of decompositions
#
# A series is stored as {s-degree: {t-exponent: coefficient}}.  The coefficient
# of s^j records truncation by U^(j+1).  ``tor_shift`` c selects the family
#   P_{M(d,k)} = t^-d (1 - (s t^2)^k + t^(2k+c) (1 - s^k)) / ((1 - s)(1 - s t^2)),
#   P_{M(d,0)} = t^-d / ((1 - s)(1 - s t^2)).
# c = +1 is the classical closed form; c = -1 is what measured truncated
# dimensions produce (the torsion part of F[U]/U^k sits 2k - 1 below the top).


class SeriesError(ValueError):
    pass


class CutoffTooSmall(SeriesError):
    pass


@dataclass
class PoincareSeries:
    N: int
    coeffs: dict[int, dict[Fraction, int]]
    tor_shift: int = 1

    def clean(self) -> "PoincareSeries":
        c = {j: {e: v for e, v in sorted(p.items()) if v} for j, p in self.coeffs.items()}
        return PoincareSeries(self.N, {j: p for j, p in sorted(c.items()) if p}, self.tor_shift)

    def __eq__(self, other):
        if not isinstance(other, PoincareSeries):
            return NotImplemented
        a, b = self.clean(), other.clean()
        return (a.N, a.coeffs, a.tor_shift) == (b.N, b.coeffs, b.tor_shift)

    def __add__(self, other):
        if self.N != other.N or self.tor_shift != other.tor_shift:
            raise SeriesError("incompatible series")
        out = {j: dict(p) for j, p in self.coeffs.items()}
        for j, p in other.coeffs.items():
            q = out.setdefault(j, {})
            for e, v in p.items():
                q[e] = q.get(e, 0) + v
        return PoincareSeries(self.N, out, self.tor_shift).clean()


def _mul(a: dict, b: dict, N: int) -> dict:
    out: dict[int, dict[Fraction, int]] = {}
    for i, p in a.items():
        for j, q in b.items():
            if i + j > N:
                continue
            r = out.setdefault(i + j, {})
            for e1, v1 in p.items():
                for e2, v2 in q.items():
                    r[e1 + e2] = r.get(e1 + e2, 0) + v1 * v2
    return out


def _inverse_denominator(N: int) -> dict:
    """Expansion of 1/((1 - s)(1 - s t^2)) up to s^N."""
    return {j: {Fraction(2 * i): 1 for i in range(j + 1)} for j in range(N + 1)}


def _numerator(d: Fraction, k: int, c: int) -> dict:
    e0 = -Fraction(d)
    if k == TOWER:
        return {0: {e0: 1}}
    out: dict[int, dict[Fraction, int]] = {0: {}, k: {}}

    def put(j, e, v):
        out[j][e] = out[j].get(e, 0) + v

    put(0, e0, 1)
    put(k, e0 + 2 * k, -1)
    put(0, e0 + 2 * k + c, 1)
    put(k, e0 + 2 * k + c, -1)
    return out


def summand_series(d: Fraction, k: int, N: int, tor_shift: int = 1) -> PoincareSeries:
    return PoincareSeries(N, _mul(_numerator(d, k, tor_shift), _inverse_denominator(N), N),
                          tor_shift).clean()


def poincare_series(dec: ModuleDecomposition, N: int, tor_shift: int = 1) -> PoincareSeries:
    if N < 1:
        raise SeriesError("cutoff must be at least 1")
    total = PoincareSeries(N, {}, tor_shift)
    for d, k, c in dec.without_delta():
        s = summand_series(d, k, N, tor_shift)
        s = PoincareSeries(N, {j: {e: c * v for e, v in p.items()} for j, p in s.coeffs.items()},
                           tor_shift)
        total = total + s
    return total.clean()


def reconstruct_from_series(series: PoincareSeries) -> ModuleDecomposition:
    """Invert :func:`poincare_series` by clearing denominators and peeling blocks."""
    N, c = series.N, series.tor_shift
    den = {0: {Fraction(0): 1}, 1: {Fraction(0): -1, Fraction(2): -1}, 2: {Fraction(2): 1}}
    Q = _mul(series.coeffs, den, N)
    Q = {j: {e: v for e, v in p.items() if v} for j, p in Q.items()}
    if Q.get(N):
        raise CutoffTooSmall(f"blocks of length >= {N} are not determined by this cutoff")
    found: list[Summand] = []
    for k in range(N - 1, 0, -1):
        p = Q.get(k, {})
        while p:
            e = max(p)
            mult = -p[e]
            if mult <= 0:
                raise SeriesError("series is not in the span of the M(d,k) family")
            d = 2 * k + max(0, c) - e
            for j, q in _numerator(d, k, c).items():
                r = Q.setdefault(j, {})
                for ee, v in q.items():
                    r[ee] = r.get(ee, 0) - mult * v
            Q = {j: {ee: v for ee, v in q.items() if v} for j, q in Q.items()}
            p = Q.get(k, {})
            found.append(Summand(Fraction(d), k, 0, mult))
    rest = {j: q for j, q in Q.items() if q}
    if set(rest) - {0}:
        raise SeriesError("series is not in the span of the M(d,k) family")
    for e, v in sorted(rest.get(0, {}).items()):
        if v < 0:
            raise SeriesError("series is not in the span of the M(d,k) family")
        found.append(Summand(-e, TOWER, 0, v))
    return ModuleDecomposition(found)


def series_from_dims(dims_by_n: dict[int, dict[Fraction, int]]) -> PoincareSeries:
    """Series of measured truncated dimensions {n: {grading: dim}} for n = 1..N+1."""
    ns = sorted(dims_by_n)
    if ns != list(range(1, len(ns) + 1)) or len(ns) < 2:
        raise SeriesError("need dimensions for consecutive truncations 1..N+1")
    coeffs = {n - 1: {-Fraction(m): v for m, v in dims_by_n[n].items() if v} for n in ns}
    return PoincareSeries(len(ns) - 1, coeffs, tor_shift=-1).clean()


def grading_dims(hom: Homology) -> dict[Fraction, int]:
    out: dict[Fraction, int] = defaultdict(int)
    for (m, _), v in hom.dims.items():
        out[m] += v
    return dict(out)
