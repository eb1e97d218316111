"""Plumbing forests, their intersection forms, and classification predicates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

__all__ = [
    "GraphError",
    "NotNegativeDefinite",
    "PlumbingGraph",
    "Classification",
    "parse_graph",
    "graph_to_text",
    "intersection_matrix",
    "determinant",
    "signature_chi",
    "is_negative_definite",
    "bad_vertices",
    "components",
    "fundamental_cycle",
    "is_rational",
    "type_upper_bound",
    "classify",
    "bump_framing",
    "adjoin_e",
    "delete_vertex",
]


class GraphError(ValueError):
    """Raised for malformed or invalid plumbing graphs."""


class NotNegativeDefinite(GraphError):
    """Raised when an operation needs a negative-definite intersection form."""


@dataclass(frozen=True)
class PlumbingGraph:
    """A plumbing forest: ordered vertices, integer framings, undirected edges.

    Edges are stored as sorted index pairs into ``vertices``.
    """

    vertices: tuple[str, ...]
    framings: tuple[int, ...]
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        n = len(self.vertices)
        if len(set(self.vertices)) != n:
            raise GraphError("duplicate vertex id")
        if len(self.framings) != n:
            raise GraphError("framing count does not match vertex count")
        for m in self.framings:
            if isinstance(m, bool) or not isinstance(m, int):
                raise GraphError(f"non-integer framing {m!r}")
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b in self.edges:
            if not (0 <= a < b < n):
                raise GraphError(f"bad edge {(a, b)}")
            ra, rb = find(a), find(b)
            if ra == rb:
                raise GraphError("cycle detected")
            parent[ra] = rb

    @property
    def size(self) -> int:
        return len(self.vertices)

    def index(self, v: str) -> int:
        try:
            return self.vertices.index(v)
        except ValueError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def neighbours(self, i: int) -> list[int]:
        return sorted(b if a == i else a for a, b in self.edges if i in (a, b))

    @classmethod
    def build(cls, framings: dict[str, int] | Iterable[tuple[str, int]],
              edges: Iterable[tuple[str, str]] = ()) -> "PlumbingGraph":
        """Build from (id, framing) pairs and id-pair edges, rejecting duplicates."""
        items = list(framings.items()) if isinstance(framings, dict) else list(framings)
        names = tuple(v for v, _ in items)
        pos = {v: i for i, v in enumerate(names)}
        if len(pos) != len(names):
            raise GraphError("duplicate vertex id")
        es = set()
        for a, b in edges:
            if a not in pos or b not in pos:
                raise GraphError(f"edge to unknown vertex {(a, b)}")
            if a == b:
                raise GraphError("self-loop")
            e = tuple(sorted((pos[a], pos[b])))
            if e in es:
                raise GraphError("duplicate edge")
            es.add(e)
        return cls(names, tuple(m for _, m in items), frozenset(es))


@dataclass(frozen=True)
class Classification:
    negative_definite: bool
    bad_vertices: frozenset[str]
    fundamental_cycle: tuple[int, ...] | None
    rational: bool | None
    type_upper_bound: int | None  # None means unknown


def parse_graph(text: str) -> PlumbingGraph:
    """Parse the JSON graph description, e.g. ``{"vertices": [...], "edges": [...]}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise GraphError("top level must be an object")
    unknown = set(doc) - {"vertices", "edges"}
    if unknown:
        raise GraphError(f"unknown keys {sorted(unknown)}")
    verts = doc.get("vertices", [])
    edges = doc.get("edges", [])
    if not isinstance(verts, list) or not isinstance(edges, list):
        raise GraphError("vertices and edges must be lists")
    items = []
    for v in verts:
        if not isinstance(v, dict) or set(v) != {"id", "framing"}:
            raise GraphError(f"vertex entries need exactly id and framing: {v!r}")
        if not isinstance(v["id"], str):
            raise GraphError(f"vertex id must be a string: {v['id']!r}")
        m = v["framing"]
        if isinstance(m, bool) or not isinstance(m, int):
            raise GraphError(f"non-integer framing {m!r}")
        items.append((v["id"], m))
    pairs = []
    for e in edges:
        if not isinstance(e, list) or len(e) != 2 or not all(isinstance(x, str) for x in e):
            raise GraphError(f"edge must be a pair of ids: {e!r}")
        pairs.append((e[0], e[1]))
    return PlumbingGraph.build(items, pairs)


def graph_to_text(G: PlumbingGraph) -> str:
    doc = {
        "vertices": [{"id": v, "framing": m} for v, m in zip(G.vertices, G.framings)],
        "edges": [[G.vertices[a], G.vertices[b]] for a, b in sorted(G.edges)],
    }
    return json.dumps(doc, indent=2) + "\n"


def intersection_matrix(G: PlumbingGraph) -> list[list[int]]:
    n = G.size
    M = [[0] * n for _ in range(n)]
    for i, m in enumerate(G.framings):
        M[i][i] = m
    for a, b in G.edges:
        M[a][b] = M[b][a] = 1
    return M


def determinant(M: list[list[int]]) -> int:
    """Exact integer determinant by Bareiss fraction-free elimination."""
    n = len(M)
    if n == 0:
        return 1
    A = [row[:] for row in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def _inertia(M: list[list[int]]) -> tuple[int, int, int]:
    """(positive, negative, zero) counts via exact congruence diagonalisation."""
    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    pos = neg = 0
    alive = list(range(n))
    while alive:
        piv = next((i for i in alive if A[i][i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in alive for j in alive if i < j and A[i][j] != 0), None)
            if pair is None:
                break  # remaining block is zero
            i, j = pair
            # add row/column j to row/column i; makes A[i][i] = 2 A[i][j] != 0
            for k in range(n):
                A[i][k] += A[j][k]
            for k in range(n):
                A[k][i] += A[k][j]
            piv = i
        p = A[piv][piv]
        if p > 0:
            pos += 1
        else:
            neg += 1
        alive.remove(piv)
        for i in alive:
            c = A[i][piv] / p
            if c:
                for k in alive:
                    A[i][k] -= c * A[piv][k]
        for i in alive:
            A[i][piv] = A[piv][i] = Fraction(0)
    return pos, neg, n - pos - neg


def signature_chi(G: PlumbingGraph) -> tuple[int, int]:
    pos, neg, _ = _inertia(intersection_matrix(G))
    return pos - neg, G.size


def is_negative_definite(G: PlumbingGraph) -> bool:
    return signature_chi(G)[0] == -G.size


def bad_vertices(G: PlumbingGraph) -> frozenset[str]:
    return frozenset(v for i, v in enumerate(G.vertices)
                     if G.degree(i) + G.framings[i] > 0)


def components(G: PlumbingGraph) -> list[list[int]]:
    """Connected components as sorted index lists, ordered by smallest member."""
    seen, out = set(), []
    for s in range(G.size):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in G.neighbours(i):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        out.append(sorted(comp))
    return out


def fundamental_cycle(G: PlumbingGraph) -> tuple[int, ...]:
    """Laufer iteration, run per component with vertices scanned in order."""
    if not is_negative_definite(G):
        raise NotNegativeDefinite("fundamental cycle needs a negative-definite form")
    M = intersection_matrix(G)
    Z = [1] * G.size
    changed = True
    while changed:
        changed = False
        for i in range(G.size):
            if sum(M[i][j] * Z[j] for j in range(G.size)) > 0:
                Z[i] += 1
                changed = True
                break
    return tuple(Z)


def _rational_component(M, Z, comp) -> bool:
    z2 = sum(Z[i] * M[i][j] * Z[j] for i in comp for j in comp)
    rhs = 2 * sum(Z[i] for i in comp) + sum(Z[i] * M[i][i] for i in comp) - 2
    return z2 == rhs


def is_rational(G: PlumbingGraph) -> bool:
    Z = fundamental_cycle(G)
    M = intersection_matrix(G)
    return all(_rational_component(M, Z, c) for c in components(G))


def _with_framings(G: PlumbingGraph, framings) -> PlumbingGraph:
    return PlumbingGraph(G.vertices, tuple(framings), G.edges)


def type_upper_bound(G: PlumbingGraph, kmax: int | None = None) -> int | None:
    """Smallest k <= kmax admitting a rationalising substitution m_v <- min(m_v, -d_v).

    Returns None when no subset up to ``kmax`` works.
    """
    if kmax is None:
        kmax = G.size
    for k in range(min(kmax, G.size) + 1):
        for S in combinations(range(G.size), k):
            fr = list(G.framings)
            for i in S:
                fr[i] = min(fr[i], -G.degree(i))
            H = _with_framings(G, fr)
            if is_negative_definite(H) and is_rational(H):
                return k
    return None


def classify(G: PlumbingGraph, kmax: int | None = None) -> Classification:
    nd = is_negative_definite(G)
    Z = fundamental_cycle(G) if nd else None
    rat = is_rational(G) if nd else None
    return Classification(nd, bad_vertices(G), Z, rat, type_upper_bound(G, kmax))


def bump_framing(G: PlumbingGraph, v: str, delta: int) -> PlumbingGraph:
    i = G.index(v)
    fr = list(G.framings)
    fr[i] += delta
    return _with_framings(G, fr)


def adjoin_e(G: PlumbingGraph, v: str, name: str = "e") -> PlumbingGraph:
    """Append a fresh (-1)-framed vertex joined to ``v``."""
    i = G.index(v)
    if name in G.vertices:
        raise GraphError(f"vertex id {name!r} is not fresh")
    n = G.size
    return PlumbingGraph(G.vertices + (name,), G.framings + (-1,),
                         G.edges | {(i, n)})


def delete_vertex(G: PlumbingGraph, v: str) -> PlumbingGraph:
    i = G.index(v)
    keep = [j for j in range(G.size) if j != i]
    new = {j: k for k, j in enumerate(keep)}
    edges = frozenset(tuple(sorted((new[a], new[b]))) for a, b in G.edges if i not in (a, b))
    return PlumbingGraph(tuple(G.vertices[j] for j in keep),
                         tuple(G.framings[j] for j in keep), edges)
