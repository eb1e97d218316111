"""Exact size reduction of boxed lattice complexes by projecting along vertex lines.

Work in the coordinates K = K0 + 2 M x with x in the closed box [-r, r]^V.  The
cube with base x and directions E carries the level min over its corners of
w(x) = gr([K0 + 2 M x, {}]), and the graded complex is the F2[U] complex of the
filtration of the box by superlevel sets of that level (its grading is level
plus |E|).  Cells are stored in an interleaved array: along each axis even
indices are lattice points and odd indices are unit edges.

Projecting along an axis replaces every line of cells by its maximum.  This is
a filtered homotopy equivalence whenever, on each line, the superlevel sets are
intervals: the point values are quasi-concave and each edge value is the
minimum of its two endpoints.  The first projection uses an axis with negative
framing, where point values along a line are strictly concave; later
projections are checked numerically on the whole array before being applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .charlat import SpinCClass, form, k_square
from .complex import GradedComplex
from .graph import PlumbingGraph

__all__ = ["ProjectionResult", "point_weights", "cell_levels", "project_box",
           "cells_to_complex"]


@dataclass
class ProjectionResult:
    levels: np.ndarray          # interleaved levels over the remaining axes
    axes: list[int]             # remaining vertex indices, in array order
    projected: list[int]        # vertex indices projected away, in order
    base: Fraction              # grading of [K0, {}]
    radius: int
    log: list[str] = field(default_factory=list)


def _dtype_for(lo: int, hi: int):
    for dt in (np.int16, np.int32):
        info = np.iinfo(dt)
        if info.min < lo and hi < info.max:
            return dt
    return np.int64


def point_weights(G: PlumbingGraph, K0, r: int) -> np.ndarray:
    """h(x) = K0.x + x^T M x on the grid [-r, r]^V (grading minus that of [K0, {}])."""
    F = form(G)
    V = G.size
    if V == 0:
        return np.zeros((), dtype=np.int64)
    M = np.array(F.M, dtype=np.int64)
    axes = np.arange(-r, r + 1, dtype=np.int64)
    X = np.stack(np.meshgrid(*([axes] * V), indexing="ij"), axis=-1)
    h = X @ np.array(K0, dtype=np.int64) + np.einsum("...i,ij,...j->...", X, M, X)
    return h


def _interleave(A: np.ndarray, axis: int) -> np.ndarray:
    L = A.shape[axis]
    shape = list(A.shape)
    shape[axis] = 2 * L - 1
    out = np.empty(shape, dtype=A.dtype)
    ev = [slice(None)] * A.ndim
    od = [slice(None)] * A.ndim
    ev[axis] = slice(0, None, 2)
    od[axis] = slice(1, None, 2)
    out[tuple(ev)] = A
    lo = [slice(None)] * A.ndim
    hi = [slice(None)] * A.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    np.minimum(A[tuple(lo)], A[tuple(hi)], out=out[tuple(od)])
    return out


def cell_levels(h: np.ndarray) -> np.ndarray:
    """Levels of all cubes of the closed box, in interleaved layout."""
    out = h
    for ax in range(h.ndim):
        out = _interleave(out, ax)
    return out


def _line_ok(W: np.ndarray, axis: int) -> bool:
    """Superlevel sets of every line along ``axis`` are intervals."""
    sl = [slice(None)] * W.ndim
    sl[axis] = slice(0, None, 2)
    pts = W[tuple(sl)]
    sl[axis] = slice(1, None, 2)
    edges = W[tuple(sl)]
    lo = [slice(None)] * W.ndim
    hi = [slice(None)] * W.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    if not np.array_equal(edges, np.minimum(pts[tuple(lo)], pts[tuple(hi)])):
        return False
    L = pts.shape[axis]
    if L <= 2:
        return True
    # a valley is a point strictly below the maxima on both of its sides
    left = np.maximum.accumulate(pts, axis=axis)
    right = np.flip(np.maximum.accumulate(np.flip(pts, axis=axis), axis=axis), axis=axis)
    mid = [slice(None)] * W.ndim
    mid[axis] = slice(1, -1)
    lm = [slice(None)] * W.ndim
    lm[axis] = slice(0, -2)
    rm = [slice(None)] * W.ndim
    rm[axis] = slice(2, None)
    valley = pts[tuple(mid)] < np.minimum(left[tuple(lm)], right[tuple(rm)])
    return not bool(valley.any())


def _project(W: np.ndarray, axis: int) -> np.ndarray:
    sl = [slice(None)] * W.ndim
    sl[axis] = slice(0, None, 2)
    return W[tuple(sl)].max(axis=axis)


def project_box(G: PlumbingGraph, spinc: SpinCClass, r: int,
                reduce: bool = True) -> ProjectionResult:
    """Levels of the closed box complex, projected along as many axes as verify."""
    F = form(G)
    K0 = spinc.representative
    base = (k_square(G, K0) - 3 * F.sigma - 2 * F.chi) / 4
    V = G.size
    h = point_weights(G, K0, r)
    dt = _dtype_for(int(h.min()) if h.size else 0, int(h.max()) if h.size else 0)
    h = h.astype(dt)
    axes = list(range(V))
    log = []
    first = next((a for a in range(V) if G.framings[a] < 0), None) if reduce else None
    projected = []
    if first is None:
        W = cell_levels(h)
    else:
        # stream over the first axis: max over its points of the levels of the slices
        W = None
        for s in range(h.shape[first]):
            L = np.array(cell_levels(np.asarray(np.take(h, s, axis=first))))
            W = L if W is None else np.maximum(W, L)
        axes.remove(first)
        projected.append(first)
        log.append(f"projected vertex {first} (concave lines)")
    progress = reduce
    while progress and axes:
        progress = False
        for pos, a in enumerate(axes):
            if _line_ok(W, pos):
                W = _project(W, pos)
                axes.pop(pos)
                projected.append(a)
                log.append(f"projected vertex {a} (verified)")
                progress = True
                break
    return ProjectionResult(np.asarray(W), axes, projected, base, r, log)


def cells_to_complex(levels: np.ndarray, base: Fraction, n: int) -> GradedComplex:
    """F2[U]/U^n complex of a filtered cubical complex given by interleaved levels."""
    shape = levels.shape
    size = int(np.prod(shape)) if shape else 1
    W = levels.reshape(-1).astype(np.int64)
    ids = np.arange(size).reshape(shape) if shape else np.zeros((), dtype=np.int64)
    if shape:
        coords = np.indices(shape).reshape(len(shape), -1)
        odd = coords % 2
        delta = odd.sum(axis=0)
        Ebits = (odd * (1 << np.arange(len(shape)))[:, None]).sum(axis=0)
    else:
        delta = np.zeros(1, dtype=np.int64)
        Ebits = np.zeros(1, dtype=np.int64)
    src_all, dst_all = [], []
    for ax in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[ax] = slice(1, None, 2)
        src = ids[tuple(sl)].reshape(-1)
        sl[ax] = slice(0, -1, 2)
        lo = ids[tuple(sl)].reshape(-1)
        sl[ax] = slice(2, None, 2)
        hi = ids[tuple(sl)].reshape(-1)
        src_all += [src, src]
        dst_all += [lo, hi]
    if src_all:
        src = np.concatenate(src_all)
        dst = np.concatenate(dst_all)
        diff = W[dst] - W[src]
        if (diff < 0).any() or (diff % 2).any():
            raise AssertionError("levels are not a filtration compatible with U")
        exp = diff // 2
        keep = exp < n
        src, dst, exp = src[keep], dst[keep], exp[keep]
        order = np.lexsort((exp, dst, src, delta[src]))
        triples = list(zip(src[order].tolist(), dst[order].tolist(), exp[order].tolist()))
    else:
        triples = []
    delta_l = delta.tolist()
    grading = [base + int(w) + int(d) for w, d in zip(W.tolist(), delta_l)]
    labels = [(tuple(), int(e)) for e in Ebits.tolist()]
    return GradedComplex(n=n, delta=delta_l, grading=grading, triples=triples,
                         interior=[True] * size, deep=[True] * size, modulus=0,
                         labels=labels)
